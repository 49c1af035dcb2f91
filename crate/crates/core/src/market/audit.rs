//! Property auditors for mechanisms: individual rationality and budget
//! balance, dominant-strategy truthfulness on a value grid, and anonymity
//! under within-role permutations.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::market::mechanism::{fixed_price, Mechanism};
use crate::market::outcome::MarketOutcome;
use crate::market::profile::{AgentRef, Role, ValueProfile};
use crate::scalar::Scalar;

/// Violations kept in a report; the total is always counted.
pub const MAX_RECORDED: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    IndividualRationality,
    BudgetBalance,
    NonTraderPayment,
    ProfitableDeviation,
    Anonymity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation<V> {
    /// Position of the profile in the audited sequence.
    pub index: usize,
    pub profile: ValueProfile<V>,
    pub agent: Option<AgentRef>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl<V: Scalar> fmt::Display for Violation<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} on {}", self.kind, self.profile)?;
        if let Some(a) = self.agent {
            write!(f, " agent {a}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport<V> {
    pub checked: usize,
    pub total_violations: usize,
    /// The first [`MAX_RECORDED`] violations in audit order.
    pub violations: Vec<Violation<V>>,
}

impl<V> AuditReport<V> {
    fn new() -> Self {
        Self {
            checked: 0,
            total_violations: 0,
            violations: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.total_violations == 0
    }

    fn push(&mut self, v: Violation<V>) {
        self.total_violations += 1;
        if self.violations.len() < MAX_RECORDED {
            self.violations.push(v);
        }
    }

    fn absorb(&mut self, other: AuditReport<V>) {
        self.checked += other.checked;
        self.total_violations += other.total_violations;
        let room = MAX_RECORDED - self.violations.len();
        self.violations.extend(other.violations.into_iter().take(room));
    }
}

fn feasibility_violations<V: Scalar>(
    index: usize,
    p: &ValueProfile<V>,
    out: &MarketOutcome<V>,
) -> Vec<Violation<V>> {
    let mut found = Vec::new();
    let mut flag = |agent, kind, detail: String| {
        found.push(Violation {
            index,
            profile: p.clone(),
            agent,
            kind,
            detail,
        })
    };
    for a in p.agents() {
        let pay = out.payment(a);
        if !out.trades(a) {
            if *pay != V::zero() {
                flag(Some(a), ViolationKind::NonTraderPayment, format!("pays {pay}"));
            }
            continue;
        }
        let u = out.utility(a, p.value(a));
        if u < V::zero() {
            flag(
                Some(a),
                ViolationKind::IndividualRationality,
                format!("value {} payment {pay}", p.value(a)),
            );
        }
    }
    if out.budget_surplus < V::zero() {
        flag(
            None,
            ViolationKind::BudgetBalance,
            format!("surplus {}", out.budget_surplus),
        );
    }
    found
}

/// Checks individual rationality, zero payments for non-traders, and weak
/// budget balance on every profile.
pub fn audit_feasibility<V, M, I>(m: &M, profiles: I) -> Result<AuditReport<V>>
where
    V: Scalar,
    M: Mechanism<V> + ?Sized,
    I: IntoIterator<Item = ValueProfile<V>>,
{
    let mut report = AuditReport::new();
    for (index, p) in profiles.into_iter().enumerate() {
        m.check_market(p.m_s(), p.m_b())?;
        let out = m.run(&p)?;
        report.checked += 1;
        for v in feasibility_violations(index, &p, &out) {
            report.push(v);
        }
    }
    Ok(report)
}

/// The `index`-th profile of `grid^(m_s + m_b)` in lexicographic order,
/// sellers first.
pub fn grid_profile<V: Scalar>(grid: &[V], m_s: usize, m_b: usize, mut index: usize) -> ValueProfile<V> {
    let n = m_s + m_b;
    let mut values = vec![grid[0].clone(); n];
    for slot in values.iter_mut().rev() {
        *slot = grid[index % grid.len()].clone();
        index /= grid.len();
    }
    let buyers = values.split_off(m_s);
    ValueProfile::new(values, buyers)
}

/// Exhaustive unilateral-deviation search over a value grid.
///
/// For each truthful profile (at most `profile_budget` of them, in
/// lexicographic order), each agent and each other grid value, compares the
/// agent's utility at its true value when reporting truthfully and when
/// reporting the deviation.
pub fn audit_dsic<V, M>(
    m: &M,
    grid: &[V],
    m_s: usize,
    m_b: usize,
    profile_budget: usize,
) -> Result<AuditReport<V>>
where
    V: Scalar,
    M: Mechanism<V> + ?Sized,
{
    assert!(!grid.is_empty(), "value grid must be nonempty");
    m.check_market(m_s, m_b)?;
    let total = (grid.len() as u128)
        .checked_pow((m_s + m_b) as u32)
        .map_or(usize::MAX, |t| usize::try_from(t).unwrap_or(usize::MAX));
    let count = total.min(profile_budget);

    let per_profile = (0..count)
        .into_par_iter()
        .map(|index| -> Result<AuditReport<V>> {
            let p = grid_profile(grid, m_s, m_b, index);
            let truthful = m.run(&p)?;
            let mut report = AuditReport::new();
            report.checked = 1;
            for a in p.agents() {
                let value = p.value(a).clone();
                let honest = truthful.utility(a, &value);
                for dev in grid.iter().filter(|d| **d != value) {
                    let mut lie = p.clone();
                    *lie.value_mut(a) = dev.clone();
                    let gain = m.run(&lie)?.utility(a, &value);
                    if gain > honest {
                        report.push(Violation {
                            index,
                            profile: p.clone(),
                            agent: Some(a),
                            kind: ViolationKind::ProfitableDeviation,
                            detail: format!("reporting {dev} instead of {value}: utility {gain} > {honest}"),
                        });
                    }
                }
            }
            Ok(report)
        })
        .collect::<Vec<_>>();

    let mut report = AuditReport::new();
    for r in per_profile {
        report.absorb(r?);
    }
    Ok(report)
}

/// Sorted traded values per role; invariant under relabelling agents.
fn traded_values<V: Scalar>(p: &ValueProfile<V>, out: &MarketOutcome<V>, role: Role) -> Vec<V> {
    let n = match role {
        Role::Seller => p.m_s(),
        Role::Buyer => p.m_b(),
    };
    let mut vs: Vec<V> = (0..n)
        .map(|id| AgentRef { role, id })
        .filter(|a| out.trades(*a))
        .map(|a| p.value(a).clone())
        .collect();
    vs.sort_by(|a, b| a.total_cmp(b));
    vs
}

/// Applies random within-role permutations and checks that trade status moves
/// with the values.
///
/// Agents with equal values may swap trade status (ties are broken by id), so
/// the comparison is between the multisets of traded values on each side.
pub fn audit_anonymity<V, M, R>(m: &M, p: &ValueProfile<V>, trials: usize, rng: &mut R) -> Result<AuditReport<V>>
where
    V: Scalar,
    M: Mechanism<V> + ?Sized,
    R: Rng + ?Sized,
{
    let mut report = AuditReport::new();
    m.check_market(p.m_s(), p.m_b())?;
    let base = m.run(p)?;
    for index in 0..trials {
        let mut permuted = p.clone();
        permuted.sellers.shuffle(rng);
        permuted.buyers.shuffle(rng);
        let out = m.run(&permuted)?;
        report.checked += 1;
        for role in [Role::Seller, Role::Buyer] {
            let before = traded_values(p, &base, role);
            let after = traded_values(&permuted, &out, role);
            if before != after {
                report.push(Violation {
                    index,
                    profile: permuted.clone(),
                    agent: None,
                    kind: ViolationKind::Anonymity,
                    detail: format!(
                        "{role:?} traded values {} before permutation, {} after",
                        fmt_values(&before),
                        fmt_values(&after)
                    ),
                });
            }
        }
    }
    Ok(report)
}

fn fmt_values<V: Scalar>(vs: &[V]) -> String {
    format!("[{}]", vs.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
}

/// Deterministic random profiles with values from `grid` and between zero and
/// `max_sellers`/`max_buyers` agents per side.
pub fn fuzz_profiles<V: Scalar>(
    grid: &[V],
    max_sellers: usize,
    max_buyers: usize,
    n: usize,
    seed: u64,
) -> impl Iterator<Item = ValueProfile<V>> + '_ {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(move |_| {
        let m_s = rng.random_range(0..=max_sellers);
        let m_b = rng.random_range(0..=max_buyers);
        let mut draw = |k: usize| -> Vec<V> {
            (0..k)
                .map(|_| grid[rng.random_range(0..grid.len())].clone())
                .collect()
        };
        let sellers = draw(m_s);
        let buyers = draw(m_b);
        ValueProfile::new(sellers, buyers)
    })
}

/// Test fixture: posts the highest seller report as the price, so sellers can
/// raise the price by overstating.
#[derive(Clone, Copy, Debug, Default)]
pub struct SellerReportedReserve;

impl<V: Scalar> Mechanism<V> for SellerReportedReserve {
    fn name(&self) -> String {
        "seller-reported-reserve".into()
    }

    fn run(&self, p: &ValueProfile<V>) -> Result<MarketOutcome<V>> {
        match p.sellers.iter().max_by(|a, b| a.total_cmp(b)) {
            Some(reserve) => Ok(fixed_price(p, reserve)),
            None => Ok(MarketOutcome::empty(p)),
        }
    }
}

/// Test fixture: buyer 0 trades with seller 0 whenever both exist.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstBuyerAlwaysTrades;

impl<V: Scalar> Mechanism<V> for FirstBuyerAlwaysTrades {
    fn name(&self) -> String {
        "first-buyer-always-trades".into()
    }

    fn run(&self, p: &ValueProfile<V>) -> Result<MarketOutcome<V>> {
        if p.is_degenerate() {
            return Ok(MarketOutcome::empty(p));
        }
        Ok(MarketOutcome::priced(p, vec![(0, 0)], &V::zero(), &V::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::mechanism::{BuyerTradeReduction, MechanismKind};
    use crate::scalar::{int, ratio, Rational};

    fn grid(vals: &[i64]) -> Vec<Rational> {
        vals.iter().map(|&v| int(v)).collect()
    }

    #[test]
    fn btr_is_feasible_on_fuzz() {
        let g = grid(&[0, 1, 2, 3]);
        let r = audit_feasibility(&BuyerTradeReduction::default(), fuzz_profiles(&g, 4, 4, 20_000, 1)).unwrap();
        assert_eq!(r.checked, 20_000);
        assert!(r.is_clean(), "{:?}", r.violations.first());
    }

    #[test]
    fn fixed_price_is_feasible() {
        let m = MechanismKind::FixedPrice(ratio(3, 2));
        let r = audit_feasibility(&m, fuzz_profiles(&grid(&[0, 1, 2, 3]), 4, 4, 10_000, 2)).unwrap();
        assert!(r.is_clean());
    }

    #[test]
    fn vcg_runs_a_deficit() {
        let p = ValueProfile::new(vec![int(2)], vec![int(3)]);
        let r = audit_feasibility(&MechanismKind::Vcg, [p]).unwrap();
        assert_eq!(r.total_violations, 1);
        assert_eq!(r.violations[0].kind, ViolationKind::BudgetBalance);
        assert_eq!(r.violations[0].detail, "surplus -1");
    }

    #[test]
    fn grid_profiles_enumerate_lexicographically() {
        let g = grid(&[0, 1]);
        assert_eq!(grid_profile(&g, 1, 2, 0), ValueProfile::new(grid(&[0]), grid(&[0, 0])));
        assert_eq!(grid_profile(&g, 1, 2, 1), ValueProfile::new(grid(&[0]), grid(&[0, 1])));
        assert_eq!(grid_profile(&g, 1, 2, 4), ValueProfile::new(grid(&[1]), grid(&[0, 0])));
    }

    #[test]
    fn btr_and_mcafee_are_truthful_on_small_grids() {
        let r = audit_dsic(&BuyerTradeReduction::default(), &grid(&[0, 1, 2, 3]), 2, 2, usize::MAX).unwrap();
        assert_eq!(r.checked, 256);
        assert!(r.is_clean(), "{:?}", r.violations.first());
        let r = audit_dsic(&MechanismKind::McAfee92, &grid(&[0, 1, 2, 3, 4]), 2, 2, usize::MAX).unwrap();
        assert!(r.is_clean(), "{:?}", r.violations.first());
    }

    #[test]
    fn profile_budget_truncates() {
        let r = audit_dsic(&MechanismKind::Btr, &grid(&[0, 1, 2, 3]), 2, 2, 10).unwrap();
        assert_eq!(r.checked, 10);
    }

    #[test]
    fn seller_reserve_fixture_is_manipulable() {
        let r = audit_dsic(&SellerReportedReserve, &grid(&[0, 1, 2, 3]), 1, 1, usize::MAX).unwrap();
        assert!(!r.is_clean());
        let v = &r.violations[0];
        let a = v.agent.unwrap();
        assert_eq!(a.role, Role::Seller);
        assert!(v.detail.starts_with("reporting"));
    }

    #[test]
    fn anonymity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ValueProfile::new(grid(&[0, 1]), grid(&[3, 2, 2]));
        let r = audit_anonymity(&MechanismKind::Btr, &p, 200, &mut rng).unwrap();
        assert!(r.is_clean());

        let p = ValueProfile::new(grid(&[0]), grid(&[5, 1]));
        let r = audit_anonymity(&FirstBuyerAlwaysTrades, &p, 50, &mut rng).unwrap();
        assert!(!r.is_clean());

        let empty: ValueProfile<Rational> = ValueProfile::default();
        let r = audit_anonymity(&MechanismKind::Btr, &empty, 10, &mut rng).unwrap();
        assert!(r.is_clean());
    }
}
