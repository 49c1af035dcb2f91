//! Efficient allocation with critical-value payments.
//!
//! An agent's critical value is the threshold report at which it switches
//! between trading and not trading, holding everyone else fixed. Membership in
//! the efficient trade is monotone in the report and only changes at other
//! agents' values, so the search runs over those values and the midpoints
//! between them; which side of a threshold wins a tie falls out of the tie
//! order.

use crate::market::outcome::MarketOutcome;
use crate::market::profile::{AgentRef, Role, ValueProfile};
use crate::scalar::Scalar;

pub fn vcg<V: Scalar>(p: &ValueProfile<V>) -> MarketOutcome<V> {
    let q = p.trade_size();
    if q == 0 {
        return MarketOutcome::empty(p);
    }
    let b = p.ranked_buyers();
    let s = p.ranked_sellers();
    let pairs: Vec<(usize, usize)> = s.iter().copied().zip(b.iter().copied()).take(q).collect();
    let mut seller_payments = vec![V::zero(); p.m_s()];
    let mut buyer_payments = vec![V::zero(); p.m_b()];
    for &(i, j) in &pairs {
        seller_payments[i] = -critical_value(p, AgentRef::seller(i));
        buyer_payments[j] = critical_value(p, AgentRef::buyer(j));
    }
    MarketOutcome::with_payments(p, pairs, seller_payments, buyer_payments)
}

/// Whether `agent` is in the efficient trade.
pub fn in_efficient_trade<V: Scalar>(p: &ValueProfile<V>, agent: AgentRef) -> bool {
    let q = p.trade_size();
    let ranked = match agent.role {
        Role::Buyer => p.ranked_buyers(),
        Role::Seller => p.ranked_sellers(),
    };
    ranked[..q].contains(&agent.id)
}

/// Lowest report at which a buyer trades, or highest at which a seller trades.
pub fn critical_value<V: Scalar>(p: &ValueProfile<V>, agent: AgentRef) -> V {
    let mut others: Vec<V> = p
        .agents()
        .filter(|a| *a != agent)
        .map(|a| p.value(a).clone())
        .collect();
    others.sort_by(|a, b| a.total_cmp(b));
    others.dedup();
    let one = V::from_i64(1);
    let lo = others[0].clone() - one.clone();
    let hi = others[others.len() - 1].clone() + one;

    // Test points in increasing order, flagged when they are another agent's value.
    let mut points: Vec<(V, bool)> = vec![(lo, false)];
    for (k, v) in others.iter().enumerate() {
        if k > 0 {
            points.push((V::midpoint(&others[k - 1], v), false));
        }
        points.push((v.clone(), true));
    }
    points.push((hi, false));

    let mut probe = p.clone();
    let mut trades_at = |v: &V| {
        *probe.value_mut(agent) = v.clone();
        in_efficient_trade(&probe, agent)
    };

    match agent.role {
        Role::Buyer => {
            // false ... false true ... true
            let k = points.partition_point(|(v, _)| !trades_at(v));
            let (v, is_candidate) = &points[k];
            if *is_candidate {
                v.clone()
            } else {
                points[k - 1].0.clone()
            }
        }
        Role::Seller => {
            // true ... true false ... false
            let k = points.partition_point(|(v, _)| trades_at(v)) - 1;
            let (v, is_candidate) = &points[k];
            if *is_candidate {
                v.clone()
            } else {
                points[k + 1].0.clone()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    fn prof(s: &[i64], b: &[i64]) -> ValueProfile<Rational> {
        ValueProfile::new(s.iter().map(|&v| int(v)).collect(), b.iter().map(|&v| int(v)).collect())
    }

    /// Linear scan over other agents' values: the threshold is the value at
    /// which membership flips, counting a flip just above it.
    fn scan_critical(p: &ValueProfile<Rational>, a: AgentRef) -> Rational {
        let eps = ratio(1, 1_000_000);
        let mut others: Vec<Rational> = p.agents().filter(|x| *x != a).map(|x| p.value(x).clone()).collect();
        others.sort();
        let trades = |v: &Rational| {
            let mut q = p.clone();
            *q.value_mut(a) = v.clone();
            in_efficient_trade(&q, a)
        };
        match a.role {
            Role::Buyer => others
                .iter()
                .find(|c| trades(c) || trades(&(*c + &eps)))
                .cloned()
                .unwrap(),
            Role::Seller => others
                .iter()
                .rev()
                .find(|c| trades(c) || trades(&(*c - &eps)))
                .cloned()
                .unwrap(),
        }
    }

    #[test]
    fn bilateral_deficit() {
        let o = vcg(&prof(&[2], &[3]));
        assert_eq!(o.buyer_payments, vec![int(2)]);
        assert_eq!(o.seller_payments, vec![int(-3)]);
        assert_eq!(o.budget_surplus, int(-1));
    }

    #[test]
    fn no_trade_profile() {
        let o = vcg(&prof(&[1], &[0]));
        assert_eq!(o.trade_count(), 0);
        assert_eq!(o.budget_surplus, int(0));
    }

    #[test]
    fn two_by_two() {
        let p = prof(&[0, 2], &[4, 3]);
        let o = vcg(&p);
        assert_eq!(o.trade_count(), 2);
        assert_eq!(o.buyer_payments, vec![int(2), int(2)]);
        assert_eq!(o.seller_payments, vec![int(-3), int(-3)]);
        assert_eq!(o.budget_surplus, int(-2));
        assert_eq!(o.gft, p.opt_gft());
    }

    #[test]
    fn bisection_matches_linear_scan() {
        let grid: Vec<Rational> = (0..4).map(int).collect();
        for p in crate::market::audit::fuzz_profiles(&grid, 3, 3, 2000, 11) {
            let o = vcg(&p);
            for &(i, j) in &o.pairs {
                assert_eq!(-o.seller_payments[i].clone(), scan_critical(&p, AgentRef::seller(i)), "{p}");
                assert_eq!(o.buyer_payments[j], scan_critical(&p, AgentRef::buyer(j)), "{p}");
            }
        }
    }
}
