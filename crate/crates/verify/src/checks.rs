//! The registered checks.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gft_core::dist::{product_support, Distribution, DEFAULT_ENUMERATION_CAP};
use gft_core::error::{Error, Result};
use gft_core::eval::{
    expected_gft_symmetric, expected_sample_pricing_gft, monte_carlo, sig6, symmetric_expectation,
    EvalMode, Expectation, MarketSpec,
};
use gft_core::market::{
    fixed_price, sample_pricing_gft, BuyerTradeReduction, Mechanism, MechanismKind, ValueProfile,
};
use gft_core::scalar::{format_rational, int, rational_to_f64, ratio, Rational};

use crate::constructions::*;
use crate::{Args, Check, CheckContext, Finding, Quantity, Verdict, Witness, SIGMAS};

pub(super) static REGISTRY: &[Check] = &[
    Check {
        id: "lemma-reduce",
        summary: "BTR is optimal iff a buyer holds the (m_S+1)-th value; otherwise it loses b^(q) - x^(m_S+1)",
        params: &[
            ("n_profiles", Some("100000")),
            ("max_sellers", Some("4")),
            ("max_buyers", Some("4")),
            ("grid_max", Some("3")),
        ],
        run: lemma_reduce,
    },
    Check {
        id: "thm-iid",
        summary: "iid values: BTR(m_S, m_B+1) >= OPT(m_S, m_B)",
        params: &[("mS", Some("1")), ("mB", Some("1")), ("max_support", Some("4"))],
        run: thm_iid,
    },
    Check {
        id: "sqrt-sufficiency",
        summary: "FSD: BTR(1, m_B+k) >= OPT(1, m_B) once k(k-1)/(m_B+k) >= 2",
        params: &[("mB", Some("1")), ("k", None), ("max_support", Some("4"))],
        run: sqrt_sufficiency,
    },
    Check {
        id: "log-lower-bound",
        summary: "coin pair: OPT(1,m_B) = 3p/2, BTR(1,m_B+k) = 3q/2, BTR < OPT iff 2^k < m_B+k+1",
        params: &[("mB", Some("4")), ("k", Some("2"))],
        run: log_lower_bound,
    },
    Check {
        id: "sample-half-iid",
        summary: "iid values: pricing at one buyer sample earns at least OPT(1,1)/2",
        params: &[("max_support", Some("4"))],
        run: sample_half_iid,
    },
    Check {
        id: "fsd-quarter",
        summary: "FSD: pricing at one buyer sample earns at least OPT(1,1)/4, and can fall below 0.46 OPT",
        params: &[
            ("max_support", Some("4")),
            ("eps", Some("1/4")),
            ("gamma", Some("100")),
            ("delta", Some("1/100")),
        ],
        run: fsd_quarter,
    },
    Check {
        id: "median-appendix-b",
        summary: "posting the median loses to OPT(1,1) even with an extra buyer",
        params: &[("delta", Some("1/100"))],
        run: median_shortfall,
    },
    Check {
        id: "merge-superadditivity",
        summary: "BTR on a union of markets earns at least the sum of BTR on the parts",
        params: &[
            ("n_trials", Some("100000")),
            ("max_parts", Some("3")),
            ("max_sellers", Some("3")),
            ("max_buyers", Some("3")),
            ("grid_max", Some("3")),
        ],
        run: merge_superadditivity,
    },
    Check {
        id: "opt-subadditivity",
        summary: "splitting sellers across copies of the buyers never lowers total OPT",
        params: &[
            ("n_trials", Some("100000")),
            ("max_parts", Some("3")),
            ("max_sellers", Some("3")),
            ("max_buyers", Some("3")),
            ("grid_max", Some("3")),
        ],
        run: opt_subadditivity,
    },
    Check {
        id: "many-sellers",
        summary: "FSD: BTR(m_S, m_S(m_B + ceil(4 sqrt m_B))) >= OPT(m_S, m_B)",
        params: &[("mS", Some("2")), ("mB", Some("1")), ("max_support", Some("2"))],
        run: many_sellers,
    },
    Check {
        id: "no-fsd-counterexample",
        summary: "without FSD, extra buyers cannot recover an eps fraction of OPT(1,1)",
        params: &[
            ("mS", Some("1")),
            ("mB", Some("1")),
            ("l", Some("0")),
            ("k", Some("2")),
            ("eps", Some("1/10")),
            ("eps_tilde", Some("1/1000")),
        ],
        run: no_fsd_counterexample,
    },
    Check {
        id: "fsd-11-lower",
        summary: "two-point FSD pair: BTR(1,2) < OPT(1,1) = FEASIBLE-OPT(1,1)",
        params: &[("eps", Some("1/4"))],
        run: fsd_11_lower,
    },
    Check {
        id: "k-samples-identity",
        summary: "BTR(1,1+k) <= (1+k) Sample_k, with equality for atomless buyers",
        params: &[("k", Some("1")), ("max_support", Some("4"))],
        run: k_samples_identity,
    },
    Check {
        id: "convergence-bound",
        summary: "FSD: BTR(1,m_B) >= (m_B-1)/(m_B+1) OPT(1,m_B)",
        params: &[("mB", Some("3")), ("max_support", Some("4"))],
        run: convergence_bound,
    },
];

// ---- shared helpers ----

fn exact_gft<M: Mechanism<Rational>>(m: &M, spec: &MarketSpec) -> Result<Rational> {
    Ok(expected_gft_symmetric(m, spec)?.expect_exact()?.clone())
}

fn exact_opt(spec: &MarketSpec) -> Result<Rational> {
    Ok(symmetric_expectation(spec, |p| Ok(p.opt_gft()))?
        .expect_exact()?
        .clone())
}

fn sample_k(seller: &Distribution, buyer: &Distribution, k: usize) -> Result<Rational> {
    let k = u32::try_from(k).map_err(|_| Error::InvalidInput("k is too large".into()))?;
    Ok(expected_sample_pricing_gft(seller, buyer, k, EvalMode::Exact)?
        .expect_exact()?
        .clone())
}

fn grid(max: usize) -> Vec<f64> {
    (0..=max).map(|v| v as f64).collect()
}

/// Fuzz profiles hold small integers, which `f64` represents exactly.
fn to_rational(p: &ValueProfile<f64>) -> ValueProfile<Rational> {
    p.map(|&v| Rational::from_integer((v as i64).into()))
}

fn random_profile(rng: &mut ChaCha8Rng, grid: &[f64], m_s: usize, m_b: usize) -> ValueProfile<f64> {
    let mut draw = |n: usize| (0..n).map(|_| grid[rng.random_range(0..grid.len())]).collect();
    let sellers = draw(m_s);
    ValueProfile::new(sellers, draw(m_b))
}

fn pair_witness(pair: &(Distribution, Distribution)) -> Witness {
    Witness::Distributions {
        seller: pair.0.clone(),
        buyer: pair.1.clone(),
    }
}

fn describe(pair: &(Distribution, Distribution)) -> String {
    format!("F_S={} F_B={}", pair.0.to_json(), pair.1.to_json())
}

/// Outcome of asserting `lhs >= rhs` for every pair of a family.
struct Sweep {
    checked: usize,
    violations: usize,
    /// Index and sides of the first violation, else of the smallest slack.
    focus: Option<(usize, Rational, Rational)>,
}

fn sweep<F>(pairs: &[(Distribution, Distribution)], f: F) -> Result<Sweep>
where
    F: Fn(&Distribution, &Distribution) -> Result<(Rational, Rational)> + Sync,
{
    let sides = pairs
        .par_iter()
        .map(|(s, b)| f(s, b))
        .collect::<Result<Vec<_>>>()?;
    let violations = sides.iter().filter(|(l, r)| l < r).count();
    let focus = if violations > 0 {
        sides.iter().position(|(l, r)| l < r)
    } else {
        // Pairs with a zero right side are slack trivially; prefer the rest.
        let nontrivial: Vec<usize> = (0..sides.len()).filter(|&i| sides[i].1.is_positive()).collect();
        let candidates = if nontrivial.is_empty() { (0..sides.len()).collect() } else { nontrivial };
        candidates.into_iter().min_by(|&i, &j| {
            let a = &sides[i].0 - &sides[i].1;
            let b = &sides[j].0 - &sides[j].1;
            a.cmp(&b).then(i.cmp(&j))
        })
    };
    Ok(Sweep {
        checked: pairs.len(),
        violations,
        focus: focus.map(|i| (i, sides[i].0.clone(), sides[i].1.clone())),
    })
}

impl Sweep {
    fn finding(self, pairs: &[(Distribution, Distribution)], what: &str) -> Finding {
        let mut notes = format!("{what}: {} pairs, {} violations", self.checked, self.violations);
        let (lhs, rhs, witness) = match self.focus {
            Some((i, l, r)) => {
                let label = if self.violations > 0 { "first violation" } else { "min slack" };
                notes.push_str(&format!(
                    "; {label} {} at {}",
                    format_rational(&(&l - &r)),
                    describe(&pairs[i])
                ));
                let w = (self.violations > 0).then(|| pair_witness(&pairs[i]));
                (Some(l.into()), Some(r.into()), w)
            }
            None => (None, None, None),
        };
        Finding {
            verdict: Verdict::from_bool(self.violations == 0),
            lhs,
            rhs,
            witness,
            notes,
        }
    }
}

/// Decides `mean >= 0` from an estimate with standard error `se`.
fn mc_at_least_zero(mean: f64, se: f64) -> Verdict {
    if se == 0.0 {
        Verdict::from_bool(mean >= 0.0)
    } else if mean > SIGMAS * se {
        Verdict::Pass
    } else if mean < -SIGMAS * se {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Decides `mean == 0`: the estimate must lie within the decision margin.
fn mc_zero(mean: f64, se: f64) -> Verdict {
    Verdict::from_bool(mean.abs() <= SIGMAS * se || (se == 0.0 && mean == 0.0))
}

fn mc_samples(ctx: &CheckContext) -> u64 {
    ctx.mc_samples
}

fn mc_parts(e: &Expectation) -> (f64, f64) {
    (e.value_f64(), e.std_error())
}

fn skipped(notes: String) -> Finding {
    Finding {
        verdict: Verdict::Skipped,
        lhs: None,
        rhs: None,
        witness: None,
        notes,
    }
}

// ---- pointwise fuzz checks ----

/// Why a profile breaks the characterization, if it does.
pub(crate) fn reduce_violation(m: &BuyerTradeReduction, p: &ValueProfile<f64>) -> Option<String> {
    let x = p.first_excluded_value()?;
    if p.m_b() == 0 {
        return None;
    }
    let gft = m.apply(p).gft;
    let opt = p.opt_gft();
    let buyer_at_x = p.buyers.contains(&x);
    let optimal = gft == opt;
    if optimal != buyer_at_x {
        return Some(format!(
            "gft {gft} vs opt {opt}, but a buyer at x^(m_S+1)={x} is {}",
            if buyer_at_x { "present" } else { "absent" }
        ));
    }
    if !optimal {
        let q = p.trade_size();
        if q == 0 {
            return Some("suboptimal with q = 0".into());
        }
        let bq = p.buyers[p.ranked_buyers()[q - 1]];
        if opt - gft != bq - x {
            return Some(format!("loss {} but b^(q) - x^(m_S+1) = {}", opt - gft, bq - x));
        }
    }
    None
}

fn lemma_reduce(args: &Args, ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let n = args.count("n_profiles")?;
    let (max_s, max_b) = (args.count("max_sellers")?, args.count("max_buyers")?);
    let grid = grid(args.count("grid_max")?);
    let profiles: Vec<ValueProfile<f64>> =
        gft_core::market::fuzz_profiles(&grid, max_s, max_b, n, seed).collect();
    let bad: Vec<(usize, String)> = profiles
        .par_iter()
        .enumerate()
        .filter_map(|(i, p)| reduce_violation(&ctx.btr, p).map(|why| (i, why)))
        .collect();
    let mut notes = format!("{} profiles, {} violations", profiles.len(), bad.len());
    let witness = bad.first().map(|(i, why)| {
        notes.push_str(&format!("; first at profile {i}: {why}"));
        Witness::Profile(to_rational(&profiles[*i]))
    });
    Ok(Finding {
        verdict: Verdict::from_bool(bad.is_empty()),
        lhs: Some(int(bad.len() as i64).into()),
        rhs: Some(Rational::zero().into()),
        witness,
        notes,
    })
}

fn random_parts(
    rng: &mut ChaCha8Rng,
    grid: &[f64],
    max_parts: usize,
    max_s: usize,
    max_b: usize,
) -> Vec<ValueProfile<f64>> {
    let t = rng.random_range(1..=max_parts.max(1));
    (0..t)
        .map(|_| {
            let m_s = rng.random_range(0..=max_s);
            let m_b = rng.random_range(0..=max_b);
            random_profile(rng, grid, m_s, m_b)
        })
        .collect()
}

fn union(parts: &[ValueProfile<f64>]) -> ValueProfile<f64> {
    ValueProfile::new(
        parts.iter().flat_map(|p| p.sellers.iter().copied()).collect(),
        parts.iter().flat_map(|p| p.buyers.iter().copied()).collect(),
    )
}

struct FuzzParams {
    n: usize,
    max_parts: usize,
    max_s: usize,
    max_b: usize,
    grid: Vec<f64>,
}

fn fuzz_params(args: &Args) -> Result<FuzzParams> {
    Ok(FuzzParams {
        n: args.count("n_trials")?,
        max_parts: args.count("max_parts")?,
        max_s: args.count("max_sellers")?,
        max_b: args.count("max_buyers")?,
        grid: grid(args.count("grid_max")?),
    })
}

/// Runs `violation` on `n` trials; each trial gets its own stream so the
/// result does not depend on scheduling.
fn fuzz_trials<T, G, V>(n: usize, seed: u64, gen: G, violation: V) -> (usize, Option<(usize, T, f64, f64)>)
where
    T: Send,
    G: Fn(&mut ChaCha8Rng) -> T + Sync,
    V: Fn(&T) -> Option<(f64, f64)> + Sync,
{
    let bad: Vec<(usize, T, f64, f64)> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(gft_core::eval::shard_seed(seed, i as u64));
            let trial = gen(&mut rng);
            violation(&trial).map(|(l, r)| (i, trial, l, r))
        })
        .collect();
    let count = bad.len();
    (count, bad.into_iter().next())
}

fn fuzz_finding(
    n: usize,
    count: usize,
    first: Option<(usize, Vec<ValueProfile<f64>>, f64, f64)>,
    what: &str,
) -> Finding {
    let mut notes = format!("{n} trials, {count} violations");
    let (lhs, rhs, witness) = match first {
        Some((i, parts, l, r)) => {
            notes.push_str(&format!("; first at trial {i}: {what} {l} vs {r}"));
            let as_q = |v: f64| Quantity::Real(Rational::from_integer((v as i64).into()));
            (
                Some(as_q(l)),
                Some(as_q(r)),
                Some(Witness::Profiles(parts.iter().map(to_rational).collect())),
            )
        }
        None => (Some(int(0).into()), Some(int(0).into()), None),
    };
    if count == 0 {
        notes.push_str(&format!("; {what}"));
    }
    Finding {
        verdict: Verdict::from_bool(count == 0),
        lhs,
        rhs,
        witness,
        notes,
    }
}

fn merge_superadditivity(args: &Args, ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let fp = fuzz_params(args)?;
    let btr = ctx.btr;
    let (count, first) = fuzz_trials(
        fp.n,
        seed,
        |rng| random_parts(rng, &fp.grid, fp.max_parts, fp.max_s, fp.max_b),
        |parts| {
            let sum: f64 = parts.iter().map(|p| btr.apply(p).gft).sum();
            let whole = btr.apply(&union(parts)).gft;
            (whole < sum).then_some((whole, sum))
        },
    );
    Ok(fuzz_finding(
        fp.n,
        count,
        first,
        "union gft vs sum of part gft",
    ))
}

fn opt_subadditivity(args: &Args, _ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let fp = fuzz_params(args)?;
    let (count, first) = fuzz_trials(
        fp.n,
        seed,
        |rng| {
            let t = rng.random_range(1..=fp.max_parts.max(1));
            let m_b = rng.random_range(0..=fp.max_b);
            let buyers = random_profile(rng, &fp.grid, 0, m_b).buyers;
            (0..t)
                .map(|_| {
                    let m_s = rng.random_range(1..=fp.max_s.max(1));
                    let sellers = random_profile(rng, &fp.grid, m_s, 0).sellers;
                    ValueProfile::new(sellers, buyers.clone())
                })
                .collect::<Vec<_>>()
        },
        |parts| {
            let all = ValueProfile::new(
                parts.iter().flat_map(|p| p.sellers.iter().copied()).collect(),
                parts[0].buyers.clone(),
            );
            let whole = all.opt_gft();
            let sum: f64 = parts.iter().map(ValueProfile::opt_gft).sum();
            (whole > sum).then_some((whole, sum))
        },
    );
    Ok(fuzz_finding(
        fp.n,
        count,
        first,
        "OPT(all sellers) vs sum of OPT(part), buyers shared",
    ))
}

// ---- exact family checks ----

fn thm_iid(args: &Args, ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let (m_s, m_b) = (args.count("mS")?, args.count("mB")?);
    let members = ctx.family.members_up_to(args.count("max_support")?);
    let pairs: Vec<_> = members.into_iter().map(|f| (f.clone(), f)).collect();
    let btr = ctx.btr;
    let s = sweep(&pairs, |f, _| {
        let spec = MarketSpec::iid(f.clone(), m_s, m_b);
        Ok((exact_gft(&btr, &spec.sized(m_s, m_b + 1))?, exact_opt(&spec)?))
    })?;
    Ok(s.finding(&pairs, &format!("BTR({m_s},{}) >= OPT({m_s},{m_b}) over iid members", m_b + 1)))
}

fn sqrt_sufficiency(args: &Args, ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let m_b = args.count("mB")?;
    let k = args.opt_count("k")?.unwrap_or_else(|| four_sqrt_ceil(m_b));
    let context = format!(
        "k={k}; ceil(4 sqrt mB)={}, smallest k with k(k-1)/(mB+k) >= 2 is {}",
        four_sqrt_ceil(m_b),
        smallest_lemma_k(m_b)
    );
    if !lemma_condition(m_b, k) {
        return Ok(skipped(format!(
            "{context}; k(k-1)/(mB+k) < 2, so no guarantee is claimed for this k"
        )));
    }
    let pairs = ctx.family.fsd_pairs(args.count("max_support")?);
    let btr = ctx.btr;
    let s = sweep(&pairs, |seller, buyer| {
        let spec = MarketSpec::new(seller.clone(), buyer.clone(), 1, m_b);
        Ok((exact_gft(&btr, &spec.sized(1, m_b + k))?, exact_opt(&spec)?))
    })?;
    let mut f = s.finding(&pairs, &format!("BTR(1,{}) >= OPT(1,{m_b}) over FSD pairs", m_b + k));
    f.notes = format!("{context}; {}", f.notes);
    Ok(f)
}

fn convergence_bound(args: &Args, ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let m_b = args.count("mB")?;
    if m_b == 0 {
        return Ok(skipped("mB=0 has no buyers; the bound is vacuous".into()));
    }
    let factor = ratio(m_b as i64 - 1, m_b as i64 + 1);
    let pairs = ctx.family.fsd_pairs(args.count("max_support")?);
    let btr = ctx.btr;
    let s = sweep(&pairs, |seller, buyer| {
        let spec = MarketSpec::new(seller.clone(), buyer.clone(), 1, m_b);
        Ok((exact_gft(&btr, &spec)?, &factor * exact_opt(&spec)?))
    })?;
    Ok(s.finding(
        &pairs,
        &format!("BTR(1,{m_b}) >= {} OPT(1,{m_b}) over FSD pairs", format_rational(&factor)),
    ))
}

fn many_sellers(args: &Args, ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let (m_s, m_b) = (args.count("mS")?, args.count("mB")?);
    let n_b = m_s * (m_b + four_sqrt_ceil(m_b));
    let pairs = ctx.family.fsd_pairs(args.count("max_support")?);
    let btr = ctx.btr;
    let chain_failures = std::sync::atomic::AtomicUsize::new(0);
    let s = sweep(&pairs, |seller, buyer| {
        let spec = MarketSpec::new(seller.clone(), buyer.clone(), m_s, m_b);
        let opt = exact_opt(&spec)?;
        if opt > int(m_s as i64) * exact_opt(&spec.sized(1, m_b))? {
            chain_failures.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok((exact_gft(&btr, &spec.sized(m_s, n_b))?, opt))
    })?;
    let chain = chain_failures.into_inner();
    let mut f = s.finding(&pairs, &format!("BTR({m_s},{n_b}) >= OPT({m_s},{m_b}) over FSD pairs"));
    f.notes.push_str(&format!(
        "; OPT({m_s},{m_b}) <= {m_s} OPT(1,{m_b}) failed on {chain} pairs"
    ));
    if chain > 0 {
        f.verdict = Verdict::Fail;
    }
    Ok(f)
}

// ---- closed-form constructions ----

/// `(seller, buyer)` pointwise check that a posted price of 3/2 reaches the
/// optimum on every realization of the `(m_s, m_b)` market.
fn posted_price_is_optimal(spec: &MarketSpec) -> Result<Option<ValueProfile<Rational>>> {
    let price = ratio(3, 2);
    let mut dists: Vec<&Distribution> = vec![&spec.seller; spec.m_s];
    dists.extend(std::iter::repeat_n(&spec.buyer, spec.m_b));
    for (mut values, _) in product_support(&dists, DEFAULT_ENUMERATION_CAP)? {
        let buyers = values.split_off(spec.m_s);
        let p = ValueProfile::new(values, buyers);
        if fixed_price(&p, &price).gft != p.opt_gft() {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn fsd_11_lower(args: &Args, ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let eps = args.rational("eps")?;
    if !eps.is_positive() || eps >= Rational::one() {
        return Err(Error::InvalidInput(format!(
            "eps must lie in (0, 1), got {}",
            format_rational(&eps)
        )));
    }
    let (seller, buyer) = two_point_fsd_pair(&eps)?;
    let spec = MarketSpec::new(seller.clone(), buyer.clone(), 1, 1);
    let opt = exact_opt(&spec)?;
    let gft = exact_gft(&ctx.btr, &spec.sized(1, 2))?;
    let (opt_cf, btr_cf) = (two_point_opt_11(&eps), two_point_btr_12(&eps));
    let mut notes = format!(
        "exact BTR(1,2)={} OPT(1,1)={}; closed forms {} and {}",
        format_rational(&gft),
        format_rational(&opt),
        format_rational(&btr_cf),
        format_rational(&opt_cf)
    );
    if eps >= ratio(1, 3) {
        notes.push_str("; the bound is only claimed for eps in (0, 1/3)");
        return Ok(Finding {
            lhs: Some(gft.into()),
            rhs: Some(opt.into()),
            ..skipped(notes)
        });
    }
    let mut verdict = Verdict::Pass;
    let mut witness = None;
    if opt != opt_cf || gft != btr_cf {
        notes.push_str("; enumeration differs from the closed forms");
        verdict = Verdict::Fail;
        witness = Some(Witness::Distributions {
            seller: seller.clone(),
            buyer: buyer.clone(),
        });
    }
    if gft >= opt {
        notes.push_str("; BTR(1,2) is not below OPT(1,1)");
        verdict = Verdict::Fail;
    }
    match posted_price_is_optimal(&spec)? {
        Some(p) => {
            notes.push_str("; posted price 3/2 misses OPT");
            verdict = Verdict::Fail;
            witness = Some(Witness::Profile(p));
        }
        None => notes.push_str("; posted price 3/2 attains OPT pointwise, so FEASIBLE-OPT(1,1) = OPT(1,1)"),
    }
    Ok(Finding {
        verdict,
        lhs: Some(gft.into()),
        rhs: Some(opt.into()),
        witness,
        notes,
    })
}

/// Gains the closed form `3q/2` counts: the seller trades only when at least
/// two buyers hold the high value.
fn coin_closed_form_integrand(p: &ValueProfile<Rational>) -> Rational {
    let high = p.buyers.iter().filter(|b| **b == int(2)).count();
    if high >= 2 {
        int(2) - &p.sellers[0]
    } else {
        Rational::zero()
    }
}

fn log_lower_bound(args: &Args, ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let (m_b, k) = (args.count("mB")?, args.count("k")?);
    let n = m_b + k;
    let (seller, buyer) = coin_pair();
    let spec = MarketSpec::new(seller, buyer, 1, m_b);
    let opt = exact_opt(&spec)?;
    let gft = exact_gft(&ctx.btr, &spec.sized(1, n))?;
    let predicted_below = (k < usize::BITS as usize) && (1usize << k) < n + 1;
    let mut notes = format!(
        "OPT(1,{m_b})={} BTR(1,{n})={}; 2^{k} {} {}",
        format_rational(&opt),
        format_rational(&gft),
        if predicted_below { "<" } else { ">=" },
        n + 1
    );
    let mut verdict = Verdict::Pass;
    let mut witness = None;
    if opt != coin_opt(m_b) {
        verdict = Verdict::Fail;
        notes.push_str(&format!("; OPT differs from 3p/2 = {}", format_rational(&coin_opt(m_b))));
    }
    if k == 0 {
        notes.push_str("; k=0: BTR compared by enumeration only");
    } else if gft != coin_btr_closed_form(n) {
        verdict = Verdict::Fail;
        notes.push_str(&format!(
            "; BTR differs from 3q/2 = {}",
            format_rational(&coin_btr_closed_form(n))
        ));
        let dists: Vec<&Distribution> =
            std::iter::once(&spec.seller).chain(std::iter::repeat_n(&spec.buyer, n)).collect();
        for (mut values, _) in product_support(&dists, DEFAULT_ENUMERATION_CAP)? {
            let buyers = values.split_off(1);
            let p = ValueProfile::new(values, buyers);
            if ctx.btr.apply(&p).gft != coin_closed_form_integrand(&p) {
                notes.push_str(&format!(
                    "; at {p} BTR earns {} where the closed form counts {}",
                    format_rational(&ctx.btr.apply(&p).gft),
                    format_rational(&coin_closed_form_integrand(&p))
                ));
                witness = Some(Witness::Profile(p));
                break;
            }
        }
    }
    if (gft < opt) != predicted_below {
        verdict = Verdict::Fail;
        notes.push_str("; the comparison of BTR and OPT does not follow 2^k < mB+k+1");
    }
    notes.push_str("; only implemented mechanisms are compared, not every robust mechanism");
    Ok(Finding {
        verdict,
        lhs: Some(gft.into()),
        rhs: Some(opt.into()),
        witness,
        notes,
    })
}

/// Exact expectations behind the median-mechanism check.
#[derive(Clone, Debug, PartialEq)]
pub struct MedianNumbers {
    pub median_12: Rational,
    pub median_11: Rational,
    pub opt_11: Rational,
}

impl MedianNumbers {
    pub fn ratio_12(&self) -> f64 {
        rational_to_f64(&(&self.median_12 / &self.opt_11))
    }

    pub fn ratio_11(&self) -> f64 {
        rational_to_f64(&(&self.median_11 / &self.opt_11))
    }
}

pub fn median_numbers(delta: &Rational) -> Result<MedianNumbers> {
    let f = median_distribution(delta)?;
    let spec = MarketSpec::iid(f, 1, 1);
    let median = MechanismKind::Median(int(1));
    Ok(MedianNumbers {
        median_12: exact_gft(&median, &spec.sized(1, 2))?,
        median_11: exact_gft(&median, &spec)?,
        opt_11: exact_opt(&spec)?,
    })
}

fn median_shortfall(args: &Args, _ctx: &CheckContext, _seed: u64) -> Result<Finding> {
    let delta = args.rational("delta")?;
    let n = median_numbers(&delta)?;
    let below = n.median_12 < n.opt_11;
    let fraction = n.median_11 < ratio(3, 5) * &n.opt_11;
    let notes = format!(
        "MEDIAN(1,2)/OPT(1,1)={} MEDIAN(1,1)/OPT(1,1)={}{}{}",
        sig6(n.ratio_12()),
        sig6(n.ratio_11()),
        if below { "" } else { "; MEDIAN(1,2) is not below OPT(1,1)" },
        if fraction { "" } else { "; MEDIAN(1,1) is not below 0.6 OPT(1,1)" },
    );
    Ok(Finding {
        verdict: Verdict::from_bool(below && fraction),
        lhs: Some(n.median_12.into()),
        rhs: Some(n.opt_11.into()),
        witness: None,
        notes,
    })
}

fn no_fsd_counterexample(args: &Args, ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let (m_s, m_b) = (args.count("mS")?, args.count("mB")?);
    let (l, k) = (args.count("l")?, args.count("k")?);
    let (eps, eps_t) = (args.rational("eps")?, args.rational("eps_tilde")?);
    if !eps_t.is_positive() || eps_t >= Rational::one() {
        return Err(Error::InvalidInput("eps_tilde must lie in (0, 1)".into()));
    }
    let scale = int(((m_s + l) * (m_s + l) * (m_b + k) * (m_b + k)) as i64);
    if eps_t >= &eps / &scale {
        return Ok(skipped(format!(
            "eps_tilde={} is not below eps/((mS+l)^2 (mB+k)^2) = {}",
            format_rational(&eps_t),
            format_rational(&(&eps / &scale))
        )));
    }
    let (seller, buyer) = no_fsd_pair(&eps_t)?;
    let spec = MarketSpec::new(seller, buyer, 1, 1);
    let opt = exact_opt(&spec)?;
    let big = spec.sized(m_s + l, m_b + k);
    let gft = exact_gft(&ctx.btr, &big)?;
    let bound = &eps * &opt;
    let mut verdict = Verdict::from_bool(gft < bound);
    let mut witness = None;
    let mut notes = format!(
        "BTR({},{})={} vs eps OPT(1,1)={}; OPT(1,1)={}",
        m_s + l,
        m_b + k,
        format_rational(&gft),
        format_rational(&bound),
        format_rational(&opt)
    );
    if opt != &eps_t * &eps_t {
        verdict = Verdict::Fail;
        notes.push_str(" differs from eps_tilde^2");
    }
    match posted_price_is_optimal(&spec.sized(m_s, m_b))? {
        Some(p) => {
            verdict = Verdict::Fail;
            notes.push_str("; posted price 3/2 misses OPT");
            witness = Some(Witness::Profile(p));
        }
        None => notes.push_str("; posted price 3/2 attains OPT pointwise"),
    }
    if verdict == Verdict::Fail && witness.is_none() {
        witness = Some(Witness::Distributions {
            seller: spec.seller.clone(),
            buyer: spec.buyer.clone(),
        });
    }

    // Atomless buyer variant, by Monte Carlo.
    let (r_seller, r_buyer) = regular_no_fsd_pair(&eps_t)?;
    let r_bound = rational_to_f64(&(&eps * regular_no_fsd_opt_11(&eps_t)));
    let (n_s, n_b) = (m_s + l, m_b + k);
    let btr = ctx.btr;
    let e = monte_carlo(mc_samples(ctx), seed, |rng| {
        let sellers = (0..n_s).map(|_| r_seller.sample(rng)).collect();
        let buyers = (0..n_b).map(|_| r_buyer.sample(rng)).collect();
        Ok(btr.apply(&ValueProfile::new(sellers, buyers)).gft)
    })?;
    let (mean, se) = mc_parts(&e);
    let regular = mc_at_least_zero(r_bound - mean, se);
    notes.push_str(&format!(
        "; uniform buyer variant: BTR({n_s},{n_b}) = {e} vs eps OPT(1,1) = {} ({regular})",
        sig6(r_bound)
    ));
    notes.push_str("; only implemented mechanisms are compared, not every robust mechanism");
    Ok(Finding {
        verdict: verdict.and(regular),
        lhs: Some(gft.into()),
        rhs: Some(bound.into()),
        witness,
        notes,
    })
}

// ---- sample pricing ----

fn sample_half_iid(args: &Args, ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let members = ctx.family.members_up_to(args.count("max_support")?);
    let pairs: Vec<_> = members.into_iter().map(|f| (f.clone(), f)).collect();
    let s = sweep(&pairs, |f, _| {
        let opt = exact_opt(&MarketSpec::iid(f.clone(), 1, 1))?;
        Ok((sample_k(f, f, 1)?, opt / int(2)))
    })?;
    let mut f = s.finding(&pairs, "Sample_1 >= OPT(1,1)/2 over iid members");

    // Atomless case: the bound is tight, so the paired difference must vanish.
    let u = Distribution::uniform(int(0), int(1))?;
    let d = monte_carlo(mc_samples(ctx), seed, |rng| {
        let (s, b, p) = (u.sample(rng), u.sample(rng), u.sample(rng));
        Ok(sample_pricing_gft(&s, &b, &[p]) - (b - s).max(0.0) / 2.0)
    })?;
    let (mean, se) = mc_parts(&d);
    let tight = mc_zero(mean, se);
    f.notes.push_str(&format!(
        "; uniform[0,1]: Sample_1 - OPT(1,1)/2 = {d} ({tight} at {SIGMAS} sigma)"
    ));
    f.verdict = f.verdict.and(tight);
    Ok(f)
}

fn k_samples_identity(args: &Args, ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let k = args.count("k")?;
    if k == 0 {
        return Err(Error::InvalidInput("k-samples-identity needs k >= 1".into()));
    }
    let pairs = ctx.family.all_pairs(args.count("max_support")?);
    let btr = ctx.btr;
    let scale = int(1 + k as i64);
    let s = sweep(&pairs, |seller, buyer| {
        let spec = MarketSpec::new(seller.clone(), buyer.clone(), 1, 1 + k);
        Ok((&scale * sample_k(seller, buyer, k)?, exact_gft(&btr, &spec)?))
    })?;
    let mut f = s.finding(&pairs, &format!("BTR(1,{}) <= {} Sample_{k} over all pairs", 1 + k, 1 + k));

    // Atomless buyers: equality, tested on the paired difference.
    let u = Distribution::uniform(int(0), int(1))?;
    let scale_f = (1 + k) as f64;
    let d = monte_carlo(mc_samples(ctx), seed, |rng| {
        let s = u.sample(rng);
        let buyers: Vec<f64> = (0..=k).map(|_| u.sample(rng)).collect();
        let sym = scale_f * sample_pricing_gft(&s, &buyers[0], &buyers[1..]);
        Ok(btr.apply(&ValueProfile::new(vec![s], buyers)).gft - sym)
    })?;
    let (mean, se) = mc_parts(&d);
    let equal = mc_zero(mean, se);
    f.notes.push_str(&format!(
        "; uniform[0,1]: BTR(1,{}) - {} Sample_{k} = {d} ({equal} at {SIGMAS} sigma)",
        1 + k,
        1 + k
    ));
    f.verdict = f.verdict.and(equal);
    Ok(f)
}

/// Monte Carlo `Sample_1 / OPT(1,1)` on the construction that stays below
/// one half, with its standard error.
pub fn nohalf_ratio(
    eps: &Rational,
    gamma: &Rational,
    delta: &Rational,
    n: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let (seller, buyer) = sample_nohalf_pair(eps, gamma, delta)?;
    let opt = rational_to_f64(&sample_nohalf_opt_11(eps, gamma));
    let e = expected_sample_pricing_gft(&seller, &buyer, 1, EvalMode::MonteCarlo { n, seed })?;
    Ok((e.value_f64() / opt, e.std_error() / opt))
}

fn fsd_quarter(args: &Args, ctx: &CheckContext, seed: u64) -> Result<Finding> {
    let pairs = ctx.family.fsd_pairs(args.count("max_support")?);
    let s = sweep(&pairs, |seller, buyer| {
        let opt = exact_opt(&MarketSpec::new(seller.clone(), buyer.clone(), 1, 1))?;
        Ok((sample_k(seller, buyer, 1)?, opt / int(4)))
    })?;
    let mut f = s.finding(&pairs, "Sample_1 >= OPT(1,1)/4 over FSD pairs");

    let (eps, gamma, delta) = (args.rational("eps")?, args.rational("gamma")?, args.rational("delta")?);
    let (r, se) = nohalf_ratio(&eps, &gamma, &delta, mc_samples(ctx), seed)?;
    let (lo, hi) = (0.43, 0.46);
    let margin = SIGMAS * se;
    let in_band = if r - margin > lo && r + margin < hi {
        Verdict::Pass
    } else if r + margin < lo || r - margin > hi {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    f.notes.push_str(&format!(
        "; construction eps={} gamma={} delta={}: Sample_1/OPT(1,1) = {} ± {} ({in_band} for ({lo}, {hi}))",
        format_rational(&eps),
        format_rational(&gamma),
        format_rational(&delta),
        sig6(r),
        sig6(se)
    ));
    f.verdict = f.verdict.and(in_band);
    Ok(f)
}
