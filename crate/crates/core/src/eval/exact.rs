use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dist::{product_support, Atom, Distribution, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::eval::{Expectation, MarketSpec};
use crate::market::{Mechanism, ValueProfile};
use crate::scalar::Rational;

/// States per parallel work item.
const CHUNK: u128 = 4096;

/// `E[f(profile)]` by walking the full product of supports.
pub fn exact_expectation<F>(spec: &MarketSpec, cap: u128, f: F) -> Result<Expectation>
where
    F: Fn(&ValueProfile<Rational>) -> Result<Rational> + Sync,
{
    let mut dists: Vec<&Distribution> = vec![&spec.seller; spec.m_s];
    dists.extend(std::iter::repeat_n(&spec.buyer, spec.m_b));
    let support = product_support(&dists, cap)?;
    let total = support.total_states();
    let chunks = total.div_ceil(CHUNK);
    let partials = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Rational> {
            let mut sum = Rational::zero();
            for (mut values, prob) in support.clone().range(c * CHUNK, (c + 1) * CHUNK) {
                let buyers = values.split_off(spec.m_s);
                let p = ValueProfile::new(values, buyers);
                let v = f(&p)?;
                if !v.is_zero() {
                    sum += prob * v;
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Expectation::Exact {
        value: partials.into_iter().sum(),
        states: total as u64,
    })
}

/// Exact expected gains of `m` over every joint realization.
pub fn expected_gft_exact<M>(m: &M, spec: &MarketSpec) -> Result<Expectation>
where
    M: Mechanism<Rational> + ?Sized,
{
    expected_gft_exact_capped(m, spec, DEFAULT_ENUMERATION_CAP)
}

pub fn expected_gft_exact_capped<M>(m: &M, spec: &MarketSpec, cap: u128) -> Result<Expectation>
where
    M: Mechanism<Rational> + ?Sized,
{
    m.check_market(spec.m_s, spec.m_b)?;
    exact_expectation(spec, cap, |p| m.gft(p))
}

/// Count vectors over `k` atoms summing to `m`, with their probability
/// `m! / prod(c_i!) * prod(p_i^c_i)`.
fn compositions(atoms: &[Atom], m: usize) -> Vec<(Vec<Rational>, Rational)> {
    fn rec(
        atoms: &[Atom],
        left: usize,
        values: &mut Vec<Rational>,
        weight: Rational,
        out: &mut Vec<(Vec<Rational>, Rational)>,
    ) {
        let Some((first, rest)) = atoms.split_first() else {
            if left == 0 {
                out.push((values.clone(), weight));
            }
            return;
        };
        let counts: Vec<usize> = if rest.is_empty() { vec![left] } else { (0..=left).collect() };
        for c in counts {
            let mut w = weight.clone();
            for _ in 0..c {
                w *= &first.prob;
            }
            let start = values.len();
            values.extend(std::iter::repeat_n(first.value.clone(), c));
            rec(rest, left - c, values, w, out);
            values.truncate(start);
        }
    }

    let mut raw = Vec::new();
    rec(atoms, m, &mut Vec::with_capacity(m), Rational::one(), &mut raw);
    raw.into_iter()
        .map(|(values, w)| {
            let coef = multinomial(&values);
            (values, w * Rational::from_integer(coef))
        })
        .collect()
}

/// `n! / prod(run_length!)` for a sorted sequence.
fn multinomial(sorted: &[Rational]) -> BigInt {
    let factorial = |n: usize| (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    let mut coef = factorial(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        coef /= factorial(j);
        i += j;
    }
    coef
}

/// `E[f(profile)]` for functions that are symmetric within each role.
///
/// Enumerates sorted value multisets per side with multinomial weights instead
/// of ordered tuples, which is exponentially smaller for large markets. Only
/// valid when `f` does not depend on which agent of a role holds which value;
/// every mechanism's gains satisfy this because ties are broken among agents
/// with equal values.
pub fn symmetric_expectation<F>(spec: &MarketSpec, f: F) -> Result<Expectation>
where
    F: Fn(&ValueProfile<Rational>) -> Result<Rational> + Sync,
{
    let sellers_atoms = spec.seller.atoms().ok_or(Error::NonDiscrete)?;
    let buyer_atoms = spec.buyer.atoms().ok_or(Error::NonDiscrete)?;
    let sellers = compositions(sellers_atoms, spec.m_s);
    let buyers = compositions(buyer_atoms, spec.m_b);
    let states = sellers.len() as u128 * buyers.len() as u128;
    if states > DEFAULT_ENUMERATION_CAP {
        return Err(Error::TooLarge { states, cap: DEFAULT_ENUMERATION_CAP });
    }
    let partials = sellers
        .par_iter()
        .map(|(s, ws)| -> Result<Rational> {
            let mut sum = Rational::zero();
            for (b, wb) in &buyers {
                let v = f(&ValueProfile::new(s.clone(), b.clone()))?;
                if !v.is_zero() {
                    sum += ws * wb * v;
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Expectation::Exact {
        value: partials.into_iter().sum(),
        states: states as u64,
    })
}

/// Exact expected gains using the multiset enumeration.
pub fn expected_gft_symmetric<M>(m: &M, spec: &MarketSpec) -> Result<Expectation>
where
    M: Mechanism<Rational> + ?Sized,
{
    m.check_market(spec.m_s, spec.m_b)?;
    symmetric_expectation(spec, |p| m.gft(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MechanismKind;
    use crate::scalar::{int, ratio};

    fn coin(lo: i64, hi: i64) -> Distribution {
        Distribution::two_point(int(lo), ratio(1, 2), int(hi)).unwrap()
    }

    #[test]
    fn fair_coin_opt() {
        let spec = MarketSpec::iid(coin(0, 1), 1, 1);
        let e = expected_gft_exact(&MechanismKind::Vcg, &spec).unwrap();
        assert_eq!(e, Expectation::Exact { value: ratio(1, 4), states: 4 });
    }

    #[test]
    fn compositions_cover_the_simplex() {
        let d = Distribution::discrete(vec![(int(0), ratio(1, 4)), (int(1), ratio(1, 4)), (int(3), ratio(1, 2))]).unwrap();
        let c = compositions(d.atoms().unwrap(), 4);
        assert_eq!(c.len(), 15);
        assert_eq!(c.iter().map(|x| x.1.clone()).sum::<Rational>(), int(1));
        assert_eq!(compositions(d.atoms().unwrap(), 0), vec![(vec![], int(1))]);
    }

    #[test]
    fn pre_trade_welfare_is_linear() {
        let f = Distribution::discrete(vec![(int(0), ratio(1, 4)), (int(2), ratio(1, 2)), (int(3), ratio(1, 4))]).unwrap();
        let spec = MarketSpec::new(f.clone(), coin(0, 1), 3, 2);
        let welfare = |p: &ValueProfile<Rational>| Ok(p.sellers.iter().sum::<Rational>());
        let exact = exact_expectation(&spec, DEFAULT_ENUMERATION_CAP, welfare).unwrap();
        assert_eq!(exact.exact().unwrap(), &(int(3) * f.mean()));
        let sym = symmetric_expectation(&spec, welfare).unwrap();
        assert_eq!(sym.exact(), exact.exact());
    }

    #[test]
    fn engines_agree() {
        let s = Distribution::discrete(vec![(int(0), ratio(1, 4)), (int(1), ratio(1, 2)), (int(3), ratio(1, 4))]).unwrap();
        let b = Distribution::discrete(vec![(int(1), ratio(3, 4)), (int(2), ratio(1, 4))]).unwrap();
        for (m_s, m_b) in [(1, 1), (2, 3), (3, 2), (0, 2), (2, 0)] {
            let spec = MarketSpec::new(s.clone(), b.clone(), m_s, m_b);
            for m in ["btr", "str", "vcg", "mcafee92", "fixed-price:3/2"] {
                let m: MechanismKind = m.parse().unwrap();
                let a = expected_gft_exact(&m, &spec).unwrap();
                let c = expected_gft_symmetric(&m, &spec).unwrap();
                assert_eq!(a.exact(), c.exact(), "{m} ({m_s},{m_b})");
            }
        }
    }

    #[test]
    fn rejects_continuous_and_oversized_inputs() {
        let u = Distribution::uniform(int(0), int(1)).unwrap();
        let spec = MarketSpec::iid(u, 1, 1);
        assert_eq!(expected_gft_exact(&MechanismKind::Btr, &spec).unwrap_err(), Error::NonDiscrete);
        assert_eq!(expected_gft_symmetric(&MechanismKind::Btr, &spec).unwrap_err(), Error::NonDiscrete);
        let spec = MarketSpec::iid(coin(0, 1), 10, 10);
        assert!(matches!(
            expected_gft_exact_capped(&MechanismKind::Btr, &spec, 1000),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn median_rejects_many_sellers() {
        let spec = MarketSpec::iid(coin(0, 1), 2, 1);
        assert!(matches!(
            expected_gft_exact(&MechanismKind::Median(int(1)), &spec),
            Err(Error::UnsupportedMarket { .. })
        ));
    }
}
