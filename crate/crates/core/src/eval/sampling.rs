use num_traits::Zero;
use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::eval::{monte_carlo, EvalMode, Expectation, MarketSpec};
use crate::market::{sample_pricing_gft, Mechanism, ValueProfile};
use crate::scalar::Rational;

/// Distribution of the maximum of `k` independent draws from a discrete `f`.
pub fn max_of_samples(f: &Distribution, k: u32) -> Result<Distribution> {
    let atoms = f.atoms().ok_or(Error::NonDiscrete)?;
    let mut below = Rational::zero();
    let mut cdf = Rational::zero();
    let mut out = Vec::with_capacity(atoms.len());
    for a in atoms {
        cdf += &a.prob;
        let now = num_traits::pow(cdf.clone(), k as usize);
        out.push((a.value.clone(), &now - &below));
        below = now;
    }
    Distribution::discrete(out)
}

/// `Sample_k`: expected gains of one seller and one buyer facing a price equal
/// to the highest of `k` fresh draws from the buyer distribution.
pub fn expected_sample_pricing_gft(
    seller: &Distribution,
    buyer: &Distribution,
    k: u32,
    mode: EvalMode,
) -> Result<Expectation> {
    if k == 0 {
        return Err(Error::InvalidInput("sample pricing needs k >= 1".into()));
    }
    match mode {
        EvalMode::Exact => {
            let price = max_of_samples(buyer, k)?;
            let (s_atoms, b_atoms) = (
                seller.atoms().ok_or(Error::NonDiscrete)?,
                buyer.atoms().ok_or(Error::NonDiscrete)?,
            );
            let p_atoms = price.atoms().unwrap();
            let mut total = Rational::zero();
            for s in s_atoms {
                for b in b_atoms.iter().filter(|b| b.value >= s.value) {
                    let accept: Rational = p_atoms
                        .iter()
                        .filter(|p| b.value >= p.value && p.value >= s.value)
                        .map(|p| p.prob.clone())
                        .sum();
                    total += &s.prob * &b.prob * accept * (&b.value - &s.value);
                }
            }
            Ok(Expectation::Exact {
                value: total,
                states: (s_atoms.len() * b_atoms.len() * p_atoms.len()) as u64,
            })
        }
        EvalMode::MonteCarlo { n, seed } => monte_carlo(n, seed, |rng| {
            let s = seller.sample(rng);
            let b = buyer.sample(rng);
            let samples: Vec<f64> = (0..k).map(|_| buyer.sample(rng)).collect();
            Ok(sample_pricing_gft(&s, &b, &samples))
        }),
    }
}

/// A profile drawn through shared quantiles, with each agent's quantile.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledProfile {
    pub profile: ValueProfile<f64>,
    pub seller_quantiles: Vec<f64>,
    pub buyer_quantiles: Vec<f64>,
}

/// Draws `m_S + m_B` uniform quantiles, assigns them to roles by a uniformly
/// random permutation, and maps each through its role's quantile function.
pub fn coupled_profile<R: Rng + ?Sized>(spec: &MarketSpec, rng: &mut R) -> CoupledProfile {
    let mut quantiles: Vec<f64> = (0..spec.m_s + spec.m_b).map(|_| rng.sample(Open01)).collect();
    quantiles.shuffle(rng);
    let buyer_quantiles = quantiles.split_off(spec.m_s);
    let seller_quantiles = quantiles;
    let profile = ValueProfile::new(
        seller_quantiles.iter().map(|&u| spec.seller.quantile_value_f64(u)).collect(),
        buyer_quantiles.iter().map(|&u| spec.buyer.quantile_value_f64(u)).collect(),
    );
    CoupledProfile {
        profile,
        seller_quantiles,
        buyer_quantiles,
    }
}

/// `n` coupled profiles from a single stream seeded with `seed`.
pub fn coupled_quantile_profiles(
    spec: &MarketSpec,
    n: usize,
    seed: u64,
) -> impl Iterator<Item = CoupledProfile> + '_ {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(move |_| coupled_profile(spec, &mut rng))
}

/// Monte Carlo expected gains using the coupled sampler.
pub fn expected_gft_coupled<M>(m: &M, spec: &MarketSpec, n: u64, seed: u64) -> Result<Expectation>
where
    M: Mechanism<f64> + ?Sized,
{
    m.check_market(spec.m_s, spec.m_b)?;
    monte_carlo(n, seed, |rng| m.gft(&coupled_profile(spec, rng).profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{check_fsd, product_support};
    use crate::eval::expected_gft_mc;
    use crate::market::MechanismKind;
    use crate::scalar::{int, ratio};

    fn coin(lo: i64, hi: i64) -> Distribution {
        Distribution::two_point(int(lo), ratio(1, 2), int(hi)).unwrap()
    }

    /// Direct enumeration over the seller, the buyer and all `k` samples.
    fn brute_force_sample_k(s: &Distribution, b: &Distribution, k: usize) -> Rational {
        let mut dists = vec![s, b];
        dists.extend(std::iter::repeat_n(b, k));
        product_support(&dists, 1 << 20)
            .unwrap()
            .map(|(v, p)| p * sample_pricing_gft(&v[0], &v[1], &v[2..]))
            .sum()
    }

    #[test]
    fn one_seller_atom_example() {
        let e = expected_sample_pricing_gft(&Distribution::point_mass(int(1)), &coin(0, 2), 1, EvalMode::Exact).unwrap();
        assert_eq!(e.exact().unwrap(), &ratio(1, 4));
    }

    #[test]
    fn point_masses_give_zero() {
        let c = Distribution::point_mass(int(5));
        let e = expected_sample_pricing_gft(&c, &c, 3, EvalMode::Exact).unwrap();
        assert!(e.exact().unwrap().is_zero());
    }

    #[test]
    fn max_distribution_matches_enumeration() {
        let s = Distribution::discrete(vec![(int(0), ratio(1, 4)), (int(1), ratio(1, 4)), (int(2), ratio(1, 2))]).unwrap();
        let b = Distribution::discrete(vec![(int(1), ratio(1, 4)), (int(2), ratio(1, 4)), (int(3), ratio(1, 2))]).unwrap();
        for k in 1..=4 {
            let fast = expected_sample_pricing_gft(&s, &b, k, EvalMode::Exact).unwrap();
            assert_eq!(fast.exact().unwrap(), &brute_force_sample_k(&s, &b, k as usize), "k={k}");
        }
        let m = max_of_samples(&coin(0, 2), 2).unwrap();
        assert_eq!(m.atoms().unwrap()[0].prob, ratio(1, 4));
        assert!(m.atoms().unwrap().iter().map(|a| a.prob.clone()).sum::<Rational>() == Rational::from_integer(1.into()));
    }

    #[test]
    fn uniform_sample_one_is_one_twelfth() {
        let u = Distribution::uniform(int(0), int(1)).unwrap();
        let e = expected_sample_pricing_gft(&u, &u, 1, EvalMode::MonteCarlo { n: 1_000_000, seed: 3 }).unwrap();
        assert!((e.value_f64() - 1.0 / 12.0).abs() <= 5.0 * e.std_error(), "{e}");
        assert!(expected_sample_pricing_gft(&u, &u, 1, EvalMode::Exact).is_err());
        assert!(expected_sample_pricing_gft(&u, &u, 0, EvalMode::MonteCarlo { n: 10, seed: 3 }).is_err());
    }

    #[test]
    fn coupled_sampler_matches_iid_when_distributions_match() {
        let spec = MarketSpec::iid(Distribution::uniform(int(0), int(1)).unwrap(), 2, 3);
        let coupled = expected_gft_coupled(&MechanismKind::Vcg, &spec, 400_000, 10).unwrap();
        let plain = expected_gft_mc(&MechanismKind::Vcg, &spec, 400_000, 11).unwrap();
        let se = coupled.std_error().hypot(plain.std_error());
        assert!((coupled.value_f64() - plain.value_f64()).abs() <= 5.0 * se);
    }

    #[test]
    fn coupled_point_masses_are_constant() {
        let spec = MarketSpec::new(Distribution::point_mass(int(1)), Distribution::point_mass(int(2)), 2, 2);
        for c in coupled_quantile_profiles(&spec, 50, 1) {
            assert_eq!(c.profile, ValueProfile::new(vec![1.0, 1.0], vec![2.0, 2.0]));
        }
    }

    #[test]
    fn coupled_values_respect_dominance() {
        let e = ratio(1, 4);
        let b = Distribution::two_point(int(0), e.clone(), int(2)).unwrap();
        let s = Distribution::two_point(int(0), e, int(1)).unwrap();
        assert!(check_fsd(&b, &s));
        let spec = MarketSpec::new(s.clone(), b.clone(), 2, 3);
        for c in coupled_quantile_profiles(&spec, 2000, 8) {
            for &u in c.seller_quantiles.iter().chain(&c.buyer_quantiles) {
                assert!(b.quantile_value_f64(u) >= s.quantile_value_f64(u));
            }
            for (v, u) in c.profile.buyers.iter().zip(&c.buyer_quantiles) {
                assert_eq!(*v, b.quantile_value_f64(*u));
            }
        }
    }
}
