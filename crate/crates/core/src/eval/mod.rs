//! Expected gains-from-trade engines.
//!
//! Exact engines enumerate joint realizations of discrete distributions in
//! rational arithmetic. The Monte Carlo engine is sharded over a fixed number
//! of independently seeded streams so results do not depend on thread count.

mod exact;
mod monte_carlo;
mod sampling;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, rational_to_f64, Rational};

pub use exact::{
    expected_gft_exact, expected_gft_exact_capped, expected_gft_symmetric, exact_expectation,
    symmetric_expectation,
};
pub use monte_carlo::{expected_gft_mc, monte_carlo, shard_seed, SHARDS};
pub use sampling::{
    coupled_profile, coupled_quantile_profiles, expected_gft_coupled, expected_sample_pricing_gft,
    max_of_samples, CoupledProfile,
};

/// Independent sellers from `seller` and buyers from `buyer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub seller: Distribution,
    pub buyer: Distribution,
    pub m_s: usize,
    pub m_b: usize,
}

impl MarketSpec {
    pub fn new(seller: Distribution, buyer: Distribution, m_s: usize, m_b: usize) -> Self {
        Self { seller, buyer, m_s, m_b }
    }

    pub fn iid(f: Distribution, m_s: usize, m_b: usize) -> Self {
        Self::new(f.clone(), f, m_s, m_b)
    }

    /// Same distributions, different market size.
    pub fn sized(&self, m_s: usize, m_b: usize) -> Self {
        Self::new(self.seller.clone(), self.buyer.clone(), m_s, m_b)
    }
}

/// How to evaluate an expectation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo { n: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Expectation {
    Exact {
        #[serde(with = "crate::scalar::serde_rational")]
        value: Rational,
        /// Weighted states summed over.
        states: u64,
    },
    MonteCarlo {
        mean: f64,
        std_error: f64,
        n_samples: u64,
        seed: u64,
    },
}

impl Expectation {
    pub fn value_f64(&self) -> f64 {
        match self {
            Expectation::Exact { value, .. } => rational_to_f64(value),
            Expectation::MonteCarlo { mean, .. } => *mean,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Expectation::Exact { value, .. } => Some(value),
            Expectation::MonteCarlo { .. } => None,
        }
    }

    /// The exact value; errors on a Monte Carlo estimate.
    pub fn expect_exact(&self) -> Result<&Rational> {
        self.exact()
            .ok_or_else(|| Error::InvalidInput("expected an exact expectation".into()))
    }

    /// Zero for exact results.
    pub fn std_error(&self) -> f64 {
        match self {
            Expectation::Exact { .. } => 0.0,
            Expectation::MonteCarlo { std_error, .. } => *std_error,
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Exact { value, .. } => f.write_str(&format_rational(value)),
            Expectation::MonteCarlo { mean, std_error, .. } => {
                write!(f, "{} ± {}", sig6(*mean), sig6(*std_error))
            }
        }
    }
}

/// Six significant digits without trailing zeros.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..=9).contains(&magnitude) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn formats_six_significant_digits() {
        assert_eq!(sig6(1.0 / 6.0), "0.166667");
        assert_eq!(sig6(0.000373), "0.000373");
        assert_eq!(sig6(1234.5678), "1234.57");
        assert_eq!(sig6(-1.0), "-1");
    }

    #[test]
    fn expectation_json_round_trip() {
        let e = Expectation::Exact { value: ratio(57, 64), states: 27 };
        let text = serde_json::to_string(&e).unwrap();
        assert_eq!(text, r#"{"mode":"exact","value":"57/64","states":27}"#);
        assert_eq!(serde_json::from_str::<Expectation>(&text).unwrap(), e);

        let m = Expectation::MonteCarlo { mean: 0.1 + 0.2, std_error: 1e-4 / 3.0, n_samples: 10, seed: 7 };
        let back: Expectation = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(e.to_string(), "57/64");
    }
}
