use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{Expectation, MarketSpec};
use crate::market::{Mechanism, ValueProfile};

/// Fixed number of sample streams; independent of the thread pool size.
pub const SHARDS: u64 = 32;

/// Seed of shard `i`: `seed ^ i`.
pub fn shard_seed(seed: u64, shard: u64) -> u64 {
    seed ^ shard
}

#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Self {
            n,
            mean: a.mean + d * b.n as f64 / n as f64,
            m2: a.m2 + b.m2 + d * d * (a.n as f64 * b.n as f64 / n as f64),
        }
    }
}

/// Merges neighbours level by level so the result does not depend on
/// completion order.
fn pairwise(mut parts: Vec<Welford>) -> Welford {
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { Welford::merge(c[0], c[1]) } else { c[0] })
            .collect();
    }
    parts.pop().unwrap_or_default()
}

/// Mean and standard error of `draw` over `n` samples.
pub fn monte_carlo<F>(n: u64, seed: u64, draw: F) -> Result<Expectation>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n < 2 {
        return Err(Error::InvalidInput(format!("Monte Carlo needs n >= 2, got {n}")));
    }
    let shards = (0..SHARDS)
        .into_par_iter()
        .map(|i| -> Result<Welford> {
            let count = n / SHARDS + u64::from(i < n % SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, i));
            let mut acc = Welford::default();
            for _ in 0..count {
                acc.push(draw(&mut rng)?);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let w = pairwise(shards);
    let variance = w.m2 / (w.n - 1) as f64;
    Ok(Expectation::MonteCarlo {
        mean: w.mean,
        std_error: (variance / w.n as f64).sqrt(),
        n_samples: w.n,
        seed,
    })
}

/// Monte Carlo expected gains with independent draws for every agent.
pub fn expected_gft_mc<M>(m: &M, spec: &MarketSpec, n: u64, seed: u64) -> Result<Expectation>
where
    M: Mechanism<f64> + ?Sized,
{
    m.check_market(spec.m_s, spec.m_b)?;
    monte_carlo(n, seed, |rng| {
        let sellers = (0..spec.m_s).map(|_| spec.seller.sample(rng)).collect();
        let buyers = (0..spec.m_b).map(|_| spec.buyer.sample(rng)).collect();
        m.gft(&ValueProfile::new(sellers, buyers))
    })
}
