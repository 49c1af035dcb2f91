//! Value distributions represented by their quantile functions.
//!
//! Two shapes are supported: finite discrete distributions with exact rational
//! probabilities, and piecewise-uniform distributions whose quantile function
//! is piecewise linear (a zero-width value piece encodes an atom). The
//! quantile function is left-continuous, `v(q) = inf { v : Pr[w <= v] >= q }`,
//! and is only defined on the open interval `(0, 1)`.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{
    format_rational, int, json_to_rational, ratio, rational_to_f64, rational_to_json_number,
    Rational,
};

/// Default cap on the number of joint states [`product_support`] will walk.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub value: Rational,
    pub prob: Rational,
}

/// One linear segment of a piecewise-uniform quantile function: quantiles in
/// `(q_lo, q_hi]` map linearly onto `[v_lo, v_hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub q_lo: Rational,
    pub q_hi: Rational,
    pub v_lo: Rational,
    pub v_hi: Rational,
}

impl Piece {
    fn at(&self, q: &Rational) -> Rational {
        if self.v_lo == self.v_hi {
            return self.v_lo.clone();
        }
        &self.v_lo + (q - &self.q_lo) / (&self.q_hi - &self.q_lo) * (&self.v_hi - &self.v_lo)
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Discrete {
        atoms: Vec<Atom>,
        cumulative: Vec<Rational>,
    },
    Piecewise {
        pieces: Vec<Piece>,
    },
}

#[derive(Clone, Debug)]
struct FloatCache {
    /// Discrete: cumulative probabilities. Piecewise: upper quantile of each piece.
    cut: Vec<f64>,
    /// Discrete: atom values. Piecewise: (q_lo, q_hi, v_lo, v_hi).
    values: Vec<[f64; 4]>,
}

/// An immutable value distribution.
#[derive(Clone, Debug)]
pub struct Distribution {
    shape: Shape,
    cache: FloatCache,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        match (&self.shape, &other.shape) {
            (Shape::Discrete { atoms: a, .. }, Shape::Discrete { atoms: b, .. }) => a == b,
            (Shape::Piecewise { pieces: a }, Shape::Piecewise { pieces: b }) => a == b,
            _ => false,
        }
    }
}

impl Distribution {
    /// Discrete distribution from `(value, probability)` atoms.
    pub fn discrete(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut total = Rational::zero();
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (i, (value, prob)) in atoms.iter().enumerate() {
            if *prob <= Rational::zero() {
                return Err(Error::InvalidDistribution(format!(
                    "atom {} has non-positive probability {}",
                    i,
                    format_rational(prob)
                )));
            }
            if i > 0 && *value <= atoms[i - 1].0 {
                return Err(Error::InvalidDistribution(
                    "support values must be strictly increasing".into(),
                ));
            }
            total += prob;
            cumulative.push(total.clone());
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}, not 1",
                format_rational(&total)
            )));
        }
        let cache = FloatCache {
            cut: cumulative.iter().map(rational_to_f64).collect(),
            values: atoms
                .iter()
                .map(|(v, _)| {
                    let v = rational_to_f64(v);
                    [v, v, v, v]
                })
                .collect(),
        };
        Ok(Self {
            shape: Shape::Discrete {
                atoms: atoms
                    .into_iter()
                    .map(|(value, prob)| Atom { value, prob })
                    .collect(),
                cumulative,
            },
            cache,
        })
    }

    pub fn point_mass(value: Rational) -> Self {
        Self::discrete(vec![(value, int(1))]).expect("point mass is valid")
    }

    /// `low` with probability `p_low`, `high` otherwise.
    pub fn two_point(low: Rational, p_low: Rational, high: Rational) -> Result<Self> {
        let p_high = int(1) - &p_low;
        Self::discrete(vec![(low, p_low), (high, p_high)])
    }

    /// Piecewise-uniform distribution from its quantile pieces.
    pub fn piecewise(pieces: Vec<Piece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::InvalidDistribution("no pieces".into()))?;
        if !first.q_lo.is_zero() {
            return Err(Error::InvalidDistribution("first piece must start at q = 0".into()));
        }
        if !pieces.last().unwrap().q_hi.is_one() {
            return Err(Error::InvalidDistribution("last piece must end at q = 1".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.q_lo >= p.q_hi {
                return Err(Error::InvalidDistribution(format!("piece {i} has empty quantile range")));
            }
            if p.v_lo > p.v_hi {
                return Err(Error::InvalidDistribution(format!("piece {i} has decreasing values")));
            }
            if i > 0 {
                let prev = &pieces[i - 1];
                if prev.q_hi != p.q_lo {
                    return Err(Error::InvalidDistribution(format!(
                        "piece {i} does not start where piece {} ends",
                        i - 1
                    )));
                }
                if prev.v_hi > p.v_lo {
                    return Err(Error::InvalidDistribution(format!(
                        "piece {i} starts below the end of piece {}",
                        i - 1
                    )));
                }
            }
        }
        let cache = FloatCache {
            cut: pieces.iter().map(|p| rational_to_f64(&p.q_hi)).collect(),
            values: pieces
                .iter()
                .map(|p| {
                    [
                        rational_to_f64(&p.q_lo),
                        rational_to_f64(&p.q_hi),
                        rational_to_f64(&p.v_lo),
                        rational_to_f64(&p.v_hi),
                    ]
                })
                .collect(),
        };
        Ok(Self {
            shape: Shape::Piecewise { pieces },
            cache,
        })
    }

    /// Uniform distribution on `[lo, hi]`.
    pub fn uniform(lo: Rational, hi: Rational) -> Result<Self> {
        Self::piecewise(vec![Piece {
            q_lo: int(0),
            q_hi: int(1),
            v_lo: lo,
            v_hi: hi,
        }])
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.shape, Shape::Discrete { .. })
    }

    /// True when no value carries positive probability.
    pub fn is_atomless(&self) -> bool {
        match &self.shape {
            Shape::Discrete { .. } => false,
            Shape::Piecewise { pieces } => pieces.iter().all(|p| p.v_lo != p.v_hi),
        }
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.shape {
            Shape::Discrete { atoms, .. } => Some(atoms),
            Shape::Piecewise { .. } => None,
        }
    }

    pub fn pieces(&self) -> Option<&[Piece]> {
        match &self.shape {
            Shape::Discrete { .. } => None,
            Shape::Piecewise { pieces } => Some(pieces),
        }
    }

    pub fn support_len(&self) -> Option<usize> {
        self.atoms().map(<[Atom]>::len)
    }

    pub fn mean(&self) -> Rational {
        match &self.shape {
            Shape::Discrete { atoms, .. } => atoms.iter().map(|a| &a.value * &a.prob).sum(),
            Shape::Piecewise { pieces } => pieces
                .iter()
                .map(|p| (&p.q_hi - &p.q_lo) * (&p.v_lo + &p.v_hi) / int(2))
                .sum(),
        }
    }

    /// `v_F(q)` for `q` in `(0, 1)`.
    pub fn quantile_value(&self, q: &Rational) -> Result<Rational> {
        if *q <= Rational::zero() || *q >= Rational::one() {
            return Err(Error::InvalidInput(format!(
                "quantile {} outside (0, 1)",
                format_rational(q)
            )));
        }
        Ok(self.left_value(q))
    }

    /// Left-continuous value at `q` in `(0, 1]`.
    fn left_value(&self, q: &Rational) -> Rational {
        match &self.shape {
            Shape::Discrete { atoms, cumulative } => {
                let i = cumulative.partition_point(|c| c < q);
                atoms[i.min(atoms.len() - 1)].value.clone()
            }
            Shape::Piecewise { pieces } => {
                let i = pieces.partition_point(|p| p.q_hi < *q);
                pieces[i.min(pieces.len() - 1)].at(q)
            }
        }
    }

    /// Limit of the quantile function from the right at `q` in `[0, 1)`.
    fn right_value(&self, q: &Rational) -> Rational {
        match &self.shape {
            Shape::Discrete { atoms, cumulative } => {
                let i = cumulative.partition_point(|c| c <= q);
                atoms[i.min(atoms.len() - 1)].value.clone()
            }
            Shape::Piecewise { pieces } => {
                let i = pieces.partition_point(|p| p.q_hi <= *q);
                pieces[i.min(pieces.len() - 1)].at(q)
            }
        }
    }

    /// Quantiles in `(0, 1)` where the quantile function may change slope or jump.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = match &self.shape {
            Shape::Discrete { cumulative, .. } => cumulative.clone(),
            Shape::Piecewise { pieces } => pieces.iter().map(|p| p.q_hi.clone()).collect(),
        };
        out.pop();
        out
    }

    /// Float quantile function used by the samplers.
    pub fn quantile_value_f64(&self, u: f64) -> f64 {
        let cut = &self.cache.cut;
        let i = cut.partition_point(|c| *c < u).min(cut.len() - 1);
        let [q_lo, q_hi, v_lo, v_hi] = self.cache.values[i];
        if v_lo == v_hi {
            v_lo
        } else {
            v_lo + (u - q_lo) / (q_hi - q_lo) * (v_hi - v_lo)
        }
    }

    /// Draws one value by inverse transform of a uniform quantile on `(0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_value_f64(u)
    }

    pub fn to_json(&self) -> Value {
        match &self.shape {
            Shape::Discrete { atoms, .. } => json!({
                "atoms": atoms
                    .iter()
                    .map(|a| json!([rational_to_json_number(&a.value), format_rational(&a.prob)]))
                    .collect::<Vec<_>>()
            }),
            Shape::Piecewise { pieces } => json!({
                "pieces": pieces
                    .iter()
                    .map(|p| json!([
                        format_rational(&p.q_lo),
                        format_rational(&p.q_hi),
                        rational_to_json_number(&p.v_lo),
                        rational_to_json_number(&p.v_hi),
                    ]))
                    .collect::<Vec<_>>()
            }),
        }
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |why: &str| Error::parse(value.to_string(), why.to_string());
        let obj = value.as_object().ok_or_else(|| bad("expected an object"))?;
        if let Some(atoms) = obj.get("atoms") {
            let atoms = atoms.as_array().ok_or_else(|| bad("`atoms` must be an array"))?;
            let parsed = atoms
                .iter()
                .map(|a| match a.as_array().map(Vec::as_slice) {
                    Some([v, p]) => Ok((json_to_rational(v)?, json_to_rational(p)?)),
                    _ => Err(bad("each atom must be [value, \"p/q\"]")),
                })
                .collect::<Result<Vec<_>>>()?;
            Self::discrete(parsed)
        } else if let Some(pieces) = obj.get("pieces") {
            let pieces = pieces.as_array().ok_or_else(|| bad("`pieces` must be an array"))?;
            let parsed = pieces
                .iter()
                .map(|p| match p.as_array().map(Vec::as_slice) {
                    Some([ql, qh, vl, vh]) => Ok(Piece {
                        q_lo: json_to_rational(ql)?,
                        q_hi: json_to_rational(qh)?,
                        v_lo: json_to_rational(vl)?,
                        v_hi: json_to_rational(vh)?,
                    }),
                    _ => Err(bad("each piece must be [\"q_lo\", \"q_hi\", v_lo, v_hi]")),
                })
                .collect::<Result<Vec<_>>>()?;
            Self::piecewise(parsed)
        } else {
            Err(bad("expected `atoms` or `pieces`"))
        }
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Distribution::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Outcome of an exact dominance test.
#[derive(Clone, Debug, PartialEq)]
pub struct FsdReport {
    pub dominates: bool,
    /// A quantile where the buyer quantile function is strictly below the
    /// seller's, present iff `dominates` is false.
    pub witness: Option<Rational>,
}

/// Whether `buyer` first-order stochastically dominates `seller` (weakly).
pub fn check_fsd(buyer: &Distribution, seller: &Distribution) -> bool {
    fsd_report(buyer, seller).dominates
}

/// Exact dominance test with a failing quantile as witness.
///
/// Both quantile functions are linear between consecutive merged breakpoints,
/// so comparing the right limit at the lower end and the (left-continuous)
/// value at the upper end of each sub-interval decides the question.
pub fn fsd_report(buyer: &Distribution, seller: &Distribution) -> FsdReport {
    let mut cuts: Vec<Rational> = buyer.breakpoints();
    cuts.extend(seller.breakpoints());
    cuts.push(int(0));
    cuts.push(int(1));
    cuts.sort();
    cuts.dedup();

    for w in cuts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let d0 = buyer.right_value(a) - seller.right_value(a);
        let d1 = buyer.left_value(b) - seller.left_value(b);
        let zero = Rational::zero();
        if d0 >= zero && d1 >= zero {
            continue;
        }
        let witness = if d1 < zero && !b.is_one() {
            b.clone()
        } else {
            // d(t) = d0 + (d1 - d0) t on t in (0, 1]; pick a point where it is negative.
            let t = match (d0 < zero, d1 < zero) {
                (true, true) => ratio(1, 2),
                (true, false) => (&d0 / (&d0 - &d1)) / int(2),
                (false, _) => (&d0 / (&d0 - &d1) + int(1)) / int(2),
            };
            a + t * (b - a)
        };
        return FsdReport {
            dominates: false,
            witness: Some(witness),
        };
    }
    FsdReport {
        dominates: true,
        witness: None,
    }
}

/// Lexicographic walk over the Cartesian product of discrete supports.
///
/// Yields each joint realization with its product probability. The index of a
/// state is its position in lexicographic order of atom indices (first
/// distribution most significant), which lets callers shard the walk.
#[derive(Clone, Debug)]
pub struct ProductSupport {
    atoms: Vec<Vec<Atom>>,
    index: Vec<usize>,
    next: u128,
    end: u128,
}

impl ProductSupport {
    pub fn new(dists: &[&Distribution], cap: u128) -> Result<Self> {
        let atoms = dists
            .iter()
            .map(|d| d.atoms().map(<[Atom]>::to_vec).ok_or(Error::NonDiscrete))
            .collect::<Result<Vec<_>>>()?;
        let mut states: u128 = 1;
        for a in &atoms {
            states = states.saturating_mul(a.len() as u128);
        }
        if states > cap {
            return Err(Error::TooLarge { states, cap });
        }
        Ok(Self {
            index: vec![0; atoms.len()],
            atoms,
            next: 0,
            end: states,
        })
    }

    /// Total number of joint states.
    pub fn total_states(&self) -> u128 {
        self.atoms.iter().map(|a| a.len() as u128).product()
    }

    /// Restricts the walk to states `start..end`.
    pub fn range(mut self, start: u128, end: u128) -> Self {
        let total = self.total_states();
        let end = end.min(total);
        let mut rem = start.min(end);
        for (slot, a) in self.index.iter_mut().zip(&self.atoms).rev() {
            let n = a.len() as u128;
            *slot = (rem % n) as usize;
            rem /= n;
        }
        self.next = start.min(end);
        self.end = end;
        self
    }
}

impl Iterator for ProductSupport {
    type Item = (Vec<Rational>, Rational);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let mut values = Vec::with_capacity(self.atoms.len());
        let mut prob = Rational::one();
        for (a, &i) in self.atoms.iter().zip(&self.index) {
            values.push(a[i].value.clone());
            prob *= &a[i].prob;
        }
        self.next += 1;
        for (slot, a) in self.index.iter_mut().zip(&self.atoms).rev() {
            *slot += 1;
            if *slot < a.len() {
                break;
            }
            *slot = 0;
        }
        Some((values, prob))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.end - self.next).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Every joint realization of independent discrete distributions, with probabilities.
pub fn product_support(dists: &[&Distribution], cap: u128) -> Result<ProductSupport> {
    ProductSupport::new(dists, cap)
}

/// Orders two distributions by their literal encoding; used for stable output.
pub fn literal_cmp(a: &Distribution, b: &Distribution) -> Ordering {
    a.to_json().to_string().cmp(&b.to_json().to_string())
}
