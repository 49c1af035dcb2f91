use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::market::outcome::MarketOutcome;
use crate::market::profile::ValueProfile;
use crate::market::vcg;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// A deterministic direct-revelation mechanism.
pub trait Mechanism<V: Scalar>: Send + Sync {
    fn name(&self) -> String;

    /// Rejects market shapes the mechanism is not defined on.
    fn check_market(&self, _m_s: usize, _m_b: usize) -> Result<()> {
        Ok(())
    }

    fn run(&self, p: &ValueProfile<V>) -> Result<MarketOutcome<V>>;

    fn gft(&self, p: &ValueProfile<V>) -> Result<V> {
        Ok(self.run(p)?.gft)
    }
}

impl<V: Scalar, M: Mechanism<V> + ?Sized> Mechanism<V> for &M {
    fn name(&self) -> String {
        (**self).name()
    }
    fn check_market(&self, m_s: usize, m_b: usize) -> Result<()> {
        (**self).check_market(m_s, m_b)
    }
    fn run(&self, p: &ValueProfile<V>) -> Result<MarketOutcome<V>> {
        (**self).run(p)
    }
    fn gft(&self, p: &ValueProfile<V>) -> Result<V> {
        (**self).gft(p)
    }
}

/// How BTR compares the next buyer against the marginal seller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PriceTie {
    /// `b^(q+1) >= s^(q)` keeps all `q` trades.
    #[default]
    Weak,
    /// `b^(q+1) > s^(q)`; only used to test that the checks notice.
    Strict,
}

/// Buyer trade reduction with a configurable price comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BuyerTradeReduction {
    pub tie: PriceTie,
}

impl BuyerTradeReduction {
    pub fn strict() -> Self {
        Self { tie: PriceTie::Strict }
    }

    pub fn apply<V: Scalar>(&self, p: &ValueProfile<V>) -> MarketOutcome<V> {
        let q = p.trade_size();
        if q == 0 {
            return MarketOutcome::empty(p);
        }
        let b = p.ranked_buyers();
        let s = p.ranked_sellers();
        let marginal_seller = &p.sellers[s[q - 1]];
        let next_buyer = b.get(q).map(|&j| &p.buyers[j]);
        let keep = match (next_buyer, self.tie) {
            (None, _) => false,
            (Some(nb), PriceTie::Weak) => nb >= marginal_seller,
            (Some(nb), PriceTie::Strict) => nb > marginal_seller,
        };
        if keep {
            let price = next_buyer.unwrap();
            MarketOutcome::priced(p, pairs(&s, &b, q), price, price)
        } else {
            reduce(p, &s, &b, q)
        }
    }
}

impl<V: Scalar> Mechanism<V> for BuyerTradeReduction {
    fn name(&self) -> String {
        match self.tie {
            PriceTie::Weak => "btr".into(),
            PriceTie::Strict => "btr-strict".into(),
        }
    }

    fn run(&self, p: &ValueProfile<V>) -> Result<MarketOutcome<V>> {
        Ok(self.apply(p))
    }
}

fn pairs(s: &[usize], b: &[usize], n: usize) -> Vec<(usize, usize)> {
    s.iter().copied().zip(b.iter().copied()).take(n).collect()
}

/// Drops the `q`-th pair; buyers pay `b^(q)`, sellers receive `s^(q)`.
fn reduce<V: Scalar>(p: &ValueProfile<V>, s: &[usize], b: &[usize], q: usize) -> MarketOutcome<V> {
    MarketOutcome::priced(
        p,
        pairs(s, b, q - 1),
        &p.buyers[b[q - 1]],
        &p.sellers[s[q - 1]],
    )
}

pub fn btr<V: Scalar>(p: &ValueProfile<V>) -> MarketOutcome<V> {
    BuyerTradeReduction::default().apply(p)
}

/// Seller trade reduction: prices at the next seller `s^(q+1)`.
pub fn str<V: Scalar>(p: &ValueProfile<V>) -> MarketOutcome<V> {
    let q = p.trade_size();
    if q == 0 {
        return MarketOutcome::empty(p);
    }
    let b = p.ranked_buyers();
    let s = p.ranked_sellers();
    match s.get(q).map(|&i| &p.sellers[i]) {
        Some(price) if *price <= p.buyers[b[q - 1]] => {
            MarketOutcome::priced(p, pairs(&s, &b, q), price, price)
        }
        _ => reduce(p, &s, &b, q),
    }
}

/// McAfee's rule: price at the average of the next buyer and next seller when
/// that price clears the marginal pair.
pub fn mcafee92<V: Scalar>(p: &ValueProfile<V>) -> MarketOutcome<V> {
    let q = p.trade_size();
    if q == 0 {
        return MarketOutcome::empty(p);
    }
    let b = p.ranked_buyers();
    let s = p.ranked_sellers();
    if let (Some(&nb), Some(&ns)) = (b.get(q), s.get(q)) {
        let price = V::midpoint(&p.buyers[nb], &p.sellers[ns]);
        if p.sellers[s[q - 1]] <= price && price <= p.buyers[b[q - 1]] {
            return MarketOutcome::priced(p, pairs(&s, &b, q), &price, &price);
        }
    }
    reduce(p, &s, &b, q)
}

/// Posted price with weak acceptance on both sides.
pub fn fixed_price<V: Scalar>(p: &ValueProfile<V>, price: &V) -> MarketOutcome<V> {
    let b = p.ranked_buyers();
    let s = p.ranked_sellers();
    let sellers_in = s.iter().filter(|&&i| p.sellers[i] <= *price).count();
    let buyers_in = b.iter().filter(|&&j| p.buyers[j] >= *price).count();
    let t = sellers_in.min(buyers_in);
    MarketOutcome::priced(p, pairs(&s, &b, t), price, price)
}

/// Single-seller mechanism posting a fixed median to both sides.
pub fn median_mechanism<V: Scalar>(p: &ValueProfile<V>, median: &V) -> Result<MarketOutcome<V>> {
    if p.is_degenerate() {
        return Ok(MarketOutcome::empty(p));
    }
    if p.m_s() != 1 {
        return Err(Error::UnsupportedMarket {
            mechanism: "median".into(),
            sellers: p.m_s(),
            buyers: p.m_b(),
        });
    }
    let top = p.ranked_buyers()[0];
    if p.sellers[0] <= *median && p.buyers[top] >= *median {
        Ok(MarketOutcome::priced(p, vec![(0, top)], median, median))
    } else {
        Ok(MarketOutcome::empty(p))
    }
}

/// Gains from pricing a single seller-buyer pair at the highest sample.
pub fn sample_pricing_gft<V: Scalar>(s: &V, b: &V, samples: &[V]) -> V {
    let price = samples
        .iter()
        .max_by(|x, y| x.total_cmp(y))
        .expect("at least one sample");
    if b >= price && price >= s {
        b.clone() - s.clone()
    } else {
        V::zero()
    }
}

/// Every mechanism addressable by name.
#[derive(Clone, Debug, PartialEq)]
pub enum MechanismKind {
    Btr,
    Str,
    Vcg,
    McAfee92,
    FixedPrice(Rational),
    Median(Rational),
}

impl MechanismKind {
    pub const NAMES: [&'static str; 6] = [
        "btr",
        "str",
        "vcg",
        "mcafee92",
        "fixed-price:<rational>",
        "median:<rational>",
    ];
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismKind::Btr => f.write_str("btr"),
            MechanismKind::Str => f.write_str("str"),
            MechanismKind::Vcg => f.write_str("vcg"),
            MechanismKind::McAfee92 => f.write_str("mcafee92"),
            MechanismKind::FixedPrice(r) => write!(f, "fixed-price:{}", format_rational(r)),
            MechanismKind::Median(r) => write!(f, "median:{}", format_rational(r)),
        }
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMechanism(s.to_string());
        match s {
            "btr" => Ok(Self::Btr),
            "str" => Ok(Self::Str),
            "vcg" | "opt" => Ok(Self::Vcg),
            "mcafee92" => Ok(Self::McAfee92),
            _ => {
                let (head, arg) = s.split_once(':').ok_or_else(unknown)?;
                let r = parse_rational(arg).map_err(|_| unknown())?;
                match head {
                    "fixed-price" => Ok(Self::FixedPrice(r)),
                    "median" => Ok(Self::Median(r)),
                    _ => Err(unknown()),
                }
            }
        }
    }
}

impl<V: Scalar> Mechanism<V> for MechanismKind {
    fn name(&self) -> String {
        self.to_string()
    }

    fn check_market(&self, m_s: usize, m_b: usize) -> Result<()> {
        match self {
            MechanismKind::Median(_) if m_s > 1 => Err(Error::UnsupportedMarket {
                mechanism: self.to_string(),
                sellers: m_s,
                buyers: m_b,
            }),
            _ => Ok(()),
        }
    }

    fn run(&self, p: &ValueProfile<V>) -> Result<MarketOutcome<V>> {
        Ok(match self {
            MechanismKind::Btr => btr(p),
            MechanismKind::Str => str(p),
            MechanismKind::Vcg => vcg::vcg(p),
            MechanismKind::McAfee92 => mcafee92(p),
            MechanismKind::FixedPrice(r) => fixed_price(p, &V::from_rational(r)),
            MechanismKind::Median(r) => median_mechanism(p, &V::from_rational(r))?,
        })
    }

    fn gft(&self, p: &ValueProfile<V>) -> Result<V> {
        match self {
            // Payments do not affect gains; skip the critical-value search.
            MechanismKind::Vcg => Ok(p.opt_gft()),
            _ => Ok(self.run(p)?.gft),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::profile::AgentRef;
    use crate::scalar::{int, ratio};

    fn prof(s: &[i64], b: &[i64]) -> ValueProfile<Rational> {
        ValueProfile::new(s.iter().map(|&v| int(v)).collect(), b.iter().map(|&v| int(v)).collect())
    }

    #[test]
    fn btr_examples() {
        let o = btr(&prof(&[1], &[3, 2]));
        assert_eq!(o.pairs, vec![(0, 0)]);
        assert_eq!(o.buyer_payments[0], int(2));
        assert_eq!(o.seller_payments[0], int(-2));
        assert_eq!((o.gft, o.budget_surplus), (int(2), int(0)));

        assert_eq!(btr(&prof(&[1], &[3])).trade_count(), 0);

        let o = btr(&prof(&[0, 2, 5], &[4, 3, 1]));
        assert_eq!(o.pairs, vec![(0, 0)]);
        assert_eq!(o.buyer_payments, vec![int(3), int(0), int(0)]);
        assert_eq!(o.seller_payments, vec![int(-2), int(0), int(0)]);
        assert_eq!((o.gft, o.budget_surplus), (int(4), int(1)));
    }

    #[test]
    fn btr_price_tie_is_weak() {
        // q = 1 and the next buyer equals the marginal seller.
        let p = prof(&[0], &[2, 0]);
        assert_eq!(btr(&p).gft, int(2));
        assert_eq!(BuyerTradeReduction::strict().apply(&p).gft, int(0));
    }

    #[test]
    fn str_examples() {
        let o = str(&prof(&[1, 2], &[3]));
        assert_eq!(o.pairs, vec![(0, 0)]);
        assert_eq!(o.buyer_payments[0], int(2));
        assert_eq!(o.gft, int(2));
        assert_eq!(str(&prof(&[1], &[3])).gft, int(0));
    }

    #[test]
    fn mcafee_examples() {
        let o = mcafee92(&prof(&[0, 10], &[8, 1]));
        assert_eq!(o.buyer_payments[0], ratio(11, 2));
        assert_eq!(o.gft, int(8));
        assert_eq!(mcafee92(&prof(&[1], &[3])).gft, int(0));
        let o = mcafee92(&prof(&[0, 2, 5], &[4, 3, 1]));
        assert_eq!(o.trade_count(), 2);
        assert_eq!(o.buyer_payments[..2], [int(3), int(3)]);
        assert_eq!(o.gft, int(5));
    }

    #[test]
    fn fixed_price_examples() {
        assert_eq!(fixed_price(&prof(&[1], &[2]), &ratio(3, 2)).gft, int(1));
        assert_eq!(fixed_price(&prof(&[1], &[2]), &int(2)).gft, int(1));
        let o = fixed_price(&prof(&[1, 1], &[2, 0]), &ratio(3, 2));
        assert_eq!(o.trade_count(), 1);
        assert_eq!(o.gft, int(1));
        assert_eq!(o.budget_surplus, int(0));
    }

    #[test]
    fn sample_pricing_examples() {
        let (s, b) = (1.0, 2.0);
        assert_eq!(sample_pricing_gft(&s, &b, &[1.5]), 1.0);
        assert_eq!(sample_pricing_gft(&s, &b, &[0.5, 2.5]), 0.0);
        assert_eq!(sample_pricing_gft(&s, &b, &[2.0]), 1.0);
    }

    #[test]
    fn median_examples() {
        let d = ratio(1, 10);
        let d2 = &d * &d;
        let p = ValueProfile::new(vec![int(0)], vec![int(2), int(1) + &d2]);
        let o = median_mechanism(&p, &int(1)).unwrap();
        assert_eq!(o.pairs, vec![(0, 0)]);
        assert_eq!(o.gft, int(2));

        let p = ValueProfile::new(vec![int(1) + &d2], vec![int(1) - &d2, int(0)]);
        assert_eq!(median_mechanism(&p, &int(1)).unwrap().trade_count(), 0);

        let o = median_mechanism(&prof(&[1], &[1]), &int(1)).unwrap();
        assert_eq!((o.trade_count(), o.gft), (1, int(0)));

        assert!(matches!(
            median_mechanism(&prof(&[0, 0], &[2]), &int(1)),
            Err(Error::UnsupportedMarket { sellers: 2, .. })
        ));
        let m = MechanismKind::Median(int(1));
        assert!(Mechanism::<Rational>::check_market(&m, 2, 1).is_err());
    }

    #[test]
    fn degenerate_markets_are_empty() {
        for p in [prof(&[], &[1, 2]), prof(&[1, 2], &[])] {
            for m in ["btr", "str", "vcg", "mcafee92", "fixed-price:1", "median:1"] {
                let kind: MechanismKind = m.parse().unwrap();
                let o = kind.run(&p).unwrap();
                assert_eq!(o.trade_count(), 0, "{m}");
                assert_eq!(o.budget_surplus, int(0));
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for name in ["btr", "str", "vcg", "mcafee92", "fixed-price:3/2", "median:1"] {
            let kind: MechanismKind = name.parse().unwrap();
            assert_eq!(kind.to_string(), name);
        }
        assert_eq!("opt".parse::<MechanismKind>().unwrap(), MechanismKind::Vcg);
        assert_eq!("fixed-price:1.5".parse::<MechanismKind>().unwrap().to_string(), "fixed-price:3/2");
        for bad in ["nosuch", "fixed-price:x", "median", "price:1"] {
            assert_eq!(bad.parse::<MechanismKind>(), Err(Error::UnknownMechanism(bad.into())));
        }
    }

    #[test]
    fn outcome_json_shape() {
        let p = prof(&[0, 2, 5], &[4, 3, 1]);
        let o = btr(&p);
        let j = o.to_json();
        assert_eq!(j["pairs"], serde_json::json!([[["S", 0], ["B", 0]]]));
        assert_eq!(j["payments"]["B0"], "3");
        assert_eq!(j["payments"]["S0"], "-2");
        assert_eq!(j["budget_surplus"], "1");
        assert_eq!(MarketOutcome::from_json(&j, &p).unwrap(), o);
        assert!(o.trades(AgentRef::seller(0)) && !o.trades(AgentRef::buyer(1)));
    }
}
