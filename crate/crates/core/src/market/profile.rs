use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Seller,
    Buyer,
}

impl Role {
    pub fn tag(self) -> &'static str {
        match self {
            Role::Seller => "S",
            Role::Buyer => "B",
        }
    }
}

/// Stable identity of an agent within a profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentRef {
    pub role: Role,
    pub id: usize,
}

impl AgentRef {
    pub fn seller(id: usize) -> Self {
        Self { role: Role::Seller, id }
    }

    pub fn buyer(id: usize) -> Self {
        Self { role: Role::Buyer, id }
    }

    /// `S<i>` or `B<j>`.
    pub fn key(&self) -> String {
        format!("{}{}", self.role.tag(), self.id)
    }

    pub fn parse_key(key: &str) -> Result<Self> {
        let role = match key.get(..1) {
            Some("S") => Role::Seller,
            Some("B") => Role::Buyer,
            _ => return Err(Error::parse(key, "expected S<i> or B<j>")),
        };
        let id = key[1..]
            .parse()
            .map_err(|_| Error::parse(key, "bad agent index"))?;
        Ok(Self { role, id })
    }
}

impl fmt::Display for AgentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Realized seller and buyer values; the index is the agent id.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ValueProfile<V> {
    pub sellers: Vec<V>,
    pub buyers: Vec<V>,
}

/// Agents ranked by the market's tie order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderStatistics {
    /// Every agent, highest first.
    pub x: Vec<AgentRef>,
    /// Buyer ids, `b^(1)` (highest) first.
    pub buyers: Vec<usize>,
    /// Seller ids, `s^(1)` (lowest) first.
    pub sellers: Vec<usize>,
}

impl<V: Scalar> ValueProfile<V> {
    pub fn new(sellers: Vec<V>, buyers: Vec<V>) -> Self {
        Self { sellers, buyers }
    }

    /// Rejects non-finite values.
    pub fn validate(&self) -> Result<()> {
        for a in self.agents() {
            if !self.value(a).is_finite() {
                return Err(Error::InvalidInput(format!("{a} has a non-finite value")));
            }
        }
        Ok(())
    }

    pub fn m_s(&self) -> usize {
        self.sellers.len()
    }

    pub fn m_b(&self) -> usize {
        self.buyers.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.sellers.is_empty() || self.buyers.is_empty()
    }

    pub fn value(&self, a: AgentRef) -> &V {
        match a.role {
            Role::Seller => &self.sellers[a.id],
            Role::Buyer => &self.buyers[a.id],
        }
    }

    pub fn value_mut(&mut self, a: AgentRef) -> &mut V {
        match a.role {
            Role::Seller => &mut self.sellers[a.id],
            Role::Buyer => &mut self.buyers[a.id],
        }
    }

    /// Sellers then buyers, in id order.
    pub fn agents(&self) -> impl Iterator<Item = AgentRef> + '_ {
        (0..self.m_s())
            .map(AgentRef::seller)
            .chain((0..self.m_b()).map(AgentRef::buyer))
    }

    /// Tie order: `Greater` means `a` ranks above `b`. Higher value first, then
    /// buyers before sellers, then the smaller id.
    pub fn tie_cmp(&self, a: AgentRef, b: AgentRef) -> Ordering {
        self.value(a)
            .total_cmp(self.value(b))
            .then_with(|| a.role.cmp(&b.role))
            .then_with(|| b.id.cmp(&a.id))
    }

    pub fn order_statistics(&self) -> OrderStatistics {
        let mut x: Vec<AgentRef> = self.agents().collect();
        x.sort_by(|a, b| self.tie_cmp(*b, *a));
        OrderStatistics {
            x,
            buyers: self.ranked_buyers(),
            sellers: self.ranked_sellers(),
        }
    }

    pub fn ranked_buyers(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.m_b()).collect();
        ids.sort_by(|&i, &j| self.buyers[j].total_cmp(&self.buyers[i]).then(i.cmp(&j)));
        ids
    }

    pub fn ranked_sellers(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.m_s()).collect();
        ids.sort_by(|&i, &j| self.sellers[i].total_cmp(&self.sellers[j]).then(i.cmp(&j)));
        ids
    }

    /// Efficient trade size: buyers among the `m_S` highest-ranked agents.
    pub fn trade_size(&self) -> usize {
        // The q-th highest buyer is in the top m_S iff fewer than m_S - q + 1
        // sellers outrank it.
        let b = self.ranked_buyers();
        let s = self.ranked_sellers();
        let m_s = self.m_s();
        let mut q = 0;
        while q < b.len().min(m_s) {
            // b^(q+1) needs to beat s^(q+1), the (m_S - q)-th highest seller.
            let buyer = AgentRef::buyer(b[q]);
            let seller = AgentRef::seller(s[q]);
            if self.tie_cmp(buyer, seller) == Ordering::Greater {
                q += 1;
            } else {
                break;
            }
        }
        q
    }

    /// Value of `x^(m_S + 1)`, if the market has that many agents.
    pub fn first_excluded_value(&self) -> Option<V> {
        let os = self.order_statistics();
        os.x.get(self.m_s()).map(|a| self.value(*a).clone())
    }

    /// Optimal (possibly infeasible) gains from trade.
    pub fn opt_gft(&self) -> V {
        let b = self.ranked_buyers();
        let s = self.ranked_sellers();
        let q = self.trade_size();
        let mut total = V::zero();
        for i in 0..q {
            total = total + (self.buyers[b[i]].clone() - self.sellers[s[i]].clone());
        }
        total
    }

    /// Negate-and-swap: sellers become `-b`, buyers become `-s`.
    pub fn dual(&self) -> Self {
        Self {
            sellers: self.buyers.iter().map(|v| -v.clone()).collect(),
            buyers: self.sellers.iter().map(|v| -v.clone()).collect(),
        }
    }

    pub fn map<W, F: Fn(&V) -> W>(&self, f: F) -> ValueProfile<W> {
        ValueProfile {
            sellers: self.sellers.iter().map(&f).collect(),
            buyers: self.buyers.iter().map(&f).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sellers": self.sellers.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "buyers": self.buyers.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let side = |key: &str| -> Result<Vec<V>> {
            value
                .get(key)
                .and_then(serde_json::Value::as_array)
                .ok_or_else(|| Error::parse(value.to_string(), format!("missing `{key}` array")))?
                .iter()
                .map(V::from_json)
                .collect()
        };
        let p = Self::new(side("sellers")?, side("buyers")?);
        p.validate()?;
        Ok(p)
    }
}

impl<V: Scalar> fmt::Display for ValueProfile<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |vs: &[V]| vs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        write!(f, "s=({}) b=({})", join(&self.sellers), join(&self.buyers))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};

    fn prof(s: &[i64], b: &[i64]) -> ValueProfile<Rational> {
        ValueProfile::new(s.iter().map(|&v| int(v)).collect(), b.iter().map(|&v| int(v)).collect())
    }

    #[test]
    fn order_statistics_examples() {
        let os = prof(&[1], &[3, 2]).order_statistics();
        assert_eq!(os.x, vec![AgentRef::buyer(0), AgentRef::buyer(1), AgentRef::seller(0)]);

        let os = prof(&[2], &[2]).order_statistics();
        assert_eq!(os.x, vec![AgentRef::buyer(0), AgentRef::seller(0)]);

        let os = prof(&[0, 5], &[4, 4]).order_statistics();
        assert_eq!(os.buyers, vec![0, 1]);
        assert_eq!(os.sellers[0], 0);
        assert_eq!(os.x[2], AgentRef::buyer(1));
    }

    #[test]
    fn equal_sellers_rank_smaller_id_lower_and_higher() {
        let p = prof(&[1, 1], &[]);
        assert_eq!(p.ranked_sellers(), vec![0, 1]);
        assert_eq!(p.order_statistics().x, vec![AgentRef::seller(0), AgentRef::seller(1)]);
    }

    #[test]
    fn trade_size_examples() {
        assert_eq!(prof(&[1], &[3, 2]).trade_size(), 1);
        assert_eq!(prof(&[1, 1], &[0, 0]).trade_size(), 0);
        assert_eq!(prof(&[0, 2, 5], &[4, 3, 1]).trade_size(), 2);
        assert_eq!(prof(&[2], &[2]).trade_size(), 1);
        assert_eq!(prof(&[], &[1]).trade_size(), 0);
    }

    #[test]
    fn opt_gft_examples() {
        assert_eq!(prof(&[2], &[3]).opt_gft(), int(1));
        assert_eq!(prof(&[1, 1], &[0, 0]).opt_gft(), int(0));
        assert_eq!(prof(&[0, 2, 5], &[4, 3, 1]).opt_gft(), int(5));
    }

    #[test]
    fn dual_examples() {
        let p = prof(&[2], &[3]);
        let d = p.dual();
        assert_eq!(d, prof(&[-3], &[-2]));
        assert_eq!(d.opt_gft(), int(1));
        assert_eq!(d.dual(), p);
        assert_eq!(prof(&[], &[]).dual(), prof(&[], &[]));
    }

    #[test]
    fn json_round_trip() {
        let p = prof(&[0, 5], &[4, 4]);
        assert_eq!(ValueProfile::from_json(&p.to_json()).unwrap(), p);
        let f: ValueProfile<f64> = ValueProfile::new(vec![0.1], vec![f64::NAN]);
        assert!(f.validate().is_err());
    }

    #[test]
    fn agent_keys() {
        assert_eq!(AgentRef::seller(3).key(), "S3");
        assert_eq!(AgentRef::parse_key("B12").unwrap(), AgentRef::buyer(12));
        assert!(AgentRef::parse_key("X1").is_err());
    }
}
