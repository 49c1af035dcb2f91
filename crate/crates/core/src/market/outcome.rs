use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::market::profile::{AgentRef, Role, ValueProfile};
use crate::scalar::Scalar;

/// Allocation and payments produced by a mechanism on one profile.
///
/// Payments are signed: positive means the agent pays, negative means it
/// receives. Agents outside `pairs` always have payment zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketOutcome<V> {
    /// `(seller id, buyer id)`.
    pub pairs: Vec<(usize, usize)>,
    pub seller_payments: Vec<V>,
    pub buyer_payments: Vec<V>,
    pub gft: V,
    pub budget_surplus: V,
}

impl<V: Scalar> MarketOutcome<V> {
    pub fn empty(p: &ValueProfile<V>) -> Self {
        Self {
            pairs: Vec::new(),
            seller_payments: vec![V::zero(); p.m_s()],
            buyer_payments: vec![V::zero(); p.m_b()],
            gft: V::zero(),
            budget_surplus: V::zero(),
        }
    }

    /// Every trading buyer pays `buyer_price`, every trading seller receives
    /// `seller_price`.
    pub fn priced(
        p: &ValueProfile<V>,
        pairs: Vec<(usize, usize)>,
        buyer_price: &V,
        seller_price: &V,
    ) -> Self {
        let mut out = Self::empty(p);
        for &(s, b) in &pairs {
            out.seller_payments[s] = -seller_price.clone();
            out.buyer_payments[b] = buyer_price.clone();
        }
        out.pairs = pairs;
        out.finish(p);
        out
    }

    /// Arbitrary per-agent payments; recomputes gft and surplus.
    pub fn with_payments(
        p: &ValueProfile<V>,
        pairs: Vec<(usize, usize)>,
        seller_payments: Vec<V>,
        buyer_payments: Vec<V>,
    ) -> Self {
        let mut out = Self {
            pairs,
            seller_payments,
            buyer_payments,
            gft: V::zero(),
            budget_surplus: V::zero(),
        };
        out.finish(p);
        out
    }

    fn finish(&mut self, p: &ValueProfile<V>) {
        self.gft = gft_of(p, &self.pairs);
        let mut surplus = V::zero();
        for v in self.seller_payments.iter().chain(&self.buyer_payments) {
            surplus = surplus + v.clone();
        }
        self.budget_surplus = surplus;
    }

    pub fn trade_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn trades(&self, a: AgentRef) -> bool {
        self.pairs.iter().any(|&(s, b)| match a.role {
            Role::Seller => s == a.id,
            Role::Buyer => b == a.id,
        })
    }

    pub fn payment(&self, a: AgentRef) -> &V {
        match a.role {
            Role::Seller => &self.seller_payments[a.id],
            Role::Buyer => &self.buyer_payments[a.id],
        }
    }

    /// Quasi-linear utility relative to not trading.
    pub fn utility(&self, a: AgentRef, true_value: &V) -> V {
        if !self.trades(a) {
            return V::zero();
        }
        let pay = self.payment(a).clone();
        match a.role {
            Role::Buyer => true_value.clone() - pay,
            Role::Seller => -pay - true_value.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut payments = Map::new();
        for (i, v) in self.seller_payments.iter().enumerate() {
            payments.insert(AgentRef::seller(i).key(), v.to_json());
        }
        for (j, v) in self.buyer_payments.iter().enumerate() {
            payments.insert(AgentRef::buyer(j).key(), v.to_json());
        }
        json!({
            "pairs": self.pairs.iter().map(|(s, b)| json!([["S", s], ["B", b]])).collect::<Vec<_>>(),
            "payments": payments,
            "gft": self.gft.to_json(),
            "budget_surplus": self.budget_surplus.to_json(),
        })
    }

    /// Parses the JSON form, taking agent counts and values from `p`.
    pub fn from_json(value: &Value, p: &ValueProfile<V>) -> Result<Self> {
        let bad = |why: &str| Error::parse(value.to_string(), why.to_string());
        let mut pairs = Vec::new();
        for pair in value["pairs"].as_array().ok_or_else(|| bad("missing `pairs`"))? {
            let idx = |k: usize, tag: &str| -> Result<usize> {
                let entry = &pair[k];
                if entry[0] != tag {
                    return Err(bad("pair entries must be [[\"S\",i],[\"B\",j]]"));
                }
                entry[1]
                    .as_u64()
                    .map(|v| v as usize)
                    .ok_or_else(|| bad("bad agent index"))
            };
            pairs.push((idx(0, "S")?, idx(1, "B")?));
        }
        let payments = value["payments"].as_object().ok_or_else(|| bad("missing `payments`"))?;
        let mut seller_payments = vec![V::zero(); p.m_s()];
        let mut buyer_payments = vec![V::zero(); p.m_b()];
        for (key, v) in payments {
            let a = AgentRef::parse_key(key)?;
            let slot = match a.role {
                Role::Seller => seller_payments.get_mut(a.id),
                Role::Buyer => buyer_payments.get_mut(a.id),
            };
            *slot.ok_or_else(|| bad("payment for an agent outside the profile"))? = V::from_json(v)?;
        }
        Ok(Self::with_payments(p, pairs, seller_payments, buyer_payments))
    }
}

/// Sum of `b - s` over the given pairs.
pub fn gft_of<V: Scalar>(p: &ValueProfile<V>, pairs: &[(usize, usize)]) -> V {
    let mut total = V::zero();
    for &(s, b) in pairs {
        total = total + (p.buyers[b].clone() - p.sellers[s].clone());
    }
    total
}
