//! Value profiles, order statistics under the buyer-favouring tie order, the
//! concrete double-auction mechanisms, and property auditors.

pub mod audit;
pub mod mechanism;
pub mod outcome;
pub mod profile;
pub mod vcg;

pub use audit::{audit_anonymity, audit_dsic, audit_feasibility, fuzz_profiles, AuditReport, Violation, ViolationKind};
pub use mechanism::{
    btr, fixed_price, mcafee92, median_mechanism, sample_pricing_gft, str, BuyerTradeReduction, Mechanism,
    MechanismKind, PriceTie,
};
pub use outcome::MarketOutcome;
pub use profile::{AgentRef, OrderStatistics, Role, ValueProfile};
pub use vcg::vcg;
