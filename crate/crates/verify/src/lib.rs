//! Registry of named, parameterized checks. Each check reproduces one claim
//! about the mechanisms at desk scale and reports a verdict with the values
//! compared and, on failure, a concrete witness.

mod checks;
pub mod constructions;
mod family;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use gft_core::dist::Distribution;
use gft_core::error::{Error, Result};
use gft_core::eval::{sig6, Expectation};
use gft_core::market::{BuyerTradeReduction, ValueProfile};
use gft_core::scalar::{format_rational, json_to_rational, parse_rational, rational_to_f64, Rational};

pub use checks::{median_numbers, nohalf_ratio, MedianNumbers};
pub use family::DistributionFamily;

/// Named rational parameters of a check.
pub type Params = BTreeMap<String, Rational>;

/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: u64 = 1_000_000;

/// Monte Carlo decisions are made at this many standard errors.
pub const SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A Monte Carlo estimate within the decision margin of its boundary.
    Inconclusive,
    /// The claim does not apply to the given parameters.
    Skipped,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Skipped)
    }

    /// Worst of two verdicts: Fail, then Inconclusive, then Pass, then Skipped.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Pass, _) | (_, Pass) => Pass,
            _ => Skipped,
        }
    }

    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Skipped => "skipped",
        })
    }
}

/// One side of a compared inequality.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Real(Rational),
    Estimate(Expectation),
}

impl Quantity {
    pub fn to_f64(&self) -> f64 {
        match self {
            Quantity::Real(r) => rational_to_f64(r),
            Quantity::Estimate(e) => e.value_f64(),
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Quantity::Real(r) => Some(r),
            Quantity::Estimate(e) => e.exact(),
        }
    }

    fn std_error(&self) -> f64 {
        match self {
            Quantity::Real(_) => 0.0,
            Quantity::Estimate(e) => e.std_error(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Quantity::Real(r) => Value::String(format_rational(r)),
            Quantity::Estimate(e) => serde_json::to_value(e).expect("expectation serializes"),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Object(_) => serde_json::from_value(v.clone())
                .map(Quantity::Estimate)
                .map_err(|e| Error::parse(v.to_string(), e.to_string())),
            _ => json_to_rational(v).map(Quantity::Real),
        }
    }
}

impl From<Rational> for Quantity {
    fn from(r: Rational) -> Self {
        Quantity::Real(r)
    }
}

impl From<Expectation> for Quantity {
    fn from(e: Expectation) -> Self {
        match e {
            Expectation::Exact { value, .. } => Quantity::Real(value),
            e => Quantity::Estimate(e),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Real(r) => f.write_str(&format_rational(r)),
            Quantity::Estimate(e) => e.fmt(f),
        }
    }
}

/// `lhs - rhs`, exact when both sides are.
pub fn slack(lhs: &Quantity, rhs: &Quantity) -> String {
    match (lhs.exact(), rhs.exact()) {
        (Some(a), Some(b)) => format_rational(&(a - b)),
        _ => {
            let se = lhs.std_error().hypot(rhs.std_error());
            format!("{} ± {}", sig6(lhs.to_f64() - rhs.to_f64()), sig6(se))
        }
    }
}

/// Concrete evidence behind a verdict.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Profile(ValueProfile<Rational>),
    /// Several markets evaluated separately and as one.
    Profiles(Vec<ValueProfile<Rational>>),
    Distributions {
        seller: Distribution,
        buyer: Distribution,
    },
}

impl Witness {
    pub fn to_json(&self) -> Value {
        match self {
            Witness::Profile(p) => json!({ "profile": p.to_json() }),
            Witness::Profiles(ps) => json!({ "profiles": ps.iter().map(ValueProfile::to_json).collect::<Vec<_>>() }),
            Witness::Distributions { seller, buyer } => {
                json!({ "distributions": { "seller": seller.to_json(), "buyer": buyer.to_json() } })
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if let Some(p) = v.get("profile") {
            return Ok(Witness::Profile(ValueProfile::from_json(p)?));
        }
        if let Some(ps) = v.get("profiles").and_then(Value::as_array) {
            return Ok(Witness::Profiles(
                ps.iter().map(ValueProfile::from_json).collect::<Result<_>>()?,
            ));
        }
        if let Some(d) = v.get("distributions") {
            return Ok(Witness::Distributions {
                seller: Distribution::from_json(&d["seller"])?,
                buyer: Distribution::from_json(&d["buyer"])?,
            });
        }
        Err(Error::parse(v.to_string(), "unknown witness shape"))
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Profile(p) => p.fmt(f),
            Witness::Profiles(ps) => {
                let parts: Vec<String> = ps.iter().map(ToString::to_string).collect();
                write!(f, "[{}]", parts.join("; "))
            }
            Witness::Distributions { seller, buyer } => {
                write!(f, "F_S={} F_B={}", seller.to_json(), buyer.to_json())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: String,
    pub verdict: Verdict,
    pub passed: bool,
    pub lhs: Option<Quantity>,
    pub rhs: Option<Quantity>,
    pub witness: Option<Witness>,
    pub notes: String,
    pub seed: u64,
    pub params: Params,
}

impl CheckResult {
    pub fn slack(&self) -> Option<String> {
        Some(slack(self.lhs.as_ref()?, self.rhs.as_ref()?))
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), json!(self.id));
        m.insert("passed".into(), json!(self.passed));
        m.insert("verdict".into(), serde_json::to_value(self.verdict).unwrap());
        m.insert("lhs".into(), self.lhs.as_ref().map_or(Value::Null, Quantity::to_json));
        m.insert("rhs".into(), self.rhs.as_ref().map_or(Value::Null, Quantity::to_json));
        if let Some(w) = &self.witness {
            m.insert("witness".into(), w.to_json());
        }
        m.insert("notes".into(), json!(self.notes));
        m.insert("seed".into(), json!(self.seed));
        m.insert(
            "params".into(),
            Value::Object(
                self.params
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::String(format_rational(v))))
                    .collect(),
            ),
        );
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |why: &str| Error::parse(v.to_string(), why.to_string());
        let quantity = |key: &str| match &v[key] {
            Value::Null => Ok(None),
            q => Quantity::from_json(q).map(Some),
        };
        Ok(Self {
            id: v["id"].as_str().ok_or_else(|| bad("missing `id`"))?.to_string(),
            verdict: serde_json::from_value(v["verdict"].clone()).map_err(|e| bad(&e.to_string()))?,
            passed: v["passed"].as_bool().ok_or_else(|| bad("missing `passed`"))?,
            lhs: quantity("lhs")?,
            rhs: quantity("rhs")?,
            witness: v.get("witness").map(Witness::from_json).transpose()?,
            notes: v["notes"].as_str().unwrap_or_default().to_string(),
            seed: v["seed"].as_u64().ok_or_else(|| bad("missing `seed`"))?,
            params: v["params"]
                .as_object()
                .ok_or_else(|| bad("missing `params`"))?
                .iter()
                .map(|(k, p)| Ok((k.clone(), json_to_rational(p)?)))
                .collect::<Result<_>>()?,
        })
    }
}

impl Serialize for CheckResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CheckResult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        CheckResult::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Settings shared by every check in a run.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckContext {
    /// Base seed; each check mixes in a hash of its id.
    pub seed: u64,
    pub mc_samples: u64,
    /// BTR variant used wherever a check runs BTR.
    pub btr: BuyerTradeReduction,
    pub family: DistributionFamily,
}

impl Default for CheckContext {
    fn default() -> Self {
        Self {
            seed: 0,
            mc_samples: DEFAULT_MC_SAMPLES,
            btr: BuyerTradeReduction::default(),
            family: DistributionFamily::default(),
        }
    }
}

/// FNV-1a, used to give each check a stable seed.
fn stable_hash(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn check_seed(base: u64, id: &str) -> u64 {
    base ^ stable_hash(id)
}

/// What a check body returns; the registry adds id, seed and parameters.
pub(crate) struct Finding {
    pub verdict: Verdict,
    pub lhs: Option<Quantity>,
    pub rhs: Option<Quantity>,
    pub witness: Option<Witness>,
    pub notes: String,
}

/// Typed access to a check's merged parameters.
pub(crate) struct Args<'a> {
    check: &'static str,
    params: &'a Params,
}

impl Args<'_> {
    pub fn rational(&self, name: &str) -> Result<Rational> {
        self.params
            .get(name)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("check `{}` needs parameter `{name}`", self.check)))
    }

    pub fn count(&self, name: &str) -> Result<usize> {
        let r = self.rational(name)?;
        self.to_count(name, &r)
    }

    pub fn opt_count(&self, name: &str) -> Result<Option<usize>> {
        self.params.get(name).map(|r| self.to_count(name, r)).transpose()
    }

    fn to_count(&self, name: &str, r: &Rational) -> Result<usize> {
        use num_traits::{Signed, ToPrimitive};
        if !r.is_integer() || r.is_negative() {
            return Err(Error::InvalidInput(format!(
                "parameter `{name}` of `{}` must be a nonnegative integer, got {}",
                self.check,
                format_rational(r)
            )));
        }
        r.to_integer()
            .to_usize()
            .ok_or_else(|| Error::InvalidInput(format!("parameter `{name}` is too large")))
    }
}

type CheckFn = fn(&Args, &CheckContext, u64) -> Result<Finding>;

/// A registered check.
pub struct Check {
    pub id: &'static str,
    pub summary: &'static str,
    /// Parameter names with defaults; `None` means computed from the others.
    pub params: &'static [(&'static str, Option<&'static str>)],
    run: CheckFn,
}

impl Check {
    pub fn default_params(&self) -> Params {
        self.params
            .iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), parse_rational(v).expect("valid default"))))
            .collect()
    }

    /// Defaults overlaid with `overrides`; unknown names are rejected.
    pub fn merge_params(&self, overrides: &Params) -> Result<Params> {
        let mut params = self.default_params();
        for (k, v) in overrides {
            if !self.params.iter().any(|(name, _)| name == k) {
                return Err(Error::UnknownParam {
                    check: self.id.to_string(),
                    param: k.clone(),
                });
            }
            params.insert(k.clone(), v.clone());
        }
        Ok(params)
    }

    pub fn run(&self, overrides: &Params, ctx: &CheckContext) -> Result<CheckResult> {
        let params = self.merge_params(overrides)?;
        let seed = check_seed(ctx.seed, self.id);
        let f = (self.run)(&Args { check: self.id, params: &params }, ctx, seed)?;
        Ok(CheckResult {
            id: self.id.to_string(),
            passed: f.verdict.is_ok(),
            verdict: f.verdict,
            lhs: f.lhs,
            rhs: f.rhs,
            witness: f.witness,
            notes: f.notes,
            seed,
            params,
        })
    }
}

pub fn registry() -> &'static [Check] {
    checks::REGISTRY
}

pub fn find_check(id: &str) -> Result<&'static Check> {
    registry()
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownCheck(id.to_string()))
}

pub fn run_check(id: &str, overrides: &Params, ctx: &CheckContext) -> Result<CheckResult> {
    find_check(id)?.run(overrides, ctx)
}

/// One requested check with parameter overrides.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckRequest {
    pub id: String,
    pub params: Params,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteConfig {
    pub checks: Vec<CheckRequest>,
    pub context: CheckContext,
}

impl SuiteConfig {
    /// Every registered check with default parameters.
    pub fn all() -> Self {
        Self {
            checks: registry()
                .iter()
                .map(|c| CheckRequest { id: c.id.to_string(), params: Params::new() })
                .collect(),
            context: CheckContext::default(),
        }
    }

    /// Resolves ids and parameter names before anything runs.
    pub fn validate(&self) -> Result<()> {
        for req in &self.checks {
            find_check(&req.id)?.merge_params(&req.params)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub results: Vec<CheckResult>,
}

impl Summary {
    /// True iff no result failed; an empty run passes.
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Runs the configured checks in parallel; results come back in request order.
pub fn run_all(config: &SuiteConfig) -> Result<Summary> {
    config.validate()?;
    let results = config
        .checks
        .par_iter()
        .map(|req| run_check(&req.id, &req.params, &config.context))
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary { results })
}
