//! Run configuration files and command-line value parsing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gft_core::eval::MarketSpec;
use gft_core::market::MechanismKind;
use gft_core::scalar::{int, json_to_rational};
use gft_verify::{find_check, CheckRequest, Params};
use gft_core::{parse_rational, Distribution};
use serde::Deserialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<Format>,
    pub path: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    id: String,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    seller: Value,
    buyer: Value,
    m_s: usize,
    m_b: usize,
    mechanisms: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    checks: Vec<RawCheck>,
    #[serde(default)]
    markets: Vec<RawMarket>,
    #[serde(default)]
    mc: McConfig,
    #[serde(default)]
    output: OutputConfig,
}

/// A market and the mechanisms to evaluate on it.
#[derive(Debug)]
pub struct MarketJob {
    pub spec: MarketSpec,
    pub mechanisms: Vec<MechanismKind>,
}

/// A validated configuration file: every check id, parameter name and
/// mechanism name has been resolved.
#[derive(Debug, Default)]
pub struct RunConfig {
    pub checks: Vec<CheckRequest>,
    pub markets: Vec<MarketJob>,
    pub mc: McConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let checks = raw
            .checks
            .into_iter()
            .map(|c| {
                let params = c
                    .params
                    .iter()
                    .map(|(k, v)| Ok((k.clone(), json_to_rational(v)?)))
                    .collect::<Result<Params>>()?;
                find_check(&c.id)?.merge_params(&params)?;
                Ok(CheckRequest { id: c.id, params })
            })
            .collect::<Result<_>>()?;
        let markets = raw
            .markets
            .into_iter()
            .map(|m| {
                Ok(MarketJob {
                    spec: MarketSpec::new(
                        Distribution::from_json(&m.seller)?,
                        Distribution::from_json(&m.buyer)?,
                        m.m_s,
                        m.m_b,
                    ),
                    mechanisms: m
                        .mechanisms
                        .iter()
                        .map(|s| s.parse::<MechanismKind>())
                        .collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            checks,
            markets,
            mc: raw.mc,
            output: raw.output,
        })
    }
}

/// Reads a distribution argument: a JSON literal, `@path` to a JSON file,
/// `uniform` or `uniform:LO:HI`, or a single number for a point mass.
pub fn parse_distribution(arg: &str) -> Result<Distribution> {
    let arg = arg.trim();
    if let Some(path) = arg.strip_prefix('@') {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return Ok(Distribution::from_json(&serde_json::from_str(&text)?)?);
    }
    if arg.starts_with('{') {
        return Ok(Distribution::from_json(&serde_json::from_str(arg)?)?);
    }
    if arg == "uniform" {
        return Ok(Distribution::uniform(int(0), int(1))?);
    }
    if let Some(rest) = arg.strip_prefix("uniform:") {
        let Some((lo, hi)) = rest.split_once(':') else {
            bail!("expected uniform:LO:HI, got `{arg}`");
        };
        return Ok(Distribution::uniform(parse_rational(lo)?, parse_rational(hi)?)?);
    }
    match parse_rational(arg) {
        Ok(v) => Ok(Distribution::point_mass(v)),
        Err(_) => bail!("cannot read distribution `{arg}`: expected JSON, @file, uniform[:LO:HI] or a number"),
    }
}

/// Comma-separated rationals, e.g. `0,2,5/2`. Empty means no agents.
pub fn parse_values(arg: &str) -> Result<Vec<gft_core::Rational>> {
    arg.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_rational(t).map_err(Into::into))
        .collect()
}

/// Check ids and per-check parameter overrides from trailing arguments:
/// `ID [--name value]... [ID [--name value]...]...`. Overrides bind to the
/// nearest preceding id.
pub fn parse_check_args(tokens: &[String]) -> Result<Vec<CheckRequest>> {
    let mut out: Vec<CheckRequest> = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        if let Some(flag) = tok.strip_prefix("--") {
            let (name, value) = match flag.split_once('=') {
                Some((n, v)) => (n.to_string(), v.to_string()),
                None => {
                    let v = it.next().with_context(|| format!("`--{flag}` needs a value"))?;
                    (flag.to_string(), v.clone())
                }
            };
            let Some(req) = out.last_mut() else {
                bail!("parameter `--{name}` must follow a check id");
            };
            req.params.insert(name, parse_rational(&value)?);
        } else {
            out.push(CheckRequest {
                id: tok.clone(),
                params: Params::new(),
            });
        }
    }
    for req in &out {
        find_check(&req.id)?.merge_params(&req.params)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_bind_to_preceding_id() {
        let reqs = parse_check_args(&strings(&["thm-iid", "--mS=2", "log-lower-bound", "--mB", "4", "--k", "2"]))
            .unwrap();
        assert_eq!(reqs.len(), 2);
        assert_eq!(reqs[0].params["mS"], int(2));
        assert_eq!(reqs[1].params["k"], int(2));
    }

    #[test]
    fn rejects_unknown_and_orphaned_tokens() {
        assert!(parse_check_args(&strings(&["nosuch"])).is_err());
        assert!(parse_check_args(&strings(&["--k", "2"])).is_err());
        assert!(parse_check_args(&strings(&["thm-iid", "--bogus", "1"])).is_err());
        assert!(parse_check_args(&strings(&["thm-iid", "--mS"])).is_err());
    }

    #[test]
    fn distribution_arguments() {
        assert_eq!(parse_distribution("3/2").unwrap(), Distribution::point_mass(gft_core::scalar::ratio(3, 2)));
        assert!(parse_distribution("uniform").unwrap().is_atomless());
        assert!(parse_distribution("uniform:0:10").unwrap().is_atomless());
        let d = parse_distribution(r#"{"atoms": [[0, "1/2"], [2, "1/2"]]}"#).unwrap();
        assert_eq!(d.support_len(), Some(2));
        assert!(parse_distribution("banana").is_err());
    }

    #[test]
    fn config_rejects_unknown_names() {
        let ok = r#"{"checks": [{"id": "log-lower-bound", "params": {"mB": 4, "k": "2"}}],
                     "markets": [{"seller": {"atoms": [[1, "1"]]}, "buyer": {"atoms": [[0, "1/2"], [2, "1/2"]]},
                                  "m_s": 1, "m_b": 2, "mechanisms": ["btr", "fixed-price:3/2"]}],
                     "mc": {"n": 1000, "seed": 3}}"#;
        let c = RunConfig::parse(ok).unwrap();
        assert_eq!(c.checks[0].params["mB"], int(4));
        assert_eq!(c.markets[0].mechanisms.len(), 2);
        let bad_check = r#"{"checks": [{"id": "nosuch"}]}"#;
        assert!(RunConfig::parse(bad_check).unwrap_err().to_string().contains("nosuch"));
        let bad_mech = ok.replace("\"btr\"", "\"bogus\"");
        assert!(RunConfig::parse(&bad_mech).unwrap_err().to_string().contains("bogus"));
    }
}
