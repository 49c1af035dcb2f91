//! Table, CSV and JSON renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use gft_core::eval::Expectation;
use gft_core::market::{MarketOutcome, ValueProfile};
use gft_core::eval::sig6;
use gft_core::scalar::rational_to_f64;
use gft_verify::{CheckResult, Quantity};
use gft_core::{format_rational, Distribution, Rational};
use serde_json::{json, Value};

use crate::config::Format;

pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opt_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), ToString::to_string)
}

/// Left-aligned columns separated by two spaces.
fn columns(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.iter().map(|h| h.to_string()).collect());
    for r in rows {
        line(r.clone());
    }
    out
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Long exact fractions are shortened to six significant digits in tables;
/// CSV and JSON keep them exact.
fn short(q: &Option<Quantity>) -> String {
    match q {
        Some(Quantity::Real(r)) if format_rational(r).len() > 24 => format!("~{}", sig6(rational_to_f64(r))),
        _ => opt_string(q),
    }
}

pub fn check_table(results: &[CheckResult]) -> String {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let slack = match (&r.lhs, &r.rhs) {
                (Some(Quantity::Real(l)), Some(Quantity::Real(rr))) => short(&Some(Quantity::Real(l - rr))),
                _ => opt_string(&r.slack()),
            };
            vec![r.id.clone(), r.verdict.to_string(), short(&r.lhs), short(&r.rhs), slack]
        })
        .collect();
    let mut out = columns(&["id", "pass", "lhs", "rhs", "slack"], &rows);
    out.push('\n');
    for r in results {
        let _ = writeln!(out, "{}: {}", r.id, r.notes);
        if let Some(w) = &r.witness {
            let _ = writeln!(out, "  witness: {w}");
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "\n{passed}/{} checks passed", results.len());
    out
}

pub fn check_csv(results: &[CheckResult]) -> Result<String> {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.id.clone(),
                r.passed.to_string(),
                opt_string(&r.lhs),
                opt_string(&r.rhs),
                opt_string(&r.slack()),
                r.seed.to_string(),
                r.notes.clone(),
            ]
        })
        .collect();
    csv_string(&["check_id", "passed", "lhs", "rhs", "slack", "seed", "notes"], &rows)
}

pub fn check_json(results: &[CheckResult]) -> Result<String> {
    let v: Vec<Value> = results.iter().map(CheckResult::to_json).collect();
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn outcomes(
    p: &ValueProfile<Rational>,
    rows: &[(String, MarketOutcome<Rational>)],
    format: Format,
) -> Result<String> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, o)| {
            let trades: Vec<String> = o.pairs.iter().map(|(s, b)| format!("S{s}-B{b}")).collect();
            let pays: Vec<String> = o
                .seller_payments
                .iter()
                .enumerate()
                .map(|(i, v)| format!("S{i}:{}", format_rational(v)))
                .chain(o.buyer_payments.iter().enumerate().map(|(j, v)| format!("B{j}:{}", format_rational(v))))
                .collect();
            vec![
                name.clone(),
                format_rational(&o.gft),
                format_rational(&o.budget_surplus),
                trades.join(" "),
                pays.join(" "),
            ]
        })
        .collect();
    let header = ["mechanism", "gft", "surplus", "trades", "payments"];
    match format {
        Format::Table => Ok(format!("profile {p}\n{}", columns(&header, &cells))),
        Format::Csv => csv_string(&header, &cells),
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|(name, o)| json!({ "mechanism": name, "profile": p.to_json(), "outcome": o.to_json() }))
                .collect();
            Ok(serde_json::to_string_pretty(&v)? + "\n")
        }
    }
}

pub struct EstimateRow {
    pub mechanism: String,
    pub m_s: usize,
    pub m_b: usize,
    pub expectation: Expectation,
}

pub fn estimates(rows: &[EstimateRow], format: Format) -> Result<String> {
    match format {
        Format::Table => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.mechanism.clone(),
                        r.m_s.to_string(),
                        r.m_b.to_string(),
                        r.expectation.to_string(),
                    ]
                })
                .collect();
            Ok(columns(&["mechanism", "m_S", "m_B", "E[gft]"], &cells))
        }
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let (mode, value, se, n, seed) = match &r.expectation {
                        Expectation::Exact { value, states } => {
                            ("exact", format_rational(value), String::new(), states.to_string(), String::new())
                        }
                        Expectation::MonteCarlo { mean, std_error, n_samples, seed } => (
                            "monte_carlo",
                            sig6(*mean),
                            sig6(*std_error),
                            n_samples.to_string(),
                            seed.to_string(),
                        ),
                    };
                    vec![
                        r.mechanism.clone(),
                        r.m_s.to_string(),
                        r.m_b.to_string(),
                        mode.to_string(),
                        value,
                        se,
                        n,
                        seed,
                    ]
                })
                .collect();
            csv_string(&["mechanism", "m_s", "m_b", "mode", "value", "std_error", "n", "seed"], &cells)
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "mechanism": r.mechanism,
                        "m_s": r.m_s,
                        "m_b": r.m_b,
                        "expectation": serde_json::to_value(&r.expectation).expect("serializable"),
                    })
                })
                .collect();
            Ok(serde_json::to_string_pretty(&v)? + "\n")
        }
    }
}

pub struct GapRow {
    pub seller: Distribution,
    pub buyer: Distribution,
    pub fsd: bool,
    /// Smallest sufficient number of extra buyers, if within the sweep.
    pub k: Option<usize>,
}

fn k_cell(k: Option<usize>, k_max: usize) -> String {
    k.map_or_else(|| format!(">{k_max}"), |k| k.to_string())
}

pub fn gap(rows: &[GapRow], label: &str, m_s: usize, m_b: usize, k_max: usize, format: Format) -> Result<String> {
    let title = format!(
        "smallest k with BTR({m_s},{m_b}+k) >= OPT({m_s},{m_b}); empirical over configured family ({label})"
    );
    // Pairs that never reach OPT within the sweep rank above every found k.
    let worst = rows.iter().max_by_key(|r| r.k.map_or(usize::MAX, |k| k));
    match format {
        Format::Table => {
            let mut out = format!("{title}\n");
            let mut counts = std::collections::BTreeMap::<String, usize>::new();
            for r in rows {
                *counts.entry(k_cell(r.k, k_max)).or_default() += 1;
            }
            let cells: Vec<Vec<String>> = counts.into_iter().map(|(k, n)| vec![k, n.to_string()]).collect();
            out.push_str(&columns(&["k", "pairs"], &cells));
            if let Some(w) = worst {
                let _ = writeln!(
                    out,
                    "family max k = {} over {} pairs, attained at F_S={} F_B={}",
                    k_cell(w.k, k_max),
                    rows.len(),
                    w.seller.to_json(),
                    w.buyer.to_json()
                );
            }
            Ok(out)
        }
        Format::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.seller.to_json().to_string(),
                        r.buyer.to_json().to_string(),
                        r.fsd.to_string(),
                        k_cell(r.k, k_max),
                    ]
                })
                .collect();
            csv_string(&["seller", "buyer", "fsd", "k"], &cells)
        }
        Format::Json => {
            let v = json!({
                "label": title,
                "m_s": m_s,
                "m_b": m_b,
                "k_max": k_max,
                "max_k": worst.map(|w| w.k),
                "rows": rows.iter().map(|r| json!({
                    "seller": r.seller.to_json(),
                    "buyer": r.buyer.to_json(),
                    "fsd": r.fsd,
                    "k": r.k,
                })).collect::<Vec<_>>(),
            });
            Ok(serde_json::to_string_pretty(&v)? + "\n")
        }
    }
}
