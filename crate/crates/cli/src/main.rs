//! `gft`: run the mechanism checks, estimate expected gains from trade, and
//! sweep how many extra buyers BTR needs to match the optimum.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gft_core::eval::{
    expected_gft_exact, expected_gft_mc, expected_gft_symmetric, Expectation, MarketSpec,
};
use gft_core::market::{BuyerTradeReduction, Mechanism, MechanismKind, ValueProfile};
use gft_verify::{registry, run_all, CheckContext, DistributionFamily, SuiteConfig};
use gft_core::{check_fsd, Distribution, Rational};

use config::{parse_check_args, parse_distribution, parse_values, Format, MarketJob, RunConfig};

#[derive(Parser)]
#[command(name = "gft", version, about = "Double-auction gains-from-trade checks and estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered checks and mechanism names.
    List,
    /// Run checks: `gft check [ID [--param value]...]...`; no ids runs all.
    Check(CheckArgs),
    /// Expected gains from trade of mechanisms on a market, or the outcome on
    /// one value profile.
    Estimate(EstimateArgs),
    /// Smallest number of extra buyers for BTR to reach OPT, per distribution
    /// pair of a family.
    BkGap(BkGapArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum BtrVariant {
    #[default]
    Weak,
    /// Strict price comparison; for mutation testing.
    Strict,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON run configuration; its `checks` are run after any on the command line.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    btr: BtrVariant,
    /// Check ids, each optionally followed by `--name value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// Mechanism names (see `gft list`); repeatable.
    #[arg(short, long = "mechanism", default_value = "btr")]
    mechanisms: Vec<String>,
    /// Seller distribution: JSON literal, @file, uniform[:LO:HI], or a number.
    #[arg(long)]
    seller: Option<String>,
    #[arg(long)]
    buyer: Option<String>,
    #[arg(long, default_value_t = 1)]
    ms: usize,
    #[arg(long, default_value_t = 1)]
    mb: usize,
    /// Monte Carlo with this many samples instead of exact enumeration.
    #[arg(long, value_name = "N", conflicts_with = "exact")]
    mc: Option<u64>,
    #[arg(long)]
    exact: bool,
    /// Mandatory with --mc.
    #[arg(long)]
    seed: Option<u64>,
    /// Enumerate sorted value multisets instead of ordered tuples.
    #[arg(long)]
    multiset: bool,
    /// One-shot profile: comma-separated seller values.
    #[arg(long, requires = "buyer_values")]
    seller_values: Option<String>,
    #[arg(long, requires = "seller_values")]
    buyer_values: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyKind {
    /// `F_S = F_B` for every member.
    Iid,
    /// Pairs where the buyer distribution dominates.
    Fsd,
}

#[derive(clap::Args)]
struct BkGapArgs {
    #[arg(long, value_enum, default_value = "iid")]
    family: FamilyKind,
    /// Sweep a single pair instead of a family.
    #[arg(long, requires = "buyer")]
    seller: Option<String>,
    #[arg(long, requires = "seller")]
    buyer: Option<String>,
    #[arg(long, default_value_t = 1)]
    ms: usize,
    #[arg(long, default_value_t = 1)]
    mb: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    /// Largest number of atoms per family member.
    #[arg(long, default_value_t = 4)]
    max_support: usize,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::List => cmd_list(),
        Command::Check(a) => cmd_check(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::BkGap(a) => cmd_bk_gap(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_list() -> Result<ExitCode> {
    println!("checks:");
    for c in registry() {
        let params: Vec<String> = c
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", v.unwrap_or("auto")))
            .collect();
        println!("  {:<24} {}", c.id, c.summary);
        if !params.is_empty() {
            println!("  {:<24} params: {}", "", params.join(" "));
        }
    }
    println!("mechanisms:");
    for m in MechanismKind::NAMES {
        println!("  {m}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(mut a: CheckArgs) -> Result<ExitCode> {
    // Global flags may also appear after the ids.
    let mut rest = Vec::new();
    let mut it = std::mem::take(&mut a.rest).into_iter();
    while let Some(tok) = it.next() {
        let (name, inline) = match tok.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (tok.clone(), None),
        };
        let global = matches!(
            name.as_str(),
            "--seed" | "--mc-samples" | "--format" | "--output" | "--config" | "--btr"
        );
        if !global {
            rest.push(tok);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().with_context(|| format!("`{name}` needs a value"))?,
        };
        match name.as_str() {
            "--seed" => a.seed = Some(value.parse().context("--seed")?),
            "--mc-samples" => a.mc_samples = Some(value.parse().context("--mc-samples")?),
            "--format" => a.format = Some(Format::from_str(&value, true).map_err(anyhow::Error::msg)?),
            "--output" => a.output = Some(value.into()),
            "--config" => a.config = Some(value.into()),
            _ => a.btr = BtrVariant::from_str(&value, true).map_err(anyhow::Error::msg)?,
        }
    }

    let mut checks = parse_check_args(&rest)?;
    let file = a.config.as_deref().map(RunConfig::load).transpose()?.unwrap_or_default();
    checks.extend(file.checks);
    let from_file_only = rest.is_empty() && a.config.is_some();
    if checks.is_empty() && !from_file_only {
        checks = SuiteConfig::all().checks;
    }
    let defaults = CheckContext::default();
    let context = CheckContext {
        seed: a.seed.or(file.mc.seed).unwrap_or(defaults.seed),
        mc_samples: a.mc_samples.or(file.mc.n).unwrap_or(defaults.mc_samples),
        btr: match a.btr {
            BtrVariant::Weak => BuyerTradeReduction::default(),
            BtrVariant::Strict => BuyerTradeReduction::strict(),
        },
        ..defaults
    };
    let format = a.format.or(file.output.format).unwrap_or_default();
    let path = a.output.or(file.output.path.map(PathBuf::from));

    let summary = run_all(&SuiteConfig { checks, context })?;
    let text = match format {
        Format::Table => output::check_table(&summary.results),
        Format::Csv => output::check_csv(&summary.results)?,
        Format::Json => output::check_json(&summary.results)?,
    };
    output::emit(&text, path.as_deref())?;
    if path.is_some() {
        let passed = summary.results.iter().filter(|r| r.passed).count();
        println!("{passed}/{} checks passed", summary.results.len());
    }
    Ok(if summary.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_estimate(a: EstimateArgs) -> Result<ExitCode> {
    let mechanisms = a
        .mechanisms
        .iter()
        .map(|s| s.parse::<MechanismKind>())
        .collect::<Result<Vec<_>, _>>()?;

    if let (Some(s), Some(b)) = (&a.seller_values, &a.buyer_values) {
        let p = ValueProfile::new(parse_values(s)?, parse_values(b)?);
        p.validate()?;
        let mut rows = Vec::new();
        for m in &mechanisms {
            Mechanism::<Rational>::check_market(m, p.m_s(), p.m_b())?;
            rows.push((m.to_string(), m.run(&p)?));
        }
        let text = output::outcomes(&p, &rows, a.format)?;
        output::emit(&text, a.output.as_deref())?;
        return Ok(ExitCode::SUCCESS);
    }

    let mut jobs = match &a.config {
        Some(path) => RunConfig::load(path)?.markets,
        None => Vec::new(),
    };
    match (&a.seller, &a.buyer) {
        (Some(s), Some(b)) => jobs.push(MarketJob {
            spec: MarketSpec::new(parse_distribution(s)?, parse_distribution(b)?, a.ms, a.mb),
            mechanisms,
        }),
        (None, None) if !jobs.is_empty() => {}
        _ => bail!("estimate needs --seller and --buyer, a --config with markets, or --seller-values/--buyer-values"),
    }
    if a.mc.is_some() && a.seed.is_none() {
        bail!("--mc requires --seed");
    }

    let mut rows = Vec::new();
    for job in &jobs {
        for m in &job.mechanisms {
            let e = estimate_one(m, &job.spec, a.mc, a.seed, a.multiset)
                .with_context(|| format!("{m} on ({}, {})", job.spec.m_s, job.spec.m_b))?;
            rows.push(output::EstimateRow {
                mechanism: m.to_string(),
                m_s: job.spec.m_s,
                m_b: job.spec.m_b,
                expectation: e,
            });
        }
    }
    let text = output::estimates(&rows, a.format)?;
    output::emit(&text, a.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn estimate_one(
    m: &MechanismKind,
    spec: &MarketSpec,
    mc: Option<u64>,
    seed: Option<u64>,
    multiset: bool,
) -> Result<Expectation> {
    Ok(match (mc, seed) {
        (Some(n), Some(seed)) => expected_gft_mc(m, spec, n, seed)?,
        _ if multiset => expected_gft_symmetric(m, spec)?,
        _ => {
            if !(spec.seller.is_discrete() && spec.buyer.is_discrete()) {
                bail!("exact evaluation needs discrete distributions; use --mc N --seed S");
            }
            expected_gft_exact(m, spec)?
        }
    })
}

fn cmd_bk_gap(a: BkGapArgs) -> Result<ExitCode> {
    let pairs: Vec<(Distribution, Distribution)> = match (&a.seller, &a.buyer) {
        (Some(s), Some(b)) => vec![(parse_distribution(s)?, parse_distribution(b)?)],
        _ => {
            let family = DistributionFamily::default();
            match a.family {
                FamilyKind::Iid => family
                    .members_up_to(a.max_support)
                    .into_iter()
                    .map(|f| (f.clone(), f))
                    .collect(),
                FamilyKind::Fsd => family.fsd_pairs(a.max_support),
            }
        }
    };
    let btr = BuyerTradeReduction::default();
    let mut rows = Vec::with_capacity(pairs.len());
    for (seller, buyer) in pairs {
        let spec = MarketSpec::new(seller.clone(), buyer.clone(), a.ms, a.mb);
        let opt = expected_gft_symmetric(&MechanismKind::Vcg, &spec)?.expect_exact()?.clone();
        let mut found = None;
        for k in 0..=a.k_max {
            let gft = expected_gft_symmetric(&btr, &spec.sized(a.ms, a.mb + k))?;
            if *gft.expect_exact()? >= opt {
                found = Some(k);
                break;
            }
        }
        rows.push(output::GapRow {
            fsd: check_fsd(&buyer, &seller),
            seller,
            buyer,
            k: found,
        });
    }
    let label = match (&a.seller, a.family) {
        (Some(_), _) => "given pair".to_string(),
        (None, FamilyKind::Iid) => format!("iid family, supports <= {} atoms", a.max_support),
        (None, FamilyKind::Fsd) => format!("FSD family, supports <= {} atoms", a.max_support),
    };
    let text = output::gap(&rows, &label, a.ms, a.mb, a.k_max, a.format)?;
    output::emit(&text, a.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

