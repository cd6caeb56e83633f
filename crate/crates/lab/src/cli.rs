//! The `rangelp` command line.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rangelp_core::strategy::{closed_form_decay, price_band, safe_interval_approx, safe_interval_exact};
use rangelp_core::{
    ExperimentConfig, GateSpec, GbmParams, MeanRevParams, Model, Price, SimGrid, StrategyKind, TrajectoryStats,
};
use serde::Serialize;

use crate::ingest::{calibrate, read_pair, Calibration, EstimateMode, PriceSeries};
use crate::manifest::{echo, manifest_path, write_atomic, RunManifest};
use crate::montecarlo::{export_stats, pathwise_compare, run_experiment, RunError};
use crate::svg::{render, Curve};

#[derive(Debug, Parser)]
#[command(name = "rangelp", version, about = "Range-liquidity chasing strategies: simulate, calibrate, and check safe intervals")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write per-step ensemble statistics.
    Simulate(SimulateArgs),
    /// Estimate (mu, sigma) and optionally (theta, gamma) from price CSVs.
    Estimate(EstimateArgs),
    /// Print the deviation band on which chasing liquidity grows.
    SafeInterval(SafeIntervalArgs),
    /// Run the four reference curves and check their ordering.
    ReproduceFig1(Fig1Args),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Exogenous,
    MeanReverting,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Chasing,
    Gated,
    Theorem2Sde,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GateArg {
    Exact,
    Approx,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("alpha must be > 1 so that the range [Z/alpha, alpha*Z] is non-empty (got {v})"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite and > 0 (got {v})"))
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite and >= 0 (got {v})"))
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite (got {v})"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be >= 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Worker threads [default: all cores].
    #[arg(long, env = "RANGELP_WORKERS", value_parser = parse_count)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "mean-reverting")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "chasing")]
    strategy: StrategyArg,
    /// GBM drift of the CEX price, per year.
    #[arg(long, default_value_t = -1.17, allow_negative_numbers = true, value_parser = parse_finite)]
    mu: f64,
    /// GBM volatility, per square-root year.
    #[arg(long, default_value_t = 0.75, value_parser = parse_non_negative)]
    sigma: f64,
    /// Mean-reversion speed of the AMM price, per year.
    #[arg(long, default_value_t = 1058.49, value_parser = parse_positive)]
    theta: f64,
    /// AMM price volatility, per square-root year.
    #[arg(long, default_value_t = 0.68, value_parser = parse_non_negative)]
    gamma: f64,
    /// Range factor: liquidity sits on [Z/alpha, alpha*Z].
    #[arg(long, default_value_t = 1.1, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 100, value_parser = parse_count)]
    rounds: usize,
    #[arg(long, default_value_t = 35_280, value_parser = parse_count)]
    steps: usize,
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    dt_minutes: f64,
    /// Each step's noise is the sum of this many unit draws over sqrt(k).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    substeps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000.0, value_parser = parse_positive)]
    z0: f64,
    /// Initial CEX price [default: z0].
    #[arg(long, value_parser = parse_positive)]
    p0: Option<f64>,
    #[arg(long, default_value_t = 1000.0, value_parser = parse_positive)]
    l0: f64,
    /// Safe-interval source for the gated strategy.
    #[arg(long, value_enum, default_value = "exact", conflicts_with_all = ["delta_l", "delta_r"])]
    gate: GateArg,
    /// Explicit lower deviation bound of the gate, in (-1, 0).
    #[arg(long, requires = "delta_r", allow_negative_numbers = true, value_parser = parse_finite)]
    delta_l: Option<f64>,
    /// Explicit upper deviation bound of the gate, > 0.
    #[arg(long, requires = "delta_l", value_parser = parse_finite)]
    delta_r: Option<f64>,
    #[command(flatten)]
    pool: PoolArgs,
    /// Stats CSV to write; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG of the ensemble mean.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CEX price CSV (`timestamp,price`).
    #[arg(long)]
    p: PathBuf,
    /// AMM price CSV; enables theta and gamma.
    #[arg(long)]
    z: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "joined")]
    mode: EstimateMode,
    /// Write the estimates as JSON, with a manifest beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SafeIntervalArgs {
    #[arg(long, default_value_t = 1058.49, value_parser = parse_positive)]
    theta: f64,
    #[arg(long, default_value_t = 0.68, value_parser = parse_non_negative)]
    gamma: f64,
    /// CEX price for which to print the AMM price band.
    #[arg(long, value_parser = parse_positive)]
    price: Option<f64>,
    /// Write the result as JSON, with a manifest beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Fig1Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 1000 rounds instead of 100.
    #[arg(long, conflicts_with = "rounds")]
    full_scale: bool,
    #[arg(long, value_parser = parse_count)]
    rounds: Option<usize>,
    #[arg(long, default_value_t = 35_280, value_parser = parse_count)]
    steps: usize,
    #[arg(long, default_value = "fig1")]
    out_dir: PathBuf,
    #[command(flatten)]
    pool: PoolArgs,
    /// Also write `fig1.svg` of the four ensemble means.
    #[arg(long)]
    plot: bool,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Simulate(_) => "simulate",
        Command::Estimate(_) => "estimate",
        Command::SafeInterval(_) => "safe-interval",
        Command::ReproduceFig1(_) => "reproduce-fig1",
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::SafeInterval(a) => safe_interval(a),
        Command::ReproduceFig1(a) => reproduce_fig1(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let sub = cmd.find_subcommand_mut(name).expect("known subcommand");
            sub.error(ErrorKind::ValueValidation, msg).exit()
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn price(v: f64) -> Result<Price, Failure> {
    Price::new(v).map_err(|e| Failure::Usage(e.to_string()))
}

fn experiment(a: &SimulateArgs) -> Result<ExperimentConfig, Failure> {
    let usage = |e: rangelp_core::Error| Failure::Usage(e.to_string());
    let z0 = price(a.z0)?;
    let cfg = ExperimentConfig {
        model: match a.model {
            ModelArg::Exogenous => Model::Exogenous,
            ModelArg::MeanReverting => Model::MeanReverting,
        },
        strategy: match a.strategy {
            StrategyArg::Chasing => StrategyKind::Chasing,
            StrategyArg::Gated => StrategyKind::Gated,
            StrategyArg::Theorem2Sde => StrategyKind::Theorem2Sde,
            StrategyArg::ClosedForm => StrategyKind::ClosedForm,
        },
        gbm: GbmParams::new(a.mu, a.sigma).map_err(usage)?,
        mr: MeanRevParams::new(a.theta, a.gamma).map_err(usage)?,
        grid: SimGrid::from_minutes(a.dt_minutes, a.steps).map_err(usage)?,
        rounds: a.rounds,
        z0,
        p0: match (a.model, a.p0) {
            (ModelArg::MeanReverting, Some(p0)) => price(p0)?,
            _ => z0,
        },
        l0: a.l0,
        alpha: a.alpha,
        base_seed: a.seed,
        gate: match (a.delta_l, a.delta_r, a.gate) {
            (Some(delta_l), Some(delta_r), _) => GateSpec::Explicit { delta_l, delta_r },
            (_, _, GateArg::Exact) => GateSpec::Exact,
            (_, _, GateArg::Approx) => GateSpec::Approx,
        },
        noise_substeps: a.substeps,
    };
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn runtime(e: RunError) -> Failure {
    Failure::Runtime(e.into())
}

fn write_plot(path: &Path, title: &str, curves: &[(&str, &TrajectoryStats)]) -> anyhow::Result<()> {
    let curves: Vec<Curve<'_>> = curves
        .iter()
        .map(|(label, s)| Curve {
            label,
            t: (0..s.len()).map(|i| s.time(i)).collect(),
            y: &s.mean,
        })
        .collect();
    let svg = render(title, "t (years)", "mean L", &curves);
    write_atomic(path, svg.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let cfg = experiment(&a)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let stats = run_experiment(&cfg, a.pool.workers).map_err(runtime)?;
    export_stats(&stats, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let mut artifacts = vec![a.out.clone()];
    if let Some(plot) = &a.plot {
        write_plot(plot, "ensemble mean of L", &[("mean L", &stats)])?;
        artifacts.push(plot.clone());
    }

    let last = stats.len() - 1;
    println!(
        "steps {}  rounds {}  completed {}  band violations {}",
        last,
        cfg.rounds,
        cfg.rounds as u64 - stats.total_aborted(),
        stats.total_band_violations()
    );
    println!(
        "L_T mean {:.6}  p10 {:.6}  p50 {:.6}  p90 {:.6}",
        stats.mean[last], stats.p10[last], stats.p50[last], stats.p90[last]
    );
    println!("wrote {}", a.out.display());

    let mut m = RunManifest::new("simulate", started, clock.elapsed());
    m.base_seed = Some(cfg.base_seed);
    m.config = echo(&cfg);
    m.artifacts = artifacts;
    let path = manifest_path(&a.out);
    m.write(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct IntervalReport {
    exact: Option<(f64, f64)>,
    approx: (f64, f64),
}

fn intervals(theta: f64, gamma: f64) -> Option<IntervalReport> {
    let params = MeanRevParams::new(theta, gamma).ok()?;
    Some(IntervalReport {
        exact: safe_interval_exact(&params).ok(),
        approx: safe_interval_approx(&params),
    })
}

fn show_interval(name: &str, iv: Option<(f64, f64)>) {
    match iv {
        Some((l, r)) => println!("{name:<7}delta_l = {l}  delta_r = {r}  width = {}", r - l),
        None => println!("{name:<7}empty"),
    }
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    mode: EstimateMode,
    #[serde(flatten)]
    calibration: &'a Calibration,
    safe_interval: Option<IntervalReport>,
}

fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let (p, z) = match &a.z {
        Some(zp) => {
            let (p, z) = read_pair(&a.p, zp);
            (p.map_err(anyhow::Error::from)?, Some(z.map_err(anyhow::Error::from)?))
        }
        None => (PriceSeries::read(&a.p).map_err(anyhow::Error::from)?, None),
    };
    let cal = calibrate(&p, z.as_ref(), a.mode).map_err(anyhow::Error::from)?;

    println!("mu_hat    = {}", cal.mu_hat);
    println!("sigma_hat = {}", cal.sigma_hat);
    let mut report = EstimateReport {
        mode: a.mode,
        calibration: &cal,
        safe_interval: None,
    };
    if let (Some(theta), Some(gamma)) = (cal.theta_hat, cal.gamma_hat) {
        println!("theta_hat = {theta}");
        println!("gamma_hat = {gamma}");
        println!(
            "rows      = {} joined, {} dropped from P, {} dropped from Z",
            cal.rows_joined.unwrap_or(0),
            cal.dropped_p,
            cal.dropped_z
        );
        report.safe_interval = intervals(theta, gamma);
        match &report.safe_interval {
            Some(iv) => {
                show_interval("exact", iv.exact);
                show_interval("approx", Some(iv.approx));
            }
            None => println!("safe interval undefined: theta_hat must be > 0"),
        }
    } else {
        println!("rows      = {}", cal.rows_p);
    }

    if let Some(out) = &a.out {
        let bytes = serde_json::to_vec_pretty(&report).map_err(anyhow::Error::from)?;
        write_atomic(out, &bytes).with_context(|| format!("writing {}", out.display()))?;
        let mut m = RunManifest::new("estimate", started, clock.elapsed());
        m.config = serde_json::json!({ "p": a.p, "z": a.z, "mode": a.mode });
        m.artifacts = vec![out.clone()];
        m.write(&manifest_path(out)).context("writing manifest")?;
    }
    Ok(())
}

fn safe_interval(a: SafeIntervalArgs) -> Result<(), Failure> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let report = intervals(a.theta, a.gamma).ok_or_else(|| Failure::Usage("theta must be > 0".into()))?;
    println!("theta = {}  gamma = {}", a.theta, a.gamma);
    show_interval("exact", report.exact);
    show_interval("approx", Some(report.approx));
    let mut bands = serde_json::Map::new();
    if let Some(pv) = a.price {
        let p = price(pv)?;
        if let Some(iv) = report.exact {
            let (lo, hi) = price_band(p, iv);
            println!("exact  band for P = {pv}: {lo} < Z < {hi}");
            bands.insert("exact".into(), serde_json::json!([lo, hi]));
        }
        let (lo, hi) = price_band(p, report.approx);
        println!("approx band for P = {pv}: {lo} < Z < {hi}");
        bands.insert("approx".into(), serde_json::json!([lo, hi]));
    }
    if let Some(out) = &a.out {
        let doc = serde_json::json!({
            "theta": a.theta,
            "gamma": a.gamma,
            "price": a.price,
            "interval": report,
            "price_band": bands,
        });
        let bytes = serde_json::to_vec_pretty(&doc).map_err(anyhow::Error::from)?;
        write_atomic(out, &bytes).with_context(|| format!("writing {}", out.display()))?;
        let mut m = RunManifest::new("safe-interval", started, clock.elapsed());
        m.config = serde_json::json!({ "theta": a.theta, "gamma": a.gamma, "price": a.price });
        m.artifacts = vec![out.clone()];
        m.write(&manifest_path(out)).context("writing manifest")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveSummary {
    name: &'static str,
    file: PathBuf,
    config: serde_json::Value,
    l0: f64,
    end_mean: f64,
    end_p10: f64,
    end_p50: f64,
    end_p90: f64,
    aborted: u64,
    band_violations: u64,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct Fig1Summary {
    base_seed: u64,
    rounds: usize,
    steps: usize,
    curves: Vec<CurveSummary>,
    pathwise_max_deviation: f64,
    checks: Vec<Check>,
    passed: bool,
}

/// The four reference configurations: chasing, the SDE reference and gated
/// on the mean-reverting model, and the closed form of the exogenous one.
pub fn fig1_configs(seed: u64, rounds: usize, steps: usize) -> anyhow::Result<[(&'static str, ExperimentConfig); 4]> {
    let base = ExperimentConfig {
        base_seed: seed,
        rounds,
        grid: SimGrid::from_minutes(1.0, steps)?,
        ..ExperimentConfig::desk_default()
    };
    Ok([
        ("chasing", base),
        (
            "theorem2_sde",
            ExperimentConfig {
                strategy: StrategyKind::Theorem2Sde,
                ..base
            },
        ),
        (
            "gated",
            ExperimentConfig {
                strategy: StrategyKind::Gated,
                ..base
            },
        ),
        (
            "closed_form",
            ExperimentConfig {
                model: Model::Exogenous,
                strategy: StrategyKind::ClosedForm,
                ..base
            },
        ),
    ])
}

fn reproduce_fig1(a: Fig1Args) -> Result<(), Failure> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let rounds = match (a.full_scale, a.rounds) {
        (true, _) => 1000,
        (false, Some(r)) => r,
        (false, None) => 100,
    };
    let configs = fig1_configs(a.seed, rounds, a.steps).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;

    let mut curves = Vec::new();
    let mut all_stats = Vec::new();
    for (name, cfg) in &configs {
        let stats = run_experiment(cfg, a.pool.workers)
            .map_err(|e| Failure::Runtime(anyhow::Error::from(e).context(format!("curve {name}"))))?;
        let file = a.out_dir.join(format!("{name}.csv"));
        export_stats(&stats, &file).with_context(|| format!("writing {}", file.display()))?;
        let last = stats.len() - 1;
        curves.push(CurveSummary {
            name,
            file,
            config: echo(cfg),
            l0: cfg.l0,
            end_mean: stats.mean[last],
            end_p10: stats.p10[last],
            end_p50: stats.p50[last],
            end_p90: stats.p90[last],
            aborted: stats.total_aborted(),
            band_violations: stats.total_band_violations(),
        });
        all_stats.push((*name, stats));
    }
    let deviation = pathwise_compare(&configs[0].1, a.pool.workers).map_err(runtime)?;

    let end = |name: &str| curves.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.end_mean);
    let l0 = configs[0].1.l0;
    let horizon = configs[3].1.grid.horizon();
    let closed = closed_form_decay(l0, configs[3].1.gbm.sigma, configs[3].1.alpha, horizon);
    let checks = vec![
        Check {
            name: "gated end mean > L0",
            passed: end("gated") > l0,
            detail: format!("{} vs {l0}", end("gated")),
        },
        Check {
            name: "chasing end mean < L0",
            passed: end("chasing") < l0,
            detail: format!("{} vs {l0}", end("chasing")),
        },
        Check {
            name: "closed-form end < L0",
            passed: end("closed_form") < l0,
            detail: format!("{closed} vs {l0}"),
        },
        Check {
            name: "pathwise chasing vs SDE deviation < 1%",
            passed: deviation < 0.01,
            detail: format!("{deviation}"),
        },
    ];
    let passed = checks.iter().all(|c| c.passed);

    println!("{:<14}{:>14}{:>14}{:>14}{:>14}{:>9}", "curve", "end mean", "p10", "p50", "p90", "aborted");
    for c in &curves {
        println!(
            "{:<14}{:>14.4}{:>14.4}{:>14.4}{:>14.4}{:>9}",
            c.name, c.end_mean, c.end_p10, c.end_p50, c.end_p90, c.aborted
        );
    }
    println!("pathwise max deviation {deviation:.3e}");
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }

    let summary = Fig1Summary {
        base_seed: a.seed,
        rounds,
        steps: a.steps,
        curves,
        pathwise_max_deviation: deviation,
        checks,
        passed,
    };
    let summary_path = a.out_dir.join("summary.json");
    let bytes = serde_json::to_vec_pretty(&summary).map_err(anyhow::Error::from)?;
    write_atomic(&summary_path, &bytes).context("writing summary")?;

    let mut artifacts: Vec<PathBuf> = summary.curves.iter().map(|c| c.file.clone()).collect();
    artifacts.push(summary_path);
    if a.plot {
        let plot = a.out_dir.join("fig1.svg");
        let refs: Vec<(&str, &TrajectoryStats)> = all_stats.iter().map(|(n, s)| (*n, s)).collect();
        write_plot(&plot, "ensemble mean of L", &refs)?;
        artifacts.push(plot);
    }
    let mut m = RunManifest::new("reproduce-fig1", started, clock.elapsed());
    m.base_seed = Some(a.seed);
    m.config = serde_json::json!({
        "rounds": rounds,
        "steps": a.steps,
        "curves": summary.curves.iter().map(|c| (c.name.to_owned(), c.config.clone())).collect::<serde_json::Map<_, _>>(),
    });
    m.artifacts = artifacts;
    m.write(&a.out_dir.join("manifest.json")).context("writing manifest")?;

    if passed {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow::anyhow!("ensemble ordering checks failed")))
    }
}
