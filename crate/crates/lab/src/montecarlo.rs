//! Ensemble runs on a worker pool, and the stats CSV format.
//!
//! Each round derives its noise from `(base_seed, round)` alone, so the pool
//! width only changes the wall clock, never the result.

use std::io::{Read, Write};
use std::path::Path;

use rangelp_core::sim::{pathwise_round, simulate_round, RoundOutcome};
use rangelp_core::{Error as CoreError, ExperimentConfig, TrajectoryStats};
use rayon::prelude::*;
use thiserror::Error;

pub const STATS_HEADER: [&str; 8] = [
    "step",
    "t_years",
    "mean_L",
    "p10_L",
    "p50_L",
    "p90_L",
    "aborted",
    "band_violations",
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot build a pool of {workers} workers: {message}")]
    Pool { workers: usize, message: String },
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| RunError::Pool {
        workers: workers.unwrap_or(0),
        message: e.to_string(),
    })
}

/// All round outcomes, in round order. `workers = None` uses every core.
pub fn run_rounds(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<RoundOutcome>, RunError> {
    cfg.validate()?;
    let outcomes = pool(workers)?.install(|| {
        (0..cfg.rounds as u64)
            .into_par_iter()
            .map(|r| simulate_round(cfg, r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(outcomes)
}

pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<TrajectoryStats, RunError> {
    let outcomes = run_rounds(cfg, workers)?;
    Ok(TrajectoryStats::from_rounds(&cfg.grid, &outcomes)?)
}

/// Max over steps and completed rounds of `|L − L_sde| / L` between the
/// chasing strategy and the Euler–Maruyama reference on shared noise.
pub fn pathwise_compare(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<f64, RunError> {
    cfg.validate()?;
    let per_round = pool(workers)?.install(|| {
        (0..cfg.rounds as u64)
            .into_par_iter()
            .map(|r| pathwise_round(cfg, r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    per_round
        .into_iter()
        .flatten()
        .reduce(f64::max)
        .ok_or(RunError::Core(CoreError::AllPathsAborted { rounds: cfg.rounds }))
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_stats<W: Write>(stats: &TrajectoryStats, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(STATS_HEADER)?;
    for i in 0..stats.len() {
        w.write_record([
            i.to_string(),
            sci(stats.time(i)),
            sci(stats.mean[i]),
            sci(stats.p10[i]),
            sci(stats.p50[i]),
            sci(stats.p90[i]),
            stats.aborted[i].to_string(),
            stats.band_violations[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `stats` to `path` as CSV with 17 significant digits.
pub fn export_stats(stats: &TrajectoryStats, path: &Path) -> csv::Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_stats(stats, file)
}

#[derive(Debug, Error)]
pub enum StatsReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error("line {line}: step {found}, expected {expected}")]
    Step { line: u64, found: usize, expected: usize },
}

#[derive(serde::Deserialize)]
struct StatsRow {
    step: usize,
    t_years: f64,
    #[serde(rename = "mean_L")]
    mean: f64,
    #[serde(rename = "p10_L")]
    p10: f64,
    #[serde(rename = "p50_L")]
    p50: f64,
    #[serde(rename = "p90_L")]
    p90: f64,
    aborted: u64,
    band_violations: u64,
}

/// Inverse of [`write_stats`]. The grid spacing is recovered from the
/// `t_years` of step 1, and is zero for a single-row file.
pub fn read_stats<R: Read>(input: R) -> Result<TrajectoryStats, StatsReadError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(STATS_HEADER) {
        return Err(StatsReadError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut stats = TrajectoryStats::default();
    for (expected, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: StatsRow = record.deserialize(Some(&header))?;
        if row.step != expected {
            return Err(StatsReadError::Step {
                line,
                found: row.step,
                expected,
            });
        }
        if row.step == 1 {
            stats.dt = row.t_years;
        }
        stats.mean.push(row.mean);
        stats.p10.push(row.p10);
        stats.p50.push(row.p50);
        stats.p90.push(row.p90);
        stats.aborted.push(row.aborted);
        stats.band_violations.push(row.band_violations);
    }
    Ok(stats)
}

pub fn import_stats(path: &Path) -> Result<TrajectoryStats, StatsReadError> {
    let file = std::fs::File::open(path).map_err(csv::Error::from)?;
    read_stats(std::io::BufReader::new(file))
}
