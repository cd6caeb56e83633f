use rangelp::montecarlo::{export_stats, import_stats, read_stats, run_experiment, run_rounds, write_stats, RunError};
use rangelp_core::{Error, ExperimentConfig, GbmParams, Model, SimGrid, StrategyKind, TrajectoryStats};

fn mean_reverting(strategy: StrategyKind, steps: usize, rounds: usize) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        grid: SimGrid::from_minutes(1.0, steps).unwrap(),
        rounds,
        base_seed: 17,
        ..ExperimentConfig::desk_default()
    }
}

fn exogenous(dt_minutes: f64, horizon: f64, rounds: usize) -> ExperimentConfig {
    let dt = dt_minutes / rangelp_core::MINUTES_PER_YEAR;
    ExperimentConfig {
        model: Model::Exogenous,
        gbm: GbmParams { mu: 0.0, sigma: 0.75 },
        grid: SimGrid::with_horizon(dt, horizon).unwrap(),
        rounds,
        base_seed: 23,
        ..ExperimentConfig::desk_default()
    }
}

#[test]
fn same_config_twice_gives_identical_stats() {
    for strategy in [StrategyKind::Chasing, StrategyKind::Gated, StrategyKind::Theorem2Sde] {
        let cfg = mean_reverting(strategy, 2_000, 8);
        assert_eq!(run_experiment(&cfg, None).unwrap(), run_experiment(&cfg, None).unwrap());
    }
}

#[test]
fn pool_width_does_not_change_results() {
    let cfg = mean_reverting(StrategyKind::Gated, 3_000, 16);
    let serial = run_experiment(&cfg, Some(1)).unwrap();
    for workers in [2, 3, 8] {
        assert_eq!(run_experiment(&cfg, Some(workers)).unwrap(), serial, "workers = {workers}");
    }
}

#[test]
fn stats_have_one_row_per_step_and_ordered_percentiles() {
    let cfg = mean_reverting(StrategyKind::Chasing, 1_000, 10);
    let s = run_experiment(&cfg, None).unwrap();
    assert_eq!(s.len(), 1_001);
    for i in 0..s.len() {
        assert!(s.p10[i] <= s.p50[i] && s.p50[i] <= s.p90[i]);
        assert!(s.p10[i] > 0.0);
    }
    assert_eq!(s.mean[0], cfg.l0);
}

#[test]
fn retained_paths_stay_positive() {
    let cfg = mean_reverting(StrategyKind::Gated, 5_000, 10);
    for outcome in run_rounds(&cfg, None).unwrap() {
        assert!(outcome.is_completed());
        assert!(outcome.liquidity.iter().all(|&l| l > 0.0 && l.is_finite()));
    }
}

#[test]
fn exogenous_spread_shrinks_with_dt() {
    let cv = |dt_minutes: f64| {
        let outcomes = run_rounds(&exogenous(dt_minutes, 0.01, 40), None).unwrap();
        let ends: Vec<f64> = outcomes.iter().map(|o| *o.liquidity.last().unwrap()).collect();
        let n = ends.len() as f64;
        let mean = ends.iter().sum::<f64>() / n;
        let var = ends.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / mean
    };
    let (coarse, mid, fine) = (cv(4.0), cv(1.0), cv(0.25));
    assert!(coarse > mid && mid > fine, "{coarse} {mid} {fine}");
}

#[test]
fn aborted_rounds_are_counted_and_excluded() {
    // one-minute moves near 3 sd overrun the range for alpha = 1.2
    let cfg = ExperimentConfig {
        model: Model::Exogenous,
        gbm: GbmParams { mu: 0.0, sigma: 200.0 },
        grid: SimGrid::from_minutes(1.0, 400).unwrap(),
        rounds: 30,
        alpha: 1.2,
        base_seed: 2,
        ..ExperimentConfig::desk_default()
    };
    let outcomes = run_rounds(&cfg, None).unwrap();
    let aborted = outcomes.iter().filter(|o| !o.is_completed()).count() as u64;
    assert!(aborted > 0 && aborted < 30, "aborted {aborted}");
    let stats = run_experiment(&cfg, None).unwrap();
    assert_eq!(stats.total_aborted(), aborted);
    assert!(stats.aborted.windows(2).all(|w| w[0] <= w[1]));
    assert!(stats.total_band_violations() > 0);
}

#[test]
fn all_rounds_aborting_is_an_error() {
    let cfg = ExperimentConfig {
        model: Model::Exogenous,
        gbm: GbmParams { mu: 0.0, sigma: 400.0 },
        grid: SimGrid::from_minutes(1.0, 400).unwrap(),
        rounds: 5,
        alpha: 1.01,
        ..ExperimentConfig::desk_default()
    };
    assert!(matches!(
        run_experiment(&cfg, None),
        Err(RunError::Core(Error::AllPathsAborted { rounds: 5 }))
    ));
}

#[test]
fn three_steps_give_four_rows() {
    let cfg = mean_reverting(StrategyKind::Chasing, 3, 4);
    let stats = run_experiment(&cfg, None).unwrap();
    let mut buf = Vec::new();
    write_stats(&stats, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "step,t_years,mean_L,p10_L,p50_L,p90_L,aborted,band_violations");
    assert!(lines[4].starts_with("3,"));
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
}

#[test]
fn export_then_import_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stats.csv");
    for strategy in [StrategyKind::Chasing, StrategyKind::Gated] {
        let stats = run_experiment(&mean_reverting(strategy, 500, 7), None).unwrap();
        export_stats(&stats, &path).unwrap();
        assert_eq!(import_stats(&path).unwrap(), stats);
    }
}

#[test]
fn empty_stats_round_trip_as_header_only() {
    let mut buf = Vec::new();
    write_stats(&TrajectoryStats::default(), &mut buf).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
    assert_eq!(read_stats(buf.as_slice()).unwrap(), TrajectoryStats::default());
}

#[test]
fn printed_values_carry_seventeen_digits() {
    let stats = run_experiment(&mean_reverting(StrategyKind::Chasing, 2, 2), None).unwrap();
    let mut buf = Vec::new();
    write_stats(&stats, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    let mantissa = row[2].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{}", row[2]);
}
