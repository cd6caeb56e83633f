//! One Monte Carlo round of a liquidity strategy, and ensemble statistics.
//!
//! Rounds are independent: round `r` draws its noise from the streams of
//! `(base_seed, r)` only, so any scheduling of rounds over workers gives the
//! same ensemble. The `rangelp` crate runs rounds on a worker pool and feeds
//! the outcomes, in round order, to [`TrajectoryStats::from_rounds`].

use alloc::vec;
use alloc::vec::Vec;

// inherent float methods win whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::amm::Price;
use crate::error::{Error, Result};
use crate::price::{gbm_step, mr_step, violates_band, GbmParams, MeanRevParams, RoundNoise, SimGrid};
use crate::strategy::{
    chasing_update, closed_form_decay, gated_update, safe_interval_approx, safe_interval_exact, theorem2_coeffs,
    ChasingConfig, GateConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// `P = Z`, a single GBM.
    Exogenous,
    /// GBM CEX price, AMM price mean-reverting to it.
    MeanReverting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Chasing,
    Gated,
    /// Euler–Maruyama on the `dL/L` drift/diffusion, sharing the AMM noise.
    Theorem2Sde,
    /// Deterministic exponential decay of the exogenous model.
    ClosedForm,
}

/// Where the gated strategy's deviation band comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    Exact,
    Approx,
    Explicit { delta_l: f64, delta_r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub strategy: StrategyKind,
    pub gbm: GbmParams,
    /// Ignored by the exogenous model.
    pub mr: MeanRevParams,
    pub grid: SimGrid,
    pub rounds: usize,
    pub z0: Price,
    /// Initial CEX price of the mean-reverting model; equal to `z0` for the exogenous one.
    pub p0: Price,
    pub l0: f64,
    pub alpha: f64,
    pub base_seed: u64,
    pub gate: GateSpec,
    /// Each grid increment sums this many unit draws; `dt` with `k` sub-draws
    /// sees the same Brownian path as `dt/k` with one.
    pub noise_substeps: u32,
}

impl ExperimentConfig {
    /// Mean-reverting chasing experiment with the calibrated ETH-USDC
    /// parameters, initial price 2000, initial liquidity 1000, α = 1.1 and
    /// 100 rounds of 35280 one-minute steps.
    pub fn desk_default() -> Self {
        let p0 = Price::new(2000.0).expect("positive");
        ExperimentConfig {
            model: Model::MeanReverting,
            strategy: StrategyKind::Chasing,
            gbm: GbmParams { mu: -1.17, sigma: 0.75 },
            mr: MeanRevParams {
                theta: 1058.49,
                gamma: 0.68,
            },
            grid: SimGrid {
                dt: 1.0 / crate::price::MINUTES_PER_YEAR,
                n_steps: 35_280,
            },
            rounds: 100,
            z0: p0,
            p0,
            l0: 1000.0,
            alpha: 1.1,
            base_seed: 0,
            gate: GateSpec::Exact,
            noise_substeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ChasingConfig::new(self.alpha)?;
        GbmParams::new(self.gbm.mu, self.gbm.sigma)?;
        SimGrid::new(self.grid.dt, self.grid.n_steps)?;
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be >= 1"));
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(Error::InvalidConfig("initial liquidity must be finite and > 0"));
        }
        if self.noise_substeps == 0 {
            return Err(Error::InvalidConfig("noise_substeps must be >= 1"));
        }
        match (self.model, self.strategy) {
            (Model::Exogenous, StrategyKind::Theorem2Sde) => {
                return Err(Error::InvalidConfig(
                    "theorem2-sde needs the mean-reverting model; use closed-form for the exogenous one",
                ))
            }
            (Model::MeanReverting, StrategyKind::ClosedForm) => {
                return Err(Error::InvalidConfig("closed-form applies to the exogenous model only"))
            }
            _ => {}
        }
        if self.model == Model::MeanReverting {
            MeanRevParams::new(self.mr.theta, self.mr.gamma)?;
            if self.mr.theta * self.grid.dt >= 1.0 {
                return Err(Error::InvalidConfig("theta*dt must be < 1"));
            }
        }
        if self.strategy == StrategyKind::Gated {
            self.gate_config()?;
        }
        Ok(())
    }

    /// Resolve the gate band against the configured mean-reversion parameters.
    pub fn gate_config(&self) -> Result<GateConfig> {
        let (l, r) = match self.gate {
            GateSpec::Exact => safe_interval_exact(&self.mr)?,
            GateSpec::Approx => safe_interval_approx(&self.mr),
            GateSpec::Explicit { delta_l, delta_r } => (delta_l, delta_r),
        };
        GateConfig::new(self.alpha, l, r)
    }
}

/// How a round ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundEnd {
    Completed,
    /// The round hit a step-level error and was dropped from the ensemble.
    Aborted { step: usize, error: Error },
}

/// Liquidity trajectory of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    /// `L` at steps `0..=n` for a completed round; truncated at the failing step otherwise.
    pub liquidity: Vec<f64>,
    /// Steps `i` (1-based) where `Z_i` left `[Z_{i-1}/α, αZ_{i-1}]`.
    pub band_violations: Vec<u32>,
    /// Number of arbitrage resets (gated strategy only).
    pub arbitrages: u32,
    pub end: RoundEnd,
}

impl RoundOutcome {
    pub fn is_completed(&self) -> bool {
        self.end == RoundEnd::Completed
    }
}

fn step_error(e: &Error) -> usize {
    match e {
        Error::DegenerateStep { step, .. } | Error::NegativeLiquidity { step, .. } => *step,
        _ => 0,
    }
}

/// Advance the market by one step: `(P', Z'_raw)` before any strategy action.
#[inline]
fn market_step(cfg: &ExperimentConfig, noise: &mut RoundNoise, p: Price, z: Price) -> Result<(Price, Price, f64)> {
    let dt = cfg.grid.dt;
    match cfg.model {
        Model::Exogenous => {
            let zn = gbm_step(z, &cfg.gbm, dt, noise.cex.next_normal());
            Ok((zn, zn, 0.0))
        }
        Model::MeanReverting => {
            let ew = noise.cex.next_normal();
            let eb = noise.amm.next_normal();
            let zn = mr_step(z, p, &cfg.mr, dt, eb)?;
            Ok((gbm_step(p, &cfg.gbm, dt, ew), zn, eb))
        }
    }
}

/// Simulate round `round` of `cfg`. Step-level failures end the round with
/// [`RoundEnd::Aborted`]; only configuration errors are returned as `Err`.
pub fn simulate_round(cfg: &ExperimentConfig, round: u64) -> Result<RoundOutcome> {
    let n = cfg.grid.n_steps;
    let mut liquidity = Vec::with_capacity(n + 1);
    liquidity.push(cfg.l0);
    let mut band_violations = Vec::new();
    let mut arbitrages = 0;

    if cfg.strategy == StrategyKind::ClosedForm {
        liquidity.extend((1..=n).map(|i| closed_form_decay(cfg.l0, cfg.gbm.sigma, cfg.alpha, cfg.grid.time(i))));
        return Ok(RoundOutcome {
            liquidity,
            band_violations,
            arbitrages,
            end: RoundEnd::Completed,
        });
    }

    let chasing = ChasingConfig::new(cfg.alpha)?;
    let gate = match cfg.strategy {
        StrategyKind::Gated => Some(cfg.gate_config()?),
        _ => None,
    };
    let sqrt_dt = cfg.grid.dt.sqrt();
    let mut noise = RoundNoise::new(cfg.base_seed, round, cfg.noise_substeps);
    let (mut p, mut z) = match cfg.model {
        Model::Exogenous => (cfg.z0, cfg.z0),
        Model::MeanReverting => (cfg.p0, cfg.z0),
    };
    let mut l = cfg.l0;

    for i in 1..=n {
        let step = market_step(cfg, &mut noise, p, z).and_then(|(pn, zn, eb)| {
            if violates_band(z, zn, cfg.alpha) {
                band_violations.push(i as u32);
            }
            let (ln, z_eff) = match cfg.strategy {
                StrategyKind::Chasing => (chasing_update(l, z, zn, pn, &chasing)?, zn),
                StrategyKind::Gated => {
                    let s = gated_update(l, z, zn, pn, gate.as_ref().expect("gate resolved"))?;
                    if s.arbitraged {
                        arbitrages += 1;
                    }
                    (s.liquidity, s.z_effective)
                }
                StrategyKind::Theorem2Sde => {
                    let c = theorem2_coeffs(p, z, &cfg.mr, cfg.alpha);
                    let ln = l + c.drift * l * cfg.grid.dt + c.diffusion * l * sqrt_dt * eb;
                    if !(ln > 0.0 && ln.is_finite()) {
                        return Err(Error::NegativeLiquidity {
                            step: 0,
                            liquidity: l,
                            z: z.get(),
                            z_next: zn.get(),
                            p_next: pn.get(),
                            value: ln,
                        });
                    }
                    (ln, zn)
                }
                StrategyKind::ClosedForm => unreachable!("handled above"),
            };
            Ok((pn, z_eff, ln))
        });
        match step {
            Ok((pn, zn, ln)) => {
                p = pn;
                z = zn;
                l = ln;
                liquidity.push(l);
            }
            Err(e) => {
                let e = e.at_step(i);
                return Ok(RoundOutcome {
                    liquidity,
                    band_violations,
                    arbitrages,
                    end: RoundEnd::Aborted {
                        step: step_error(&e),
                        error: e,
                    },
                });
            }
        }
    }
    Ok(RoundOutcome {
        liquidity,
        band_violations,
        arbitrages,
        end: RoundEnd::Completed,
    })
}

/// Run the chasing strategy and the Euler–Maruyama reference on the same
/// mean-reverting path and return `max_i |L_chasing − L_sde| / L_chasing`.
/// `None` if either trajectory failed.
pub fn pathwise_round(cfg: &ExperimentConfig, round: u64) -> Result<Option<f64>> {
    if cfg.model != Model::MeanReverting || cfg.strategy != StrategyKind::Chasing {
        return Err(Error::InvalidConfig(
            "pathwise comparison needs the mean-reverting model and the chasing strategy",
        ));
    }
    let chasing = ChasingConfig::new(cfg.alpha)?;
    let dt = cfg.grid.dt;
    let sqrt_dt = dt.sqrt();
    let mut noise = RoundNoise::new(cfg.base_seed, round, cfg.noise_substeps);
    let (mut p, mut z) = (cfg.p0, cfg.z0);
    let (mut l, mut l_sde) = (cfg.l0, cfg.l0);
    let mut worst = 0.0f64;
    for _ in 0..cfg.grid.n_steps {
        let Ok((pn, zn, eb)) = market_step(cfg, &mut noise, p, z) else {
            return Ok(None);
        };
        let Ok(ln) = chasing_update(l, z, zn, pn, &chasing) else {
            return Ok(None);
        };
        let c = theorem2_coeffs(p, z, &cfg.mr, cfg.alpha);
        l_sde += c.drift * l_sde * dt + c.diffusion * l_sde * sqrt_dt * eb;
        if !(l_sde > 0.0) {
            return Ok(None);
        }
        l = ln;
        p = pn;
        z = zn;
        worst = worst.max((l - l_sde).abs() / l);
    }
    Ok(Some(worst))
}

/// Ensemble statistics of `L` per step over the completed rounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryStats {
    pub dt: f64,
    pub mean: Vec<f64>,
    pub p10: Vec<f64>,
    pub p50: Vec<f64>,
    pub p90: Vec<f64>,
    /// Rounds aborted at or before each step (cumulative).
    pub aborted: Vec<u64>,
    /// Rounds whose step into each row left the α-band.
    pub band_violations: Vec<u64>,
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl TrajectoryStats {
    /// Number of rows (`n_steps + 1` for a non-empty ensemble).
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn total_aborted(&self) -> u64 {
        self.aborted.last().copied().unwrap_or(0)
    }

    pub fn total_band_violations(&self) -> u64 {
        self.band_violations.iter().sum()
    }

    pub fn time(&self, step: usize) -> f64 {
        self.dt * step as f64
    }

    /// Aggregate outcomes of rounds `0..` in order. Aborted rounds are
    /// excluded from the mean and percentiles and counted instead.
    pub fn from_rounds(grid: &SimGrid, rounds: &[RoundOutcome]) -> Result<Self> {
        let rows = grid.n_steps + 1;
        let kept: Vec<&RoundOutcome> = rounds.iter().filter(|r| r.is_completed()).collect();
        if kept.is_empty() {
            return Err(Error::AllPathsAborted { rounds: rounds.len() });
        }
        if kept.iter().any(|r| r.liquidity.len() != rows) {
            return Err(Error::InvalidConfig("round length does not match the grid"));
        }

        let mut aborted = vec![0u64; rows];
        let mut band_violations = vec![0u64; rows];
        for r in rounds {
            if let RoundEnd::Aborted { step, .. } = r.end {
                for a in aborted.iter_mut().skip(step.min(rows - 1)) {
                    *a += 1;
                }
            }
            for &s in &r.band_violations {
                if let Some(b) = band_violations.get_mut(s as usize) {
                    *b += 1;
                }
            }
        }

        let mut stats = TrajectoryStats {
            dt: grid.dt,
            mean: Vec::with_capacity(rows),
            p10: Vec::with_capacity(rows),
            p50: Vec::with_capacity(rows),
            p90: Vec::with_capacity(rows),
            aborted,
            band_violations,
        };
        let mut column = Vec::with_capacity(kept.len());
        for i in 0..rows {
            column.clear();
            column.extend(kept.iter().map(|r| r.liquidity[i]));
            let mean = column.iter().sum::<f64>() / column.len() as f64;
            column.sort_unstable_by(|a, b| a.total_cmp(b));
            stats.mean.push(mean);
            stats.p10.push(quantile_sorted(&column, 0.1));
            stats.p50.push(quantile_sorted(&column, 0.5));
            stats.p90.push(quantile_sorted(&column, 0.9));
        }
        Ok(stats)
    }
}
