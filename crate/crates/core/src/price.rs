//! Seeded price generators.
//!
//! The CEX price `P` follows a GBM, stepped with its exact log-space
//! solution. The AMM price `Z` mean-reverts to `P`,
//! `dZ = θ(P − Z)dt + γZ dB`, and is stepped with Euler–Maruyama. `W` and
//! `B` are independent.
//!
//! Randomness is organised as one ChaCha8 stream per (round, component):
//! the stream id is `round << 2 | component`, so draw `i` of component `c`
//! in round `r` is fixed by `(seed, r, c, i)` alone and rounds can be
//! generated in any order or in parallel.

use alloc::vec::Vec;

// inherent float methods win whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::amm::Price;
use crate::error::{Error, Result};

pub const MINUTES_PER_YEAR: f64 = 525_600.0;

/// `dP = μP dt + σP dW`, rates per year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GbmParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                requirement: "mu must be finite",
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                requirement: "sigma must be finite and >= 0",
            });
        }
        Ok(GbmParams { mu, sigma })
    }
}

/// `dZ = θ(P − Z)dt + γZ dB`, rates per year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRevParams {
    pub theta: f64,
    pub gamma: f64,
}

impl MeanRevParams {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                requirement: "theta must be finite and > 0",
            });
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                requirement: "gamma must be finite and >= 0",
            });
        }
        Ok(MeanRevParams { theta, gamma })
    }
}

/// Uniform time grid; `dt` in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl SimGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                requirement: "dt must be finite and > 0",
            });
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                value: 0.0,
                requirement: "n_steps must be >= 1",
            });
        }
        Ok(SimGrid { dt, n_steps })
    }

    pub fn from_minutes(minutes: f64, n_steps: usize) -> Result<Self> {
        Self::new(minutes / MINUTES_PER_YEAR, n_steps)
    }

    /// Grid covering `horizon` years, rounding the step count to the nearest integer.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        let n = (horizon / dt).round();
        Self::new(dt, if n >= 1.0 { n as usize } else { 0 })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        self.dt * step as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointPath {
    pub p: Vec<Price>,
    pub z: Vec<Price>,
    pub grid: SimGrid,
}

/// Exact GBM step: `P' = P exp((μ − σ²/2)dt + σ√dt ε)`.
pub fn gbm_step(p: Price, params: &GbmParams, dt: f64, noise: f64) -> Price {
    let exponent = (params.mu - 0.5 * params.sigma * params.sigma) * dt + params.sigma * dt.sqrt() * noise;
    let next = p.get() * exponent.exp();
    // exp underflow/overflow is the only way out of (0, ∞)
    Price::new(next).unwrap_or(if next > 0.0 { Price(f64::MAX) } else { Price(f64::MIN_POSITIVE) })
}

/// Euler–Maruyama step of the mean-reverting AMM price.
///
/// Fails with [`Error::DegenerateStep`] (step index 0) instead of clamping
/// when the step would leave the positive axis.
pub fn mr_step(z: Price, p: Price, params: &MeanRevParams, dt: f64, noise: f64) -> Result<Price> {
    if params.theta * dt >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "theta*dt",
            value: params.theta * dt,
            requirement: "theta*dt must be < 1; refine the grid",
        });
    }
    let zv = z.get();
    let next = zv + params.theta * (p.get() - zv) * dt + params.gamma * zv * dt.sqrt() * noise;
    Price::new(next).map_err(|_| Error::DegenerateStep {
        step: 0,
        z: zv,
        p: p.get(),
        z_next: next,
    })
}

/// Brownian component a stream drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    /// `W`, driving the CEX price (or the single GBM of the exogenous model).
    Cex = 0,
    /// `B`, driving the AMM price.
    Amm = 1,
}

/// Standard-normal increments for one (seed, round, component).
///
/// With `substeps = k`, each call returns `(ε₁ + … + ε_k)/√k` from `k`
/// consecutive draws: the increment a grid `k` times coarser sees of the same
/// Brownian path.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    substeps: u32,
    scale: f64,
}

impl NoiseStream {
    pub fn new(seed: u64, round: u64, component: Component) -> Self {
        Self::with_substeps(seed, round, component, 1)
    }

    pub fn with_substeps(seed: u64, round: u64, component: Component, substeps: u32) -> Self {
        let substeps = substeps.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((round << 2) | component as u64);
        NoiseStream {
            rng,
            substeps,
            scale: (substeps as f64).sqrt().recip(),
        }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if self.substeps == 1 {
            return StandardNormal.sample(&mut self.rng);
        }
        let mut acc = 0.0;
        for _ in 0..self.substeps {
            let e: f64 = StandardNormal.sample(&mut self.rng);
            acc += e;
        }
        acc * self.scale
    }
}

/// The pair of streams one Monte Carlo round consumes.
#[derive(Debug, Clone)]
pub struct RoundNoise {
    pub cex: NoiseStream,
    pub amm: NoiseStream,
}

impl RoundNoise {
    pub fn new(seed: u64, round: u64, substeps: u32) -> Self {
        RoundNoise {
            cex: NoiseStream::with_substeps(seed, round, Component::Cex, substeps),
            amm: NoiseStream::with_substeps(seed, round, Component::Amm, substeps),
        }
    }
}

/// Joint (P, Z) path on `grid`: P from the exact GBM step, Z from the
/// Euler–Maruyama mean-reverting step, driven by independent streams.
pub fn joint_path(
    gbm: &GbmParams,
    mr: &MeanRevParams,
    grid: &SimGrid,
    p0: Price,
    z0: Price,
    seed: u64,
) -> Result<JointPath> {
    joint_path_with(gbm, mr, grid, p0, z0, &mut RoundNoise::new(seed, 0, 1))
}

pub fn joint_path_with(
    gbm: &GbmParams,
    mr: &MeanRevParams,
    grid: &SimGrid,
    p0: Price,
    z0: Price,
    noise: &mut RoundNoise,
) -> Result<JointPath> {
    let mut p = Vec::with_capacity(grid.n_steps + 1);
    let mut z = Vec::with_capacity(grid.n_steps + 1);
    p.push(p0);
    z.push(z0);
    let (mut pc, mut zc) = (p0, z0);
    for i in 0..grid.n_steps {
        let ew = noise.cex.next_normal();
        let eb = noise.amm.next_normal();
        // Z' uses P at the start of the step
        let zn = mr_step(zc, pc, mr, grid.dt, eb).map_err(|e| e.at_step(i + 1))?;
        pc = gbm_step(pc, gbm, grid.dt, ew);
        zc = zn;
        p.push(pc);
        z.push(zc);
    }
    Ok(JointPath { p, z, grid: *grid })
}

/// Exogenous model: one GBM drives the AMM price and `P = Z` throughout.
pub fn exogenous_path(gbm: &GbmParams, grid: &SimGrid, z0: Price, seed: u64) -> JointPath {
    let mut stream = NoiseStream::new(seed, 0, Component::Cex);
    let mut z = Vec::with_capacity(grid.n_steps + 1);
    z.push(z0);
    let mut zc = z0;
    for _ in 0..grid.n_steps {
        zc = gbm_step(zc, gbm, grid.dt, stream.next_normal());
        z.push(zc);
    }
    JointPath {
        p: z.clone(),
        z,
        grid: *grid,
    }
}

/// Whether `z_next` left the one-step band `[z/alpha, alpha*z]`.
#[inline]
pub fn violates_band(z: Price, z_next: Price, alpha: f64) -> bool {
    let (a, b) = (z.get(), z_next.get());
    b < a / alpha || b > a * alpha
}
