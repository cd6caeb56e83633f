//! Liquidity-provision strategies and their reference dynamics.
//!
//! A chasing LP holds liquidity `L` over `[Z/α, αZ]`. Each step it
//! withdraws, swaps at the CEX price `P'` so the trade has zero value, and
//! re-deposits over `[Z'/α, αZ']`. Self-financing fixes the new liquidity:
//!
//! ```text
//! L' = [ (P'/√Z' + √Z') − α^{-1/2} (P'/√Z + √Z) ] / (P'/√Z' + √Z') · L / (1 − α^{-1/2})
//! ```
//!
//! The gated strategy only follows this rule while the deviation
//! `δ' = (P' − Z')/Z'` stays inside a safe interval `(δ_l, δ_r)`; otherwise
//! it arbitrages the pool to `Z' = P'` and re-deposits around `P'`.

// inherent float methods win whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::amm::Price;
use crate::error::{Error, Result};
use crate::price::MeanRevParams;
use crate::roots::newton_bisect;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            requirement: "alpha must be > 1",
        })
    }
}

/// Range half-width factor of the chasing strategy: the range is `[Z/α, αZ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChasingConfig {
    alpha: f64,
    inv_sqrt_alpha: f64,
}

impl ChasingConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(ChasingConfig {
            alpha,
            inv_sqrt_alpha: alpha.sqrt().recip(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Range width plus the deviation band inside which no arbitrage is performed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    chasing: ChasingConfig,
    delta_l: f64,
    delta_r: f64,
}

impl GateConfig {
    pub fn new(alpha: f64, delta_l: f64, delta_r: f64) -> Result<Self> {
        let chasing = ChasingConfig::new(alpha)?;
        if !(delta_l > -1.0 && delta_l < 0.0) {
            return Err(Error::InvalidParameter {
                name: "delta_l",
                value: delta_l,
                requirement: "delta_l must lie in (-1, 0)",
            });
        }
        if !(delta_r > 0.0 && delta_r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "delta_r",
                value: delta_r,
                requirement: "delta_r must be finite and > 0",
            });
        }
        Ok(GateConfig {
            chasing,
            delta_l,
            delta_r,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.chasing.alpha
    }

    pub fn delta_l(&self) -> f64 {
        self.delta_l
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }

    pub fn chasing(&self) -> &ChasingConfig {
        &self.chasing
    }

    pub fn admits(&self, d: Deviation) -> bool {
        self.delta_l < d.0 && d.0 < self.delta_r
    }
}

/// Relative deviation `δ = (P − Z)/Z` of the CEX price from the AMM price.
/// Always `> −1` since both prices are positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Deviation(f64);

impl Deviation {
    pub fn between(p: Price, z: Price) -> Self {
        Deviation((p.get() - z.get()) / z.get())
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Coefficients of `dL/L = drift dt + diffusion dB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDiffusion {
    pub drift: f64,
    pub diffusion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatedStep {
    pub liquidity: f64,
    pub arbitraged: bool,
    /// AMM price after the step: `Z'` normally, `P'` after arbitrage.
    pub z_effective: Price,
}

fn negative(liquidity: f64, z: Price, z_next: Price, p_next: Price, value: f64) -> Error {
    Error::NegativeLiquidity {
        step: 0,
        liquidity,
        z: z.get(),
        z_next: z_next.get(),
        p_next: p_next.get(),
        value,
    }
}

/// `P'/√Z' + √Z' − α^{-1/2}(P'/√Z + √Z)`, the value (in Y per unit
/// liquidity) left after withdrawing and re-centering.
#[inline]
fn rebalance_numerator(z: Price, z_next: Price, p_next: Price, inv_sqrt_alpha: f64) -> (f64, f64) {
    let pn = p_next.get();
    let s_next = z_next.sqrt();
    let s = z.sqrt();
    let value_next = pn / s_next + s_next;
    (value_next - inv_sqrt_alpha * (pn / s + s), value_next)
}

/// One self-financing rebalance of the chasing strategy.
///
/// Fails with [`Error::NegativeLiquidity`] when the move was too large for
/// the range width (the new liquidity would be negative).
pub fn chasing_update(l: f64, z: Price, z_next: Price, p_next: Price, cfg: &ChasingConfig) -> Result<f64> {
    let a = cfg.inv_sqrt_alpha;
    let (num, value_next) = rebalance_numerator(z, z_next, p_next, a);
    let next = num / value_next * l / (1.0 - a);
    if next < 0.0 || !next.is_finite() {
        return Err(negative(l, z, z_next, p_next, next));
    }
    Ok(next)
}

/// One step of the arbitrage-gated strategy.
///
/// Inside the gate this is [`chasing_update`]. Outside, the pool is moved
/// to `P'` and the liquidity re-deposited around it, which replaces the
/// denominator `P'/√Z' + √Z'` by `2√P'`.
pub fn gated_update(l: f64, z: Price, z_next: Price, p_next: Price, cfg: &GateConfig) -> Result<GatedStep> {
    if cfg.admits(Deviation::between(p_next, z_next)) {
        return Ok(GatedStep {
            liquidity: chasing_update(l, z, z_next, p_next, &cfg.chasing)?,
            arbitraged: false,
            z_effective: z_next,
        });
    }
    let a = cfg.chasing.inv_sqrt_alpha;
    let (num, _) = rebalance_numerator(z, z_next, p_next, a);
    let next = num / (2.0 * p_next.sqrt()) * l / (1.0 - a);
    if next < 0.0 || !next.is_finite() {
        return Err(negative(l, z, z_next, p_next, next));
    }
    Ok(GatedStep {
        liquidity: next,
        arbitraged: true,
        z_effective: p_next,
    })
}

/// Decay rate `σ²/(8(√α − 1))` of chasing liquidity when `P = Z` is a GBM.
pub fn decay_rate(sigma: f64, alpha: f64) -> f64 {
    sigma * sigma / (8.0 * (alpha.sqrt() - 1.0))
}

/// `L_t = L_0 exp(−σ² t / (8(√α − 1)))`: chasing liquidity under the
/// exogenous GBM model, which is deterministic.
pub fn closed_form_decay(l0: f64, sigma: f64, alpha: f64, t: f64) -> f64 {
    l0 * (-decay_rate(sigma, alpha) * t).exp()
}

/// `f(δ) = −(θ/2)δ³ − (θ − γ²/8)δ² + γ²δ + γ²/2`, the numerator of the
/// liquidity drift under the mean-reverting model.
pub fn f_delta(delta: f64, params: &MeanRevParams) -> f64 {
    let (theta, g2) = (params.theta, params.gamma * params.gamma);
    // Horner
    ((-0.5 * theta * delta - (theta - 0.125 * g2)) * delta + g2) * delta + 0.5 * g2
}

fn f_delta_prime(delta: f64, params: &MeanRevParams) -> f64 {
    let (theta, g2) = (params.theta, params.gamma * params.gamma);
    (-1.5 * theta * delta - 2.0 * (theta - 0.125 * g2)) * delta + g2
}

/// The roots of `f` on either side of zero: `f > 0` exactly on `(δ_l, δ_r)`
/// within `(−1, ∞)`.
///
/// `f(−1) < 0 < f(0)` and `f → −∞` as `δ → ∞`, so each root is bracketed and
/// found by safeguarded Newton.
pub fn safe_interval_exact(params: &MeanRevParams) -> Result<(f64, f64)> {
    if !(params.gamma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: params.gamma,
            requirement: "gamma must be > 0 for a non-empty safe interval",
        });
    }
    let f = |d| f_delta(d, params);
    let df = |d| f_delta_prime(d, params);
    let left = newton_bisect(f, df, -1.0, 0.0)?;
    let mut hi = 1.0;
    while f(hi) >= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::RootBracket { lo: 0.0, hi });
        }
    }
    let right = newton_bisect(f, df, 0.0, hi)?;
    Ok((left, right))
}

/// Roots of the quadratic truncation `−θδ² + γ²δ + γ²/2`, valid for `γ² ≪ θ`:
/// `γ²/(2θ) ∓ γ/√(2θ)`.
pub fn safe_interval_approx(params: &MeanRevParams) -> (f64, f64) {
    let centre = params.gamma * params.gamma / (2.0 * params.theta);
    let half = params.gamma / (2.0 * params.theta).sqrt();
    (centre - half, centre + half)
}

/// AMM prices `Z` for which the deviation from `p` lies inside `(δ_l, δ_r)`:
/// `p/(1 + δ_r) < Z < p/(1 + δ_l)`.
pub fn price_band(p: Price, interval: (f64, f64)) -> (f64, f64) {
    (p.get() / (1.0 + interval.1), p.get() / (1.0 + interval.0))
}

/// Drift and diffusion of `dL/L` for the chasing strategy under the
/// mean-reverting model, written in the deviation `δ`:
///
/// ```text
/// drift     = f(δ) / ((√α − 1)(δ + 2)²)
/// diffusion = −γδ / (2(√α − 1)(δ + 2))
/// ```
pub fn theorem2_coeffs(p: Price, z: Price, params: &MeanRevParams, alpha: f64) -> DriftDiffusion {
    let d = Deviation::between(p, z).get();
    let k = alpha.sqrt() - 1.0;
    let shifted = d + 2.0;
    DriftDiffusion {
        drift: f_delta(d, params) / (k * shifted * shifted),
        diffusion: -params.gamma * d / (2.0 * k * shifted),
    }
}

/// The same coefficients written in the price ratio `ρ = P/Z`. Kept as an
/// independent route for cross-checking [`theorem2_coeffs`].
pub fn theorem2_coeffs_ratio(p: Price, z: Price, params: &MeanRevParams, alpha: f64) -> DriftDiffusion {
    let rho = p.get() / z.get();
    let (theta, gamma) = (params.theta, params.gamma);
    let g2 = gamma * gamma;
    let scale = (1.0 + rho) * (1.0 + rho) * (alpha.sqrt() - 1.0);
    let half_gap = 0.5 * (1.0 - rho * rho);
    let dt_part = g2 / 8.0 * rho * rho + 0.75 * g2 * rho - 0.375 * g2 + half_gap * theta * (rho - 1.0);
    DriftDiffusion {
        drift: dt_part / scale,
        diffusion: half_gap * gamma / scale,
    }
}

/// `δY + P'·δX` of a rebalance from `l` over `[Z/α, αZ]` to `l_next` over
/// `[Z'/α, αZ']`, where `(δX, δY)` is what the new deposit needs beyond the
/// withdrawn tokens. Zero iff the swap is self-financing at price `P'`.
///
/// Compare against `l·√Z` for a scale-free tolerance.
pub fn self_financing_residual(
    l: f64,
    l_next: f64,
    z: Price,
    z_next: Price,
    p_next: Price,
    cfg: &ChasingConfig,
) -> f64 {
    let a = cfg.inv_sqrt_alpha;
    let (s, s_next) = (z.sqrt(), z_next.sqrt());
    let withdrawn_x = l * (s_next.recip() - a / s);
    let withdrawn_y = l * (s_next - a * s);
    let deposit_x = l_next * (s_next.recip() - a / s_next);
    let deposit_y = l_next * (s_next - a * s_next);
    let dx = deposit_x - withdrawn_x;
    let dy = deposit_y - withdrawn_y;
    dy + p_next.get() * dx
}
