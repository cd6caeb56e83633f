//! Parameter estimators for the two price processes.
//!
//! `(μ, σ)` come from the unbiased moments of GBM log-returns; `(θ, γ)` from
//! the closed-form maximiser of the Euler–Maruyama Gaussian likelihood of
//! `Z` given `P`. All sums are compensated.

use alloc::vec::Vec;

// inherent float methods win whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::amm::Price;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Observations `(P_{t_i}, Z_{t_i})`, `i = 0..=N`, spaced `dt` years apart.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    p: Vec<Price>,
    z: Vec<Price>,
    dt: f64,
}

impl PairedSeries {
    pub fn new(p: Vec<Price>, z: Vec<Price>, dt: f64) -> Result<Self> {
        if p.len() != z.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: z.len(),
            });
        }
        if p.len() < 3 {
            return Err(Error::TooFewObservations {
                required: 3,
                got: p.len(),
            });
        }
        check_dt(dt)?;
        Ok(PairedSeries { p, z, dt })
    }

    pub fn from_values(p: &[f64], z: &[f64], dt: f64) -> Result<Self> {
        let conv = |v: &[f64]| v.iter().map(|&x| Price::new(x)).collect::<Result<Vec<_>>>();
        Self::new(conv(p)?, conv(z)?, dt)
    }

    pub fn p(&self) -> &[Price] {
        &self.p
    }

    pub fn z(&self) -> &[Price] {
        &self.z
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// All four estimates, per-year units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedParams {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub theta_hat: f64,
    pub gamma_hat: f64,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            requirement: "dt must be finite and > 0",
        })
    }
}

/// `(μ̂, σ̂)` from a GBM sample with spacing `dt`.
///
/// With `r_i = ln(P_{i+1}/P_i)` and `N` returns:
///
/// ```text
/// σ̂² = [Σr² − (Σr)²/N] / ((N − 1) dt)
/// μ̂  = Σr / (N dt) + σ̂²/2
/// ```
pub fn estimate_gbm(series: &[Price], dt: f64) -> Result<(f64, f64)> {
    if series.len() < 3 {
        return Err(Error::TooFewObservations {
            required: 3,
            got: series.len(),
        });
    }
    check_dt(dt)?;
    let n = (series.len() - 1) as f64;
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for w in series.windows(2) {
        let r = (w[1].get() / w[0].get()).ln();
        sum.add(r);
        sum_sq.add(r * r);
    }
    let (s1, s2) = (sum.value(), sum_sq.value());
    let var = ((s2 - s1 * s1 / n) / ((n - 1.0) * dt)).max(0.0);
    Ok((s1 / (n * dt) + 0.5 * var, var.sqrt()))
}

/// `estimate_gbm` on raw values, rejecting non-positive prices.
pub fn estimate_gbm_values(series: &[f64], dt: f64) -> Result<(f64, f64)> {
    let prices = series.iter().map(|&v| Price::new(v)).collect::<Result<Vec<_>>>()?;
    estimate_gbm(&prices, dt)
}

/// `(θ̂, γ̂)` maximising the Euler–Maruyama likelihood of `Z` given `P`.
///
/// With `u_i = (Z_{i+1} − Z_i)/Z_i` and `v_i = (P_i − Z_i)/Z_i`:
///
/// ```text
/// θ̂  = Σuv / (dt Σv²)
/// γ̂² = [Σu² Σv² − (Σuv)²] / (N dt Σv²)
/// ```
///
/// `γ̂² ≥ 0` by Cauchy–Schwarz; rounding can only push it below zero by a
/// few ulps, which is clamped.
pub fn estimate_mr(series: &PairedSeries) -> Result<(f64, f64)> {
    let n = (series.len() - 1) as f64;
    let mut suv = CompensatedSum::default();
    let mut suu = CompensatedSum::default();
    let mut svv = CompensatedSum::default();
    for i in 0..series.len() - 1 {
        let z = series.z[i].get();
        let u = (series.z[i + 1].get() - z) / z;
        let v = (series.p[i].get() - z) / z;
        suv.add(u * v);
        suu.add(u * u);
        svv.add(v * v);
    }
    let (suv, suu, svv) = (suv.value(), suu.value(), svv.value());
    if !(svv > 0.0) {
        return Err(Error::DegenerateDeviation);
    }
    let dt = series.dt;
    let theta = suv / (dt * svv);
    let gamma_sq = ((suu * svv - suv * suv) / (n * dt * svv)).max(0.0);
    Ok((theta, gamma_sq.sqrt()))
}

/// All four estimates from one paired series.
pub fn estimate_all(series: &PairedSeries) -> Result<EstimatedParams> {
    let (mu_hat, sigma_hat) = estimate_gbm(&series.p, series.dt)?;
    let (theta_hat, gamma_hat) = estimate_mr(series)?;
    Ok(EstimatedParams {
        mu_hat,
        sigma_hat,
        theta_hat,
        gamma_hat,
    })
}
