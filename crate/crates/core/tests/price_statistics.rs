use rangelp_core::price::{
    gbm_step, joint_path, joint_path_with, mr_step, violates_band, Component, NoiseStream, RoundNoise,
};
use rangelp_core::{GbmParams, MeanRevParams, Price, SimGrid};

fn calibrated() -> (GbmParams, MeanRevParams) {
    (GbmParams::new(-1.17, 0.75).unwrap(), MeanRevParams::new(1058.49, 0.68).unwrap())
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    cov / (va * vb).sqrt()
}

#[test]
fn component_streams_are_uncorrelated() {
    let n = 100_000;
    let mut w = NoiseStream::new(9, 3, Component::Cex);
    let mut b = NoiseStream::new(9, 3, Component::Amm);
    let ws: Vec<f64> = (0..n).map(|_| w.next_normal()).collect();
    let bs: Vec<f64> = (0..n).map(|_| b.next_normal()).collect();
    assert!(correlation(&ws, &bs).abs() < 0.02);
    let (m, v) = mean_var(&ws);
    assert!(m.abs() < 4.0 / (n as f64).sqrt());
    assert!((v - 1.0).abs() < 0.02);
}

#[test]
fn cex_and_amm_shocks_are_independent() {
    let (gbm, mr) = calibrated();
    let grid = SimGrid::from_minutes(1.0, 100_000).unwrap();
    let p0 = Price::new(2000.0).unwrap();
    let path = joint_path(&gbm, &mr, &grid, p0, p0, 11).unwrap();
    let dt = grid.dt;
    let mut log_p = Vec::with_capacity(grid.n_steps);
    let mut shock_z = Vec::with_capacity(grid.n_steps);
    for i in 0..grid.n_steps {
        let (p, pn) = (path.p[i].get(), path.p[i + 1].get());
        let (z, zn) = (path.z[i].get(), path.z[i + 1].get());
        log_p.push((pn / p).ln());
        // martingale part of the AMM step
        shock_z.push((zn - z - mr.theta * (p - z) * dt) / z);
    }
    assert!(correlation(&log_p, &shock_z).abs() < 0.02);
}

#[test]
fn gbm_log_returns_have_the_right_moments() {
    let (gbm, _) = calibrated();
    let dt = 1.0 / 525_600.0;
    let n = 100_000;
    let mut stream = NoiseStream::new(12, 0, Component::Cex);
    let mut p = Price::new(2000.0).unwrap();
    let mut returns = Vec::with_capacity(n);
    for _ in 0..n {
        let next = gbm_step(p, &gbm, dt, stream.next_normal());
        returns.push((next.get() / p.get()).ln());
        p = next;
    }
    let (m, v) = mean_var(&returns);
    let var = gbm.sigma * gbm.sigma * dt;
    assert!((v / var - 1.0).abs() < 0.05, "variance {v} vs {var}");
    let mean = (gbm.mu - 0.5 * gbm.sigma * gbm.sigma) * dt;
    let se = (var / n as f64).sqrt();
    assert!((m - mean).abs() < 4.0 * se, "mean {m} vs {mean}, se {se}");
}

#[test]
fn amm_step_has_the_right_conditional_moments() {
    let (_, mr) = calibrated();
    let dt = 1.0 / 525_600.0;
    let (z, p) = (Price::new(2000.0).unwrap(), Price::new(2030.0).unwrap());
    let mut stream = NoiseStream::new(13, 0, Component::Amm);
    let n = 100_000;
    let next: Vec<f64> = (0..n)
        .map(|_| mr_step(z, p, &mr, dt, stream.next_normal()).unwrap().get())
        .collect();
    let (m, v) = mean_var(&next);
    let var = (mr.gamma * z.get()).powi(2) * dt;
    assert!((v / var - 1.0).abs() < 0.05, "variance {v} vs {var}");
    let mean = z.get() + mr.theta * (p.get() - z.get()) * dt;
    let se = (var / n as f64).sqrt();
    assert!((m - mean).abs() < 4.0 * se, "mean {m} vs {mean}, se {se}");
}

#[test]
fn calibrated_moves_stay_inside_the_band() {
    let (gbm, mr) = calibrated();
    let grid = SimGrid::from_minutes(1.0, 35_280).unwrap();
    let p0 = Price::new(2000.0).unwrap();
    let (mut steps, mut violations) = (0u64, 0u64);
    for round in 0..30 {
        let mut noise = RoundNoise::new(5, round, 1);
        let path = joint_path_with(&gbm, &mr, &grid, p0, p0, &mut noise).unwrap();
        for w in path.z.windows(2) {
            steps += 1;
            violations += u64::from(violates_band(w[0], w[1], 1.1));
        }
    }
    assert!(steps > 1_000_000);
    assert!((violations as f64) / (steps as f64) < 1e-6);
}

#[test]
fn substeps_see_the_fine_brownian_path() {
    // one coarse step with two sub-draws equals two fine steps of zero drift
    let gbm = GbmParams::new(0.0, 0.5).unwrap();
    let dt = 1e-3;
    let mut coarse = NoiseStream::with_substeps(2, 0, Component::Cex, 2);
    let mut fine = NoiseStream::new(2, 0, Component::Cex);
    let p0 = Price::new(10.0).unwrap();
    let mut pc = p0;
    let mut pf = p0;
    for _ in 0..1000 {
        pc = gbm_step(pc, &gbm, 2.0 * dt, coarse.next_normal());
        pf = gbm_step(pf, &gbm, dt, fine.next_normal());
        pf = gbm_step(pf, &gbm, dt, fine.next_normal());
    }
    assert!((pc.get() / pf.get() - 1.0).abs() < 1e-12);
}
