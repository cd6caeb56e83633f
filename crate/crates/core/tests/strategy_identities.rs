use proptest::prelude::*;
use rangelp_core::strategy::{
    chasing_update, f_delta, gated_update, safe_interval_approx, safe_interval_exact, self_financing_residual,
    theorem2_coeffs, theorem2_coeffs_ratio,
};
use rangelp_core::{ChasingConfig, GateConfig, MeanRevParams, Price};

fn price(v: f64) -> Price {
    Price::new(v).unwrap()
}

/// `(l, z, z', p', α)` with moves small enough for the liquidity to stay positive.
fn step() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (1e-2f64..1e6, 1e-2f64..1e5, -0.02f64..0.02, -0.03f64..0.03, 1.01f64..2.0)
        .prop_map(|(l, z, dz, dp, alpha)| (l, z, z * (1.0 + dz), z * (1.0 + dz) * (1.0 + dp), alpha))
}

fn mr_params() -> impl Strategy<Value = MeanRevParams> {
    (1.0f64..1e4, 1e-3f64..3.0).prop_map(|(theta, gamma)| MeanRevParams::new(theta, gamma).unwrap())
}

proptest! {
    #[test]
    fn chasing_is_self_financing((l, z, zn, pn, alpha) in step()) {
        let cfg = ChasingConfig::new(alpha).unwrap();
        let next = chasing_update(l, price(z), price(zn), price(pn), &cfg).unwrap();
        let r = self_financing_residual(l, next, price(z), price(zn), price(pn), &cfg);
        prop_assert!(r.abs() <= 1e-9 * l * z.sqrt(), "residual {r}");
    }

    #[test]
    fn chasing_is_linear_in_liquidity((l, z, zn, pn, alpha) in step(), k in 1e-3f64..1e3) {
        let cfg = ChasingConfig::new(alpha).unwrap();
        let one = chasing_update(l, price(z), price(zn), price(pn), &cfg).unwrap();
        let scaled = chasing_update(k * l, price(z), price(zn), price(pn), &cfg).unwrap();
        prop_assert!((scaled - k * one).abs() <= 1e-12 * k * one);
    }

    #[test]
    fn chasing_ignores_price_units((l, z, zn, pn, alpha) in step(), c in 1e-3f64..1e3) {
        let cfg = ChasingConfig::new(alpha).unwrap();
        let base = chasing_update(l, price(z), price(zn), price(pn), &cfg).unwrap();
        let moved = chasing_update(l, price(c * z), price(c * zn), price(c * pn), &cfg).unwrap();
        prop_assert!((moved - base).abs() <= 1e-9 * base, "{moved} vs {base}");
    }

    #[test]
    fn gated_arbitrage_rescales_the_chasing_step((l, z, zn, pn, alpha) in step()) {
        let gate = GateConfig::new(alpha, -1e-9, 1e-9).unwrap();
        let s = gated_update(l, price(z), price(zn), price(pn), &gate).unwrap();
        prop_assume!(s.arbitraged);
        let chased = chasing_update(l, price(z), price(zn), price(pn), gate.chasing()).unwrap();
        let gain = (pn / zn.sqrt() + zn.sqrt()) / (2.0 * pn.sqrt());
        prop_assert!(gain >= 1.0);
        prop_assert!((s.liquidity - chased * gain).abs() <= 1e-12 * s.liquidity.max(1e-300));
        prop_assert!(s.liquidity >= chased);
        prop_assert_eq!(s.z_effective, price(pn));
    }

    #[test]
    fn gate_changes_sign_at_the_roots(params in mr_params()) {
        let (dl, dr) = safe_interval_exact(&params).unwrap();
        prop_assert!(-1.0 < dl && dl < 0.0 && dr > 0.0);
        let h = 1e-6 * dl.abs().min(dr).clamp(1e-12, 1.0);
        prop_assert!(f_delta(dl - h, &params) < 0.0);
        prop_assert!(f_delta(dl + h, &params) > 0.0);
        prop_assert!(f_delta(dr - h, &params) > 0.0);
        prop_assert!(f_delta(dr + h, &params) < 0.0);
        prop_assert!(f_delta(0.0, &params) > 0.0);
    }

    #[test]
    fn approximate_interval_is_close_when_gamma_is_small(theta in 10.0f64..1e4, ratio in 1e-8f64..1e-2) {
        // the cubic term shifts each root by about γ²/(8θ)
        let gamma = (ratio * theta).sqrt();
        let params = MeanRevParams::new(theta, gamma).unwrap();
        let (el, er) = safe_interval_exact(&params).unwrap();
        let (al, ar) = safe_interval_approx(&params);
        let bound = gamma * gamma / (4.0 * theta);
        prop_assert!((el - al).abs() <= bound, "left {el} vs {al}, bound {bound}");
        prop_assert!((er - ar).abs() <= bound, "right {er} vs {ar}, bound {bound}");
    }

    #[test]
    fn drift_is_positive_exactly_inside_the_interval(params in mr_params(), t in -0.9f64..0.5, alpha in 1.01f64..2.0) {
        let (dl, dr) = safe_interval_exact(&params).unwrap();
        let z = price(100.0);
        let p = price(100.0 * (1.0 + t));
        let c = theorem2_coeffs(p, z, &params, alpha);
        let margin = 1e-9;
        if t > dl + margin && t < dr - margin {
            prop_assert!(c.drift > 0.0);
        } else if t < dl - margin || t > dr + margin {
            prop_assert!(c.drift < 0.0);
        }
    }
}

/// Scale of the terms summed in each form, for a conditioning-aware comparison.
fn drift_scale(rho: f64, theta: f64, g2: f64, alpha: f64) -> f64 {
    let terms = g2 / 8.0 * rho * rho + 0.75 * g2 * rho + 0.375 * g2 + 0.5 * (1.0 + rho * rho) * theta * (rho + 1.0);
    terms / ((1.0 + rho) * (1.0 + rho) * (alpha.sqrt() - 1.0))
}

#[test]
fn deviation_and_ratio_forms_agree() {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..100 {
        for j in 0..100 {
            let delta = -0.5 + 1.5 * (i as f64 + 0.5) / 100.0;
            let u = (j as f64 + 0.5) / 100.0;
            let theta = 10f64.powf(-1.0 + 5.0 * u);
            let gamma = 0.01 + 2.0 * (1.0 - u) * u;
            let alpha = 1.01 + 0.99 * ((i * 7 + j * 13) % 100) as f64 / 100.0;
            let params = MeanRevParams::new(theta, gamma).unwrap();
            let z = price(1.0 + j as f64);
            let p = price(z.get() * (1.0 + delta));
            let a = theorem2_coeffs(p, z, &params, alpha);
            let b = theorem2_coeffs_ratio(p, z, &params, alpha);
            let rho = p.get() / z.get();
            let scale = drift_scale(rho, theta, gamma * gamma, alpha);
            let err = (a.drift - b.drift).abs() / scale;
            worst = worst.max(err);
            assert!(err < 1e-12, "drift at delta={delta} theta={theta}: {} vs {}", a.drift, b.drift);
            let dscale = a.diffusion.abs().max(1e-300);
            assert!(
                (a.diffusion - b.diffusion).abs() <= 1e-12 * dscale,
                "diffusion at delta={delta}: {} vs {}",
                a.diffusion,
                b.diffusion
            );
            count += 1;
        }
    }
    assert_eq!(count, 10_000);
    assert!(worst < 1e-12);
}

#[test]
fn calibrated_interval_values() {
    let params = MeanRevParams::new(1058.49, 0.68).unwrap();
    let (l, r) = safe_interval_exact(&params).unwrap();
    assert!((l - -0.0146154812691988).abs() < 1e-14);
    assert!((r - 0.0149430939573486).abs() < 1e-14);
    let (al, ar) = safe_interval_approx(&params);
    assert!((al - -0.014560762331138).abs() < 1e-14);
    assert!((ar - 0.014997611049595426).abs() < 1e-14);
}

#[test]
fn exact_interval_undefined_without_noise() {
    let params = MeanRevParams::new(1058.49, 0.0).unwrap();
    assert!(safe_interval_exact(&params).is_err());
}
