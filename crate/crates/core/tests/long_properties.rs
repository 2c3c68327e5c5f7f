use mosum::arl::glaz_bcp_from;
use mosum::brownian::{bcp_sloped, rho_for_steps, SlopedBoundary};
use mosum::long::{
    cda_bcp_long, kernel, kernel_v, lambda_hat, lambda_quadrature, DensityIterates, KernelSpec,
};
use mosum::quadrature::integrate;
use mosum::short::cda_window_explicit_with;
use proptest::prelude::*;

proptest! {
    #[test]
    fn uncorrected_kernel_is_the_unit_lag_kernel(h in -2.0f64..4.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        // x, x0 spread over (h − 6, h).
        let (x, x0) = (h - 6.0 * u, h - 6.0 * v);
        prop_assume!(x < h && x0 < h);
        let spec = KernelSpec::new(h, 0.0).unwrap();
        let k = kernel(x, x0, &spec);
        let phi = mosum::normal::pdf(x);
        let closed = phi * (1.0 - (-(h - x) * (h - x0)).exp());
        // The oracle loses absolute precision ε φ(x) in 1 − e^{−s} for small s.
        prop_assert!((k - closed).abs() <= 4.0 * f64::EPSILON * phi);
        let kv = kernel_v(x, x0, h, 1.0).unwrap();
        prop_assert!((kv - k).abs() < 1e-12);
    }

    #[test]
    fn kernel_vanishes_at_and_above_the_barrier(h in -2.0f64..4.0, dx in 0.0f64..3.0, x0 in -5.0f64..4.0, d in 0.0f64..1.0) {
        let spec = KernelSpec::new(h, d).unwrap();
        prop_assert_eq!(kernel(h + dx, x0, &spec), 0.0);
    }
}

#[test]
fn general_kernel_mass_is_a_brownian_survival() {
    let (h, x0, v) = (2.0, 0.0, 0.5);
    let mass = integrate(|x| kernel_v(x, x0, h, v).unwrap(), -15.0, h, 1e-13).unwrap();
    let u = v / (2.0 - v);
    let cross = bcp_sloped(&SlopedBoundary::new(0.5 * (h - x0), 0.5 * (h + x0), u).unwrap());
    assert!((mass - (1.0 - cross)).abs() < 1e-8);
    assert!(kernel_v(0.0, 0.0, 2.0, 0.0).is_err());
    assert!(kernel_v(0.0, 0.0, 2.0, 1.5).is_err());
}

#[test]
fn iterates_are_normalised_densities() {
    let spec = KernelSpec::for_window(2.0, 10).unwrap();
    assert!((spec.delta - 0.184_232).abs() < 1e-5);
    let it = DensityIterates::new(spec);
    let c1 = integrate(|x| it.p1_tilde(x), -14.0, 2.0, 1e-13).unwrap();
    assert!((c1 - it.c1).abs() < 1e-9);
    assert!(it.c1 > 0.0 && it.c1 < 1.0);
    let m0 = integrate(|x| it.p0(x), -14.0, 2.0, 1e-13).unwrap();
    let m1 = integrate(|x| it.p1(x), -14.0, 2.0, 1e-13).unwrap();
    assert!((m0 - 1.0).abs() < 1e-9 && (m1 - 1.0).abs() < 1e-9);
    let c2 = it.c2().unwrap();
    assert!(c2 > 0.0 && c2 < 1.0);
    let lambda = lambda_quadrature(2.0, spec.delta, 400, 10.0)
        .unwrap()
        .lambda;
    assert!(
        (c2 / lambda - 1.0).abs() < 1e-3,
        "c2 = {c2}, lambda = {lambda}"
    );
    assert!(it.p1(2.0) == 0.0 && it.p2_tilde(2.5) == 0.0);
}

#[test]
fn quadrature_eigenvalue_is_converged_at_the_defaults() {
    for l in [10usize, 50] {
        let d = rho_for_steps(l as f64);
        for i in 0..8 {
            let h = 0.5 + 0.5 * i as f64;
            let base = lambda_quadrature(h, d, 400, 10.0).unwrap();
            let dense = lambda_quadrature(h, d, 800, 10.0).unwrap().lambda;
            let wide = lambda_quadrature(h, d, 400, 20.0).unwrap().lambda;
            assert!((base.lambda - dense).abs() < 1e-9, "h = {h} L = {l}: N");
            assert!((base.lambda - wide).abs() < 1e-9, "h = {h} L = {l}: C");
            assert!(base.lambda > 0.0 && base.lambda < 1.0);
            assert!(base.eigenfunction.iter().all(|&p| p > 0.0));
            let mass: f64 = base
                .eigenfunction
                .iter()
                .zip(&base.weights)
                .map(|(p, w)| p * w)
                .sum();
            assert!((mass - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn correction_raises_the_eigenvalue() {
    let d = rho_for_steps(10.0);
    for i in 0..=30 {
        let h = 1.0 + 0.1 * i as f64;
        let corrected = lambda_quadrature(h, d, 400, 10.0).unwrap().lambda;
        let plain = lambda_quadrature(h, 0.0, 400, 10.0).unwrap().lambda;
        assert!(corrected > plain, "h = {h}");
    }
}

#[test]
fn closed_form_eigenvalue_tracks_quadrature_at_moderate_thresholds() {
    // The approximant is within 1e-3 from h ≈ 1.6 upwards; see the guide for
    // the gap at lower thresholds.
    let d = rho_for_steps(10.0);
    for i in 0..=24 {
        let h = 1.6 + 0.1 * i as f64;
        let q = lambda_quadrature(h, d, 400, 10.0).unwrap().lambda;
        let c = lambda_hat(h, d).unwrap();
        assert!((c / q - 1.0).abs() < 1e-3, "h = {h}: {c} vs {q}");
    }
    let plain = lambda_quadrature(2.0, 0.0, 400, 10.0).unwrap().lambda;
    assert!((lambda_hat(2.0, 1e-6).unwrap() / plain - 1.0).abs() < 1e-3);
    assert!((lambda_hat(40.0, 0.1).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn closed_form_eigenvalue_rejects_the_singular_point() {
    assert!(lambda_hat(-0.2, 0.1).is_err());
    assert!(lambda_hat(1.0, -0.1).is_err());
}

#[test]
fn long_cda_is_the_glaz_form_with_model_inputs() {
    for l in [10usize, 50] {
        let d = rho_for_steps(l as f64);
        for m in [2 * l, 5 * l, 50 * l] {
            let t = m as f64 / l as f64;
            for h in [1.5, 2.0, 2.5, 3.0, 3.5] {
                let one = cda_window_explicit_with(h, d / t.powf(0.25));
                let lambda = lambda_hat(h, d).unwrap();
                // 1 − P(2L) ↔ (1 − P_γ) λ̂ and (1 − P(2L)) / (1 − P(L)) ↔ λ̂.
                let q2 = (1.0 - one) * lambda;
                let q1 = q2 / lambda;
                let glaz = glaz_bcp_from(1.0 - q1, 1.0 - q2, t).unwrap();
                let cda = cda_bcp_long(h, m, l).unwrap();
                assert!((glaz - cda).abs() < 1e-13, "h = {h} L = {l} M = {m}");
            }
        }
    }
}

#[test]
fn long_cda_grid_properties() {
    for l in [10usize, 50] {
        let mut prev_h = vec![f64::INFINITY; 40];
        for i in 0..=24 {
            let h = -1.0 + 0.25 * i as f64;
            let mut prev_m = 0.0;
            for (k, m) in (l + 1..=40 * l).step_by(l).enumerate() {
                let p = cda_bcp_long(h, m, l).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!(p >= prev_m - 1e-12, "M: h = {h} L = {l} M = {m}");
                assert!(p <= prev_h[k] + 1e-12, "h: h = {h} L = {l} M = {m}");
                prev_m = p;
                prev_h[k] = p;
            }
        }
    }
}
