use mosum::brownian::{
    bcp_sloped, discretized_bcp, drift_survival_cdf, survival_density, SlopedBoundary,
};
use mosum::mc::replication_normals;
use mosum::quadrature::integrate;
use proptest::prelude::*;

fn boundary(a: f64, b: f64, r: f64) -> SlopedBoundary {
    SlopedBoundary::new(a, b, r).unwrap()
}

/// Monte Carlo mean and standard error of `f` over `n` replications.
fn mc<F: Fn(u64) -> f64>(n: u64, f: F) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for r in 0..n {
        let x = f(r);
        s += x;
        s2 += x * x;
    }
    let nf = n as f64;
    let mean = s / nf;
    (mean, ((s2 / nf - mean * mean) / nf).sqrt())
}

/// Conditional probability that a Brownian path with grid values `w` at
/// spacing `dt` stays below `line(t)`, using the bridge crossing law between
/// grid points (exact for straight lines).
fn bridge_survival(w: &[f64], dt: f64, line: impl Fn(f64) -> f64) -> f64 {
    let mut surv = 1.0;
    let mut gap_prev = line(0.0);
    for (k, &x) in w.iter().enumerate() {
        let gap = line((k + 1) as f64 * dt) - x;
        if gap <= 0.0 {
            return 0.0;
        }
        surv *= -(-2.0 * gap_prev * gap / dt).exp_m1();
        gap_prev = gap;
    }
    surv
}

fn brownian_grid(seed: u64, rep: u64, steps: usize, dt: f64, drift: f64) -> Vec<f64> {
    let mut w = 0.0;
    replication_normals(seed, rep, steps)
        .into_iter()
        .map(|z| {
            w += drift * dt + z * dt.sqrt();
            w
        })
        .collect()
}

#[test]
fn sloped_crossing_matches_path_simulation() {
    for (a, b, r) in [(1.0, 0.0, 1.0), (0.5, 0.5, 1.0), (0.8, -0.3, 2.0)] {
        let steps = 50;
        let dt = r / steps as f64;
        let (p, se) = mc(100_000, |rep| {
            let w = brownian_grid(11, rep, steps, dt, 0.0);
            1.0 - bridge_survival(&w, dt, |t| a + b * t)
        });
        let exact = bcp_sloped(&boundary(a, b, r));
        assert!(
            (p - exact).abs() < 3.0 * se,
            "({a}, {b}, {r}): {p} ± {se} vs {exact}"
        );
    }
}

#[test]
fn drift_survival_matches_path_simulation() {
    let (z, y, r, mu) = (0.3, 1.0, 1.0, 0.2);
    let steps = 50;
    let dt = r / steps as f64;
    let (p, se) = mc(100_000, |rep| {
        let w = brownian_grid(12, rep, steps, dt, mu);
        if w[steps - 1] <= z {
            bridge_survival(&w, dt, |_| y)
        } else {
            0.0
        }
    });
    let exact = drift_survival_cdf(z, y, r, mu).unwrap();
    assert!((p - exact).abs() < 3.0 * se, "{p} ± {se} vs {exact}");
}

#[test]
fn drift_survival_and_crossing_are_complementary() {
    for (y, r, mu) in [
        (1.0, 1.0, 0.0),
        (0.4, 2.5, 0.7),
        (2.0, 0.3, -1.2),
        (0.1, 5.0, 0.05),
    ] {
        let total = drift_survival_cdf(f64::INFINITY, y, r, mu).unwrap();
        let cross = bcp_sloped(&boundary(y, -mu, r));
        assert!((total + cross - 1.0).abs() < 1e-12);
    }
    assert!(
        (drift_survival_cdf(f64::INFINITY, 1.0, 1.0, 0.0).unwrap() - 0.682_689_492_137_086).abs()
            < 1e-12
    );
    assert_eq!(
        drift_survival_cdf(f64::NEG_INFINITY, 1.0, 1.0, 0.3).unwrap(),
        0.0
    );
    assert!(drift_survival_cdf(0.0, 0.0, 1.0, 0.0).is_err());
}

#[test]
fn grid_observed_crossing_matches_grid_simulation() {
    // Brownian motion seen at t = k/M, k = 1..M, against the level 1. The
    // overshoot correction leaves an O(1/M) error, visible at M = 10.
    for (steps, reps, rel) in [(10usize, 1_000_000u64, 0.03), (100, 200_000, 0.01)] {
        let dt = 1.0 / steps as f64;
        let (p, se) = mc(reps, |rep| {
            let w = brownian_grid(13, rep, steps, dt, 0.0);
            if w.iter().any(|&x| x >= 1.0) {
                1.0
            } else {
                0.0
            }
        });
        let approx = discretized_bcp(1.0, steps as u64, 1.0, 0.0).unwrap();
        eprintln!("grid crossing M = {steps}: MC {p} ± {se}, corrected {approx}");
        assert!(
            (p - approx).abs() < rel * p + 3.0 * se,
            "{p} ± {se} vs {approx}"
        );
        assert!(approx < bcp_sloped(&boundary(1.0, 0.0, 1.0)));
    }
}

#[test]
fn dense_grids_approach_the_continuous_limit() {
    let exact = bcp_sloped(&boundary(1.3, 0.4, 2.0));
    let fine = discretized_bcp(2.0, 100_000_000, 1.3, 0.4).unwrap();
    assert!(fine < exact && exact - fine < 1e-4);
}

fn triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..4.0, -2.0f64..2.0, 0.05f64..5.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn survival_density_integrates_to_survival((a, b, r) in triple()) {
        let bd = boundary(a, b, r);
        let top = bd.end();
        let lo = top.min(0.0) - 12.0 * r.sqrt();
        let mass = integrate(|x| survival_density(x, &bd), lo, top, 1e-12).unwrap();
        prop_assert!((mass + bcp_sloped(&bd) - 1.0).abs() < 1e-8, "mass {}", mass);
        prop_assert_eq!(survival_density(top + 0.1, &bd), 0.0);
    }
}

proptest! {
    #[test]
    fn crossing_is_monotone((a, b, r) in triple(), da in 0.0f64..1.0, db in 0.0f64..1.0, dr in 0.0f64..1.0) {
        let p = bcp_sloped(&boundary(a, b, r));
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(bcp_sloped(&boundary(a + da, b, r)) <= p + 1e-15);
        prop_assert!(bcp_sloped(&boundary(a, b + db, r)) <= p + 1e-15);
        prop_assert!(bcp_sloped(&boundary(a, b, r + dr)) >= p - 1e-15);
    }

    #[test]
    fn drift_survival_is_a_distribution_in_z(y in 0.05f64..3.0, r in 0.05f64..4.0, mu in -2.0f64..2.0, z in -5.0f64..3.0, dz in 0.0f64..1.0) {
        let f = drift_survival_cdf(z, y, r, mu).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(drift_survival_cdf(z + dz, y, r, mu).unwrap() >= f - 1e-15);
    }

    #[test]
    fn correction_lowers_the_crossing_probability((a, b, r) in triple(), steps in 1u64..10_000) {
        prop_assume!(b >= 0.0);
        let c = discretized_bcp(r, steps, a, b).unwrap();
        prop_assert!(c < bcp_sloped(&boundary(a, b, r)) || c == 0.0);
    }
}
