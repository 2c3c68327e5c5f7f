use mosum::bcp::{approximate, cda_bcp, diffusion_bcp, BcpMethod};
use mosum::long::{cda_bcp_long, diffusion_bcp_long};
use mosum::mc::{simulate_bcp, McConfig};
use mosum::model::ProcessSpec;
use mosum::short::{
    cda_bcp_short, cda_window_explicit, diffusion_bcp_short, diffusion_bcp_unit, durbin, pch,
    q_conditional,
};

fn h_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

const DETERMINISTIC: [BcpMethod; 4] = [
    BcpMethod::Durbin,
    BcpMethod::Pch,
    BcpMethod::Diffusion,
    BcpMethod::Cda,
];

const SHAPES: [(usize, usize); 8] = [
    (5, 5),
    (5, 10),
    (100, 100),
    (100, 200),
    (50, 10),
    (500, 10),
    (250, 50),
    (2500, 50),
];

#[test]
fn diffusion_and_cda_decrease_in_h() {
    for (m, l) in SHAPES {
        for method in [BcpMethod::Diffusion, BcpMethod::Cda] {
            let vals: Vec<f64> = h_grid(-1.0, 5.0, 0.25)
                .into_iter()
                .map(|h| approximate(method, h, m, l).unwrap().value)
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{method} M = {m} L = {l}: {w:?}");
            }
        }
    }
}

#[test]
fn tail_approximations_decrease_above_one() {
    // h φ(h) increases on (−1, 1), so Durbin and PCH only decrease for h ≥ 1.
    for t in [0.5, 1.0, 5.0, 50.0] {
        for w in h_grid(1.0, 5.0, 0.25).windows(2) {
            assert!(durbin(w[1], t) <= durbin(w[0], t));
            assert!(pch(w[1], t) <= pch(w[0], t));
        }
    }
    assert!(durbin(0.5, 1.0) > durbin(0.0, 1.0));
}

#[test]
fn every_method_grows_with_the_horizon() {
    for l in [5usize, 10, 50] {
        for h in h_grid(0.0, 4.0, 0.5) {
            for method in DETERMINISTIC {
                let mut prev = f64::NEG_INFINITY;
                // Every M on the short branch, then a sparser sweep beyond one window.
                let ms = (1..=l).chain((l + 1..=6 * l).step_by(l.div_ceil(5)));
                for m in ms {
                    let v = approximate(method, h, m, l).unwrap().value;
                    assert!(
                        v >= prev - 1e-12,
                        "{method} h = {h} L = {l} M = {m}: {v} < {prev}"
                    );
                    prev = v;
                }
            }
        }
    }
}

#[test]
fn short_cda_sits_between_marginal_and_diffusion() {
    for l in [5usize, 10, 100] {
        for m in [1, l / 2, l] {
            for h in h_grid(-1.0, 5.0, 0.5) {
                let c = cda_bcp_short(h, m, l).unwrap();
                let d = diffusion_bcp_short(h, m as f64 / l as f64).unwrap();
                assert!(c >= mosum::normal::sf(h) - 1e-15 && c <= d + 1e-12);
            }
        }
    }
}

#[test]
fn explicit_window_form_matches_quadrature() {
    for l in [5usize, 10, 100] {
        for h in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
            let q = cda_bcp_short(h, l, l).unwrap();
            assert!(
                (cda_window_explicit(h, l) - q).abs() < 1e-9,
                "h = {h} L = {l}"
            );
        }
    }
}

#[test]
fn explicit_window_form_tends_to_diffusion() {
    for h in [0.0, 1.0, 2.0, 3.0, 4.0] {
        let gap = (cda_window_explicit(h, 1_000_000) - diffusion_bcp_short(h, 1.0).unwrap()).abs();
        assert!(gap < 1e-3);
        assert!((diffusion_bcp_short(h, 1.0).unwrap() - diffusion_bcp_unit(h)).abs() < 1e-10);
    }
    assert_eq!(cda_window_explicit(f64::INFINITY, 10), 0.0);
}

#[test]
fn conditional_crossing_examples() {
    let plain = q_conditional(2.0, 0.0, 10, 10, Some(0.0)).unwrap();
    let oracle = mosum::normal::sf(2.0) + (-2.0f64).exp() * 0.5;
    assert!((plain - oracle).abs() < 1e-14);
    assert!(q_conditional(2.0, 0.0, 10, 10, None).unwrap() < plain);
    // At M = L the end value is independent of the start, so only M < L vanishes.
    assert!(q_conditional(2.0, -60.0, 7, 10, None).unwrap() < 1e-30);
    assert!(q_conditional(2.0, 2.0, 10, 10, None).is_err());
    assert!(q_conditional(2.0, 0.0, 11, 10, None).is_err());
    let mut prev = 1.0;
    for h in h_grid(0.5, 5.0, 0.25) {
        let q = q_conditional(h, 0.0, 7, 10, None).unwrap();
        assert!(q <= prev);
        prev = q;
    }
}

#[test]
fn long_branch_joins_the_short_branch() {
    for l in [10usize, 50] {
        for h in h_grid(2.0, 4.0, 0.25) {
            let gap = (cda_bcp_long(h, l + 1, l).unwrap() - cda_bcp_short(h, l, l).unwrap()).abs();
            assert!(gap < 0.01, "h = {h} L = {l}: {gap}");
        }
        let d = diffusion_bcp_long(2.0, 1.0 + 1e-9).unwrap();
        assert!((d - diffusion_bcp_short(2.0, 1.0).unwrap()).abs() < 1e-7);
    }
    assert!(cda_bcp_long(2.0, 10, 10).is_err());
    assert!(diffusion_bcp_long(2.0, 1.0).is_err());
    assert!(diffusion_bcp_short(2.0, 1.5).is_err());
}

#[test]
fn long_horizon_pch_and_diffusion_nearly_coincide() {
    for h in h_grid(1.0, 4.0, 0.25) {
        let gap = (diffusion_bcp(h, 50.0).unwrap() - pch(h, 50.0)).abs();
        assert!(gap < 0.02, "h = {h}: {gap}");
    }
}

/// Crossing probability of the limiting process over `[0, T]`, by simulating
/// the discrete process at windows `L` and `4L` and removing the leading
/// `1/√L` discretization error.
fn limiting_process_bcp(h: f64, t: f64, l: usize, reps: u64) -> (f64, f64) {
    let run = |l: usize, seed: u64| {
        let spec = ProcessSpec::standard(l).unwrap();
        let m = (t * l as f64).round() as usize;
        simulate_bcp(&spec, m, h, &McConfig::new(reps, seed)).unwrap()
    };
    let coarse = run(l, 1);
    let fine = run(4 * l, 2);
    let p = 2.0 * fine.estimate - coarse.estimate;
    let se = (4.0 * fine.stderr.powi(2) + coarse.stderr.powi(2)).sqrt();
    (p, se)
}

#[test]
fn short_diffusion_matches_the_limiting_process() {
    let (p, se) = limiting_process_bcp(2.0, 0.5, 100, 100_000);
    let d = diffusion_bcp_short(2.0, 0.5).unwrap();
    eprintln!("T = 0.5: simulated {p} ± {se}, diffusion {d}");
    assert!((p - d).abs() < 3.0 * se);
}

#[test]
fn long_diffusion_matches_the_limiting_process() {
    let (p, se) = limiting_process_bcp(2.0, 5.0, 50, 40_000);
    let d = diffusion_bcp_long(2.0, 5.0).unwrap();
    eprintln!("T = 5: simulated {p} ± {se}, diffusion {d}");
    assert!((p - d).abs() < 3.0 * se);
}

#[test]
fn cda_dispatch_is_consistent() {
    assert_eq!(
        cda_bcp(2.0, 10, 10).unwrap(),
        cda_bcp_short(2.0, 10, 10).unwrap()
    );
    assert_eq!(
        cda_bcp(2.0, 30, 10).unwrap(),
        cda_bcp_long(2.0, 30, 10).unwrap()
    );
}
