//! Numerical integration: adaptive Gauss–Kronrod (7/15) and Gauss–Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const MAX_INTERVALS: usize = 4000;

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss points.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XK[j];
        let s = f(c - dx) + f(c + dx);
        k += WK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: k * r,
        error: ((k - g) * r).abs(),
    }
}

/// Integral of `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Global adaptive bisection of the panel with the largest Kronrod–Gauss
/// error estimate. Fails with [`Error::Convergence`] when the panel budget
/// runs out before the summed error estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, abs_tol).map(|v| -v);
    }
    let first = kronrod(&f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while err > abs_tol.max(4.0 * f64::EPSILON * total.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Convergence {
                iterations: heap.len(),
                last: total,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum now and then: the running error total drifts under cancellation.
        if heap.len() % 64 == 0 {
            err = heap.iter().map(|p| p.error).sum();
            total = heap.iter().map(|p| p.value).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Gauss–Legendre rule with `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [-1, 1], ascending, by Newton iteration on the
    /// three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// The same rule mapped affinely onto `[a, b]`.
    pub fn on_interval(n: usize, a: f64, b: f64) -> Self {
        let rule = Self::new(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        GaussLegendre {
            nodes: rule.nodes.iter().map(|&t| mid + half * t).collect(),
            weights: rule.weights.iter().map(|&w| w * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite trapezoid rule for samples on a uniform grid with spacing `step`.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-14).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
        let v = integrate(|x: f64| 1.0 / (1.0 + x * x), -50.0, 50.0, 1e-12).unwrap();
        assert!((v - 2.0 * 50f64.atan()).abs() < 1e-11);
        // Reversed limits flip the sign.
        let v = integrate(|x: f64| x, 1.0, 0.0, 1e-14).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn kronrod_handles_kinks() {
        let v = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-10).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 101, 400, 800] {
            let rule = GaussLegendre::new(n);
            assert!(
                (rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-12,
                "n = {n}"
            );
            let deg = (2 * n - 1).min(31) as i32;
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            assert!(
                (rule.integrate(|x| x.powi(deg)) - exact).abs() < 1e-12,
                "n = {n}"
            );
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        let rule = GaussLegendre::on_interval(64, -10.0, 2.0);
        let v = rule.integrate(crate::normal::pdf);
        assert!((v - (crate::normal::cdf(2.0) - crate::normal::cdf(-10.0))).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_on_linear_data_is_exact() {
        let xs: Vec<f64> = (0..=10).map(|i| 3.0 * i as f64 / 10.0 + 1.0).collect();
        assert!((trapezoid(&xs, 0.1) - 2.5).abs() < 1e-14);
        assert_eq!(trapezoid(&[1.0], 0.1), 0.0);
    }
}
