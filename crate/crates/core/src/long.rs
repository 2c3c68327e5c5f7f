//! Crossing probabilities over more than one window length (`M > L`).
//!
//! Beyond one window the process is propagated window by window with the
//! transition kernel of the limiting process, and the survival probability
//! decays geometrically at the rate of the kernel's dominant eigenvalue.

use serde::{Deserialize, Serialize};

use crate::brownian::rho_for_steps;
use crate::error::{Error, Result};
use crate::normal::{cdf, cdf_band, pdf, scaled_cdf};
use crate::quadrature::{integrate, GaussLegendre};
use crate::short::{cda_window_explicit_with, diffusion_bcp_unit};

/// Default number of Gauss–Legendre nodes for the eigenvalue solver.
pub const DEFAULT_ORDER: usize = 400;
/// Default lower end `−C` of the eigenvalue solver's interval `[−C, h]`.
pub const DEFAULT_LOWER_CUT: f64 = 10.0;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// Threshold `h` and discrete-time correction `δ ≥ 0` of the transition kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub h: f64,
    pub delta: f64,
}

impl KernelSpec {
    pub fn new(h: f64, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        if h.is_nan() {
            return Err(Error::invalid("threshold is NaN"));
        }
        Ok(KernelSpec { h, delta })
    }

    /// Correction for a window of `l` observations, `δ = 0.5826/√l`.
    pub fn for_window(h: f64, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        Self::new(h, rho_for_steps(l as f64))
    }
}

/// Defective density of the process one window later at `x`, started at
/// `x0`, on paths that stay below the (corrected) barrier.
///
/// `φ(x)(1 − exp[−(h − x)(h − x0) − δ(3h − 2x − x0 + 2δ)])` for `x < h`, else 0.
pub fn kernel(x: f64, x0: f64, spec: &KernelSpec) -> f64 {
    let KernelSpec { h, delta } = *spec;
    if !(x < h) {
        return 0.0;
    }
    // The exponent factors as (h + δ − x)(h + 2δ − x0).
    pdf(x) * -(-(h + delta - x) * (h + 2.0 * delta - x0)).exp_m1()
}

/// Defective density of the uncorrected process a fraction `v ∈ (0, 1]` of a
/// window later.
pub fn kernel_v(x: f64, x0: f64, h: f64, v: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::domain(format!("V = {v} is outside (0, 1]")));
    }
    if !(x < h) || !(x0 < h) {
        return Ok(0.0);
    }
    // ζ_v = (1 − v) ζ_0 + (2 − v) W(U) with U = v/(2 − v) in the Brownian time scale.
    let u = v / (2.0 - v);
    let a = 0.5 * (h - x0);
    let b = 0.5 * (h + x0);
    let w = (x - x0 * (1.0 - v)) / (2.0 - v);
    let gap = a + b * u - w;
    if !(gap > 0.0) {
        return Ok(0.0);
    }
    let su = u.sqrt();
    Ok(pdf(w / su) / su * -(-2.0 * a * gap / u).exp_m1() / (2.0 - v))
}

/// The first two window-to-window iterates of the survival density, in
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityIterates {
    pub spec: KernelSpec,
    /// `κ = Φ(h)(Φ(h) − c1)`.
    pub kappa: f64,
    /// Mass of the first unnormalised iterate `p̃1`.
    pub c1: f64,
}

impl DensityIterates {
    pub fn new(spec: KernelSpec) -> Self {
        let kappa = kappa(spec.h, spec.delta);
        let c1 = cdf(spec.h) - kappa / cdf(spec.h);
        DensityIterates { spec, kappa, c1 }
    }

    /// Start density: the standard normal truncated to `(−∞, h)`.
    pub fn p0(&self, x: f64) -> f64 {
        if x < self.spec.h {
            pdf(x) / cdf(self.spec.h)
        } else {
            0.0
        }
    }

    pub fn p1_tilde(&self, x: f64) -> f64 {
        let KernelSpec { h, delta: d } = self.spec;
        if !(x < h) {
            return 0.0;
        }
        pdf(x) - pdf(h) / cdf(h) * scaled_cdf(-2.0 * d * h - 1.5 * d * d + d * x, x - d)
    }

    pub fn p1(&self, x: f64) -> f64 {
        self.p1_tilde(x) / self.c1
    }

    /// Image of `p1` under the kernel.
    pub fn p2_tilde(&self, x: f64) -> f64 {
        let KernelSpec { h, delta: d } = self.spec;
        if !(x < h) {
            return 0.0;
        }
        let ph = pdf(h);
        let lead = cdf(h - d) * (-3.0 * d * h - 3.5 * d * d + 2.0 * d * x).exp() * pdf(x)
            - ph * scaled_cdf(0.5 * d * d - 2.0 * d * h - d * x, x - 3.0 * d);
        let inner = lead / (cdf(h) * (h + 2.0 * d - x))
            - scaled_cdf(-2.0 * d * h - 1.5 * d * d + d * x, x - d);
        pdf(x) + ph / self.c1 * inner
    }

    /// Mass of `p̃2`, by quadrature.
    pub fn c2(&self) -> Result<f64> {
        let h = self.spec.h;
        integrate(|x| self.p2_tilde(x), h.min(0.0) - 12.0, h, 1e-12)
    }
}

/// `κ = (φ(h)/δ)[e^{−δh − 1.5δ²}Φ(h − δ) − e^{−2δh}Φ(h − 2δ)]`, with the δ → 0
/// limit `φ(h)(hΦ(h) + φ(h))`.
fn kappa(h: f64, d: f64) -> f64 {
    let ph = pdf(h);
    if d == 0.0 {
        return ph * (h * cdf(h) + ph);
    }
    // Factor out e^{−2δh}: the bracket becomes a sum of two O(δ) terms of equal sign.
    let bracket = (d * h - 1.5 * d * d).exp_m1() * cdf(h - d) + cdf_band(h - d, d);
    ph * (-2.0 * d * h).exp() * bracket / d
}

/// Closed-form approximation `λ̂_δ = p̃2(0)/p1(0)` of the dominant eigenvalue.
pub fn lambda_hat(h: f64, delta: f64) -> Result<f64> {
    let d = KernelSpec::new(h, delta)?.delta;
    let h2 = h + 2.0 * d;
    let den = h2 * (cdf(h) - cdf(-d) * (-0.5 * (h + d) * (h + 3.0 * d)).exp());
    if h2 == 0.0 || den == 0.0 || !den.is_finite() {
        return Err(Error::Singular(format!(
            "eigenvalue approximant has a vanishing denominator at h = {h}, delta = {d}"
        )));
    }
    let ph = pdf(h);
    let num = h2 * kappa(h, d)
        + ph * (cdf(-3.0 * d) * (0.5 * d * d - 0.5 * h * h - 2.0 * d * h).exp()
            - cdf(h - d) * (-3.0 * d * h - 3.5 * d * d).exp());
    Ok(cdf(h) - num / den)
}

/// Dominant eigenpair of the kernel discretized on Gauss–Legendre nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Eigenfunction on `nodes`, normalised so that `Σ wᵢ pᵢ = 1`.
    pub eigenfunction: Vec<f64>,
    pub order: usize,
    pub lower_cut: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of the kernel operator on `[−lower_cut, h]`.
///
/// The kernel matrix `Kᵢⱼ = kernel(xᵢ | xⱼ)` is symmetrised as `D^{1/2} K D^{1/2}`
/// with the quadrature weights `D`, and its Perron root found by power
/// iteration on the Rayleigh quotient.
pub fn lambda_quadrature(h: f64, delta: f64, order: usize, lower_cut: f64) -> Result<EigenResult> {
    let spec = KernelSpec::new(h, delta)?;
    if order < 16 {
        return Err(Error::invalid(format!(
            "need at least 16 nodes, got {order}"
        )));
    }
    if !(lower_cut > 0.0) || !(h > -lower_cut) || !h.is_finite() {
        return Err(Error::invalid(format!(
            "interval [-{lower_cut}, {h}] is empty or unbounded"
        )));
    }
    let rule = GaussLegendre::on_interval(order, -lower_cut, h);
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let n = order;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = sw[i] * kernel(rule.nodes[i], rule.nodes[j], &spec) * sw[j];
        }
    }

    let mut u: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&sw)
        .map(|(&x, s)| s * pdf(x))
        .collect();
    normalise(&mut u);
    let mut v = vec![0.0; n];
    let mut lambda = 0.0;
    for it in 1..=POWER_MAX_ITER {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = a[i * n..(i + 1) * n]
                .iter()
                .zip(&u)
                .map(|(x, y)| x * y)
                .sum();
        }
        let next: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        normalise(&mut v);
        let shift = u
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut u, &mut v);
        let done = (next - lambda).abs() <= POWER_TOL * next.abs() && shift < 1e-10;
        lambda = next;
        if done {
            let mut p: Vec<f64> = u.iter().zip(&sw).map(|(x, s)| x / s).collect();
            let mass: f64 = p.iter().zip(&rule.weights).map(|(x, w)| x * w).sum();
            p.iter_mut().for_each(|x| *x /= mass);
            return Ok(EigenResult {
                lambda,
                nodes: rule.nodes,
                weights: rule.weights,
                eigenfunction: p,
                order,
                lower_cut,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: POWER_MAX_ITER,
        last: lambda,
    })
}

fn normalise(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

/// How the per-window survival factor is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EigenvalueMethod {
    /// Power iteration on the discretized kernel (N = 400, C = 10).
    #[default]
    Quadrature,
    /// The closed-form approximant `λ̂_δ`.
    ClosedForm,
}

/// Per-window survival factor of the corrected kernel with correction `delta`.
pub fn survival_factor(h: f64, delta: f64, method: EigenvalueMethod) -> Result<f64> {
    match method {
        EigenvalueMethod::Quadrature => {
            lambda_quadrature(h, delta, DEFAULT_ORDER, DEFAULT_LOWER_CUT).map(|e| e.lambda)
        }
        EigenvalueMethod::ClosedForm => lambda_hat(h, delta),
    }
}

/// `1 − (1 − p1) λ^{T−1}`, the geometric extension of a one-window value `p1`.
pub(crate) fn extend(p1: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Singular(format!(
            "survival factor {lambda} is outside (0, 1]"
        )));
    }
    Ok((1.0 - (1.0 - p1) * lambda.powf(t - 1.0)).clamp(0.0, 1.0))
}

/// Diffusion approximation for `T > 1`; `T` need not be an integer.
pub fn diffusion_bcp_long(h: f64, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::domain(format!(
            "T = {t} is not above 1; use the short-horizon approximation"
        )));
    }
    if h == f64::INFINITY {
        return Ok(0.0);
    }
    if h <= -DEFAULT_LOWER_CUT {
        return Ok(1.0);
    }
    let lambda = lambda_quadrature(h, 0.0, DEFAULT_ORDER, DEFAULT_LOWER_CUT)?.lambda;
    extend(diffusion_bcp_unit(h), lambda, t)
}

/// Corrected diffusion approximation for `M > L`, with the closed-form
/// eigenvalue approximant.
pub fn cda_bcp_long(h: f64, m: usize, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    if m <= l {
        return Err(Error::domain(format!(
            "M = {m} does not exceed L = {l}; use the short-horizon approximation"
        )));
    }
    cda_bcp_long_at(
        h,
        m as f64 / l as f64,
        l as f64,
        EigenvalueMethod::ClosedForm,
    )
}

/// [`cda_bcp_long`] for a real horizon `t > 1` and window `l`.
///
/// The one-window value uses the correction `γ = 0.5826/(√l t^{1/4})`, the
/// survival factor the correction `δ = 0.5826/√l`.
pub fn cda_bcp_long_at(h: f64, t: f64, l: f64, method: EigenvalueMethod) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::domain(format!("T = {t} is not above 1")));
    }
    if !(l >= 1.0) {
        return Err(Error::invalid(format!(
            "window must be at least 1, got {l}"
        )));
    }
    if h == f64::INFINITY {
        return Ok(0.0);
    }
    let delta = rho_for_steps(l);
    let gamma = delta / t.powf(0.25);
    let lambda = survival_factor(h, delta, method)?;
    extend(cda_window_explicit_with(h, gamma), lambda, t)
}
