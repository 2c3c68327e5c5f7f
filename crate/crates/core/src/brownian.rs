//! Crossing probabilities of standard Brownian motion over sloped lines.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::normal::{cdf, pdf, scaled_cdf, sf};
use crate::quadrature::integrate;

/// Expected overshoot constant of a Gaussian random walk.
pub const SIEGMUND_RHO: f64 = 0.5826;

/// The line `a + b t` on `[0, r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopedBoundary {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

impl SlopedBoundary {
    pub fn new(a: f64, b: f64, r: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::invalid(format!(
                "intercept must be positive, got {a}"
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive, got {r}")));
        }
        if b.is_nan() {
            return Err(Error::invalid("slope is NaN"));
        }
        Ok(SlopedBoundary { a, b, r })
    }

    /// Value of the line at the horizon, `a + b r`.
    pub fn end(&self) -> f64 {
        self.a + self.b * self.r
    }
}

/// `Pr(W(t) ≥ a + b t for some t ∈ [0, r])`.
pub fn bcp_sloped(boundary: &SlopedBoundary) -> f64 {
    crossing(boundary.r, boundary.a, boundary.b)
}

/// Unchecked form of [`bcp_sloped`]; `a > 0`, `r > 0` are the caller's job.
pub(crate) fn crossing(r: f64, a: f64, b: f64) -> f64 {
    if a == f64::INFINITY {
        return 0.0;
    }
    let sr = r.sqrt();
    let p = sf((b * r + a) / sr) + scaled_cdf(-2.0 * a * b, (b * r - a) / sr);
    p.clamp(0.0, 1.0)
}

/// `Pr(W_μ(r) ≤ z, sup_{[0,r]} W_μ ≤ y)` for Brownian motion with drift `μ`.
///
/// Values of `z` above `y` are clamped to `y`.
pub fn drift_survival_cdf(z: f64, y: f64, r: f64, mu: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::invalid(format!("barrier must be positive, got {y}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {r}")));
    }
    let z = z.min(y);
    if z == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let sr = r.sqrt();
    let v = cdf((z - mu * r) / sr) - scaled_cdf(2.0 * y * mu, (z - mu * r - 2.0 * y) / sr);
    Ok(v.clamp(0.0, 1.0))
}

/// Defective density of `W(r)` at `x` on paths that stay below `a + b t`.
pub fn survival_density(x: f64, boundary: &SlopedBoundary) -> f64 {
    let SlopedBoundary { a, r, .. } = *boundary;
    let gap = boundary.end() - x;
    if !(gap > 0.0) {
        return 0.0;
    }
    let sr = r.sqrt();
    pdf(x / sr) / sr * -(-2.0 * a * gap / r).exp_m1()
}

/// The stored overshoot constant, 0.5826.
pub fn siegmund_rho() -> f64 {
    SIEGMUND_RHO
}

/// Overshoot correction for a walk of `steps` increments per unit variance,
/// `0.5826 / √steps`.
pub fn rho_for_steps(steps: f64) -> f64 {
    SIEGMUND_RHO / steps.sqrt()
}

/// The overshoot constant `−π⁻¹ ∫₀^∞ λ⁻² ln(2(1 − e^{−λ²/2})/λ²) dλ` by quadrature.
pub fn siegmund_rho_numeric(tolerance: f64) -> Result<f64> {
    if !(tolerance >= 1e-12) {
        return Err(Error::UnsupportedTolerance(tolerance));
    }
    const CUT: f64 = 20.0;
    let g = |l: f64| {
        if l < 1e-2 {
            -0.25 + l * l / 96.0
        } else {
            let l2 = l * l;
            (2.0 * -(-0.5 * l2).exp_m1() / l2).ln() / l2
        }
    };
    let body = integrate(g, 0.0, CUT, 0.1 * PI * tolerance)?;
    // Past CUT, ln(1 − e^{−λ²/2}) is below 1e-86 and the integrand is (ln 2 − 2 ln λ)/λ².
    let tail = LN_2 / CUT - 2.0 * (CUT.ln() + 1.0) / CUT;
    Ok(-(body + tail) / PI)
}

/// Crossing probability of Brownian motion observed on a grid of `steps`
/// points over `[0, z]`, via the continuous formula with the intercept raised
/// by the overshoot correction for a step of variance `z / steps`.
pub fn discretized_bcp(z: f64, steps: u64, a: f64, b: f64) -> Result<f64> {
    if steps == 0 {
        return Err(Error::invalid("need at least one grid step"));
    }
    let boundary = SlopedBoundary::new(a, b, z)?;
    let rho = rho_for_steps(steps as f64 / z);
    Ok(crossing(boundary.r, boundary.a + rho, boundary.b))
}
