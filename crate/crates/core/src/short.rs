//! Crossing probabilities over at most one window length (`M ≤ L`).

use crate::brownian::{crossing, rho_for_steps};
use crate::error::{Error, Result};
use crate::normal::{cdf, cdf_band, pdf, scaled_cdf, sf};
use crate::quadrature::integrate;

const ABS_TOL: f64 = 1e-12;

/// Time change of the limiting process onto Brownian motion, `Z = T / (2 − T)`.
pub fn time_change(t: f64) -> f64 {
    t / (2.0 - t)
}

/// Durbin's approximation `h T φ(h)`.
///
/// Not a probability for small `h`: the value is returned unclamped.
pub fn durbin(h: f64, t: f64) -> f64 {
    h * t * pdf(h)
}

/// Poisson clumping heuristic `1 − exp(−h φ(h) T)`.
pub fn pch(h: f64, t: f64) -> f64 {
    -(-h * pdf(h) * t).exp_m1()
}

/// Diffusion approximation at `T = 1`: `1 − Φ(h)² + φ(h)(hΦ(h) + φ(h))`.
pub fn diffusion_bcp_unit(h: f64) -> f64 {
    if h == f64::INFINITY {
        return 0.0;
    }
    let (c, d) = (cdf(h), pdf(h));
    (sf(h) * (1.0 + c) + d * (h * c + d)).clamp(0.0, 1.0)
}

/// Diffusion approximation for `0 < T ≤ 1`.
pub fn diffusion_bcp_short(h: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!(
            "T = {t} is outside (0, 1]; use the long-horizon approximation"
        )));
    }
    if h == f64::INFINITY {
        return Ok(0.0);
    }
    if h == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    let z = time_change(t);
    let sz = z.sqrt();
    let u = |x: f64| (h * (z + 1.0) - x * (1.0 - z)) / (2.0 * sz);
    let lower = h.min(0.0) - 9.0;
    let miss = integrate(|x| sf(u(x)) * pdf(x), lower, h, ABS_TOL)?;
    let d = pdf(h);
    let extra = 2.0 * sz / (z + 1.0) * (h * d * sz * cdf(h * sz) + d * pdf(h * sz));
    Ok((sf(h) + miss + extra).clamp(0.0, 1.0))
}

/// Crossing of `h` within a time-changed horizon `Z`, started from `x0 < h`,
/// with the barrier raised by `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCrossing {
    pub h: f64,
    pub x0: f64,
    /// Corrected intercept `(h − x0)/2 + rho`.
    pub a_hat: f64,
    /// Slope `(h + x0)/2`.
    pub b: f64,
}

impl ConditionalCrossing {
    pub fn new(h: f64, x0: f64, rho: f64) -> Result<Self> {
        if !(x0 < h) {
            return Err(Error::invalid(format!(
                "start {x0} is not below the threshold {h}"
            )));
        }
        if !(rho >= 0.0) {
            return Err(Error::invalid(format!(
                "correction must be nonnegative, got {rho}"
            )));
        }
        Ok(ConditionalCrossing {
            h,
            x0,
            a_hat: 0.5 * (h - x0) + rho,
            b: 0.5 * (h + x0),
        })
    }

    pub fn probability(&self, z: f64) -> f64 {
        crossing(z, self.a_hat, self.b)
    }
}

/// Correction for a short-horizon fraction `t` of a window of (real) length `l`:
/// `0.5826 / √(M/Z)` with `M = t l`.
fn short_rho(t: f64, l: f64) -> f64 {
    rho_for_steps(l * (2.0 - t))
}

fn check_short(m: usize, l: usize) -> Result<()> {
    if m == 0 || l == 0 {
        return Err(Error::invalid("M and L must be at least 1"));
    }
    if m > l {
        return Err(Error::domain(format!(
            "M = {m} exceeds L = {l}; use the long-horizon approximation"
        )));
    }
    Ok(())
}

/// Probability that the corrected process started at `x0` reaches `h` within
/// `M ≤ L` steps. `rho_override = Some(0.0)` gives the uncorrected diffusion value.
pub fn q_conditional(
    h: f64,
    x0: f64,
    m: usize,
    l: usize,
    rho_override: Option<f64>,
) -> Result<f64> {
    check_short(m, l)?;
    let t = m as f64 / l as f64;
    let rho = rho_override.unwrap_or_else(|| short_rho(t, l as f64));
    Ok(ConditionalCrossing::new(h, x0, rho)?.probability(time_change(t)))
}

/// Corrected diffusion approximation for `1 ≤ M ≤ L`.
pub fn cda_bcp_short(h: f64, m: usize, l: usize) -> Result<f64> {
    check_short(m, l)?;
    cda_bcp_short_at(h, m as f64 / l as f64, l as f64)
}

/// [`cda_bcp_short`] with the horizon `t = M/L ∈ (0, 1]` and window `l` real.
pub fn cda_bcp_short_at(h: f64, t: f64, l: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("T = {t} is outside (0, 1]")));
    }
    if !(l >= 1.0) {
        return Err(Error::invalid(format!(
            "window must be at least 1, got {l}"
        )));
    }
    cda_short_with(h, t, short_rho(t, l))
}

pub(crate) fn cda_short_with(h: f64, t: f64, rho: f64) -> Result<f64> {
    if h == f64::INFINITY {
        return Ok(0.0);
    }
    if h == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    let z = time_change(t);
    let q = |x0: f64| crossing(z, 0.5 * (h - x0) + rho, 0.5 * (h + x0)) * pdf(x0);
    let lower = h.min(0.0) - 9.0;
    let body = integrate(q, lower, h, ABS_TOL)?;
    Ok((body + sf(h)).clamp(0.0, 1.0))
}

/// Closed form of the corrected diffusion approximation at `M = L`.
pub fn cda_window_explicit(h: f64, l: usize) -> f64 {
    cda_window_explicit_with(h, rho_for_steps(l as f64))
}

/// [`cda_window_explicit`] with an explicit barrier correction `rho ≥ 0`.
pub fn cda_window_explicit_with(h: f64, rho: f64) -> f64 {
    if h == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return 1.0;
    }
    let (c, d) = (cdf(h), pdf(h));
    let hr = h + rho;
    let head = sf(hr) + cdf(hr) * sf(h);
    // The two 1/ρ terms nearly cancel for small ρ. Writing
    // φ(h)e^{−2hρ} = φ(h+ρ)e^{ρ²/2 − hρ} leaves two O(ρ) pieces that are
    // each computed to full relative precision.
    let diff = if rho == 0.0 {
        d * (d + h * c)
    } else if rho < 0.5 {
        let band = cdf_band(h, rho);
        let bent = (0.5 * rho * rho - h * rho).exp_m1() * cdf(h - rho);
        pdf(hr) * (band - bent) / rho
    } else {
        (pdf(hr) * c - d * scaled_cdf(-2.0 * h * rho, h - rho)) / rho
    };
    (head + diff).clamp(0.0, 1.0)
}
