//! Thresholds that give a prescribed crossing probability or run length.

use serde::{Deserialize, Serialize};

use crate::arl::arl_cda;
use crate::bcp::cda_bcp;
use crate::error::{Error, Result};
use crate::model::{threshold_from_h, ProcessSpec, ThresholdPair};

/// Range of standardized thresholds searched.
pub const BRACKET: (f64, f64) = (-2.0, 10.0);
const REL_TOL: f64 = 1e-6;
const MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CalibrationTarget {
    /// Crossing probability `p` over the horizon `M`.
    Bcp { p: f64, horizon: usize },
    /// Average run length, in moving sums.
    Arl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: ThresholdPair,
    pub achieved: f64,
    pub steps: usize,
}

/// Threshold at which the corrected diffusion approximation hits `target`.
///
/// Bisection on `h ∈ [−2, 10]`; the crossing probability decreases and the run
/// length increases in `h`.
pub fn calibrate_cda(target: CalibrationTarget, spec: &ProcessSpec) -> Result<Calibration> {
    let spec = ProcessSpec::new(spec.window, spec.mu, spec.sigma)?;
    let l = spec.window;
    let (goal, f): (f64, Box<dyn Fn(f64) -> Result<f64>>) = match target {
        CalibrationTarget::Bcp { p, horizon } => {
            if horizon == 0 {
                return Err(Error::invalid("horizon M must be at least 1"));
            }
            // Store as 1 − BCP so that both targets increase in h.
            (
                1.0 - p,
                Box::new(move |h| Ok(1.0 - cda_bcp(h, horizon, l)?)),
            )
        }
        CalibrationTarget::Arl(a) => (
            a,
            Box::new(move |h| match arl_cda(h, l) {
                Ok(e) => Ok(e.value),
                Err(Error::Singular(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }),
        ),
    };
    let report = |v: f64| match target {
        CalibrationTarget::Bcp { .. } => 1.0 - v,
        CalibrationTarget::Arl(_) => v,
    };
    if goal.is_nan() {
        return Err(Error::invalid("target is NaN"));
    }
    let (mut lo, mut hi) = BRACKET;
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(goal >= f_lo && goal <= f_hi) {
        let (a, b) = (report(f_lo), report(f_hi));
        return Err(Error::OutOfRange {
            target: report(goal),
            low: a.min(b),
            high: a.max(b),
        });
    }
    let scale = match target {
        CalibrationTarget::Bcp { p, .. } => p.min(1.0 - p).max(f64::MIN_POSITIVE),
        CalibrationTarget::Arl(a) => a,
    };
    let mut mid = 0.5 * (lo + hi);
    let mut value = f(mid)?;
    let mut steps = 1;
    while (value - goal).abs() > REL_TOL * scale && hi - lo > 1e-14 && steps < MAX_STEPS {
        if value < goal {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        value = f(mid)?;
        steps += 1;
    }
    if (value - goal).abs() > REL_TOL * scale && hi - lo > 1e-14 {
        return Err(Error::Convergence {
            iterations: steps,
            last: mid,
        });
    }
    Ok(Calibration {
        threshold: threshold_from_h(mid, &spec),
        achieved: report(value),
        steps,
    })
}
