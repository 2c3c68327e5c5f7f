//! The moving-sum model: process parameters, horizons, thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window length and marginal law of the underlying i.i.d. normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub window: usize,
    pub mu: f64,
    pub sigma: f64,
}

impl ProcessSpec {
    pub fn new(window: usize, mu: f64, sigma: f64) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        if !mu.is_finite() {
            return Err(Error::invalid(format!("mean must be finite, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(ProcessSpec { window, mu, sigma })
    }

    /// Standard normal innovations (μ = 0, σ = 1).
    pub fn standard(window: usize) -> Result<Self> {
        Self::new(window, 0.0, 1.0)
    }

    /// Standard deviation of one moving sum, σ√L.
    pub fn sum_sd(&self) -> f64 {
        self.sigma * (self.window as f64).sqrt()
    }

    /// Mean of one moving sum, μL.
    pub fn sum_mean(&self) -> f64 {
        self.mu * self.window as f64
    }
}

/// Horizon `M` (moving sums beyond the first) for a window `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSpec {
    steps: usize,
    window: usize,
}

impl HorizonSpec {
    pub fn new(steps: usize, window: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("horizon M must be at least 1"));
        }
        if window == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        Ok(HorizonSpec { steps, window })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Horizon in window lengths, `T = M / L`.
    pub fn t(&self) -> f64 {
        self.steps as f64 / self.window as f64
    }
}

/// A threshold on the raw sums (`raw`, H) and its standardized value (`h`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub raw: f64,
    pub h: f64,
}

pub fn threshold_from_h(h: f64, spec: &ProcessSpec) -> ThresholdPair {
    ThresholdPair {
        raw: spec.sum_mean() + spec.sum_sd() * h,
        h,
    }
}

pub fn h_from_threshold(raw: f64, spec: &ProcessSpec) -> ThresholdPair {
    ThresholdPair {
        raw,
        h: (raw - spec.sum_mean()) / spec.sum_sd(),
    }
}

/// Sums over every window of `window` consecutive values.
///
/// Slides the window by adding the new value and dropping the old one, and
/// re-adds the whole window every `window` steps so rounding errors cannot
/// accumulate over long series.
pub fn moving_sums(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    if series.len() < window {
        return Err(Error::invalid(format!(
            "series of length {} is shorter than the window {window}",
            series.len()
        )));
    }
    let mut out = Vec::with_capacity(series.len() - window + 1);
    let mut s: f64 = series[..window].iter().sum();
    out.push(s);
    for n in 1..=series.len() - window {
        if n % window == 0 {
            s = series[n..n + window].iter().sum();
        } else {
            s += series[n + window - 1] - series[n - 1];
        }
        out.push(s);
    }
    Ok(out)
}

/// `(s − μL) / (σ√L)` for every sum.
pub fn standardize(sums: &[f64], spec: &ProcessSpec) -> Vec<f64> {
    let (m, sd) = (spec.sum_mean(), spec.sum_sd());
    sums.iter().map(|s| (s - m) / sd).collect()
}

/// Correlation of `ξ_n` and `ξ_{n+k}`: `max(0, 1 − k/L)`.
pub fn correlation(k: usize, window: usize) -> f64 {
    assert!(window >= 1, "window length must be at least 1");
    (1.0 - k as f64 / window as f64).max(0.0)
}
