//! First-passage distribution and average run length.
//!
//! `τ_h = min{n ≥ 0 : ξ_n ≥ h}` is measured in window lengths, `t = τ_h / L`.
//! Its distribution function under the corrected diffusion approximation has
//! an atom `1 − Φ(h)` at zero, the short-horizon crossing probability on
//! `(0, 1]` and a geometric tail on `(1, ∞)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bcp::{BcpEstimate, BcpMethod};
use crate::brownian::rho_for_steps;
use crate::error::{Error, Result};
use crate::long::{survival_factor, EigenvalueMethod};
use crate::mc::{crossing_counts, McConfig};
use crate::model::ProcessSpec;
use crate::normal::sf;
use crate::quadrature::{integrate, trapezoid};
use crate::short::{cda_bcp_short_at, cda_window_explicit_with};

/// Correction used in the one-window factor of the tail `t > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GammaSchedule {
    /// `γ(t) = ρ_L / t^{1/4}`, as in the long-horizon crossing probability.
    #[default]
    TimeScaled,
    /// `γ = ρ_L` for every `t > 1`; gives a purely geometric tail.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CdaOptions {
    pub eigenvalue: EigenvalueMethod,
    pub gamma: GammaSchedule,
}

/// Corrected diffusion approximation of the law of `τ_h / L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageDistribution {
    pub h: f64,
    pub window: usize,
    pub atom_at_zero: f64,
    /// Per-window survival factor of the tail.
    pub lambda: f64,
    pub options: CdaOptions,
}

const SHORT_NODES: usize = 1024;

impl PassageDistribution {
    pub fn new(h: f64, window: usize, options: CdaOptions) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        if !h.is_finite() {
            return Err(Error::invalid(format!("threshold must be finite, got {h}")));
        }
        let lambda = survival_factor(h, rho_for_steps(window as f64), options.eigenvalue)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Singular(format!(
                "survival factor {lambda} at h = {h} leaves no geometric tail"
            )));
        }
        Ok(PassageDistribution {
            h,
            window,
            atom_at_zero: sf(h),
            lambda,
            options,
        })
    }

    fn rho(&self) -> f64 {
        rho_for_steps(self.window as f64)
    }

    fn gamma(&self, t: f64) -> f64 {
        match self.options.gamma {
            GammaSchedule::TimeScaled => self.rho() / t.powf(0.25),
            GammaSchedule::Frozen => self.rho(),
        }
    }

    /// `Pr(τ_h / L ≤ t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival(t)?)
    }

    /// `Pr(τ_h / L > t)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("t must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            Ok(1.0 - self.atom_at_zero)
        } else if t <= 1.0 {
            Ok(1.0 - cda_bcp_short_at(self.h, t, self.window as f64)?)
        } else {
            Ok(self.tail_survival(t))
        }
    }

    fn tail_survival(&self, t: f64) -> f64 {
        (1.0 - cda_window_explicit_with(self.h, self.gamma(t))) * self.lambda.powf(t - 1.0)
    }

    /// Jump of the distribution function at `t = 1` between the two branches.
    pub fn seam_gap(&self) -> Result<f64> {
        let short = cda_bcp_short_at(self.h, 1.0, self.window as f64)?;
        Ok(1.0 - self.tail_survival(1.0) - short)
    }

    /// `E[τ_h / L] = ∫₀^∞ Pr(τ_h/L > s) ds`.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.mean_with_error()?.0)
    }

    /// The mean and the difference between its 512- and 1024-panel head estimates.
    pub fn mean_with_error(&self) -> Result<(f64, f64)> {
        let (head, gap) = self.head_mean()?;
        Ok((head + self.tail_mean()?, gap))
    }

    /// `∫₀¹ Pr(τ_h/L > s) ds` and the gap between the 512- and 1024-panel rules.
    ///
    /// With `s = u²` the integrand `2u Pr(τ_h/L > u²)` is smooth at zero, so the
    /// trapezoid rule converges at second order and one Richardson step applies.
    fn head_mean(&self) -> Result<(f64, f64)> {
        let step = 1.0 / SHORT_NODES as f64;
        let mut g = vec![0.0; SHORT_NODES + 1];
        for (k, gk) in g.iter_mut().enumerate().skip(1) {
            let u = k as f64 * step;
            *gk = 2.0 * u * self.survival(u * u)?;
        }
        let fine = trapezoid(&g, step);
        let coarse: Vec<f64> = g.iter().step_by(2).copied().collect();
        let coarse = trapezoid(&coarse, 2.0 * step);
        Ok(((4.0 * fine - coarse) / 3.0, (fine - coarse).abs()))
    }

    /// `∫₁^∞ Pr(τ_h/L > s) ds`.
    fn tail_mean(&self) -> Result<f64> {
        let kappa = -self.lambda.ln();
        match self.options.gamma {
            GammaSchedule::Frozen => {
                Ok((1.0 - cda_window_explicit_with(self.h, self.rho())) / kappa)
            }
            GammaSchedule::TimeScaled => {
                // s = 1 + y/κ turns λ^{s−1} into e^{−y}.
                let f = |y: f64| {
                    let s = 1.0 + y / kappa;
                    (1.0 - cda_window_explicit_with(self.h, self.gamma(s))) * (-y).exp()
                };
                Ok(integrate(f, 0.0, 50.0, 1e-12)? / kappa)
            }
        }
    }
}

/// `Pr(τ_h / L ≤ t)` with the default options.
pub fn passage_cdf(h: f64, l: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("t must be nonnegative, got {t}")));
    }
    PassageDistribution::new(h, l, CdaOptions::default())?.cdf(t)
}

/// `∫₁^∞ s q(s) ds` for the geometric tail density `q(s) = A κ λ^{s−1}`,
/// `κ = −ln λ`, where `A` is the survival probability at `s = 1`.
pub fn frozen_tail_moment(survival_at_one: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Singular(format!(
            "survival factor {lambda} is outside (0, 1)"
        )));
    }
    Ok(survival_at_one * (1.0 + 1.0 / -lambda.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArlMethod {
    Cda,
    Glaz,
    Mc,
}

impl ArlMethod {
    pub fn name(self) -> &'static str {
        match self {
            ArlMethod::Cda => "cda",
            ArlMethod::Glaz => "glaz",
            ArlMethod::Mc => "mc",
        }
    }
}

/// Expected stopping index `E[τ_h]`, counted in moving sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArlEstimate {
    pub value: f64,
    pub method: ArlMethod,
    /// Standard error, present exactly for simulation-based methods.
    pub stderr: Option<f64>,
    pub warning: Option<String>,
}

/// Average run length under the corrected diffusion approximation.
pub fn arl_cda(h: f64, l: usize) -> Result<ArlEstimate> {
    arl_cda_with(h, l, CdaOptions::default())
}

pub fn arl_cda_with(h: f64, l: usize, options: CdaOptions) -> Result<ArlEstimate> {
    let dist = PassageDistribution::new(h, l, options)?;
    Ok(ArlEstimate {
        value: l as f64 * dist.mean()?,
        method: ArlMethod::Cda,
        stderr: None,
        warning: None,
    })
}

/// `1 − (1 − P(2L)) [(1 − P(2L)) / (1 − P(L))]^{T−2}` from the one- and
/// two-window crossing probabilities.
pub fn glaz_bcp_from(p_one: f64, p_two: f64, t: f64) -> Result<f64> {
    if !(p_one < 1.0) {
        return Err(Error::DegenerateEstimate(
            "one-window crossing probability is 1".into(),
        ));
    }
    let (q1, q2) = (1.0 - p_one, 1.0 - p_two);
    Ok(1.0 - q2 * (q2 / q1).powf(t - 2.0))
}

/// Glaz approximation for `M ≥ 2L`, with `P(L)` and `P(2L)` estimated by simulation.
///
/// Both probabilities come from the same replications; the standard error
/// accounts for their covariance.
pub fn glaz_bcp(h: f64, m: usize, l: usize, cfg: &McConfig) -> Result<BcpEstimate> {
    if l == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    if m < 2 * l {
        return Err(Error::domain(format!(
            "glaz requires M >= 2L (M = {m}, L = {l})"
        )));
    }
    let spec = ProcessSpec::standard(l)?;
    if cfg.replications == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let counts = crossing_counts(
        &spec,
        2 * l,
        &[h],
        cfg.seed,
        0..cfg.replications,
        cfg.thread_hint,
    )?;
    let p1 = counts.probability(0, l);
    let p2 = counts.probability(0, 2 * l);
    let t = m as f64 / l as f64;
    let value = glaz_bcp_from(p1, p2, t)?;
    // Delta method on S = q2^{T−1} q1^{−(T−2)}; Cov(q̂1, q̂2) = p1 q2 / n since {τ ≤ L} ⊂ {τ ≤ 2L}.
    let (q1, q2) = (1.0 - p1, 1.0 - p2);
    let n = cfg.replications as f64;
    let s = 1.0 - value;
    let d1 = -(t - 2.0) * s / q1;
    let d2 = if q2 > 0.0 { (t - 1.0) * s / q2 } else { 0.0 };
    let var = (d1 * d1 * p1 * q1 + d2 * d2 * p2 * q2 + 2.0 * d1 * d2 * p1 * q2) / n;
    Ok(BcpEstimate {
        value,
        method: BcpMethod::Glaz,
        stderr: Some(var.max(0.0).sqrt()),
    })
}

/// Glaz run-length approximation from `p[j] = P(j, h)`, `j = 0..=2L`.
pub fn glaz_arl_from(p: &[f64], l: usize) -> Result<f64> {
    if l == 0 || p.len() != 2 * l + 1 {
        return Err(Error::invalid("need crossing probabilities for j = 0..=2L"));
    }
    let denom = p[2 * l] - p[l];
    if !(denom > 0.0) {
        return Err(Error::DegenerateEstimate(format!(
            "P(2L) - P(L) = {denom} is not positive"
        )));
    }
    let head: f64 = (l..=2 * l).map(|j| 1.0 - p[j - l]).sum();
    let tail: f64 = (1..=l).map(|j| 1.0 - p[l + j]).sum();
    Ok(head + (1.0 - p[l]) / denom * tail)
}

/// Glaz run length averaged over independent groups of replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlazArl {
    pub estimate: ArlEstimate,
    /// Half-width of the 95% Student-t interval over the group values.
    pub half_width: f64,
    pub group_values: Vec<f64>,
}

/// Number of replication groups behind a Glaz run-length estimate.
pub const GLAZ_GROUPS: usize = 20;

/// Glaz run length with `cfg.replications` replications per group and
/// [`GLAZ_GROUPS`] groups.
pub fn glaz_arl(h: f64, l: usize, cfg: &McConfig) -> Result<ArlEstimate> {
    Ok(glaz_arl_grid(&[h], l, cfg, GLAZ_GROUPS)?.remove(0).estimate)
}

/// Glaz run lengths for several thresholds from shared replications.
///
/// Group `g` uses replications `g R .. (g + 1) R` with `R = cfg.replications`;
/// `P(0, h) = 1 − Φ(h)` is exact.
pub fn glaz_arl_grid(hs: &[f64], l: usize, cfg: &McConfig, groups: usize) -> Result<Vec<GlazArl>> {
    if groups < 2 {
        return Err(Error::invalid("need at least two groups"));
    }
    if cfg.replications == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let spec = ProcessSpec::standard(l)?;
    let r = cfg.replications;
    let mut values = vec![Vec::with_capacity(groups); hs.len()];
    for g in 0..groups as u64 {
        let counts = crossing_counts(
            &spec,
            2 * l,
            hs,
            cfg.seed,
            g * r..(g + 1) * r,
            cfg.thread_hint,
        )?;
        for (i, &h) in hs.iter().enumerate() {
            let mut p: Vec<f64> = (0..=2 * l).map(|j| counts.probability(i, j)).collect();
            p[0] = sf(h);
            values[i].push(glaz_arl_from(&p, l)?);
        }
    }
    let n = groups as f64;
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::invalid(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(values
        .into_iter()
        .map(|v| {
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let se = sd / n.sqrt();
            GlazArl {
                estimate: ArlEstimate {
                    value: mean,
                    method: ArlMethod::Glaz,
                    stderr: Some(se),
                    warning: None,
                },
                half_width: t * se,
                group_values: v,
            }
        })
        .collect())
}
