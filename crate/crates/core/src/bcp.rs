//! Method tags and branch dispatch for crossing-probability estimates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::long::{cda_bcp_long, diffusion_bcp_long};
use crate::short::{cda_bcp_short, diffusion_bcp_short, durbin, pch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcpMethod {
    Durbin,
    Pch,
    Diffusion,
    Cda,
    Glaz,
    Mc,
}

impl BcpMethod {
    pub const ALL: [BcpMethod; 6] = [
        BcpMethod::Durbin,
        BcpMethod::Pch,
        BcpMethod::Diffusion,
        BcpMethod::Cda,
        BcpMethod::Glaz,
        BcpMethod::Mc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BcpMethod::Durbin => "durbin",
            BcpMethod::Pch => "pch",
            BcpMethod::Diffusion => "diffusion",
            BcpMethod::Cda => "cda",
            BcpMethod::Glaz => "glaz",
            BcpMethod::Mc => "mc",
        }
    }

    /// True for methods whose value is a Monte Carlo estimate.
    pub fn is_random(self) -> bool {
        matches!(self, BcpMethod::Glaz | BcpMethod::Mc)
    }
}

impl fmt::Display for BcpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BcpMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BcpMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

/// A crossing probability with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcpEstimate {
    pub value: f64,
    pub method: BcpMethod,
    /// Standard error, present exactly for Monte Carlo based methods.
    pub stderr: Option<f64>,
}

impl BcpEstimate {
    pub fn exact(value: f64, method: BcpMethod) -> Self {
        BcpEstimate {
            value,
            method,
            stderr: None,
        }
    }
}

/// Diffusion approximation on either branch of the horizon `T`.
pub fn diffusion_bcp(h: f64, t: f64) -> Result<f64> {
    if t > 1.0 {
        diffusion_bcp_long(h, t)
    } else {
        diffusion_bcp_short(h, t)
    }
}

/// Corrected diffusion approximation on either branch (`M ≤ L` or `M > L`).
pub fn cda_bcp(h: f64, m: usize, l: usize) -> Result<f64> {
    if m > l {
        cda_bcp_long(h, m, l)
    } else {
        cda_bcp_short(h, m, l)
    }
}

/// Evaluates one of the deterministic approximations at `(h, M, L)`.
///
/// Glaz and Monte Carlo estimates need a simulation budget; see
/// [`crate::arl::glaz_bcp`] and [`crate::mc::simulate_bcp`].
pub fn approximate(method: BcpMethod, h: f64, m: usize, l: usize) -> Result<BcpEstimate> {
    if m == 0 || l == 0 {
        return Err(Error::invalid("M and L must be at least 1"));
    }
    let t = m as f64 / l as f64;
    let value = match method {
        BcpMethod::Durbin => durbin(h, t),
        BcpMethod::Pch => pch(h, t),
        BcpMethod::Diffusion => diffusion_bcp(h, t)?,
        BcpMethod::Cda => cda_bcp(h, m, l)?,
        BcpMethod::Glaz | BcpMethod::Mc => {
            return Err(Error::invalid(format!(
                "{method} is a simulation estimate and needs a Monte Carlo configuration"
            )))
        }
    };
    Ok(BcpEstimate::exact(value, method))
}
