//! Boundary-crossing probabilities and average run lengths for moving sums of
//! i.i.d. normal random variables.
//!
//! The moving sum `S_n = ε_{n+1} + … + ε_{n+L}` is standardized to
//! `ξ_n = (S_n − μL) / (σ√L)`. For a threshold `h` the crate approximates
//!
//! * the boundary-crossing probability `Pr(max_{0≤n≤M} ξ_n ≥ h)`, and
//! * the average run length `E[τ_h]`, `τ_h = min{n ≥ 0 : ξ_n ≥ h}`,
//!
//! with Durbin, Poisson-clumping, diffusion and corrected diffusion
//! approximations, the Glaz product approximations, and a seeded Monte
//! Carlo oracle of the exact process.
//!
//! ```
//! use mosum::{arl, long, short};
//!
//! // One window length ahead (M = L = 10), threshold h = 2.
//! let p = short::cda_window_explicit(2.0, 10);
//! assert!((p - short::cda_bcp_short(2.0, 10, 10).unwrap()).abs() < 1e-9);
//!
//! // Five window lengths ahead.
//! let q = long::cda_bcp_long(2.0, 50, 10).unwrap();
//! assert!(q > p);
//!
//! let run = arl::arl_cda(2.0, 10).unwrap();
//! assert_eq!(run.value.round(), 128.0);
//! ```

// Comparisons are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arl;
pub mod bcp;
pub mod brownian;
pub mod calibrate;
pub mod error;
pub mod long;
pub mod mc;
pub mod model;
pub mod normal;
pub mod quadrature;
pub mod short;

pub use bcp::{BcpEstimate, BcpMethod};
pub use error::{Error, Result};
pub use model::{HorizonSpec, ProcessSpec, ThresholdPair};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/short-horizon.md")]
    mod short_horizon {}
    #[doc = include_str!("../../../book/src/long-horizon.md")]
    mod long_horizon {}
    #[doc = include_str!("../../../book/src/run-length.md")]
    mod run_length {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
}
