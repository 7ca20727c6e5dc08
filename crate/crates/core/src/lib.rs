//! Convergence-rate-optimal reversible diffusions.
//!
//! Given a stationary density π and a budget for the π-averaged variance
//! σ̂²/2, the fastest-mixing reversible diffusion has a linear drift
//! `μ(x) = λ₁(m₁ − x)`, spectral gap `λ₁ = (σ̂²/2) / Var(π)` and a variance
//! function fixed by detailed balance. This crate builds that process and
//! checks its properties numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod distributions;
pub mod error;
pub mod io;
pub mod numerics;
pub mod optimal;
pub mod pearson;
pub mod sim;
pub mod spectral;

pub use distributions::{DistributionKind, DistributionSpec, MomentSummary, Support};
pub use error::{Error, Result};
pub use optimal::{synthesize, Diffusion, OptimalProcess};
