//! Numerical kernels shared by the rest of the crate.

pub mod fit;
pub mod hypergeometric;
pub mod interp;
pub mod quadrature;
pub mod tridiag;

pub use fit::{central_difference, fit_exponential_decay, second_difference, RateEstimate};
pub use hypergeometric::{hyp1f1, hyp2f0_terminating, hyp2f1, pochhammer};
pub use interp::{Grid, GridFunction, GridKind, Pchip};
pub use quadrature::{integrate, integrate_with, QuadratureResult, Tolerance};
pub use tridiag::{tridiag_eigs, EigenPair};
