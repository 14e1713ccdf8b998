//! Shared numerical kernels: special functions, quadrature, and the
//! reproducible random-number contract.

pub mod quad;
pub mod rng;
pub mod special;

pub use quad::{integrate_1d, QuadratureSpec};
pub use rng::{sample_beta, RngStream};
pub use special::{chi2_cdf, chi2_critical, erf, log_beta, log_gamma, normal_cdf, reg_lower_gamma};
