//! pdlab: a numerical laboratory for two-parameter Poisson–Dirichlet
//! constructions, the explicit simplex projection measure at α = 1/2 with
//! its reversible degenerate diffusion, and desk-scale verification of the
//! associated functional inequalities (super-Poincaré harness, Cheeger-type
//! scalings, boundary flux, perturbation potentials, spectral evidence, and
//! a uniform-integrability counterexample scan).

pub mod cli;
pub mod diffusion_sim;
pub mod dirichlet_form;
pub mod error;
pub mod inequality_lab;
pub mod numerics;
pub mod simplex_measures;
pub mod spectral_1d;
pub mod stats;
pub mod stick_breaking;

pub use error::{Error, Result};

/// Entry point used by the `pdlab` binary. Returns the process exit code.
pub fn cli_main() -> i32 {
    cli::run_from(std::env::args_os())
}
