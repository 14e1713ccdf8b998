//! Functional-inequality laboratory for the simplex diffusion.
//!
//! Everything in this module quantifies one of the ingredients of the
//! super-Poincaré analysis for the reversible measure μ and its Dirichlet
//! form E(f) = ½ μ(Γ(f,f)):
//!
//! * [`rates`] — the closed-form rate exponents p(θ, d) and the rate
//!   function β(r) = c(1 + r^{−p});
//! * [`harness`] — Monte Carlo verification of inequalities of the form
//!   μ(f²) ≤ r·E(f) + β(r)·μ(|f|)², with per-member error bars and a
//!   fitter for the smallest admissible constant c;
//! * [`landscape`] — geometry of the sublevel sets D_s = {φ ≤ s} of
//!   φ(x) = Σ x_i^{−2}: the local-oscillation bound h(s), the Cheeger-type
//!   quantities a₁(s), a₂(s) with the spectral lower bound λ(s) ≥
//!   a₂²/(4a₁), and the boundary flux of the carré-du-champ field;
//! * [`perturbation`] — the log-density perturbation W with its potential
//!   ψ = ¼(Γ(W,W) + 2·S(W)), sup e^W spreads, and the fully explicit
//!   perturbed rate bound β(ε) assembled from h, λ, and ψ;
//! * [`counterexample`] — the d = ∞ uniform-integrability counterexample:
//!   quadrature of the truncated normalized second moments I_n along a
//!   vanishing weight sequence, with both closed-form candidate limits.

mod counterexample;
mod harness;
mod landscape;
mod perturbation;
mod rates;

pub use counterexample::{analytic_limit, counterexample_scan, integrand_limit, CounterexampleScan};
pub use harness::{
    check_super_poincare, default_family, fit_rate_constant, Estimate, InequalityReport,
};
pub use landscape::{
    boundary_flux, cheeger_scan, h_estimate, lambda_lb_at, sigma_grad_norm, CheegerScan,
};
pub use perturbation::{
    base_inequality_exponent, beta_perturbation_breakdown, beta_perturbation_explicit,
    psi_estimate, psi_scan, BetaBreakdown, PerturbationInputs, PsiEstimate,
};
pub use rates::{
    rate_exponent_localization, rate_exponent_perturbation, rate_exponent_perturbation_proof,
    RateFunction,
};
