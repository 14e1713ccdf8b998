//! Uniform-integrability counterexample scan.
//!
//! For a two-block weight vector (p, 1−p) the distinguished coordinate of
//! the projected measure has an explicit kernel on (0,1), and the scan
//! computes, for a vanishing sequence p_n, the truncated normalized second
//! moments
//!
//!   I_n = (p(1+θp))^{−1} ∫_{t_n}^{1} κ_θ · p(1−p) · t^{1/2} (1−t)^{−3/2}
//!         · (p²/t + (1−p)²/(1−t))^{−(θ+3/2)} dt,
//!
//! with κ_θ = Γ(θ+3/2)/(π Γ(θ+1/2)) and t_n = √(c · p(1+θp)). Writing
//! F_n for the coordinate scaled by √(p(1+θp)), I_n is the second-moment
//! mass of F_n² above the threshold c. If the family {F_n²} were uniformly
//! integrable these tail integrals would vanish as p_n → 0; instead they
//! converge to a strictly positive constant, so the scan exhibits the
//! failure of uniform integrability at desk scale.
//!
//! Two closed-form Γ-product limits are exposed side by side. The
//! dominated-convergence limit of the integrals themselves is
//! [`integrand_limit`]; the scan also reports the reference value
//! [`analytic_limit`] (3/π at θ = 1) so downstream checks can compare
//! against either. The two disagree for every θ > 0; the quadrature
//! values settle on [`integrand_limit`].

use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_1d, QuadratureSpec};
use crate::numerics::special::log_gamma;
use rayon::prelude::*;

/// Output of [`counterexample_scan`]: the scanned labels and weights, the
/// truncated normalized second moments `i_n`, the full (untruncated)
/// normalized second moments `mean_square`, and the two closed-form limits
/// the sequence can be compared against.
#[derive(Debug, Clone)]
pub struct CounterexampleScan {
    /// Scan labels n (the index of p_n in the chosen base sequence).
    pub n_list: Vec<u32>,
    /// The weights p_n actually used, parallel to `n_list`.
    pub p_n: Vec<f64>,
    /// Truncated normalized second moments I_n (tail above the threshold).
    pub i_n: Vec<f64>,
    /// Full normalized second moments (threshold 0), computed by
    /// quadrature rather than assumed equal to 1.
    pub mean_square: Vec<f64>,
    /// Reference limit in closed Γ-product form,
    /// Γ(θ+3/2)Γ(1/2)Γ(θ) / (π Γ(θ+1/2)²); equals 3/π at θ = 1.
    pub analytic_limit: f64,
    /// Dominated-convergence limit of I_n as p_n → 0,
    /// Γ(θ+3/2)Γ(3/2)Γ(θ+1) / (π Γ(θ+1/2) Γ(θ+5/2)); equals 2/(5π)
    /// at θ = 1. The quadrature values converge to this constant.
    pub integrand_limit: f64,
}

/// ln Γ for the strictly positive arguments used by the closed forms
/// below; invalid arguments surface as NaN rather than as an error.
fn lg(x: f64) -> f64 {
    log_gamma(x).unwrap_or(f64::NAN)
}

/// Closed Γ-product reference limit Γ(θ+3/2)Γ(1/2)Γ(θ) / (π Γ(θ+1/2)²).
/// At θ = 1 this is 3/π; at θ = 1/2 it is exactly 1. NaN unless θ > 0.
pub fn analytic_limit(theta: f64) -> f64 {
    (lg(theta + 1.5) + lg(0.5) + lg(theta) - std::f64::consts::PI.ln() - 2.0 * lg(theta + 0.5))
        .exp()
}

/// Limit of the normalized tail integrals I_n as p_n → 0, obtained by
/// dominated convergence of the integrand:
///
///   lim I_n = κ_θ ∫₀¹ t^{1/2} (1−t)^θ dt
///           = Γ(θ+3/2) Γ(3/2) Γ(θ+1) / (π Γ(θ+1/2) Γ(θ+5/2)).
///
/// At θ = 1 this is 2/(5π) ≈ 0.12732. The limit is independent of the
/// threshold c because the truncation point √(c·p(1+θp)) → 0.
/// NaN unless θ > 0.
pub fn integrand_limit(theta: f64) -> f64 {
    (lg(theta + 1.5) + lg(1.5) + lg(theta + 1.0)
        - std::f64::consts::PI.ln()
        - lg(theta + 0.5)
        - lg(theta + 2.5))
        .exp()
}

fn annotate_quadrature_error(e: Error, n: u32, which: &str) -> Error {
    match e {
        Error::Accuracy {
            message,
            best_estimate,
            error_bound,
        } => Error::Accuracy {
            message: format!("{which} quadrature at n = {n}: {message}"),
            best_estimate,
            error_bound,
        },
        other => other,
    }
}

/// Scan the truncated normalized second moments I_n over a decreasing
/// weight sequence `p_n` (labels `n_list`), with mixing parameter `theta`
/// and tail threshold `c_threshold`. Also reports the full normalized
/// second moment of each member (truncation point 0) and the two
/// closed-form limits.
///
/// Errors: `InvalidParameter` unless `theta` and `c_threshold` are finite
/// and positive, the two sequences are nonempty with equal lengths, and
/// `p_n` is strictly decreasing with every entry in (0, 1). Quadrature
/// failures surface as `Accuracy` errors naming the offending n.
pub fn counterexample_scan(
    theta: f64,
    c_threshold: f64,
    p_n: &[f64],
    n_list: &[u32],
) -> Result<CounterexampleScan> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be finite and > 0, got {theta}"
        )));
    }
    if !(c_threshold.is_finite() && c_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c_threshold must be finite and > 0, got {c_threshold}"
        )));
    }
    if p_n.is_empty() || p_n.len() != n_list.len() {
        return Err(Error::InvalidParameter(format!(
            "need equal nonempty label/weight sequences, got {} labels and {} weights",
            n_list.len(),
            p_n.len()
        )));
    }
    for (i, &p) in p_n.iter().enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weights must lie in (0, 1), got p[{i}] = {p}"
            )));
        }
        if i > 0 && p >= p_n[i - 1] {
            return Err(Error::InvalidParameter(format!(
                "weights must be strictly decreasing, got p[{}] = {} then p[{i}] = {p}",
                i - 1,
                p_n[i - 1]
            )));
        }
    }

    // κ_θ = Γ(θ+3/2) / (π Γ(θ+1/2)).
    let kappa = (lg(theta + 1.5) - lg(theta + 0.5)).exp() / std::f64::consts::PI;

    let moments: Vec<(f64, f64)> = n_list
        .par_iter()
        .zip(p_n.par_iter())
        .map(|(&n, &p)| -> Result<(f64, f64)> {
            let norm = p * (1.0 + theta * p);
            // Stable factorization of the kernel: the (1−t)^{−3/2} factor
            // is absorbed into the denominator so neither endpoint produces
            // an ∞/∞ form:
            //   t^{1/2} (1−t)^{−3/2} D^{−(θ+3/2)} = t^{1/2} E^{−3/2} D^{−θ},
            // where D = p²/t + (1−p)²/(1−t) and E = (1−t)·D = p²(1−t)/t + (1−p)².
            let front = kappa * p * (1.0 - p);
            let integrand = move |t: f64| -> f64 {
                if !(t > 0.0) || !(t < 1.0) {
                    return 0.0;
                }
                let e = p * p * (1.0 - t) / t + (1.0 - p) * (1.0 - p);
                let d_big = p * p / t + (1.0 - p) * (1.0 - p) / (1.0 - t);
                front * t.sqrt() * e.powf(-1.5) * d_big.powf(-theta)
            };

            // Near t = 1 the kernel vanishes like (1−t)^θ; near t = 0 its
            // envelope is t^{1/2} (the exact decay is faster once t ≲ p²,
            // which adaptive refinement absorbs).
            let base_spec = QuadratureSpec {
                abs_tol: 1e-12,
                rel_tol: 1e-10,
                max_subdivisions: 400,
                endpoint_exponents: (0.0, theta),
            };

            let t_lo = (c_threshold * norm).sqrt();
            let tail = if t_lo >= 1.0 {
                0.0
            } else {
                let (value, _err) = integrate_1d(integrand, t_lo, 1.0, &base_spec)
                    .map_err(|e| annotate_quadrature_error(e, n, "tail"))?;
                value / norm
            };

            let full_spec = QuadratureSpec {
                endpoint_exponents: (0.5, theta),
                ..base_spec
            };
            let (full, _err) = integrate_1d(integrand, 0.0, 1.0, &full_spec)
                .map_err(|e| annotate_quadrature_error(e, n, "full-moment"))?;

            Ok((tail, full / norm))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CounterexampleScan {
        n_list: n_list.to_vec(),
        p_n: p_n.to_vec(),
        i_n: moments.iter().map(|m| m.0).collect(),
        mean_square: moments.iter().map(|m| m.1).collect(),
        analytic_limit: analytic_limit(theta),
        integrand_limit: integrand_limit(theta),
    })
}
