//! The simplex Δ^(d), the explicit projection density of the two-parameter
//! model at α = 1/2, a Dirichlet comparison family, the log-ratio
//! perturbation potential W, and the localizing function φ with its sublevel
//! sets D_s.
//!
//! Points store the d free coordinates; the derived coordinate
//! x_{d+1} = 1 − Σ x_i closes the simplex. All densities are evaluated in
//! log space because the x_i^{−3/2} factors overflow near the boundary.

use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, log_gamma, QuadratureSpec, RngStream};
use crate::stats::compensated_sum;

/// Points with any full coordinate below this cutoff are treated as boundary
/// points by the density evaluators (singularity error). Keeps log-space
/// arithmetic finite and explicit.
pub const INTERIOR_CUTOFF: f64 = 1e-12;

/// A point of the closed simplex Δ^(d), stored through its d free
/// coordinates. The remainder coordinate x_{d+1} = 1 − Σ x_i is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    free: Vec<f64>,
}

impl SimplexPoint {
    /// Build a point from its free coordinates. Coordinates must be finite,
    /// nonnegative, and sum to at most 1 (up to 1e−12 slack, clamped).
    pub fn new(free: Vec<f64>) -> Result<Self> {
        if free.is_empty() {
            return Err(Error::InvalidParameter(
                "simplex point needs at least one free coordinate".into(),
            ));
        }
        for (i, &v) in free.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "simplex coordinate x[{i}] = {v} must be finite and nonnegative"
                )));
            }
        }
        let sum = compensated_sum(&free);
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "free coordinates sum to {sum} > 1"
            )));
        }
        Ok(SimplexPoint { free })
    }

    /// Number of free coordinates d.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// The free coordinates x_1..x_d.
    pub fn free_coords(&self) -> &[f64] {
        &self.free
    }

    /// The derived coordinate x_{d+1} = 1 − Σ x_i, clamped at 0.
    pub fn remainder(&self) -> f64 {
        (1.0 - compensated_sum(&self.free)).max(0.0)
    }

    /// All d+1 coordinates.
    pub fn full_coords(&self) -> Vec<f64> {
        let mut full = self.free.clone();
        full.push(self.remainder());
        full
    }

    /// Smallest of the d+1 coordinates.
    pub fn min_full_coord(&self) -> f64 {
        self.full_coords()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// The barycenter of Δ^(d): all d+1 coordinates equal to 1/(d+1).
    pub fn barycenter(d: usize) -> Self {
        SimplexPoint {
            free: vec![1.0 / (d as f64 + 1.0); d],
        }
    }
}

/// Parameters of the α = 1/2 projection model: θ > −1/2 and the d+1 base
/// atom probabilities p_i (positive, summing to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: f64,
    pub p: Vec<f64>,
}

impl ModelParams {
    pub fn new(theta: f64, p: Vec<f64>) -> Result<Self> {
        if !(theta.is_finite() && theta > -0.5) {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite and > -1/2, got {theta}"
            )));
        }
        if p.len() < 2 {
            return Err(Error::InvalidParameter(
                "p needs at least 2 entries (d >= 1)".into(),
            ));
        }
        for (i, &pi) in p.iter().enumerate() {
            if !(pi.is_finite() && pi > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "p[{i}] = {pi} must be finite and positive"
                )));
            }
        }
        let sum = compensated_sum(&p);
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "p must sum to 1 within 1e-12, got {sum}"
            )));
        }
        Ok(ModelParams { theta, p })
    }

    /// Dimension d of the simplex the projection lives on (= len(p) − 1).
    pub fn dim(&self) -> usize {
        self.p.len() - 1
    }

    /// Same θ with the entries of p rearranged by `perm` (a permutation of
    /// 0..d+1). The density is symmetric under simultaneous permutation of
    /// (x_i, p_i) pairs, which is what makes this useful: integrals near a
    /// far endpoint are re-anchored at 0 by permuting p.
    pub fn permuted_p(&self, perm: &[usize]) -> Result<ModelParams> {
        let n = self.p.len();
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::InvalidParameter(format!(
                "permutation length {} != {}",
                perm.len(),
                n
            )));
        }
        for &j in perm {
            if j >= n || seen[j] {
                return Err(Error::InvalidParameter("invalid permutation".into()));
            }
            seen[j] = true;
        }
        let p = perm.iter().map(|&j| self.p[j]).collect();
        ModelParams::new(self.theta, p)
    }
}

/// Parameters α_1..α_{d+1} > 0 of the Dirichlet comparison measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    pub alphas: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidParameter(
                "Dirichlet needs at least 2 parameters".into(),
            ));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "alpha[{i}] = {a} must be finite and positive"
                )));
            }
        }
        Ok(DirichletParams { alphas })
    }

    /// The comparison choice α_i = θ + d/2 for all i: among the Dirichlet
    /// comparisons it yields the tightest perturbation envelope.
    pub fn comparison_default(mp: &ModelParams) -> Self {
        let d = mp.dim() as f64;
        DirichletParams {
            alphas: vec![mp.theta + 0.5 * d; mp.p.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.alphas.len() - 1
    }
}

fn check_dims(x: &SimplexPoint, expected: usize, what: &str) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::InvalidParameter(format!(
            "point dimension {} does not match {what} dimension {expected}",
            x.dim()
        )));
    }
    Ok(())
}

fn interior_full_coords(x: &SimplexPoint) -> Result<Vec<f64>> {
    let full = x.full_coords();
    for (i, &v) in full.iter().enumerate() {
        if v < INTERIOR_CUTOFF {
            return Err(Error::Singularity(format!(
                "coordinate x[{}] = {v} is within {INTERIOR_CUTOFF} of the boundary",
                i + 1
            )));
        }
    }
    Ok(full)
}

/// Log of the projection density
///
///   ρ(x) = C · ∏_{i≤d+1} x_i^{−3/2} · (Σ_{i≤d+1} p_i²/x_i)^{−(θ+(d+1)/2)},
///   C = Γ(θ+(d+1)/2) ∏ p_i / (π^{d/2} Γ(θ+1/2)),
///
/// evaluated at a strictly interior point.
pub fn log_density_mu(x: &SimplexPoint, mp: &ModelParams) -> Result<f64> {
    check_dims(x, mp.dim(), "model")?;
    let full = interior_full_coords(x)?;
    let d = mp.dim() as f64;
    let c_theta = mp.theta + 0.5 * (d + 1.0);
    let mut log_c = log_gamma(c_theta)? - log_gamma(mp.theta + 0.5)?
        - 0.5 * d * std::f64::consts::PI.ln();
    for &pi in &mp.p {
        log_c += pi.ln();
    }
    let mut log_pow = 0.0;
    let mut s_terms = Vec::with_capacity(full.len());
    for (&xi, &pi) in full.iter().zip(&mp.p) {
        log_pow += xi.ln();
        s_terms.push(pi * pi / xi);
    }
    let s = compensated_sum(&s_terms);
    Ok(log_c - 1.5 * log_pow - c_theta * s.ln())
}

/// Log of the Dirichlet(α_1..α_{d+1}) density on Δ^(d).
///
/// Boundary points raise a singularity error when the touching coordinate
/// has α_i < 1 (density blows up); for α_i = 1 the factor is constant and
/// for α_i > 1 the log-density is −∞ (density vanishes), both returned.
pub fn log_density_dirichlet(x: &SimplexPoint, dp: &DirichletParams) -> Result<f64> {
    check_dims(x, dp.dim(), "Dirichlet")?;
    let full = x.full_coords();
    let total: f64 = compensated_sum(&dp.alphas);
    let mut value = log_gamma(total)?;
    for &a in &dp.alphas {
        value -= log_gamma(a)?;
    }
    for (i, (&xi, &ai)) in full.iter().zip(&dp.alphas).enumerate() {
        if xi < INTERIOR_CUTOFF {
            if ai < 1.0 {
                return Err(Error::Singularity(format!(
                    "coordinate x[{}] = {xi} at the boundary with alpha = {ai} < 1",
                    i + 1
                )));
            }
            if ai > 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            // ai == 1: factor x^0 = 1 contributes nothing.
        } else {
            value += (ai - 1.0) * xi.ln();
        }
    }
    Ok(value)
}

/// The perturbation potential W(x) = log Dirichlet(x; dp) − log ρ(x; mp),
/// i.e. the log-ratio tying the comparison measure to the projection
/// measure: Dirichlet = e^W · ρ dx.
pub fn log_perturbation_w(x: &SimplexPoint, mp: &ModelParams, dp: &DirichletParams) -> Result<f64> {
    if mp.dim() != dp.dim() {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} != Dirichlet dimension {}",
            mp.dim(),
            dp.dim()
        )));
    }
    Ok(log_density_dirichlet(x, dp)? - log_density_mu(x, mp)?)
}

/// The localizing function φ(x) = Σ_{i≤d+1} x_i^{−2}. Boundary points give
/// +∞ (returned, not an error); the minimum over Δ^(d) is (d+1)³ at the
/// barycenter.
pub fn phi(x: &SimplexPoint) -> f64 {
    let mut total = 0.0;
    for v in x.full_coords() {
        if v <= 0.0 {
            return f64::INFINITY;
        }
        total += 1.0 / (v * v);
    }
    total
}

/// Minimum of φ over Δ^(d).
pub fn phi_min(d: usize) -> f64 {
    let n = (d + 1) as f64;
    n * n * n
}

/// Membership test for the sublevel set D_s = {φ ≤ s}.
pub fn in_sublevel(x: &SimplexPoint, s: f64) -> bool {
    phi(x) <= s
}

/// Random-walk Metropolis configuration. `length` counts total steps;
/// the first `burn_in` of them are discarded. `length == burn_in` is legal
/// and produces an empty sample.
#[derive(Debug, Clone, Copy)]
pub struct McmcConfig {
    pub length: usize,
    pub burn_in: usize,
    pub step_scale: f64,
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "chain length {} is shorter than burn-in {}",
                self.length, self.burn_in
            )));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step_scale must be positive, got {}",
                self.step_scale
            )));
        }
        Ok(())
    }
}

/// Output of the Metropolis sampler.
#[derive(Debug, Clone)]
pub struct McmcOutput {
    pub samples: Vec<SimplexPoint>,
    pub acceptance_rate: f64,
    /// Set when the acceptance rate leaves [0.1, 0.7]; a tuning hint, not a
    /// failure.
    pub tuning_warning: Option<String>,
}

/// Stable logistic pair: returns (v, 1−v, ln v, ln(1−v)) for v = 1/(1+e^{−z}).
fn logistic_parts(z: f64) -> (f64, f64, f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        let log_v = -e.ln_1p();
        (1.0 / (1.0 + e), e / (1.0 + e), log_v, -z + log_v)
    } else {
        let e = z.exp();
        let log_1mv = -e.ln_1p();
        (e / (1.0 + e), 1.0 / (1.0 + e), z + log_1mv, log_1mv)
    }
}

/// Map unconstrained y ∈ ℝ^d to interior free coordinates by the
/// stick-breaking logistic reparametrization, returning the point and the
/// log-Jacobian of y ↦ x. The shift ln(d+1−k) centers y = 0 at the
/// barycenter.
fn logit_to_simplex(y: &[f64]) -> (Vec<f64>, f64) {
    let d = y.len();
    let mut free = Vec::with_capacity(d);
    let mut rem = 1.0_f64;
    let mut log_jac = 0.0;
    for (k, &yk) in y.iter().enumerate() {
        let shift = ((d - k) as f64).ln();
        let (v, one_minus_v, log_v, log_1mv) = logistic_parts(yk - shift);
        free.push(rem * v);
        log_jac += rem.ln() + log_v + log_1mv;
        rem *= one_minus_v;
    }
    (free, log_jac)
}

/// Random-walk Metropolis targeting the projection density, run in the
/// unconstrained logit coordinates (with Jacobian correction) so the
/// x^{−3/2} boundary blow-up never forces hard rejections at the walls.
pub fn sample_mu_mcmc(
    mp: &ModelParams,
    config: &McmcConfig,
    rng: &mut RngStream,
) -> Result<McmcOutput> {
    config.validate()?;
    let d = mp.dim();
    let log_target = |y: &[f64]| -> f64 {
        let (free, log_jac) = logit_to_simplex(y);
        let point = match SimplexPoint::new(free) {
            Ok(p) => p,
            Err(_) => return f64::NEG_INFINITY,
        };
        match log_density_mu(&point, mp) {
            Ok(v) => v + log_jac,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut y = vec![0.0_f64; d];
    let mut log_pi = log_target(&y);
    let mut accepted = 0_usize;
    let mut samples = Vec::with_capacity(config.length - config.burn_in);
    let mut proposal = vec![0.0_f64; d];
    for step in 0..config.length {
        for (p, &yk) in proposal.iter_mut().zip(&y) {
            *p = yk + config.step_scale * rng.sample_std_normal();
        }
        let log_pi_new = log_target(&proposal);
        let log_u = rng.sample_unit_open().ln();
        if log_u < log_pi_new - log_pi {
            y.copy_from_slice(&proposal);
            log_pi = log_pi_new;
            accepted += 1;
        }
        if step >= config.burn_in {
            let (free, _) = logit_to_simplex(&y);
            samples.push(SimplexPoint::new(free)?);
        }
    }
    let acceptance_rate = if config.length == 0 {
        0.0
    } else {
        accepted as f64 / config.length as f64
    };
    let tuning_warning = if config.length > 0 && !(0.1..=0.7).contains(&acceptance_rate) {
        Some(format!(
            "acceptance rate {acceptance_rate:.3} outside [0.1, 0.7]; adjust step_scale"
        ))
    } else {
        None
    };
    Ok(McmcOutput {
        samples,
        acceptance_rate,
        tuning_warning,
    })
}

/// Floor below which quadrature closures stop evaluating the density
/// directly and continue it by its declared power law in the vanishing
/// coordinate. Chosen two decades above [`INTERIOR_CUTOFF`] so the reference
/// evaluation is always legal; the continuation's relative error is
/// O(EXTENSION_FLOOR), far below every integral tolerance, while the mass it
/// covers (up to ~floor^{θ+1/2}) is far above them for small θ.
pub const EXTENSION_FLOOR: f64 = 1e-10;

/// Power-law exponent of the projection density as a single full coordinate
/// tends to 0 with the others fixed: ρ ~ x_i^{θ + (d−2)/2}.
pub fn mu_coordinate_exponent(mp: &ModelParams) -> f64 {
    mp.theta + 0.5 * (mp.dim() as f64 - 2.0)
}

/// Density at free coordinates whose `idx`-th entry may sit below the
/// evaluable floor: continued by the declared power law in that coordinate.
///
/// The floor adapts downward when some *other* coordinate of the point is
/// itself small: the power-law reference freezes the companion coordinates,
/// which is accurate only while floor ≪ every companion (corrections are
/// O(floor / min companion)). The floor never drops below the evaluable
/// cutoff, so the reference stays legal.
fn mu_density_extended(mp: &ModelParams, free: &[f64], idx: usize) -> f64 {
    let remainder: f64 = 1.0 - free.iter().sum::<f64>();
    let min_companion = free
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != idx)
        .map(|(_, &v)| v)
        .chain(std::iter::once(remainder))
        .fold(f64::INFINITY, f64::min);
    let floor = EXTENSION_FLOOR
        .min(1e-3 * min_companion)
        .max(INTERIOR_CUTOFF);
    let xi = free[idx];
    if xi >= floor {
        return SimplexPoint::new(free.to_vec())
            .ok()
            .and_then(|x| log_density_mu(&x, mp).ok())
            .map_or(0.0, f64::exp);
    }
    if xi <= 0.0 {
        return 0.0;
    }
    let mut at_floor = free.to_vec();
    at_floor[idx] = floor;
    let reference = SimplexPoint::new(at_floor)
        .ok()
        .and_then(|x| log_density_mu(&x, mp).ok());
    match reference {
        Some(log_ref) => (log_ref + mu_coordinate_exponent(mp) * (xi.ln() - floor.ln())).exp(),
        None => 0.0,
    }
}

/// ∫ over Δ^(1) of e^{log_density_mu}: computed with each singular endpoint
/// anchored at 0 (split at 1/2, far half re-anchored by permuting p).
/// Returns (value, error_estimate).
pub fn mu_normalization_d1(mp: &ModelParams) -> Result<(f64, f64)> {
    if mp.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "mu_normalization_d1 needs d = 1, got {}",
            mp.dim()
        )));
    }
    let g = mp.theta - 0.5;
    let spec = QuadratureSpec {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_subdivisions: 400,
        endpoint_exponents: (g, 0.0),
    };
    let swapped = mp.permuted_p(&[1, 0])?;
    let (vl, el) = integrate_1d(|t: f64| mu_density_extended(mp, &[t], 0), 0.0, 0.5, &spec)?;
    let (vr, er) = integrate_1d(
        |w: f64| mu_density_extended(&swapped, &[w], 0),
        0.0,
        0.5,
        &spec,
    )?;
    Ok((vl + vr, el + er))
}

/// Mean of a free coordinate's image g(x₁) under the d = 1 projection
/// density, by the same anchored quadrature as [`mu_normalization_d1`].
pub fn mu_expectation_d1(mp: &ModelParams, g: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    if mp.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "mu_expectation_d1 needs d = 1, got {}",
            mp.dim()
        )));
    }
    let ge = mp.theta - 0.5;
    let spec = QuadratureSpec {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_subdivisions: 400,
        endpoint_exponents: (ge, 0.0),
    };
    let swapped = mp.permuted_p(&[1, 0])?;
    let (vl, el) = integrate_1d(
        |t: f64| g(t) * mu_density_extended(mp, &[t], 0),
        0.0,
        0.5,
        &spec,
    )?;
    let (vr, er) = integrate_1d(
        |w: f64| g(1.0 - w) * mu_density_extended(&swapped, &[w], 0),
        0.0,
        0.5,
        &spec,
    )?;
    Ok((vl + vr, el + er))
}

/// ∫ over Δ^(2) of e^{log_density_mu} by iterated 1-d quadrature, every
/// singular endpoint anchored at 0 through permutations of p.
pub fn mu_normalization_d2(mp: &ModelParams) -> Result<(f64, f64)> {
    if mp.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "mu_normalization_d2 needs d = 2, got {}",
            mp.dim()
        )));
    }
    let theta = mp.theta;
    // Inner tolerances one digit past the outer target.
    let inner_spec = QuadratureSpec {
        abs_tol: 1e-9,
        rel_tol: 1e-9,
        max_subdivisions: 400,
        endpoint_exponents: (theta, 0.0),
    };

    // Inner integral over x₂ ∈ (0, 1−x₁) at fixed x₁, split at the midpoint
    // with the far piece re-anchored by swapping p₂ ↔ p₃. The integration
    // variable is the second free coordinate, extended below the floor.
    let inner = |params: &ModelParams, x1: f64| -> Result<f64> {
        let h = 1.0 - x1;
        let swapped = params.permuted_p(&[0, 2, 1])?;
        let (vl, _) = integrate_1d(
            |x2: f64| mu_density_extended(params, &[x1, x2], 1),
            0.0,
            0.5 * h,
            &inner_spec,
        )?;
        let (vr, _) = integrate_1d(
            |v: f64| mu_density_extended(&swapped, &[x1, v], 1),
            0.0,
            0.5 * h,
            &inner_spec,
        )?;
        Ok(vl + vr)
    };

    // Outer near piece: x₁ ∈ (0, 1/2]. The integrated profile scales like
    // x₁^{θ−1/2} as x₁ → 0 (the inner x₂-integral crosses over at x₂ ~ x₁
    // and contributes an extra x₁^{−1/2}); below the floor, continue the
    // profile by that law.
    let outer_floor = 1e-9;
    let profile_ref = inner(mp, outer_floor)?;
    let outer_near_spec = QuadratureSpec {
        abs_tol: 5e-7,
        rel_tol: 5e-7,
        max_subdivisions: 400,
        endpoint_exponents: (theta - 0.5, 0.0),
    };
    let (v_near, e_near) = integrate_1d(
        |x1: f64| {
            if x1 >= outer_floor {
                inner(mp, x1).unwrap_or(f64::NAN)
            } else {
                profile_ref * (x1 / outer_floor).powf(theta - 0.5)
            }
        },
        0.0,
        0.5,
        &outer_near_spec,
    )?;

    // Outer far piece: x₁ = 1 − w, w ∈ (0, 1/2]. Reversing the coordinate
    // list (x₃, x₂, x₁) with p reversed turns the strip {x₁ = 1 − w} into
    // the inner-style integral ∫₀^w ρ_rev(v, w − v) dv, which scales like
    // w^{θ − 1/2} as w → 0.
    let reversed = mp.permuted_p(&[2, 1, 0])?;
    let strip = |w: f64| -> Result<f64> {
        let swapped = reversed.permuted_p(&[1, 0, 2])?;
        let strip_spec = QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 400,
            endpoint_exponents: (theta, 0.0),
        };
        let (vl, _) = integrate_1d(
            |v: f64| mu_density_extended(&reversed, &[v, w - v], 0),
            0.0,
            0.5 * w,
            &strip_spec,
        )?;
        let (vr, _) = integrate_1d(
            |v: f64| mu_density_extended(&swapped, &[v, w - v], 0),
            0.0,
            0.5 * w,
            &strip_spec,
        )?;
        Ok(vl + vr)
    };
    // The strip mass scales like w^{θ−1/2}; below the floor, continue it by
    // that law from a reference strip (quadrature nodes reach arbitrarily
    // small w through the singularity-removing substitution).
    let strip_floor = 1e-6;
    let strip_ref = strip(strip_floor)?;
    let outer_far_spec = QuadratureSpec {
        abs_tol: 5e-7,
        rel_tol: 5e-7,
        max_subdivisions: 400,
        endpoint_exponents: (theta - 0.5, 0.0),
    };
    let (v_far, e_far) = integrate_1d(
        |w: f64| {
            if w >= strip_floor {
                strip(w).unwrap_or(f64::NAN)
            } else {
                strip_ref * (w / strip_floor).powf(theta - 0.5)
            }
        },
        0.0,
        0.5,
        &outer_far_spec,
    )?;

    Ok((v_near + v_far, e_near + e_far))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_beta;
    use crate::stats::RunningMoments;
    use approx::assert_abs_diff_eq;

    fn uniform_pair(theta: f64) -> ModelParams {
        ModelParams::new(theta, vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![]).is_err());
        assert!(SimplexPoint::new(vec![-0.1]).is_err());
        assert!(SimplexPoint::new(vec![0.6, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![f64::NAN]).is_err());
        let x = SimplexPoint::new(vec![0.25, 0.25]).unwrap();
        assert_eq!(x.dim(), 2);
        assert_abs_diff_eq!(x.remainder(), 0.5, epsilon = 1e-15);
        assert_eq!(x.full_coords().len(), 3);
        // Boundary points are representable; only densities reject them.
        let b = SimplexPoint::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(b.min_full_coord(), 0.0);
    }

    #[test]
    fn model_params_validation() {
        assert!(ModelParams::new(-0.5, vec![0.5, 0.5]).is_err());
        assert!(ModelParams::new(1.0, vec![1.0]).is_err());
        assert!(ModelParams::new(1.0, vec![0.4, 0.7]).is_err());
        assert!(ModelParams::new(1.0, vec![0.0, 1.0]).is_err());
        assert!(ModelParams::new(1.0, vec![0.5, 0.5]).is_ok());
        let mp = ModelParams::new(0.0, vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(mp.dim(), 2);
        let perm = mp.permuted_p(&[2, 1, 0]).unwrap();
        assert_eq!(perm.p, vec![0.5, 0.3, 0.2]);
        assert!(mp.permuted_p(&[0, 0, 1]).is_err());
    }

    #[test]
    fn arcsine_reduction_pointwise() {
        // θ = 0, d = 1, uniform p: the density is the arcsine law
        // 1/(π√(t(1−t))).
        let mp = uniform_pair(0.0);
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        let v = log_density_mu(&x, &mp).unwrap();
        assert_abs_diff_eq!(v, (2.0 / std::f64::consts::PI).ln(), epsilon = 1e-12);
        let mut worst = 0.0_f64;
        for k in 1..=99 {
            let t = k as f64 / 100.0;
            let x = SimplexPoint::new(vec![t]).unwrap();
            let got = log_density_mu(&x, &mp).unwrap();
            let want = -(std::f64::consts::PI * (t * (1.0 - t)).sqrt()).ln();
            worst = worst.max((got - want).abs());
        }
        assert!(worst <= 1e-10, "max deviation {worst}");
    }

    #[test]
    fn symmetric_beta_reduction() {
        // d = 1 with uniform p: density is Beta(θ+1/2, θ+1/2) for any θ.
        for &theta in &[-0.25, 0.5, 1.0, 2.5] {
            let mp = uniform_pair(theta);
            let a = theta + 0.5;
            let lnb = log_beta(a, a).unwrap();
            for &t in &[0.03, 0.2, 0.5, 0.77, 0.99] {
                let x = SimplexPoint::new(vec![t]).unwrap();
                let got = log_density_mu(&x, &mp).unwrap();
                let want = -lnb + (a - 1.0) * (t.ln() + (1.0 - t).ln());
                assert_abs_diff_eq!(got, want, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn permutation_symmetry() {
        let mp = ModelParams::new(0.7, vec![0.2, 0.3, 0.5]).unwrap();
        let x = SimplexPoint::new(vec![0.15, 0.35]).unwrap();
        let base = log_density_mu(&x, &mp).unwrap();
        // Swap pairs (x₁,p₁) ↔ (x₃,p₃): point (x₃, x₂) with p reversed.
        let perm_mp = mp.permuted_p(&[2, 1, 0]).unwrap();
        let perm_x = SimplexPoint::new(vec![0.5, 0.35]).unwrap();
        let v = log_density_mu(&perm_x, &perm_mp).unwrap();
        assert_abs_diff_eq!(base, v, epsilon = 1e-12);
        // Swap (x₁,p₁) ↔ (x₂,p₂).
        let perm_mp = mp.permuted_p(&[1, 0, 2]).unwrap();
        let perm_x = SimplexPoint::new(vec![0.35, 0.15]).unwrap();
        let v = log_density_mu(&perm_x, &perm_mp).unwrap();
        assert_abs_diff_eq!(base, v, epsilon = 1e-12);
    }

    #[test]
    fn boundary_raises_singularity() {
        let mp = uniform_pair(1.0);
        let x = SimplexPoint::new(vec![0.0]).unwrap();
        assert!(matches!(
            log_density_mu(&x, &mp),
            Err(Error::Singularity(_))
        ));
        let x = SimplexPoint::new(vec![1.0]).unwrap();
        assert!(matches!(
            log_density_mu(&x, &mp),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn mu_normalizes_d1() {
        for &theta in &[-0.25, 0.0, 1.0, 2.5] {
            for p in [vec![0.5, 0.5], vec![0.3, 0.7]] {
                let mp = ModelParams::new(theta, p.clone()).unwrap();
                let (v, _) = mu_normalization_d1(&mp).unwrap();
                assert!(
                    (v - 1.0).abs() <= 1e-8,
                    "theta={theta}, p={p:?}: integral {v}"
                );
            }
        }
    }

    #[test]
    fn mu_normalizes_d2() {
        for (theta, p) in [
            (1.0, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
            (0.5, vec![0.2, 0.3, 0.5]),
            (-0.25, vec![0.25, 0.35, 0.4]),
        ] {
            let mp = ModelParams::new(theta, p.clone()).unwrap();
            let (v, _) = mu_normalization_d2(&mp).unwrap();
            assert!(
                (v - 1.0).abs() <= 1e-5,
                "theta={theta}, p={p:?}: integral {v}"
            );
        }
    }

    #[test]
    fn dirichlet_density_examples() {
        // Uniform on the simplex: all α = 1 gives ln d! everywhere.
        for d in 1..=3 {
            let dp = DirichletParams::new(vec![1.0; d + 1]).unwrap();
            let x = SimplexPoint::barycenter(d);
            let v = log_density_dirichlet(&x, &dp).unwrap();
            let want = log_gamma((d + 1) as f64).unwrap();
            assert_abs_diff_eq!(v, want, epsilon = 1e-12);
        }
        // Beta(2,1): density 2t.
        let dp = DirichletParams::new(vec![2.0, 1.0]).unwrap();
        let x = SimplexPoint::new(vec![0.3]).unwrap();
        let v = log_density_dirichlet(&x, &dp).unwrap();
        assert_abs_diff_eq!(v, (2.0 * 0.3_f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_boundary_behavior() {
        let x = SimplexPoint::new(vec![0.0]).unwrap();
        let sharp = DirichletParams::new(vec![0.7, 1.3]).unwrap();
        assert!(matches!(
            log_density_dirichlet(&x, &sharp),
            Err(Error::Singularity(_))
        ));
        let flat = DirichletParams::new(vec![1.0, 2.0]).unwrap();
        // α₁ = 1 at x₁ = 0: finite; α₂ = 2 > 1 is away from its boundary.
        let v = log_density_dirichlet(&x, &flat).unwrap();
        assert_abs_diff_eq!(v, 2.0_f64.ln() + 1.0_f64.ln(), epsilon = 1e-12);
        // α > 1 at its own boundary: density vanishes, log −∞.
        let x1 = SimplexPoint::new(vec![1.0]).unwrap();
        let v = log_density_dirichlet(&x1, &flat).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn dirichlet_normalizes() {
        let dp = DirichletParams::new(vec![0.7, 1.3]).unwrap();
        let spec = QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 400,
            endpoint_exponents: (-0.3, 0.0),
        };
        // Below the floor the density continues by its declared power law
        // t^{α₁−1}, mirroring the projection-density quadrature convention.
        let dirichlet_ext = |dp: &DirichletParams, t: f64| -> f64 {
            let a1 = dp.alphas[0];
            if t >= EXTENSION_FLOOR {
                let x = SimplexPoint::new(vec![t]).unwrap();
                log_density_dirichlet(&x, dp).unwrap().exp()
            } else {
                let x = SimplexPoint::new(vec![EXTENSION_FLOOR]).unwrap();
                let log_ref = log_density_dirichlet(&x, dp).unwrap();
                (log_ref + (a1 - 1.0) * (t.ln() - EXTENSION_FLOOR.ln())).exp()
            }
        };
        let (vl, _) = integrate_1d(|t: f64| dirichlet_ext(&dp, t), 0.0, 0.5, &spec).unwrap();
        let swapped = DirichletParams::new(vec![1.3, 0.7]).unwrap();
        let spec_r = QuadratureSpec {
            endpoint_exponents: (0.3, 0.0),
            ..spec
        };
        let (vr, _) = integrate_1d(|w: f64| dirichlet_ext(&swapped, w), 0.0, 0.5, &spec_r).unwrap();
        assert!((vl + vr - 1.0).abs() <= 1e-8, "integral {}", vl + vr);
    }

    #[test]
    fn perturbation_is_log_ratio() {
        let mp = ModelParams::new(0.8, vec![0.25, 0.35, 0.4]).unwrap();
        let dp = DirichletParams::comparison_default(&mp);
        assert_eq!(dp.alphas, vec![1.8, 1.8, 1.8]);
        let mut rng = RngStream::new(97, 0);
        for _ in 0..50 {
            let a = 0.02 + 0.9 * rng.sample_unit_open();
            let b = (1.0 - a) * (0.02 + 0.9 * rng.sample_unit_open());
            let x = SimplexPoint::new(vec![a, b]).unwrap();
            let w = log_perturbation_w(&x, &mp, &dp).unwrap();
            let lo = log_density_mu(&x, &mp).unwrap();
            let hi = log_density_dirichlet(&x, &dp).unwrap();
            assert_abs_diff_eq!(w + lo, hi, epsilon = 1e-12);
        }
    }

    #[test]
    fn perturbation_envelope_for_default_comparison() {
        // α_i = θ + d/2: e^W stays bounded above globally and bounded away
        // from 0 on every sublevel set D_s.
        let mp = ModelParams::new(1.0, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let dp = DirichletParams::comparison_default(&mp);
        let mut rng = RngStream::new(41, 3);
        let s = 10.0 * phi_min(2);
        let mut global_max = f64::NEG_INFINITY;
        let mut sublevel_min = f64::INFINITY;
        let mut n_sublevel = 0_usize;
        for _ in 0..100_000 {
            // Uniform on the simplex via normalized exponential spacings.
            let e1 = -rng.sample_unit_open().ln();
            let e2 = -rng.sample_unit_open().ln();
            let e3 = -rng.sample_unit_open().ln();
            let total = e1 + e2 + e3;
            let x = SimplexPoint::new(vec![e1 / total, e2 / total]).unwrap();
            let w = match log_perturbation_w(&x, &mp, &dp) {
                Ok(v) => v,
                Err(_) => continue,
            };
            global_max = global_max.max(w);
            if in_sublevel(&x, s) {
                sublevel_min = sublevel_min.min(w);
                n_sublevel += 1;
            }
        }
        assert!(global_max.is_finite());
        assert!(n_sublevel > 1000, "sublevel sample too small: {n_sublevel}");
        assert!(
            sublevel_min.exp() > 0.0 && sublevel_min.is_finite(),
            "inf e^W over D_s = {}",
            sublevel_min.exp()
        );
        // Monotone path diagnostic: along x = (t, (1−t)/2, (1−t)/2) the
        // potential stays inside the sampled envelope.
        for k in 1..=99 {
            let t = 0.005 + 0.99 * (k as f64 / 100.0);
            let x = SimplexPoint::new(vec![t, 0.5 * (1.0 - t)]).unwrap();
            let w = log_perturbation_w(&x, &mp, &dp).unwrap();
            assert!(
                w <= global_max + 1.0,
                "path value e^{w} above fitted envelope at t={t}"
            );
        }
    }

    #[test]
    fn phi_examples_and_minimum() {
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        assert_abs_diff_eq!(phi(&x), 8.0, epsilon = 1e-12);
        let x = SimplexPoint::barycenter(2);
        assert_abs_diff_eq!(phi(&x), 27.0, epsilon = 1e-12);
        assert_eq!(phi_min(2), 27.0);
        // Boundary gives +∞, not an error.
        let x = SimplexPoint::new(vec![0.0, 0.5]).unwrap();
        assert_eq!(phi(&x), f64::INFINITY);
        // Numeric minimizer oracle: random search never beats the barycenter.
        let mut rng = RngStream::new(5, 0);
        let mut best = f64::INFINITY;
        for _ in 0..20_000 {
            let e1 = -rng.sample_unit_open().ln();
            let e2 = -rng.sample_unit_open().ln();
            let e3 = -rng.sample_unit_open().ln();
            let total = e1 + e2 + e3;
            let x = SimplexPoint::new(vec![e1 / total, e2 / total]).unwrap();
            best = best.min(phi(&x));
        }
        assert!(best >= phi_min(2));
        assert!(best <= phi_min(2) * 1.01, "random search best {best}");
    }

    #[test]
    fn sublevel_sets_nest() {
        let mut rng = RngStream::new(6, 0);
        for _ in 0..1000 {
            let e1 = -rng.sample_unit_open().ln();
            let e2 = -rng.sample_unit_open().ln();
            let e3 = -rng.sample_unit_open().ln();
            let total = e1 + e2 + e3;
            let x = SimplexPoint::new(vec![e1 / total, e2 / total]).unwrap();
            let s = 27.0 + 1000.0 * rng.sample_unit_open();
            let s_larger = s + 500.0 * rng.sample_unit_open();
            if in_sublevel(&x, s) {
                assert!(in_sublevel(&x, s_larger));
            }
        }
    }

    #[test]
    fn mcmc_config_validation() {
        assert!(McmcConfig {
            length: 10,
            burn_in: 20,
            step_scale: 1.0
        }
        .validate()
        .is_err());
        assert!(McmcConfig {
            length: 10,
            burn_in: 2,
            step_scale: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn mcmc_empty_when_length_equals_burn_in() {
        let mp = uniform_pair(0.0);
        let config = McmcConfig {
            length: 500,
            burn_in: 500,
            step_scale: 1.0,
        };
        let mut rng = RngStream::new(7, 0);
        let out = sample_mu_mcmc(&mp, &config, &mut rng).unwrap();
        assert!(out.samples.is_empty());
        assert!(out.acceptance_rate > 0.0);
    }

    #[test]
    fn mcmc_arcsine_mean() {
        let mp = uniform_pair(0.0);
        let config = McmcConfig {
            length: 60_000,
            burn_in: 5_000,
            step_scale: 3.0,
        };
        let mut rng = RngStream::new(8, 1);
        let out = sample_mu_mcmc(&mp, &config, &mut rng).unwrap();
        assert!(
            out.tuning_warning.is_none(),
            "warning: {:?} (rate {})",
            out.tuning_warning,
            out.acceptance_rate
        );
        let xs: Vec<f64> = out.samples.iter().map(|p| p.free_coords()[0]).collect();
        let (mean, stderr) = crate::stats::batch_means(&xs, 40).unwrap();
        assert!(
            (mean - 0.5).abs() <= 3.0 * stderr,
            "mean {mean}, stderr {stderr}"
        );
    }

    #[test]
    fn mcmc_matches_quadrature_mean() {
        // d = 1, θ = 1, asymmetric p so the mean is a genuine number.
        let mp = ModelParams::new(1.0, vec![0.3, 0.7]).unwrap();
        let (quad_mean, _) = mu_expectation_d1(&mp, |t| t).unwrap();
        let config = McmcConfig {
            length: 120_000,
            burn_in: 10_000,
            step_scale: 1.1,
        };
        let mut rng = RngStream::new(9, 2);
        let out = sample_mu_mcmc(&mp, &config, &mut rng).unwrap();
        let xs: Vec<f64> = out.samples.iter().map(|p| p.free_coords()[0]).collect();
        let (mean, stderr) = crate::stats::batch_means(&xs, 40).unwrap();
        assert!(
            (mean - quad_mean).abs() <= 3.0 * stderr,
            "mcmc {mean} vs quadrature {quad_mean} (stderr {stderr})"
        );
    }

    #[test]
    fn mcmc_visits_match_density_histogram() {
        // Sharper functional check than the mean: first and second moments
        // against quadrature for θ = 0.5, p = (0.6, 0.4).
        let mp = ModelParams::new(0.5, vec![0.6, 0.4]).unwrap();
        let (m1, _) = mu_expectation_d1(&mp, |t| t).unwrap();
        let (m2, _) = mu_expectation_d1(&mp, |t| t * t).unwrap();
        let config = McmcConfig {
            length: 120_000,
            burn_in: 10_000,
            step_scale: 1.2,
        };
        let mut rng = RngStream::new(10, 4);
        let out = sample_mu_mcmc(&mp, &config, &mut rng).unwrap();
        let xs: Vec<f64> = out.samples.iter().map(|p| p.free_coords()[0]).collect();
        let (mean, se1) = crate::stats::batch_means(&xs, 40).unwrap();
        let sq: Vec<f64> = xs.iter().map(|&t| t * t).collect();
        let (mean_sq, se2) = crate::stats::batch_means(&sq, 40).unwrap();
        assert!((mean - m1).abs() <= 4.0 * se1, "m1 {mean} vs {m1} ({se1})");
        assert!(
            (mean_sq - m2).abs() <= 4.0 * se2,
            "m2 {mean_sq} vs {m2} ({se2})"
        );
        let mut moments = RunningMoments::new();
        for &t in &xs {
            moments.push(t);
        }
        assert!(moments.variance() > 0.0);
    }
}
