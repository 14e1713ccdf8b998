//! Carré du champ Γ, generator L, energy form E, and a closed-form noise
//! factorization σσᵀ = a(x) for the degenerate simplex diffusion whose
//! diffusion matrix is the Wright–Fisher covariance a_ij(x) = x_i(δ_ij − x_j).
//!
//! Everything works in the d free coordinates of Δ^(d); the implicit
//! coordinate x_{d+1} = 1 − Σx_i enters only through the drift and through
//! concrete test functions that choose to depend on it.

use crate::error::{Error, Result};
use crate::simplex_measures::{DirichletParams, ModelParams, SimplexPoint};
use nalgebra::DMatrix;

/// Cube root of machine epsilon: the standard step factor for central
/// finite differences (first differences exactly, second differences by the
/// declared fallback contract).
fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient of a black-box function of the free
/// coordinates.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut work = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        work[i] = x[i] + h;
        let fp = f(&work);
        work[i] = x[i] - h;
        let fm = f(&work);
        work[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    g
}

/// Central second-difference Hessian of a black-box function of the free
/// coordinates. Symmetric by construction.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let f0 = f(x);
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut work = x.to_vec();
    for i in 0..d {
        let hi = fd_step(x[i]);
        work[i] = x[i] + hi;
        let fp = f(&work);
        work[i] = x[i] - hi;
        let fm = f(&work);
        work[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..d {
            let hj = fd_step(x[j]);
            work[i] = x[i] + hi;
            work[j] = x[j] + hj;
            let fpp = f(&work);
            work[j] = x[j] - hj;
            let fpm = f(&work);
            work[i] = x[i] - hi;
            let fmm = f(&work);
            work[j] = x[j] + hj;
            let fmp = f(&work);
            work[i] = x[i];
            work[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// A twice-differentiable function of the free coordinates of Δ^(d).
/// Implementors may override `grad`/`hess` with exact derivatives; the
/// defaults fall back to central finite differences.
pub trait SmoothFunction {
    fn eval(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        fd_gradient(&|y: &[f64]| self.eval(y), x)
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        fd_hessian(&|y: &[f64]| self.eval(y), x)
    }
}

/// Multivariate polynomial in the free coordinates, stored as a list of
/// (coefficient, exponent-vector) monomials. Exact derivatives.
#[derive(Debug, Clone)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        for (c, e) in &terms {
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "polynomial coefficient {c} is not finite"
                )));
            }
            if e.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "monomial exponent vector has length {} but dim = {dim}",
                    e.len()
                )));
            }
        }
        Ok(Polynomial { dim, terms })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Polynomial {
            dim,
            terms: vec![(c, vec![0; dim])],
        }
    }

    /// The coordinate function x ↦ x_{i+1} (0-based index into the free
    /// coordinates).
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Polynomial {
            dim,
            terms: vec![(1.0, e)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Product polynomial, with like monomials merged.
    pub fn multiply(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.dim != other.dim {
            return Err(Error::InvalidParameter(format!(
                "polynomial dims differ: {} vs {}",
                self.dim, other.dim
            )));
        }
        let mut merged: std::collections::BTreeMap<Vec<u32>, f64> = std::collections::BTreeMap::new();
        for (ca, ea) in &self.terms {
            for (cb, eb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *merged.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        Ok(Polynomial {
            dim: self.dim,
            terms: merged.into_iter().map(|(e, c)| (c, e)).collect(),
        })
    }

    fn monomial(x: &[f64], e: &[u32]) -> f64 {
        x.iter()
            .zip(e)
            .map(|(&xi, &ei)| xi.powi(ei as i32))
            .product()
    }
}

impl SmoothFunction for Polynomial {
    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * Self::monomial(x, e))
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (c, e) in &self.terms {
            for k in 0..self.dim {
                if e[k] == 0 {
                    continue;
                }
                let mut v = c * e[k] as f64 * x[k].powi(e[k] as i32 - 1);
                for (j, (&xj, &ej)) in x.iter().zip(e).enumerate() {
                    if j != k {
                        v *= xj.powi(ej as i32);
                    }
                }
                g[k] += v;
            }
        }
        g
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut h = DMatrix::<f64>::zeros(d, d);
        for (c, e) in &self.terms {
            for k in 0..d {
                for l in k..d {
                    let v = if k == l {
                        if e[k] < 2 {
                            continue;
                        }
                        let mut v =
                            c * (e[k] * (e[k] - 1)) as f64 * x[k].powi(e[k] as i32 - 2);
                        for (j, (&xj, &ej)) in x.iter().zip(e).enumerate() {
                            if j != k {
                                v *= xj.powi(ej as i32);
                            }
                        }
                        v
                    } else {
                        if e[k] == 0 || e[l] == 0 {
                            continue;
                        }
                        let mut v = c * (e[k] * e[l]) as f64
                            * x[k].powi(e[k] as i32 - 1)
                            * x[l].powi(e[l] as i32 - 1);
                        for (j, (&xj, &ej)) in x.iter().zip(e).enumerate() {
                            if j != k && j != l {
                                v *= xj.powi(ej as i32);
                            }
                        }
                        v
                    };
                    h[(k, l)] += v;
                    if k != l {
                        h[(l, k)] += v;
                    }
                }
            }
        }
        h
    }
}

/// f(x) = Σ x_i^{1/4} over the free coordinates, optionally including the
/// implicit remainder coordinate. The quarter power is the Lipschitz-in-Γ
/// test function used by the isoperimetric and flux scans. Exact
/// derivatives; interior points only.
#[derive(Debug, Clone, Copy)]
pub struct QuarterPowerSum {
    pub dim: usize,
    pub include_remainder: bool,
}

impl SmoothFunction for QuarterPowerSum {
    fn eval(&self, x: &[f64]) -> f64 {
        let mut s: f64 = x.iter().map(|&v| v.powf(0.25)).sum();
        if self.include_remainder {
            let rem = 1.0 - x.iter().sum::<f64>();
            s += rem.powf(0.25);
        }
        s
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let rem_part = if self.include_remainder {
            let rem = 1.0 - x.iter().sum::<f64>();
            0.25 * rem.powf(-0.75)
        } else {
            0.0
        };
        x.iter()
            .map(|&v| 0.25 * v.powf(-0.75) - rem_part)
            .collect()
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let rem_part = if self.include_remainder {
            let rem = 1.0 - x.iter().sum::<f64>();
            -0.1875 * rem.powf(-1.75)
        } else {
            0.0
        };
        let mut h = DMatrix::<f64>::from_element(d, d, rem_part);
        for i in 0..d {
            h[(i, i)] += -0.1875 * x[i].powf(-1.75);
        }
        h
    }
}

/// The localizing function φ(x) = Σ_{i ≤ d+1} x_i^{−2} as a smooth function
/// of the free coordinates. Exact derivatives; interior points only.
#[derive(Debug, Clone, Copy)]
pub struct PhiFunction {
    pub dim: usize,
}

impl SmoothFunction for PhiFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        let rem = 1.0 - x.iter().sum::<f64>();
        x.iter().map(|&v| 1.0 / (v * v)).sum::<f64>() + 1.0 / (rem * rem)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let rem = 1.0 - x.iter().sum::<f64>();
        let rem_part = 2.0 / (rem * rem * rem);
        x.iter().map(|&v| -2.0 / (v * v * v) + rem_part).collect()
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let rem = 1.0 - x.iter().sum::<f64>();
        let rem_part = 6.0 / (rem * rem * rem * rem);
        let mut h = DMatrix::<f64>::from_element(d, d, rem_part);
        for i in 0..d {
            h[(i, i)] += 6.0 / x[i].powi(4);
        }
        h
    }
}

/// The log perturbation W = log(ρ_Dirichlet / ρ_μ) as a smooth function,
/// with exact derivatives via the closed form
/// W(x) = C + Σ_{i ≤ d+1} (α_i + ½) ln x_i + (θ + (d+1)/2) ln Σ p_j²/x_j.
#[derive(Debug, Clone)]
pub struct WFunction {
    mp: ModelParams,
    kappas: Vec<f64>,
    c_theta: f64,
    constant: f64,
}

impl WFunction {
    pub fn new(mp: ModelParams, dp: DirichletParams) -> Result<Self> {
        if mp.dim() != dp.dim() {
            return Err(Error::InvalidParameter(format!(
                "model dimension {} != Dirichlet dimension {}",
                mp.dim(),
                dp.dim()
            )));
        }
        use crate::numerics::special::log_gamma;
        let d = mp.dim() as f64;
        let alpha_sum: f64 = dp.alphas.iter().sum();
        let log_dir_const = log_gamma(alpha_sum)?
            - dp
                .alphas
                .iter()
                .map(|&a| log_gamma(a))
                .sum::<Result<f64>>()?;
        let log_mu_const = log_gamma(mp.theta + 0.5 * (d + 1.0))? - log_gamma(mp.theta + 0.5)?
            - 0.5 * d * std::f64::consts::PI.ln()
            + mp.p.iter().map(|&pi| pi.ln()).sum::<f64>();
        let kappas = dp.alphas.iter().map(|&a| a + 0.5).collect();
        let c_theta = mp.theta + 0.5 * (d + 1.0);
        Ok(WFunction {
            mp,
            kappas,
            c_theta,
            constant: log_dir_const - log_mu_const,
        })
    }

    fn s_of(&self, x: &[f64], rem: f64) -> f64 {
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            s += self.mp.p[i] * self.mp.p[i] / xi;
        }
        let p_last = self.mp.p[x.len()];
        s + p_last * p_last / rem
    }
}

impl SmoothFunction for WFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        let rem = 1.0 - x.iter().sum::<f64>();
        let mut v = self.constant + self.c_theta * self.s_of(x, rem).ln();
        for (i, &xi) in x.iter().enumerate() {
            v += self.kappas[i] * xi.ln();
        }
        v + self.kappas[x.len()] * rem.ln()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let rem = 1.0 - x.iter().sum::<f64>();
        let s = self.s_of(x, rem);
        let p_last = self.mp.p[d];
        let ds_last = p_last * p_last / (rem * rem);
        (0..d)
            .map(|k| {
                let ds_k = -self.mp.p[k] * self.mp.p[k] / (x[k] * x[k]) + ds_last;
                self.kappas[k] / x[k] - self.kappas[d] / rem + self.c_theta * ds_k / s
            })
            .collect()
    }

    fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        let rem = 1.0 - x.iter().sum::<f64>();
        let s = self.s_of(x, rem);
        let p_last = self.mp.p[d];
        let ds_last = p_last * p_last / (rem * rem);
        let d2s_last = 2.0 * p_last * p_last / (rem * rem * rem);
        let ds: Vec<f64> = (0..d)
            .map(|k| -self.mp.p[k] * self.mp.p[k] / (x[k] * x[k]) + ds_last)
            .collect();
        let mut h = DMatrix::<f64>::zeros(d, d);
        for k in 0..d {
            for l in k..d {
                let mut d2s = d2s_last;
                if k == l {
                    d2s += 2.0 * self.mp.p[k] * self.mp.p[k] / (x[k] * x[k] * x[k]);
                }
                let mut v = -self.kappas[d] / (rem * rem)
                    + self.c_theta * (d2s / s - ds[k] * ds[l] / (s * s));
                if k == l {
                    v -= self.kappas[k] / (x[k] * x[k]);
                }
                h[(k, l)] = v;
                h[(l, k)] = v;
            }
        }
        h
    }
}

pub(crate) fn require_interior(x: &SimplexPoint) -> Result<()> {
    if x.min_full_coord() <= 0.0 {
        return Err(Error::Singularity(format!(
            "operator evaluation needs an interior point; min coordinate = {}",
            x.min_full_coord()
        )));
    }
    Ok(())
}

/// The diffusion matrix a_ij(x) = x_i(δ_ij − x_j) on the free coordinates.
pub fn diffusion_matrix(x: &SimplexPoint) -> DMatrix<f64> {
    let f = x.free_coords();
    let d = f.len();
    DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        f[i] * (delta - f[j])
    })
}

/// Carré du champ Γ(f,g)(x) = Σ_{ij} x_i(δ_ij − x_j) ∂_i f ∂_j g, computed
/// in O(d) via Γ = Σ x_i u_i v_i − (Σ x_i u_i)(Σ x_i v_i).
pub fn carre_du_champ(
    f: &dyn SmoothFunction,
    g: &dyn SmoothFunction,
    x: &SimplexPoint,
) -> Result<f64> {
    require_interior(x)?;
    let free = x.free_coords();
    let u = f.grad(free);
    let v = g.grad(free);
    let mut diag = 0.0;
    let mut xu = 0.0;
    let mut xv = 0.0;
    for i in 0..free.len() {
        diag += free[i] * u[i] * v[i];
        xu += free[i] * u[i];
        xv += free[i] * v[i];
    }
    Ok(diag - xu * xv)
}

/// Generator L f(x) = ½ Σ a_ij ∂_ij f + Σ b_i ∂_i f with drift
/// b_i = ½(−½ − θ x_i + (θ + (d+1)/2)(p_i²/x_i)/(Σ_{j ≤ d+1} p_j²/x_j)).
pub fn generator(f: &dyn SmoothFunction, x: &SimplexPoint, mp: &ModelParams) -> Result<f64> {
    if mp.dim() != x.dim() {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} != point dimension {}",
            mp.dim(),
            x.dim()
        )));
    }
    require_interior(x)?;
    let free = x.free_coords();
    let d = free.len();
    let h = f.hess(free);
    let mut second = 0.0;
    for i in 0..d {
        second += free[i] * h[(i, i)];
        for j in 0..d {
            second -= free[i] * free[j] * h[(i, j)];
        }
    }
    let full = x.full_coords();
    let s: f64 = full
        .iter()
        .zip(&mp.p)
        .map(|(&xi, &pi)| pi * pi / xi)
        .sum();
    let c_theta = mp.theta + 0.5 * (d as f64 + 1.0);
    let grad = f.grad(free);
    let mut drift = 0.0;
    for i in 0..d {
        let b_i =
            0.5 * (-0.5 - mp.theta * free[i] + c_theta * (mp.p[i] * mp.p[i] / free[i]) / s);
        drift += b_i * grad[i];
    }
    Ok(0.5 * second + drift)
}

/// Drift vector b(x) of the generator in the free coordinates (shared with
/// the trajectory simulator).
pub fn drift(x: &SimplexPoint, mp: &ModelParams) -> Result<Vec<f64>> {
    if mp.dim() != x.dim() {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} != point dimension {}",
            mp.dim(),
            x.dim()
        )));
    }
    require_interior(x)?;
    let free = x.free_coords();
    let full = x.full_coords();
    let s: f64 = full
        .iter()
        .zip(&mp.p)
        .map(|(&xi, &pi)| pi * pi / xi)
        .sum();
    let c_theta = mp.theta + 0.5 * (free.len() as f64 + 1.0);
    Ok((0..free.len())
        .map(|i| {
            0.5 * (-0.5 - mp.theta * free[i] + c_theta * (mp.p[i] * mp.p[i] / free[i]) / s)
        })
        .collect())
}

/// Monte Carlo energy E(f,f) = ½ ⟨Γ(f,f)⟩_μ over the given samples,
/// returned as (value, stderr). The standard error uses batch means (50
/// batches when the sample is long enough), so correlated chains from the
/// Metropolis sampler are handled honestly; for independent samples batch
/// means is simply a mildly noisier estimate of the iid stderr.
pub fn energy(
    f: &dyn SmoothFunction,
    mp: &ModelParams,
    samples: &[SimplexPoint],
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "energy needs a nonempty sample set".into(),
        ));
    }
    let mut values = Vec::with_capacity(samples.len());
    for x in samples {
        if x.dim() != mp.dim() {
            return Err(Error::InvalidParameter(format!(
                "sample dimension {} != model dimension {}",
                x.dim(),
                mp.dim()
            )));
        }
        values.push(0.5 * carre_du_champ(f, f, x)?);
    }
    if values.len() >= 100 {
        crate::stats::batch_means(&values, 50)
    } else {
        let mut m = crate::stats::RunningMoments::new();
        for &v in &values {
            m.push(v);
        }
        Ok((m.mean(), m.stderr()))
    }
}

/// Closed-form factor σ(x) = diag(√x)(I − c·uuᵀ) with u_i = √x_i and
/// c = 1/(1 + √(1−s)), s = Σ x_i, satisfying σσᵀ = a(x) exactly for s < 1.
/// When the remainder coordinate degenerates (s ≥ 1), falls back to the
/// symmetric PSD square root by eigendecomposition.
pub fn sigma_factor(x: &SimplexPoint) -> DMatrix<f64> {
    let free = x.free_coords();
    let d = free.len();
    let s: f64 = free.iter().sum();
    if s < 1.0 {
        // c = (1 − √(1−s))/s written cancellation-free.
        let c = 1.0 / (1.0 + (1.0 - s).sqrt());
        let sqrt_x: Vec<f64> = free.iter().map(|&v| v.sqrt()).collect();
        DMatrix::from_fn(d, d, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            sqrt_x[i] * delta - c * free[i] * sqrt_x[j]
        })
    } else {
        let a = diffusion_matrix(x);
        let eig = a.symmetric_eigen();
        let mut sqrt_vals = eig.eigenvalues.clone();
        for v in sqrt_vals.iter_mut() {
            *v = v.max(0.0).sqrt();
        }
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;
    use crate::simplex_measures::{log_perturbation_w, mu_expectation_d1, phi, McmcConfig};

    /// Wrapper that hides exact derivatives, forcing the finite-difference
    /// fallbacks.
    struct EvalOnly<'a>(&'a dyn SmoothFunction);
    impl SmoothFunction for EvalOnly<'_> {
        fn eval(&self, x: &[f64]) -> f64 {
            self.0.eval(x)
        }
    }

    /// e^f with exact chain-rule derivatives, for the chain-rule property.
    struct ExpOf<'a>(&'a dyn SmoothFunction);
    impl SmoothFunction for ExpOf<'_> {
        fn eval(&self, x: &[f64]) -> f64 {
            self.0.eval(x).exp()
        }
        fn grad(&self, x: &[f64]) -> Vec<f64> {
            let e = self.eval(x);
            self.0.grad(x).into_iter().map(|g| e * g).collect()
        }
        fn hess(&self, x: &[f64]) -> DMatrix<f64> {
            let e = self.eval(x);
            let g = self.0.grad(x);
            let d = x.len();
            let mut h = self.0.hess(x);
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] = e * (h[(i, j)] + g[i] * g[j]);
                }
            }
            h
        }
    }

    fn random_interior(d: usize, rng: &mut RngStream) -> SimplexPoint {
        // Dirichlet(1,..,1)-distributed interior point via exponential spacings.
        loop {
            let e: Vec<f64> = (0..=d)
                .map(|_| -rng.sample_unit_open().ln())
                .collect();
            let total: f64 = e.iter().sum();
            let free: Vec<f64> = e[..d].iter().map(|&v| v / total).collect();
            if free.iter().all(|&v| v > 1e-4) && e[d] / total > 1e-4 {
                return SimplexPoint::new(free).unwrap();
            }
        }
    }

    fn random_polynomial(d: usize, rng: &mut RngStream) -> Polynomial {
        let n_terms = 3;
        let terms = (0..n_terms)
            .map(|_| {
                let c = 2.0 * rng.sample_unit_open() - 1.0;
                let e: Vec<u32> = (0..d)
                    .map(|_| (rng.sample_unit_open() * 3.0) as u32)
                    .collect();
                (c, e)
            })
            .collect();
        Polynomial::new(d, terms).unwrap()
    }

    #[test]
    fn carre_examples() {
        // f = g = x₁ on Δ^(1): Γ = x(1−x) = 0.25 at x = 1/2.
        let f = Polynomial::coordinate(1, 0);
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        assert!((carre_du_champ(&f, &f, &x).unwrap() - 0.25).abs() < 1e-15);

        // f = x_i, g = x_j with i ≠ j: Γ = −x_i x_j.
        let mut rng = RngStream::new(31, 0);
        let x = random_interior(3, &mut rng);
        let fi = Polynomial::coordinate(3, 0);
        let fj = Polynomial::coordinate(3, 2);
        let expect = -x.free_coords()[0] * x.free_coords()[2];
        assert!((carre_du_champ(&fi, &fj, &x).unwrap() - expect).abs() < 1e-15);

        // Constant f kills Γ for any g.
        let c = Polynomial::constant(3, 4.2);
        let g = random_polynomial(3, &mut rng);
        assert_eq!(carre_du_champ(&c, &g, &x).unwrap(), 0.0);
    }

    #[test]
    fn carre_nonnegative_on_diagonal() {
        let mut rng = RngStream::new(32, 0);
        for d in [1usize, 2, 5] {
            for _ in 0..50 {
                let x = random_interior(d, &mut rng);
                let f = random_polynomial(d, &mut rng);
                let v = carre_du_champ(&f, &f, &x).unwrap();
                assert!(v >= -1e-12, "Gamma(f,f) = {v} < 0 at d={d}");
            }
        }
    }

    #[test]
    fn carre_rejects_boundary() {
        let f = Polynomial::coordinate(1, 0);
        let x = SimplexPoint::new(vec![0.0]).unwrap();
        assert!(matches!(
            carre_du_champ(&f, &f, &x),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn product_rule() {
        let mut rng = RngStream::new(33, 0);
        for d in [2usize, 3] {
            for _ in 0..20 {
                let x = random_interior(d, &mut rng);
                let f = random_polynomial(d, &mut rng);
                let g = random_polynomial(d, &mut rng);
                let h = random_polynomial(d, &mut rng);
                let fg = f.multiply(&g).unwrap();
                let lhs = carre_du_champ(&fg, &h, &x).unwrap();
                let rhs = f.eval(x.free_coords()) * carre_du_champ(&g, &h, &x).unwrap()
                    + g.eval(x.free_coords()) * carre_du_champ(&f, &h, &x).unwrap();
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())),
                    "product rule off: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn chain_rule() {
        // ψ = exp: Γ(e^f, g) = e^f Γ(f, g).
        let mut rng = RngStream::new(34, 0);
        for _ in 0..20 {
            let x = random_interior(2, &mut rng);
            let f = random_polynomial(2, &mut rng);
            let g = random_polynomial(2, &mut rng);
            let ef = ExpOf(&f);
            let lhs = carre_du_champ(&ef, &g, &x).unwrap();
            let rhs = f.eval(x.free_coords()).exp() * carre_du_champ(&f, &g, &x).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())),
                "chain rule off: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = RngStream::new(35, 0);
        let mp = ModelParams::new(1.0, vec![0.2, 0.35, 0.45]).unwrap();
        let dp = DirichletParams::comparison_default(&mp);
        let w = WFunction::new(mp, dp).unwrap();
        let quarter = QuarterPowerSum {
            dim: 2,
            include_remainder: true,
        };
        let phi_f = PhiFunction { dim: 2 };
        let funcs: Vec<&dyn SmoothFunction> = vec![&w, &quarter, &phi_f];
        for _ in 0..25 {
            let x = random_interior(2, &mut rng);
            let poly = random_polynomial(2, &mut rng);
            let mut all: Vec<&dyn SmoothFunction> = funcs.clone();
            all.push(&poly);
            for f in all {
                let exact = f.grad(x.free_coords());
                let fd = fd_gradient(&|y: &[f64]| f.eval(y), x.free_coords());
                for (e, a) in exact.iter().zip(&fd) {
                    let tol = (1e-4 * e.abs()).max(1e-6);
                    assert!(
                        (e - a).abs() <= tol,
                        "grad mismatch at {:?}: exact {e}, fd {a}",
                        x.free_coords()
                    );
                }
                let h = f.hess(x.free_coords());
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-9 * (1.0 + h[(i, j)].abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn hessian_fallback_matches_exact() {
        let mut rng = RngStream::new(36, 0);
        for _ in 0..10 {
            let x = random_interior(2, &mut rng);
            let f = random_polynomial(2, &mut rng);
            let hidden = EvalOnly(&f);
            let exact = f.hess(x.free_coords());
            let fallback = hidden.hess(x.free_coords());
            for i in 0..2 {
                for j in 0..2 {
                    let tol = (1e-4 * exact[(i, j)].abs()).max(5e-5);
                    assert!(
                        (exact[(i, j)] - fallback[(i, j)]).abs() <= tol,
                        "hess fallback off at ({i},{j}): {} vs {}",
                        exact[(i, j)],
                        fallback[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn full_coordinate_symmetric_identity() {
        // For the symmetric function φ = Σ_{i≤d+1} x_i^{−2}, the free-coordinate
        // Γ must equal the full-coordinate expression
        // Σ x_i (∂̂φ)² − (Σ x_i ∂̂φ)² = 4(Σ x_i^{−5} − φ²).
        let mut rng = RngStream::new(37, 0);
        for d in [1usize, 2, 4] {
            let phi_f = PhiFunction { dim: d };
            for _ in 0..20 {
                let x = random_interior(d, &mut rng);
                let lhs = carre_du_champ(&phi_f, &phi_f, &x).unwrap();
                let full = x.full_coords();
                let inv5: f64 = full.iter().map(|&v| v.powi(-5)).sum();
                let rhs = 4.0 * (inv5 - phi(&x) * phi(&x));
                assert!(
                    (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()),
                    "full-coordinate identity off at d={d}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn generator_examples() {
        // Symmetric d=1 point: drift vanishes, f = x has no curvature.
        let mp = ModelParams::new(0.0, vec![0.5, 0.5]).unwrap();
        let f = Polynomial::coordinate(1, 0);
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        assert!(generator(&f, &x, &mp).unwrap().abs() < 1e-15);

        // Constants are killed everywhere.
        let c = Polynomial::constant(2, -3.0);
        let mp2 = ModelParams::new(0.7, vec![0.3, 0.3, 0.4]).unwrap();
        let mut rng = RngStream::new(38, 0);
        for _ in 0..10 {
            let x = random_interior(2, &mut rng);
            assert_eq!(generator(&c, &x, &mp2).unwrap(), 0.0);
        }

        // Boundary rejected.
        let xb = SimplexPoint::new(vec![0.0, 0.5]).unwrap();
        assert!(matches!(
            generator(&c, &xb, &mp2),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn generator_jacobi_eigenfunctions() {
        // d = 1, p = (1/2, 1/2), θ = 1: the drift is b(x) = (3/2)(1/2 − x), and
        // the Jacobi-type eigenfunctions f₁ = x − ½, f₂ = (x−½)² − 1/16
        // satisfy L f_n = −λ_n f_n with λ_n = n(n + 2θ)/2, i.e. λ₁ = 3/2,
        // λ₂ = 4.
        let mp = ModelParams::new(1.0, vec![0.5, 0.5]).unwrap();
        let f1 = Polynomial::new(1, vec![(1.0, vec![1]), (-0.5, vec![0])]).unwrap();
        let f2 = Polynomial::new(
            1,
            vec![(1.0, vec![2]), (-1.0, vec![1]), (0.25 - 1.0 / 16.0, vec![0])],
        )
        .unwrap();
        let mut rng = RngStream::new(39, 0);
        for _ in 0..20 {
            let x = random_interior(1, &mut rng);
            let free = x.free_coords();
            let l1 = generator(&f1, &x, &mp).unwrap();
            assert!(
                (l1 + 1.5 * f1.eval(free)).abs() < 1e-12,
                "lambda_1 mismatch at {free:?}"
            );
            let l2 = generator(&f2, &x, &mp).unwrap();
            assert!(
                (l2 + 4.0 * f2.eval(free)).abs() < 1e-12,
                "lambda_2 mismatch at {free:?}"
            );
        }
    }

    #[test]
    fn generator_vanishes_in_mean() {
        // Reversibility: μ(Lf) = 0. Estimated over a Metropolis chain with
        // batch-means error bars.
        let mp = ModelParams::new(1.0, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let cfg = McmcConfig {
            length: 60_000,
            burn_in: 5_000,
            step_scale: 1.0,
        };
        let mut rng = RngStream::new(40, 0);
        let out = crate::simplex_measures::sample_mu_mcmc(&mp, &cfg, &mut rng).unwrap();
        let f = Polynomial::new(
            2,
            vec![(1.0, vec![1, 0]), (1.0, vec![1, 1]), (-0.3, vec![0, 2])],
        )
        .unwrap();
        let values: Vec<f64> = out
            .samples
            .iter()
            .map(|x| generator(&f, x, &mp).unwrap())
            .collect();
        let (mean, stderr) = crate::stats::batch_means(&values, 50).unwrap();
        assert!(
            mean.abs() <= 4.0 * stderr,
            "mean L f = {mean} exceeds 4 x {stderr}"
        );
    }

    #[test]
    fn energy_examples() {
        let mp = ModelParams::new(1.0, vec![0.5, 0.5]).unwrap();
        let mut rng = RngStream::new(41, 0);
        let samples: Vec<SimplexPoint> = (0..500).map(|_| random_interior(1, &mut rng)).collect();

        // Constant: exactly (0, 0).
        let c = Polynomial::constant(1, 2.0);
        let (v, se) = energy(&c, &mp, &samples).unwrap();
        assert_eq!((v, se), (0.0, 0.0));

        // Quadratic form: energy(2f) = 4 energy(f) on the same samples.
        let f = random_polynomial(1, &mut rng);
        let two_f = Polynomial::constant(1, 2.0).multiply(&f).unwrap();
        let (v1, _) = energy(&f, &mp, &samples).unwrap();
        let (v4, _) = energy(&two_f, &mp, &samples).unwrap();
        assert!((v4 - 4.0 * v1).abs() <= 1e-12 * v4.abs().max(1.0));

        // Empty sample set is a domain error.
        assert!(matches!(
            energy(&f, &mp, &[]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn energy_matches_quadrature() {
        // d=1, θ=1, p=(1/2,1/2), f(x)=x: E(f,f) = ½ E[x(1−x)] by quadrature.
        let mp = ModelParams::new(1.0, vec![0.5, 0.5]).unwrap();
        let cfg = McmcConfig {
            length: 60_000,
            burn_in: 5_000,
            step_scale: 1.6,
        };
        let mut rng = RngStream::new(42, 0);
        let out = crate::simplex_measures::sample_mu_mcmc(&mp, &cfg, &mut rng).unwrap();
        let f = Polynomial::coordinate(1, 0);
        let (value, stderr) = energy(&f, &mp, &out.samples).unwrap();
        let (expect, qerr) = mu_expectation_d1(&mp, |t| 0.5 * t * (1.0 - t)).unwrap();
        assert!(
            (value - expect).abs() <= 3.0 * stderr + qerr,
            "energy {value} +- {stderr} vs quadrature {expect}"
        );
    }

    #[test]
    fn integration_by_parts() {
        // Reversibility of the form: μ(Γ(f,g)) = 2 E(f,g) = −2 μ(f·Lg).
        let mp = ModelParams::new(1.0, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let cfg = McmcConfig {
            length: 80_000,
            burn_in: 5_000,
            step_scale: 1.0,
        };
        let mut rng = RngStream::new(43, 0);
        let out = crate::simplex_measures::sample_mu_mcmc(&mp, &cfg, &mut rng).unwrap();
        let pairs = [
            (Polynomial::coordinate(2, 0), Polynomial::coordinate(2, 1)),
            (
                Polynomial::new(2, vec![(1.0, vec![1, 1])]).unwrap(),
                Polynomial::new(2, vec![(1.0, vec![2, 0])]).unwrap(),
            ),
        ];
        for (f, g) in pairs {
            let values: Vec<f64> = out
                .samples
                .iter()
                .map(|x| {
                    carre_du_champ(&f, &g, x).unwrap()
                        + 2.0 * f.eval(x.free_coords()) * generator(&g, x, &mp).unwrap()
                })
                .collect();
            let (mean, stderr) = crate::stats::batch_means(&values, 50).unwrap();
            assert!(
                mean.abs() <= 4.0 * stderr,
                "IBP defect {mean} exceeds 4 x {stderr}"
            );
        }
    }

    #[test]
    fn sigma_scalar_case() {
        let x = SimplexPoint::new(vec![0.25]).unwrap();
        let sigma = sigma_factor(&x);
        assert!((sigma[(0, 0)] - 0.433_012_701_892_219_3).abs() < 1e-15);
    }

    #[test]
    fn sigma_factorizes_diffusion_matrix() {
        let mut rng = RngStream::new(44, 0);
        for d in [2usize, 5, 10] {
            for _ in 0..1000 / d as u32 {
                let x = random_interior(d, &mut rng);
                let sigma = sigma_factor(&x);
                let a = diffusion_matrix(&x);
                let resid = &sigma * sigma.transpose() - &a;
                let max = resid.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                assert!(max <= 1e-12, "residual {max} at d={d}");
            }
        }
    }

    #[test]
    fn sigma_at_barycenter() {
        for d in [2usize, 5, 10] {
            let x = SimplexPoint::barycenter(d);
            let sigma = sigma_factor(&x);
            assert!(sigma.iter().all(|v| v.is_finite()));
            let a = diffusion_matrix(&x);
            let resid = &sigma * sigma.transpose() - &a;
            let max = resid.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            assert!(max <= 1e-12, "barycenter residual {max} at d={d}");
        }
    }

    #[test]
    fn sigma_eigen_fallback_on_degenerate_remainder() {
        // Free coordinates summing to exactly 1 (remainder 0) force the
        // eigendecomposition path; the factorization must still hold.
        let x = SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap();
        assert_eq!(x.remainder(), 0.0);
        let sigma = sigma_factor(&x);
        assert!(sigma.iter().all(|v| v.is_finite()));
        let a = diffusion_matrix(&x);
        let resid = &sigma * sigma.transpose() - &a;
        let max = resid.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max <= 1e-12, "fallback residual {max}");
    }

    #[test]
    fn diffusion_matrix_is_symmetric_psd() {
        let mut rng = RngStream::new(45, 0);
        for _ in 0..50 {
            let x = random_interior(4, &mut rng);
            let a = diffusion_matrix(&x);
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(a[(i, j)], a[(j, i)]);
                }
            }
            let eig = a.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        }
    }

    #[test]
    fn w_function_matches_log_ratio() {
        let mp = ModelParams::new(0.8, vec![0.25, 0.3, 0.45]).unwrap();
        let dp = DirichletParams::new(vec![1.4, 2.0, 0.9]).unwrap();
        let w = WFunction::new(mp.clone(), dp.clone()).unwrap();
        let mut rng = RngStream::new(46, 0);
        for _ in 0..25 {
            let x = random_interior(2, &mut rng);
            let direct = log_perturbation_w(&x, &mp, &dp).unwrap();
            let viaw = w.eval(x.free_coords());
            assert!(
                (direct - viaw).abs() <= 1e-11 * (1.0 + direct.abs()),
                "W mismatch: {direct} vs {viaw}"
            );
        }
    }

    #[test]
    fn drift_matches_generator_on_coordinates() {
        let mp = ModelParams::new(0.6, vec![0.2, 0.5, 0.3]).unwrap();
        let mut rng = RngStream::new(47, 0);
        for _ in 0..10 {
            let x = random_interior(2, &mut rng);
            let b = drift(&x, &mp).unwrap();
            for i in 0..2 {
                let f = Polynomial::coordinate(2, i);
                let l = generator(&f, &x, &mp).unwrap();
                assert!((l - b[i]).abs() <= 1e-14 * (1.0 + b[i].abs()));
            }
        }
    }
}
