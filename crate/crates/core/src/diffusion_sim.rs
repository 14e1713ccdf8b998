//! Euler–Maruyama simulation of the reversible simplex diffusion with
//! generator L (tamed drift, boundary clamping) and validation that the
//! stick-breaking projection measure is its invariant distribution.

use crate::dirichlet_form::{drift, sigma_factor, SmoothFunction};
use crate::error::{Error, Result};
use crate::numerics::rng::RngStream;
use crate::simplex_measures::{mu_expectation_d1, sample_mu_mcmc, McmcConfig, ModelParams,
    SimplexPoint};
use rayon::prelude::*;

/// Euler–Maruyama configuration. `thinning` records every that-many-th step.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub step_h: f64,
    pub n_steps: usize,
    pub boundary_eps: f64,
    pub thinning: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step_h: 1e-4,
            n_steps: 1_000_000,
            boundary_eps: 1e-8,
            thinning: 100,
        }
    }
}

impl SimConfig {
    /// Validates against the simplex dimension: the clamp shell must be
    /// strictly inside the simplex, boundary_eps < 1/(2(d+1)).
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.step_h.is_finite() && self.step_h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step_h must be positive, got {}",
                self.step_h
            )));
        }
        let cap = 1.0 / (2.0 * (d as f64 + 1.0));
        if !(self.boundary_eps > 0.0 && self.boundary_eps < cap) {
            return Err(Error::InvalidParameter(format!(
                "boundary_eps must lie in (0, {cap}), got {}",
                self.boundary_eps
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be >= 1".into()));
        }
        Ok(())
    }
}

/// A thinned trajectory. `states[0]` is the initial point; one state is
/// appended after every `thinning` steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SimplexPoint>,
    pub clamp_count: usize,
    pub n_steps: usize,
    pub step_h: f64,
    pub thinning: usize,
}

impl Trajectory {
    pub fn clamp_fraction(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.clamp_count as f64 / self.n_steps as f64
        }
    }
}

/// Project all d+1 coordinates to ≥ boundary_eps, paying the raised mass out
/// of the largest coordinate. Returns the clamped free coordinates and
/// whether anything moved.
fn clamp_full(full: &mut [f64], boundary_eps: f64) -> bool {
    let mut excess = 0.0;
    for v in full.iter_mut() {
        if *v < boundary_eps {
            excess += boundary_eps - *v;
            *v = boundary_eps;
        }
    }
    if excess == 0.0 {
        return false;
    }
    let argmax = full
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    full[argmax] -= excess;
    true
}

/// One Euler–Maruyama step driven by the provided standard-normal vector ξ:
/// x′ = clamp(x + b̃(x)h + σ(x)√h ξ) with the tamed drift b̃ = b/(1 + h|b|).
/// Returns the new point and whether the clamp fired.
pub fn em_step_given_noise(
    x: &SimplexPoint,
    mp: &ModelParams,
    step_h: f64,
    boundary_eps: f64,
    xi: &[f64],
) -> Result<(SimplexPoint, bool)> {
    let d = x.dim();
    if xi.len() != d {
        return Err(Error::InvalidParameter(format!(
            "noise vector length {} != dimension {d}",
            xi.len()
        )));
    }
    let b = drift(x, mp)?;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tame = 1.0 / (1.0 + step_h * norm_b);
    let sigma = sigma_factor(x);
    let sqrt_h = step_h.sqrt();
    let free = x.free_coords();
    let mut proposed = Vec::with_capacity(d + 1);
    for i in 0..d {
        let mut noise = 0.0;
        for (j, &xj) in xi.iter().enumerate() {
            noise += sigma[(i, j)] * xj;
        }
        proposed.push(free[i] + b[i] * tame * step_h + sqrt_h * noise);
    }
    let rem = 1.0 - proposed.iter().sum::<f64>();
    proposed.push(rem);
    let clamped = clamp_full(&mut proposed, boundary_eps);
    proposed.pop();
    Ok((SimplexPoint::new(proposed)?, clamped))
}

/// One Euler–Maruyama step with freshly drawn Gaussian noise.
pub fn em_step(
    x: &SimplexPoint,
    mp: &ModelParams,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> Result<(SimplexPoint, bool)> {
    let xi: Vec<f64> = (0..x.dim()).map(|_| rng.sample_std_normal()).collect();
    em_step_given_noise(x, mp, cfg.step_h, cfg.boundary_eps, &xi)
}

/// Run `n_steps` Euler–Maruyama steps from x0, recording every
/// `thinning`-th state (plus x0) and the total clamp count.
pub fn simulate(
    x0: &SimplexPoint,
    mp: &ModelParams,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    cfg.validate(x0.dim())?;
    if mp.dim() != x0.dim() {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} != point dimension {}",
            mp.dim(),
            x0.dim()
        )));
    }
    let mut states = Vec::with_capacity(1 + cfg.n_steps / cfg.thinning);
    states.push(x0.clone());
    let mut x = x0.clone();
    let mut clamp_count = 0usize;
    for k in 1..=cfg.n_steps {
        let (next, clamped) = em_step(&x, mp, cfg, rng)?;
        x = next;
        if clamped {
            clamp_count += 1;
        }
        if k % cfg.thinning == 0 {
            states.push(x.clone());
        }
    }
    Ok(Trajectory {
        states,
        clamp_count,
        n_steps: cfg.n_steps,
        step_h: cfg.step_h,
        thinning: cfg.thinning,
    })
}

/// One row of the invariant-measure report: trajectory time-average vs an
/// independent reference average of the same observable.
#[derive(Debug, Clone)]
pub struct ObservableCheck {
    pub traj_mean: f64,
    pub traj_stderr: f64,
    pub ref_mean: f64,
    pub ref_stderr: f64,
    /// |Δ| / √(se_traj² + se_ref²); NaN-free because a zero denominator with
    /// zero discrepancy reports 0.
    pub z: f64,
    /// Set when the discrepancy exceeds 4 combined standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub checks: Vec<ObservableCheck>,
    pub clamp_fraction: f64,
    pub n_used: usize,
}

impl InvariantReport {
    pub fn any_flagged(&self) -> bool {
        self.checks.iter().any(|c| c.flagged)
    }
}

/// Compare trajectory time-averages (batch-means error bars) against
/// independent references: quadrature for d = 1, a fixed-seed Metropolis
/// chain for d ≥ 2. `burn_in` counts recorded (thinned) states to discard.
pub fn invariant_check(
    traj: &Trajectory,
    mp: &ModelParams,
    observables: &[&dyn SmoothFunction],
    burn_in: usize,
) -> Result<InvariantReport> {
    if traj.states.len() <= burn_in {
        return Err(Error::InvalidParameter(format!(
            "trajectory has {} recorded states, not past burn-in {burn_in}",
            traj.states.len()
        )));
    }
    let used = &traj.states[burn_in..];
    let d = mp.dim();
    // Reference samples for d ≥ 2 are drawn once and shared by every
    // observable; the fixed seed keeps the report deterministic.
    let ref_samples = if d >= 2 {
        let cfg = McmcConfig {
            length: 130_000,
            burn_in: 10_000,
            step_scale: 1.0,
        };
        let mut rng = RngStream::new(0x5eed_cafe, 0);
        Some(sample_mu_mcmc(mp, &cfg, &mut rng)?.samples)
    } else {
        None
    };
    let mut checks = Vec::with_capacity(observables.len());
    for f in observables {
        let values: Vec<f64> = used.iter().map(|x| f.eval(x.free_coords())).collect();
        let n_batches = 50.min(values.len() / 2).max(2);
        let (traj_mean, traj_stderr) = crate::stats::batch_means(&values, n_batches)?;
        let (ref_mean, ref_stderr) = match &ref_samples {
            None => mu_expectation_d1(mp, |t| f.eval(&[t]))?,
            Some(samples) => {
                let vals: Vec<f64> = samples.iter().map(|x| f.eval(x.free_coords())).collect();
                crate::stats::batch_means(&vals, 50)?
            }
        };
        let combined = (traj_stderr * traj_stderr + ref_stderr * ref_stderr).sqrt();
        let delta = (traj_mean - ref_mean).abs();
        let z = if combined == 0.0 {
            if delta == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            delta / combined
        };
        checks.push(ObservableCheck {
            traj_mean,
            traj_stderr,
            ref_mean,
            ref_stderr,
            z,
            flagged: z > 4.0,
        });
    }
    Ok(InvariantReport {
        checks,
        clamp_fraction: traj.clamp_fraction(),
        n_used: used.len(),
    })
}

/// Richardson weak-order diagnostic: E[x_T] estimated with steps h, h/2 and
/// h/4 driven by common Brownian increments (the coarse noise is the
/// aggregated fine noise), so the two refinement differences are strongly
/// correlated and the order-1 signal survives Monte Carlo noise.
#[derive(Debug, Clone)]
pub struct RichardsonReport {
    pub mean_h: f64,
    pub mean_h2: f64,
    pub mean_h4: f64,
    pub err_coarse: f64,
    pub err_fine: f64,
    /// log₂(err_coarse / err_fine): ≈ 1 for a weak-order-1 scheme.
    pub slope: f64,
}

/// Runs `n_paths` independent triples of trajectories to time T (first free
/// coordinate as the observable) and reports the Richardson slope.
pub fn weak_order_richardson(
    x0: &SimplexPoint,
    mp: &ModelParams,
    t_final: f64,
    h: f64,
    boundary_eps: f64,
    n_paths: usize,
    rng: &RngStream,
) -> Result<RichardsonReport> {
    if mp.dim() != x0.dim() {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} != point dimension {}",
            mp.dim(),
            x0.dim()
        )));
    }
    let n_coarse = (t_final / h).round() as usize;
    if n_coarse == 0 || n_paths == 0 {
        return Err(Error::InvalidParameter(
            "need t_final/h >= 1 and n_paths >= 1".into(),
        ));
    }
    let d = x0.dim();
    let sums = (0..n_paths)
        .into_par_iter()
        .map(|path| -> Result<(f64, f64, f64)> {
            let mut prng = rng.substream(path as u64 + 1);
            // Fine-grid standard normals for the whole path: 4 per coarse step.
            let n_fine = 4 * n_coarse;
            let xi: Vec<Vec<f64>> = (0..n_fine)
                .map(|_| (0..d).map(|_| prng.sample_std_normal()).collect())
                .collect();
            let run = |stride: usize| -> Result<f64> {
                let step = h * stride as f64 / 4.0;
                let scale = 1.0 / (stride as f64).sqrt();
                let mut x = x0.clone();
                let mut k = 0;
                while k < n_fine {
                    let agg: Vec<f64> = (0..d)
                        .map(|i| {
                            (0..stride).map(|s| xi[k + s][i]).sum::<f64>() * scale
                        })
                        .collect();
                    x = em_step_given_noise(&x, mp, step, boundary_eps, &agg)?.0;
                    k += stride;
                }
                Ok(x.free_coords()[0])
            };
            Ok((run(4)?, run(2)?, run(1)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = n_paths as f64;
    let mean_h = sums.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_h2 = sums.iter().map(|s| s.1).sum::<f64>() / n;
    let mean_h4 = sums.iter().map(|s| s.2).sum::<f64>() / n;
    let err_coarse = (mean_h - mean_h2).abs();
    let err_fine = (mean_h2 - mean_h4).abs();
    if !(err_coarse > 0.0 && err_fine > 0.0) {
        return Err(Error::Accuracy {
            message: "Richardson differences vanished; increase n_paths or h".into(),
            best_estimate: mean_h4,
            error_bound: err_coarse.max(err_fine),
        });
    }
    Ok(RichardsonReport {
        mean_h,
        mean_h2,
        mean_h4,
        err_coarse,
        err_fine,
        slope: (err_coarse / err_fine).log2(),
    })
}
