//! Stick-breaking samplers for the GEM(α, θ) weight law, its descending
//! rearrangement, the atomic two-parameter Dirichlet-process measure over an
//! integer base distribution, and the projection onto the first d atom
//! masses.

use crate::error::{Error, Result};
use crate::numerics::{sample_beta, RngStream};
use crate::simplex_measures::SimplexPoint;
use crate::stats::compensated_sum;
use std::collections::BTreeMap;

/// Hard cap on sticks per draw; reached only when trunc_eps is far below
/// what the parameter regime can reach (the residual stick of GEM(α, θ)
/// decays like n^{−(1−α)/α} for α > 0, so very small ε can demand billions
/// of sticks).
const MAX_STICKS: usize = 50_000_000;

/// Parameters of the GEM(α, θ) stick-breaking law: 0 ≤ α < 1, θ > −α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GemParams {
    pub alpha: f64,
    pub theta: f64,
}

impl GemParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        if !(theta.is_finite() && theta + alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must satisfy theta + alpha > 0, got theta={theta}, alpha={alpha}"
            )));
        }
        Ok(GemParams { alpha, theta })
    }
}

/// A truncated stick-breaking weight sequence: the kept weights in breaking
/// order plus the residual stick mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    pub weights: Vec<f64>,
    pub tail_mass: f64,
}

impl WeightSequence {
    /// Σ weights + tail_mass, compensated.
    pub fn total_mass(&self) -> f64 {
        compensated_sum(&self.weights) + self.tail_mass
    }
}

/// Base distribution over positive integer labels: finitely supported, or
/// with a closed-form geometric/inverse-square tail.
#[derive(Debug, Clone, PartialEq)]
pub enum BasePmf {
    /// Explicit probabilities for labels 1..=n.
    Finite(Vec<f64>),
    /// p_n = (1−r) r^{n−1} for n ≥ 1 (r = 1/2 gives p_n = 2^{−n}).
    Geometric { ratio: f64 },
    /// p_n = 6/(π² n²).
    InverseSquare,
}

impl BasePmf {
    pub fn validate(&self) -> Result<()> {
        match self {
            BasePmf::Finite(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidParameter(
                        "finite base pmf must be nonempty".into(),
                    ));
                }
                for (i, &v) in p.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "base pmf p[{}] = {v} must be finite and nonnegative",
                            i + 1
                        )));
                    }
                }
                let sum = compensated_sum(p);
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "base pmf must sum to 1 within 1e-12, got {sum}"
                    )));
                }
                if !p.iter().any(|&v| v > 0.0) {
                    return Err(Error::InvalidParameter(
                        "base pmf needs a positive entry".into(),
                    ));
                }
                Ok(())
            }
            BasePmf::Geometric { ratio } => {
                if !(ratio.is_finite() && *ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric ratio must lie in (0, 1), got {ratio}"
                    )));
                }
                Ok(())
            }
            BasePmf::InverseSquare => Ok(()),
        }
    }

    /// Probability of label n (1-based).
    pub fn prob(&self, label: usize) -> f64 {
        if label == 0 {
            return 0.0;
        }
        match self {
            BasePmf::Finite(p) => p.get(label - 1).copied().unwrap_or(0.0),
            BasePmf::Geometric { ratio } => (1.0 - ratio) * ratio.powi(label as i32 - 1),
            BasePmf::InverseSquare => {
                let n = label as f64;
                6.0 / (std::f64::consts::PI * std::f64::consts::PI * n * n)
            }
        }
    }

    /// Number of labels with positive probability (None = infinite).
    pub fn support_size(&self) -> Option<usize> {
        match self {
            BasePmf::Finite(p) => Some(p.iter().filter(|&&v| v > 0.0).count()),
            _ => None,
        }
    }

    /// Draw one label.
    pub fn sample_label(&self, rng: &mut RngStream) -> usize {
        let u = rng.sample_unit_open();
        match self {
            BasePmf::Finite(p) => {
                let mut cum = 0.0;
                let mut last_positive = 1;
                for (i, &v) in p.iter().enumerate() {
                    if v > 0.0 {
                        last_positive = i + 1;
                    }
                    cum += v;
                    if u <= cum && v > 0.0 {
                        return i + 1;
                    }
                }
                // u fell into the rounding gap past the final mass.
                last_positive
            }
            BasePmf::Geometric { ratio } => {
                // P(N = n) = (1−r) r^{n−1} inverts to N = ceil(ln u / ln r).
                let n = (u.ln() / ratio.ln()).ceil();
                (n.max(1.0)) as usize
            }
            BasePmf::InverseSquare => {
                let norm = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
                let mut cum = 0.0;
                for n in 1..=10_000_000_usize {
                    cum += norm / ((n * n) as f64);
                    if u <= cum {
                        return n;
                    }
                }
                // Tail beyond the walk cap (~6e−8 probability per draw).
                10_000_000
            }
        }
    }
}

/// A sampled atomic measure: merged (label, weight) atoms in ascending label
/// order plus the truncation defect.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<(usize, f64)>,
    pub defect: f64,
}

impl AtomicMeasure {
    /// Σ atom weights + defect, compensated.
    pub fn total_mass(&self) -> f64 {
        let weights: Vec<f64> = self.atoms.iter().map(|&(_, w)| w).collect();
        compensated_sum(&weights) + self.defect
    }
}

/// Draw a truncated GEM(α, θ) weight sequence: U_k ~ Beta(1−α, θ+kα),
/// V_k = U_k ∏_{j<k}(1−U_j), stopping once the residual stick drops below
/// trunc_eps. The first stick is always drawn, and the residual is recorded
/// as tail_mass rather than renormalized away, keeping mass conservation
/// exact and the truncation bias explicit.
pub fn sample_gem(params: &GemParams, trunc_eps: f64, rng: &mut RngStream) -> Result<WeightSequence> {
    GemParams::new(params.alpha, params.theta)?;
    if !(trunc_eps > 0.0 && trunc_eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "trunc_eps must lie in (0, 1), got {trunc_eps}"
        )));
    }
    let mut weights = Vec::new();
    let mut remaining = 1.0_f64;
    for k in 1..=MAX_STICKS {
        let a = 1.0 - params.alpha;
        let b = params.theta + k as f64 * params.alpha;
        let u = sample_beta(a, b, rng)?;
        weights.push(remaining * u);
        remaining *= 1.0 - u;
        if remaining < trunc_eps {
            return Ok(WeightSequence {
                weights,
                tail_mass: remaining,
            });
        }
    }
    Err(Error::Accuracy {
        message: format!(
            "residual stick still {remaining} after {MAX_STICKS} sticks; trunc_eps = {trunc_eps} \
             is out of reach for alpha = {}, theta = {}",
            params.alpha, params.theta
        ),
        best_estimate: remaining,
        error_bound: remaining,
    })
}

/// The same multiset of weights sorted in descending order (the ranked
/// weight law); tail_mass is unchanged.
pub fn to_descending(ws: &WeightSequence) -> WeightSequence {
    let mut weights = ws.weights.clone();
    weights.sort_by(|a, b| b.total_cmp(a));
    WeightSequence {
        weights,
        tail_mass: ws.tail_mass,
    }
}

/// Draw an atomic measure: GEM weights paired with i.i.d. labels from the
/// base pmf, atoms with equal labels merged by summing weights; the stick
/// residual becomes the defect.
pub fn sample_dirichlet_process(
    params: &GemParams,
    base: &BasePmf,
    trunc_eps: f64,
    rng: &mut RngStream,
) -> Result<AtomicMeasure> {
    base.validate()?;
    let ws = sample_gem(params, trunc_eps, rng)?;
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for &w in &ws.weights {
        let label = base.sample_label(rng);
        *merged.entry(label).or_insert(0.0) += w;
    }
    Ok(AtomicMeasure {
        atoms: merged.into_iter().collect(),
        defect: ws.tail_mass,
    })
}

/// Project an atomic measure to the simplex point (m(1), …, m(d)): the
/// masses of labels 1..d. Mass on other labels and the defect land in the
/// derived remainder coordinate x_{d+1}.
pub fn project(m: &AtomicMeasure, d: usize) -> Result<SimplexPoint> {
    if d == 0 {
        return Err(Error::InvalidParameter("projection needs d >= 1".into()));
    }
    let mut free = vec![0.0_f64; d];
    for &(label, w) in &m.atoms {
        if (1..=d).contains(&label) {
            free[label - 1] += w;
        }
    }
    SimplexPoint::new(free)
}
