//! Streaming statistics: Welford moments, compensated summation, batch
//! means for correlated sequences, covariance accumulation, and small
//! fitting/testing helpers shared by the experiment modules.

use crate::error::{Error, Result};

/// Streaming mean/variance accumulator (Welford's update).
#[derive(Debug, Clone, Default)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 before two observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean (i.i.d. assumption).
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Neumaier-compensated summation; keeps mass-balance checks exact to the
/// last ulp even for long weight sequences.
#[derive(Debug, Clone, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sum a slice with compensation.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Mean and standard error of a correlated sequence via batch means.
///
/// Splits the (post burn-in) sequence into `n_batches` contiguous batches,
/// discards the remainder at the front, and uses the batch-mean spread.
pub fn batch_means(xs: &[f64], n_batches: usize) -> Result<(f64, f64)> {
    if n_batches < 2 {
        return Err(Error::InvalidParameter(
            "batch_means requires at least 2 batches".into(),
        ));
    }
    if xs.len() < 2 * n_batches {
        return Err(Error::InvalidParameter(format!(
            "batch_means needs at least {} points for {} batches, got {}",
            2 * n_batches,
            n_batches,
            xs.len()
        )));
    }
    let batch_len = xs.len() / n_batches;
    let start = xs.len() - batch_len * n_batches;
    let mut batches = RunningMoments::new();
    for b in 0..n_batches {
        let lo = start + b * batch_len;
        let chunk = &xs[lo..lo + batch_len];
        batches.push(compensated_sum(chunk) / batch_len as f64);
    }
    Ok((batches.mean(), batches.stderr()))
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "linear_fit needs two equal-length series with >= 2 points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = compensated_sum(xs) / n;
    let my = compensated_sum(ys) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "linear_fit: x values are all identical".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Log-log slope fit; requires strictly positive data.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.iter().any(|&x| !(x > 0.0)) || ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::InvalidParameter(
            "loglog_slope requires strictly positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}

/// Two-sample z statistic for equal means given (mean, stderr) estimates.
pub fn two_sample_z(a: (f64, f64), b: (f64, f64)) -> f64 {
    let denom = (a.1 * a.1 + b.1 * b.1).sqrt();
    if denom == 0.0 {
        if a.0 == b.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.0 - b.0) / denom
    }
}

/// Streaming covariance accumulator for a fixed small dimension K.
/// Used to propagate joint Monte Carlo error through derived margins.
#[derive(Debug, Clone)]
pub struct CovAccumulator<const K: usize> {
    n: u64,
    mean: [f64; K],
    comoment: [[f64; K]; K],
}

impl<const K: usize> Default for CovAccumulator<K> {
    fn default() -> Self {
        CovAccumulator {
            n: 0,
            mean: [0.0; K],
            comoment: [[0.0; K]; K],
        }
    }
}

impl<const K: usize> CovAccumulator<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: [f64; K]) {
        self.n += 1;
        let nf = self.n as f64;
        let mut delta = [0.0; K];
        for i in 0..K {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / nf;
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> [f64; K] {
        self.mean
    }

    /// Unbiased sample covariance matrix.
    pub fn covariance(&self) -> [[f64; K]; K] {
        let mut c = [[0.0; K]; K];
        if self.n >= 2 {
            let denom = (self.n - 1) as f64;
            for i in 0..K {
                for j in 0..K {
                    c[i][j] = self.comoment[i][j] / denom;
                }
            }
        }
        c
    }

    /// Standard error of the linear functional gᵀ·mean.
    pub fn stderr_of_linear(&self, g: [f64; K]) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let c = self.covariance();
        let mut v = 0.0;
        for i in 0..K {
            for j in 0..K {
                v += g[i] * c[i][j] * g[j];
            }
        }
        (v.max(0.0) / self.n as f64).sqrt()
    }
}

/// Pearson chi-squared statistic for observed counts against expected
/// counts (expected must be positive).
pub fn chi2_statistic(observed: &[f64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InvalidParameter(
            "chi2_statistic needs equal-length nonempty count vectors".into(),
        ));
    }
    let mut stat = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if !(e > 0.0) {
            return Err(Error::InvalidParameter(
                "chi2_statistic: expected counts must be positive".into(),
            ));
        }
        stat += (o - e) * (o - e) / e;
    }
    Ok(stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.73).sin()).collect();
        let mut acc = RunningMoments::new();
        for &x in &xs {
            acc.push(x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((acc.mean() - mean).abs() < 1e-14);
        assert!((acc.variance() - var).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        // 1 followed by many tiny values that a naive sum drops entirely.
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat(1e-17).take(10_000));
        let naive: f64 = xs.iter().sum();
        let comp = compensated_sum(&xs);
        assert_eq!(naive, 1.0); // double precision loses the tail
        assert!((comp - (1.0 + 1e-13)).abs() < 1e-16);
    }

    #[test]
    fn batch_means_recovers_iid_stderr_scale() {
        let mut rng = crate::numerics::RngStream::new(5, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.sample_std_normal()).collect();
        let (mean, se) = batch_means(&xs, 50).unwrap();
        assert!(mean.abs() < 5.0 * se);
        // For i.i.d. data batch-means stderr should approximate 1/sqrt(n).
        let expect = 1.0 / (xs.len() as f64).sqrt();
        assert!(se > 0.5 * expect && se < 2.0 * expect, "se {se} vs {expect}");
    }

    #[test]
    fn batch_means_rejects_short_input() {
        assert!(batch_means(&[1.0; 20], 50).is_err());
        assert!(batch_means(&[1.0; 20], 1).is_err());
    }

    #[test]
    fn loglog_slope_exact_power_law() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64 * 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(2.5)).collect();
        let s = loglog_slope(&xs, &ys).unwrap();
        assert!((s - 2.5).abs() < 1e-12, "slope {s}");
    }

    #[test]
    fn covariance_accumulator_matches_direct() {
        let data: Vec<[f64; 2]> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.1;
                [t.sin(), t.sin() * 0.5 + t.cos()]
            })
            .collect();
        let mut acc = CovAccumulator::<2>::new();
        for &row in &data {
            acc.push(row);
        }
        let n = data.len() as f64;
        let m0 = data.iter().map(|r| r[0]).sum::<f64>() / n;
        let m1 = data.iter().map(|r| r[1]).sum::<f64>() / n;
        let c01 = data
            .iter()
            .map(|r| (r[0] - m0) * (r[1] - m1))
            .sum::<f64>()
            / (n - 1.0);
        let c = acc.covariance();
        assert!((c[0][1] - c01).abs() < 1e-12);
        assert!((c[0][1] - c[1][0]).abs() < 1e-15);
        // stderr of g = (1, -2): var = c00 - 4 c01·... check against direct.
        let g = [1.0, -2.0];
        let direct = (c[0][0] - 4.0 * c[0][1] + 4.0 * c[1][1]) / n;
        let se = acc.stderr_of_linear(g);
        assert!((se * se - direct).abs() < 1e-14);
    }

    #[test]
    fn chi2_statistic_zero_for_exact_match() {
        let obs = [10.0, 20.0, 30.0];
        assert_eq!(chi2_statistic(&obs, &obs).unwrap(), 0.0);
        assert!(chi2_statistic(&obs, &[10.0, 0.0, 30.0]).is_err());
    }
}
