//! Parzen-window log-likelihood evaluation.
//!
//! Sample quality metric: fit an isotropic Gaussian kernel density to a
//! set of generated samples and report the mean log-density of held-out
//! test points, plus the standard error across points. All kernel sums
//! go through logsumexp so far-away test points stay finite.

use crate::ndnum::Matrix;
use crate::{Error, Result};

/// Isotropic Gaussian kernel density over a fixed sample set.
#[derive(Debug, Clone)]
pub struct ParzenEstimator {
    samples: Matrix,
    sigma: f64,
}

impl ParzenEstimator {
    pub fn new(samples: Matrix, sigma: f64) -> Result<ParzenEstimator> {
        if samples.rows() == 0 || samples.cols() == 0 {
            return Err(Error::Param(format!(
                "estimator needs a nonempty sample matrix, got {}x{}",
                samples.rows(),
                samples.cols()
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Param(format!("bandwidth must be positive, got {sigma}")));
        }
        Ok(ParzenEstimator { samples, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn num_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    /// Log-density of one point: logsumexp of the per-kernel exponents,
    /// minus log N, minus the Gaussian normalizer (d/2) log(2 pi sigma^2).
    pub fn log_density(&self, point: &[f64]) -> Result<f64> {
        let d = self.samples.cols();
        if point.len() != d {
            return Err(Error::Shape(format!(
                "point has {} coordinates, estimator has {d}",
                point.len()
            )));
        }
        let inv_two_sigma2 = 1.0 / (2.0 * self.sigma * self.sigma);
        let n = self.samples.rows();
        let mut exponents = Vec::with_capacity(n);
        let mut max_e = f64::NEG_INFINITY;
        for i in 0..n {
            let row = self.samples.row(i);
            let mut sq = 0.0;
            for (a, b) in point.iter().zip(row) {
                let diff = a - b;
                sq += diff * diff;
            }
            let e = -sq * inv_two_sigma2;
            if e > max_e {
                max_e = e;
            }
            exponents.push(e);
        }
        let sum: f64 = exponents.iter().map(|e| (e - max_e).exp()).sum();
        let lse = max_e + sum.ln();
        let normalizer =
            (n as f64).ln() + 0.5 * d as f64 * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).ln();
        Ok(lse - normalizer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihoodReport {
    /// Mean log-density across test points.
    pub mean: f64,
    /// Standard error of that mean (sample std / sqrt(M); 0 for M = 1).
    pub std_error: f64,
    pub per_point: Vec<f64>,
}

pub fn log_likelihood(est: &ParzenEstimator, test: &Matrix) -> Result<LogLikelihoodReport> {
    if test.rows() == 0 {
        return Err(Error::Param("no test points".into()));
    }
    if test.cols() != est.dim() {
        return Err(Error::Shape(format!(
            "test points have {} coordinates, estimator has {}",
            test.cols(),
            est.dim()
        )));
    }
    let m = test.rows();
    let mut per_point = Vec::with_capacity(m);
    for i in 0..m {
        per_point.push(est.log_density(test.row(i))?);
    }
    let mean = per_point.iter().sum::<f64>() / m as f64;
    let std_error = if m > 1 {
        let var =
            per_point.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
        (var / m as f64).sqrt()
    } else {
        0.0
    };
    Ok(LogLikelihoodReport { mean, std_error, per_point })
}

/// Log-spaced default grid: 20 bandwidths from 0.05 to 1.0.
pub fn default_bandwidth_grid() -> Vec<f64> {
    log_spaced_grid(0.05, 1.0, 20)
}

pub fn log_spaced_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2, "bad grid request");
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Picks the grid bandwidth maximizing mean validation log-likelihood.
/// The grid is scanned in ascending order and only strict improvements
/// replace the incumbent, so exact ties resolve to the smaller sigma.
pub fn select_bandwidth(samples: &Matrix, validation: &Matrix, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Param("bandwidth grid is empty".into()));
    }
    let mut sorted = grid.to_vec();
    for &s in &sorted {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Param(format!("bandwidth {s} in grid is not positive")));
        }
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite by validation"));
    let mut best_sigma = f64::NAN;
    let mut best_mean = f64::NEG_INFINITY;
    for &sigma in &sorted {
        let est = ParzenEstimator::new(samples.clone(), sigma)?;
        let mean = log_likelihood(&est, validation)?.mean;
        if mean > best_mean {
            best_mean = mean;
            best_sigma = sigma;
        }
    }
    Ok(best_sigma)
}
