//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Inputs live in the unit cube. Scores are standardized before fitting and
//! posterior moments are reported back on the original score scale.

use crate::error::{Result, SurvError};

#[derive(Debug, Clone, PartialEq)]
pub struct GpHyperparameters {
    pub length_scales: Vec<f64>,
    /// Prior variance of the standardized latent function.
    pub signal_variance: f64,
    pub noise_variance: f64,
}

pub const NOISE_FLOOR: f64 = 1e-6;

impl GpHyperparameters {
    pub fn isotropic(dim: usize, length_scale: f64) -> Self {
        Self {
            length_scales: vec![length_scale; dim],
            signal_variance: 1.0,
            noise_variance: NOISE_FLOOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpSurrogate {
    points: Vec<Vec<f64>>,
    scores: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    hyper: GpHyperparameters,
    /// Lower Cholesky factor of the noisy kernel matrix, row-major.
    chol: Vec<f64>,
    /// `K^-1 y` for the standardized scores.
    weights: Vec<f64>,
    log_marginal_likelihood: f64,
}

impl GpSurrogate {
    /// Fits with kernel hyperparameters chosen by maximizing the marginal
    /// likelihood over a multi-start coordinate search in log space.
    pub fn fit(points: &[Vec<f64>], scores: &[f64]) -> Result<Self> {
        check_data(points, scores)?;
        let dim = points[0].len();
        let mut best: Option<GpSurrogate> = None;
        for &start_length in &[0.1, 0.3, 1.0] {
            let mut theta: Vec<f64> = vec![f64::ln(start_length); dim];
            theta.push(0.0);
            theta.push(f64::ln(1e-3));
            let candidate = coordinate_search(points, scores, theta)?;
            if best
                .as_ref()
                .is_none_or(|b| candidate.log_marginal_likelihood > b.log_marginal_likelihood)
            {
                best = Some(candidate);
            }
        }
        best.ok_or_else(|| SurvError::Numerical("no surrogate could be fitted".into()))
    }

    pub fn with_hyperparameters(points: &[Vec<f64>], scores: &[f64], hyper: GpHyperparameters) -> Result<Self> {
        check_data(points, scores)?;
        if hyper.length_scales.len() != points[0].len() {
            return Err(SurvError::DimensionMismatch(format!(
                "{} length scales for {}-dimensional points",
                hyper.length_scales.len(),
                points[0].len()
            )));
        }
        if hyper.length_scales.iter().any(|l| !(*l > 0.0)) || !(hyper.signal_variance > 0.0) {
            return Err(SurvError::InvalidInput(
                "length scales and signal variance must be positive".into(),
            ));
        }
        let n = scores.len();
        let y_mean = scores.iter().sum::<f64>() / n as f64;
        let var = scores.iter().map(|s| (s - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y: Vec<f64> = scores.iter().map(|s| (s - y_mean) / y_scale).collect();

        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel(&points[i], &points[j], &hyper);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
            k[i * n + i] += hyper.noise_variance;
        }
        let chol = cholesky_with_jitter(&k, n, hyper.signal_variance)?;
        let weights = cholesky_solve(&chol, n, &y);
        let log_det: f64 = (0..n).map(|i| chol[i * n + i].ln()).sum::<f64>() * 2.0;
        let fit: f64 = y.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let log_marginal_likelihood = -0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        Ok(Self {
            points: points.to_vec(),
            scores: scores.to_vec(),
            y_mean,
            y_scale,
            hyper,
            chol,
            weights,
            log_marginal_likelihood,
        })
    }

    pub fn hyperparameters(&self) -> &GpHyperparameters {
        &self.hyper
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn best_score(&self) -> f64 {
        self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn prior_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn prior_variance(&self) -> f64 {
        self.hyper.signal_variance * self.y_scale * self.y_scale
    }

    /// Posterior mean and variance of the latent function at `query`.
    pub fn posterior(&self, query: &[f64]) -> (f64, f64) {
        let n = self.points.len();
        let k_star: Vec<f64> = self.points.iter().map(|p| kernel(p, query, &self.hyper)).collect();
        let mean_std: f64 = k_star.iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        let v = forward_substitute(&self.chol, n, &k_star);
        let var_std = (self.hyper.signal_variance - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        (
            self.y_mean + self.y_scale * mean_std,
            var_std * self.y_scale * self.y_scale,
        )
    }
}

/// Posterior mean and variance at `query`.
pub fn gp_posterior(surrogate: &GpSurrogate, query: &[f64]) -> (f64, f64) {
    surrogate.posterior(query)
}

fn check_data(points: &[Vec<f64>], scores: &[f64]) -> Result<()> {
    if points.is_empty() || points.len() != scores.len() {
        return Err(SurvError::InvalidInput(format!(
            "surrogate needs matching non-empty points and scores ({} vs {})",
            points.len(),
            scores.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(SurvError::DimensionMismatch("points differ in dimension".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(SurvError::InvalidInput("scores must be finite".into()));
    }
    Ok(())
}

fn kernel(a: &[f64], b: &[f64], hyper: &GpHyperparameters) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hyper.length_scales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    hyper.signal_variance * (-0.5 * r2).exp()
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_with_jitter(k: &[f64], n: usize, scale: f64) -> Result<Vec<f64>> {
    if let Some(l) = cholesky(k, n) {
        return Ok(l);
    }
    let mut jitter = 1e-10 * scale;
    while jitter <= 1e-2 * scale {
        let mut padded = k.to_vec();
        for i in 0..n {
            padded[i * n + i] += jitter;
        }
        if let Some(l) = cholesky(&padded, n) {
            log::debug!("kernel matrix needed jitter {jitter:e}");
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(SurvError::Numerical(
        "kernel matrix is not positive definite after jitter".into(),
    ))
}

fn forward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let y = forward_substitute(l, n, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

const LOG_LENGTH_BOUNDS: (f64, f64) = (-2.0 * std::f64::consts::LN_10, std::f64::consts::LN_10); // [0.01, 10]
const LOG_SIGNAL_BOUNDS: (f64, f64) = (-4.605_170_185_988_091, 4.605_170_185_988_091); // [0.01, 100]
const LOG_NOISE_BOUNDS: (f64, f64) = (-13.815_510_557_964_274, 0.0); // [1e-6, 1]

fn unpack(theta: &[f64]) -> GpHyperparameters {
    let d = theta.len() - 2;
    GpHyperparameters {
        length_scales: theta[..d].iter().map(|v| v.exp()).collect(),
        signal_variance: theta[d].exp(),
        noise_variance: theta[d + 1].exp().max(NOISE_FLOOR),
    }
}

fn bounds(theta_len: usize, k: usize) -> (f64, f64) {
    if k < theta_len - 2 {
        LOG_LENGTH_BOUNDS
    } else if k == theta_len - 2 {
        LOG_SIGNAL_BOUNDS
    } else {
        LOG_NOISE_BOUNDS
    }
}

fn coordinate_search(points: &[Vec<f64>], scores: &[f64], mut theta: Vec<f64>) -> Result<GpSurrogate> {
    let evaluate = |theta: &[f64]| GpSurrogate::with_hyperparameters(points, scores, unpack(theta)).ok();
    let mut best = evaluate(&theta).ok_or_else(|| SurvError::Numerical("initial kernel matrix is singular".into()))?;
    let mut step = 1.0;
    let mut sweeps = 0;
    while step > 0.05 && sweeps < 200 {
        sweeps += 1;
        let mut improved = false;
        for k in 0..theta.len() {
            let (lo, hi) = bounds(theta.len(), k);
            for dir in [1.0, -1.0] {
                let mut trial = theta.clone();
                trial[k] = (theta[k] + dir * step).clamp(lo, hi);
                if trial[k] == theta[k] {
                    continue;
                }
                if let Some(fit) = evaluate(&trial) {
                    if fit.log_marginal_likelihood > best.log_marginal_likelihood + 1e-12 {
                        best = fit;
                        theta = trial;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(l: f64) -> GpHyperparameters {
        GpHyperparameters {
            length_scales: vec![l],
            signal_variance: 1.0,
            noise_variance: 1e-12,
        }
    }

    #[test]
    fn interpolates_observations() {
        let pts = vec![vec![0.1], vec![0.5], vec![0.9]];
        let ys = [0.3, -1.2, 2.0];
        let gp = GpSurrogate::with_hyperparameters(&pts, &ys, exact(0.3)).unwrap();
        for (p, y) in pts.iter().zip(ys) {
            let (m, v) = gp.posterior(p);
            assert!((m - y).abs() < 1e-6, "{m} vs {y}");
            assert!(v <= 1e-6);
        }
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let pts = vec![vec![0.1], vec![0.2]];
        let gp = GpSurrogate::with_hyperparameters(&pts, &[1.0, 3.0], exact(0.05)).unwrap();
        let (m, v) = gp.posterior(&[0.2 + 10.0 * 0.05 + 0.01]);
        assert!((m - gp.prior_mean()).abs() < 1e-3);
        assert!((v - gp.prior_variance()).abs() < 1e-3 * gp.prior_variance());
    }

    #[test]
    fn duplicate_points_need_jitter_only() {
        let pts = vec![vec![0.4], vec![0.4], vec![0.4]];
        let gp = GpSurrogate::with_hyperparameters(&pts, &[1.0, 1.0, 1.0], exact(0.2)).unwrap();
        let (m, v) = gp.posterior(&[0.4]);
        assert!(m.is_finite() && v >= 0.0);
    }

    #[test]
    fn fitted_hyperparameters_stay_in_bounds() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64 / 11.0, (i * 7 % 12) as f64 / 11.0])
            .collect();
        let ys: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin() - p[1] * p[1]).collect();
        let gp = GpSurrogate::fit(&pts, &ys).unwrap();
        let h = gp.hyperparameters();
        assert!(h.noise_variance >= NOISE_FLOOR);
        assert!(h.length_scales.iter().all(|l| (0.0099..=10.01).contains(l)));
        assert!(gp.log_marginal_likelihood().is_finite());
    }
}
