//! Elastic-net penalized linear Cox regression.
//!
//! Minimizes `(1/n) * nll(X b) + lambda * (alpha * |b|_1 + (1 - alpha) / 2 * |b|_2^2)`
//! by proximal gradient descent with backtracking. The line search accepts a
//! step only when the quadratic model majorizes the smooth part, which makes
//! the penalized objective non-increasing across iterations.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Result, SurvError};
use crate::survival::{CoxObjective, RiskVector, SurvivalLabels};

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticNetCoxModel {
    /// Coefficients on the scale of the features passed to `fit`.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
}

impl ElasticNetCoxModel {
    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|b| **b != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxnetOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
    /// Turn a max-iteration stop into an error instead of a flagged fit.
    pub require_convergence: bool,
}

impl Default for CoxnetOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 10_000,
            standardize: true,
            require_convergence: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoxnetFit {
    pub model: ElasticNetCoxModel,
    /// Coefficients on the internal (standardized) scale.
    pub working_coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest coefficient change of the last iteration.
    pub final_change: f64,
    /// Penalized objective after each accepted step, starting from b = 0.
    pub objective_trace: Vec<f64>,
    /// Worst violation of the optimality conditions at the returned point.
    pub kkt_residual: f64,
}

/// `sign(x) * max(|x| - t, 0)`
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Column centering and scaling; constant columns get scale 0 and are dropped
/// from the fit.
#[derive(Debug, Clone)]
struct Scaling {
    means: Array1<f64>,
    scales: Array1<f64>,
}

impl Scaling {
    fn fit(x: &Array2<f64>, standardize: bool) -> Self {
        let p = x.ncols();
        if !standardize {
            return Self {
                means: Array1::zeros(p),
                scales: Array1::ones(p),
            };
        }
        let means = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(p));
        let scales = x.std_axis(Axis(0), 0.0);
        Self { means, scales }
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x - &self.means;
        for (mut col, &s) in z.axis_iter_mut(Axis(1)).zip(self.scales.iter()) {
            if s > 0.0 {
                col /= s;
            } else {
                col.fill(0.0);
            }
        }
        z
    }
}

struct Problem<'a> {
    z: &'a Array2<f64>,
    objective: CoxObjective,
    n: f64,
    lambda: f64,
    alpha: f64,
}

impl Problem<'_> {
    fn l1(&self) -> f64 {
        self.lambda * self.alpha
    }

    fn l2(&self) -> f64 {
        self.lambda * (1.0 - self.alpha)
    }

    /// Smooth part and its gradient.
    fn smooth(&self, beta: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let risk = self.z.dot(beta);
        let (loss, g) = self.objective.loss_and_gradient(risk.as_slice().expect("contiguous"))?;
        let mut grad = self.z.t().dot(&ArrayView1::from(&g)) / self.n;
        grad.scaled_add(self.l2(), beta);
        let value = loss / self.n + 0.5 * self.l2() * beta.dot(beta);
        Ok((value, grad))
    }

    fn smooth_value(&self, beta: &Array1<f64>) -> Result<f64> {
        let risk = self.z.dot(beta);
        let loss = self.objective.loss(risk.as_slice().expect("contiguous"))?;
        Ok(loss / self.n + 0.5 * self.l2() * beta.dot(beta))
    }

    fn penalized(&self, smooth: f64, beta: &Array1<f64>) -> f64 {
        smooth + self.l1() * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Largest deviation from the subgradient optimality conditions.
    fn kkt(&self, beta: &Array1<f64>) -> Result<f64> {
        let (_, grad) = self.smooth(beta)?;
        Ok(beta
            .iter()
            .zip(grad.iter())
            .map(|(&b, &g)| {
                if b != 0.0 {
                    (g + self.l1() * b.signum()).abs()
                } else {
                    (g.abs() - self.l1()).max(0.0)
                }
            })
            .fold(0.0, f64::max))
    }
}

fn check_inputs(features: &Array2<f64>, labels: &SurvivalLabels) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(SurvError::DimensionMismatch(format!(
            "{} feature rows for {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(SurvError::InvalidInput("features must be finite".into()));
    }
    if labels.n_events() == 0 {
        return Err(SurvError::UndefinedLoss);
    }
    Ok(())
}

/// Smallest `lambda` at which every coefficient is zero for the given
/// `alpha`: the largest null-model gradient coordinate divided by `alpha`.
pub fn lambda_max(features: &Array2<f64>, labels: &SurvivalLabels, alpha: f64, standardize: bool) -> Result<f64> {
    check_inputs(features, labels)?;
    let z = Scaling::fit(features, standardize).apply(features);
    let objective = CoxObjective::new(labels);
    let g = objective.gradient(&vec![0.0; labels.len()])?;
    let grad = z.t().dot(&ArrayView1::from(&g)) / labels.len() as f64;
    let top = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if alpha > 0.0 { top / alpha } else { f64::INFINITY })
}

pub fn fit_elastic_net_cox(
    features: &Array2<f64>,
    labels: &SurvivalLabels,
    lambda: f64,
    alpha: f64,
    options: &CoxnetOptions,
) -> Result<CoxnetFit> {
    check_inputs(features, labels)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(SurvError::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SurvError::InvalidInput(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let p = features.ncols();
    let scaling = Scaling::fit(features, options.standardize);
    let z = scaling.apply(features);
    let problem = Problem {
        z: &z,
        objective: CoxObjective::new(labels),
        n: labels.len() as f64,
        lambda,
        alpha,
    };

    let mut beta = Array1::zeros(p);
    let (mut smooth, mut grad) = problem.smooth(&beta)?;
    let mut trace = vec![problem.penalized(smooth, &beta)];
    let mut step = 1.0 / lipschitz_estimate(&z, problem.l2());
    let mut converged = p == 0;
    let mut final_change = 0.0;
    let mut iterations = 0;

    while !converged && iterations < options.max_iter {
        iterations += 1;
        step *= 1.5;
        let (candidate, cand_smooth) = loop {
            let candidate = (&beta - &(&grad * step)).mapv(|v| soft_threshold(v, step * problem.l1()));
            let diff = &candidate - &beta;
            let cand_smooth = problem.smooth_value(&candidate)?;
            let model = smooth + grad.dot(&diff) + diff.dot(&diff) / (2.0 * step);
            if cand_smooth <= model + 1e-12 * smooth.abs().max(1.0) {
                break (candidate, cand_smooth);
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(SurvError::Numerical("backtracking line search collapsed".into()));
            }
        };
        final_change = (&candidate - &beta).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let next = problem.penalized(cand_smooth, &candidate);
        if next > *trace.last().expect("trace starts non-empty") {
            // round-off at the optimum: keep the previous iterate
            converged = true;
            break;
        }
        beta = candidate;
        (smooth, grad) = problem.smooth(&beta)?;
        trace.push(next);
        converged = final_change < options.tol;
    }

    if !converged {
        if options.require_convergence {
            return Err(SurvError::NonConvergence {
                iterations,
                final_change,
            });
        }
        log::warn!("elastic-net Cox stopped after {iterations} iterations with change {final_change:e}");
    }

    let kkt_residual = problem.kkt(&beta)?;
    let coefficients = beta
        .iter()
        .zip(scaling.scales.iter())
        .map(|(&b, &s)| if s > 0.0 { b / s } else { 0.0 })
        .collect();
    Ok(CoxnetFit {
        model: ElasticNetCoxModel {
            coefficients,
            lambda,
            alpha,
        },
        working_coefficients: beta.to_vec(),
        iterations,
        converged,
        final_change,
        objective_trace: trace,
        kkt_residual,
    })
}

/// Upper-bound guess for the smooth part's gradient Lipschitz constant.
fn lipschitz_estimate(z: &Array2<f64>, l2: f64) -> f64 {
    let n = z.nrows().max(1) as f64;
    let p = z.ncols();
    if p == 0 {
        return 1.0;
    }
    // power iteration for the top eigenvalue of Z^T Z
    let mut v = Array1::from_elem(p, 1.0 / (p as f64).sqrt());
    let mut eig = 0.0;
    for _ in 0..30 {
        let w = z.t().dot(&z.dot(&v));
        eig = w.dot(&w).sqrt();
        if eig == 0.0 {
            break;
        }
        v = w / eig;
    }
    (eig / n + l2).max(1e-12)
}

/// Log-hazard score `X b`.
pub fn predict_linear_risk(model: &ElasticNetCoxModel, features: &Array2<f64>) -> Result<RiskVector> {
    if features.ncols() != model.coefficients.len() {
        return Err(SurvError::DimensionMismatch(format!(
            "model has {} coefficients, features have {} columns",
            model.coefficients.len(),
            features.ncols()
        )));
    }
    let beta = ArrayView1::from(&model.coefficients);
    RiskVector::new(features.dot(&beta).to_vec())
}
