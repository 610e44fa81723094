mod common;

use common::brute_force_loss;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use survnet::coxnet::{fit_elastic_net_cox, lambda_max, CoxnetOptions};
use survnet::survival::SurvivalLabels;

/// Gaussian features, exponential death times driven by the first `active`
/// columns, independent exponential censoring.
fn linear_data(seed: u64, n: usize, p: usize, active: usize) -> (Array2<f64>, SurvivalLabels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(StandardNormal));
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for row in x.rows() {
        let risk: f64 = row
            .iter()
            .take(active)
            .enumerate()
            .map(|(k, &v)| if k % 2 == 0 { v } else { -v })
            .sum();
        let death = rng.sample::<f64, _>(Exp1) / risk.exp();
        let censor = rng.sample::<f64, _>(Exp1) * 2.0;
        times.push(death.min(censor).max(1e-9));
        events.push(death <= censor);
    }
    (x, SurvivalLabels::new(times, events).unwrap())
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn assert_monotone(trace: &[f64]) {
    for w in trace.windows(2) {
        assert!(w[1] <= w[0], "objective increased: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn large_lambda_zeroes_everything() {
    let (x, y) = linear_data(1, 80, 6, 3);
    let top = lambda_max(&x, &y, 1.0, true).unwrap();
    assert!(top > 0.0);
    for scale in [1.0, 1.5, 10.0] {
        let fit = fit_elastic_net_cox(&x, &y, top * scale, 1.0, &CoxnetOptions::default()).unwrap();
        assert!(fit.model.coefficients.iter().all(|b| *b == 0.0), "scale {scale}");
    }
    let fit = fit_elastic_net_cox(&x, &y, top * 0.9, 1.0, &CoxnetOptions::default()).unwrap();
    assert!(fit.model.nonzero_count() > 0);
}

#[test]
fn unpenalized_single_feature_matches_golden_section() {
    let times = [1.0, 2.0, 3.0];
    let events = [true, true, true];
    let feature = [3.0, 1.0, 2.0];
    let x = Array2::from_shape_vec((3, 1), feature.to_vec()).unwrap();
    let y = SurvivalLabels::new(times.to_vec(), events.to_vec()).unwrap();
    let opts = CoxnetOptions {
        tol: 1e-10,
        max_iter: 100_000,
        ..CoxnetOptions::default()
    };
    let fit = fit_elastic_net_cox(&x, &y, 0.0, 1.0, &opts).unwrap();
    assert!(fit.converged);
    let oracle = golden_section(
        |b| {
            let risk: Vec<f64> = feature.iter().map(|v| b * v).collect();
            brute_force_loss(&risk, &times, &events)
        },
        -20.0,
        20.0,
    );
    assert!(
        (fit.model.coefficients[0] - oracle).abs() < 1e-4,
        "{} vs {oracle}",
        fit.model.coefficients[0]
    );
}

#[test]
fn ridge_does_not_sparsify() {
    let (x, y) = linear_data(2, 120, 10, 4);
    let fit = fit_elastic_net_cox(&x, &y, 0.5, 0.0, &CoxnetOptions::default()).unwrap();
    assert!(fit.model.coefficients.iter().all(|b| *b != 0.0));
    assert_monotone(&fit.objective_trace);
}

#[test]
fn objective_descends_and_kkt_holds() {
    let (x, y) = linear_data(3, 150, 20, 5);
    let top = lambda_max(&x, &y, 0.7, true).unwrap();
    for frac in [0.5, 0.2, 0.05, 0.01] {
        for alpha in [0.2, 0.7, 1.0] {
            let fit = fit_elastic_net_cox(&x, &y, top * frac, alpha, &CoxnetOptions::default()).unwrap();
            assert!(fit.converged, "frac {frac} alpha {alpha}");
            assert_monotone(&fit.objective_trace);
            assert!(fit.kkt_residual < 1e-5, "kkt {}", fit.kkt_residual);
        }
    }
}

#[test]
fn lasso_path_sparsity_is_monotone() {
    let (x, y) = linear_data(4, 200, 30, 5);
    let top = lambda_max(&x, &y, 1.0, true).unwrap();
    let mut previous = 0;
    for k in 0..12 {
        let lambda = top * 0.7f64.powi(k);
        let fit = fit_elastic_net_cox(&x, &y, lambda, 1.0, &CoxnetOptions::default()).unwrap();
        let count = fit.model.nonzero_count();
        assert!(count >= previous, "lambda {lambda}: {count} < {previous}");
        previous = count;
    }
    assert!(previous > 5);
}

#[test]
fn recovers_active_features() {
    let (x, y) = linear_data(5, 400, 15, 3);
    let top = lambda_max(&x, &y, 1.0, true).unwrap();
    let fit = fit_elastic_net_cox(&x, &y, top * 0.2, 1.0, &CoxnetOptions::default()).unwrap();
    let b = &fit.model.coefficients;
    assert!(b[0] > 0.0 && b[1] < 0.0 && b[2] > 0.0, "{b:?}");
}
