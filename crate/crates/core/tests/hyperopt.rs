use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use survnet::hyperopt::{
    expected_improvement_from_moments, propose_next, run_optimization, Dimension, GpHyperparameters, GpSurrogate,
    OptimizerSettings, ParamSpace,
};

/// Posterior moments by a dense linear solve, written from the textbook
/// formulas without the Cholesky machinery.
fn dense_posterior(points: &[Vec<f64>], scores: &[f64], hyper: &GpHyperparameters, query: &[f64]) -> (f64, f64) {
    let n = points.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let y = DVector::from_iterator(n, scores.iter().map(|s| (s - mean) / sd));
    let k = |a: &[f64], b: &[f64]| {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&hyper.length_scales)
            .map(|((x, z), l)| ((x - z) / l).powi(2))
            .sum();
        hyper.signal_variance * (-0.5 * r2).exp()
    };
    let gram = DMatrix::from_fn(n, n, |i, j| {
        k(&points[i], &points[j]) + if i == j { hyper.noise_variance } else { 0.0 }
    });
    let ks = DVector::from_iterator(n, points.iter().map(|p| k(p, query)));
    let lu = gram.lu();
    let alpha = lu.solve(&y).unwrap();
    let beta = lu.solve(&ks).unwrap();
    let m = ks.dot(&alpha);
    let v = hyper.signal_variance - ks.dot(&beta);
    (mean + sd * m, v * sd * sd)
}

#[test]
fn posterior_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in 1..=3 {
        let points: Vec<Vec<f64>> = (0..9).map(|_| (0..dim).map(|_| rng.gen()).collect()).collect();
        let scores: Vec<f64> = (0..9).map(|_| rng.gen_range(0.4..0.8)).collect();
        let hyper = GpHyperparameters {
            length_scales: (0..dim).map(|k| 0.2 + 0.15 * k as f64).collect(),
            signal_variance: 1.3,
            noise_variance: 1e-3,
        };
        let gp = GpSurrogate::with_hyperparameters(&points, &scores, hyper.clone()).unwrap();
        for _ in 0..20 {
            let q: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
            let (m, v) = gp.posterior(&q);
            let (mo, vo) = dense_posterior(&points, &scores, &hyper, &q);
            assert!((m - mo).abs() < 1e-8, "mean {m} vs {mo}");
            assert!((v - vo.max(0.0)).abs() < 1e-8, "var {v} vs {vo}");
        }
    }
}

#[test]
fn two_point_midpoint_mean() {
    // with a small noise term the midpoint mean sits halfway between the two scores
    let points = vec![vec![0.0], vec![1.0]];
    let scores = vec![0.6, 0.8];
    let hyper = GpHyperparameters {
        length_scales: vec![0.5],
        signal_variance: 1.0,
        noise_variance: 1e-6,
    };
    let gp = GpSurrogate::with_hyperparameters(&points, &scores, hyper.clone()).unwrap();
    let (m, _) = gp.posterior(&[0.5]);
    let (mo, _) = dense_posterior(&points, &scores, &hyper, &[0.5]);
    assert!((m - 0.7).abs() < 1e-12);
    assert!((m - mo).abs() < 1e-10);
}

#[test]
fn expected_improvement_matches_monte_carlo() {
    let (mean, variance, best) = (0.5, 0.2, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 1_000_000;
    let sd = f64::sqrt(variance);
    let total: f64 = (0..draws)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (mean + sd * z - best).max(0.0)
        })
        .sum();
    let mc = total / draws as f64;
    let ei = expected_improvement_from_moments(mean, variance, best);
    assert!((ei - mc).abs() < 1e-3, "{ei} vs {mc}");
}

#[test]
fn finds_quadratic_optimum() {
    let space = ParamSpace::new(vec![Dimension::continuous("x", 0.0, 1.0, false)]).unwrap();
    let settings = OptimizerSettings {
        budget: 30,
        init_trials: 8,
        candidates: 2048,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (best, trials) = run_optimization(&space, |p| Ok(-(p[0] - 0.3).powi(2)), &settings, &mut rng).unwrap();
    assert_eq!(trials.len(), 30);
    assert!((best.params[0] - 0.3).abs() < 0.05, "{:?}", best.params);
}

#[test]
fn failed_trials_are_skipped() {
    let space = ParamSpace::new(vec![Dimension::continuous("x", 0.0, 1.0, false)]).unwrap();
    let settings = OptimizerSettings {
        budget: 20,
        init_trials: 5,
        candidates: 256,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (best, trials) = run_optimization(
        &space,
        |p| if p[0] > 0.5 { Ok(f64::NAN) } else { Ok(p[0]) },
        &settings,
        &mut rng,
    )
    .unwrap();
    assert!(trials.iter().any(|t| !t.is_ok()));
    assert!(best.is_ok() && best.params[0] <= 0.5);
    assert!(best.score.is_finite());
}

#[test]
fn runs_are_reproducible() {
    let space = ParamSpace::new(vec![
        Dimension::continuous("a", 1e-4, 1.0, true),
        Dimension::integer("b", 1, 4, false),
    ])
    .unwrap();
    let settings = OptimizerSettings {
        budget: 14,
        init_trials: 4,
        candidates: 128,
    };
    let f = |p: &[f64]| Ok(-(p[0].ln() + 4.0).powi(2) - (p[1] - 2.0).powi(2));
    let a = run_optimization(&space, f, &settings, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = run_optimization(&space, f, &settings, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn larger_budget_never_worse() {
    let space = ParamSpace::new(vec![
        Dimension::continuous("a", 0.0, 1.0, false),
        Dimension::continuous("b", 0.0, 1.0, false),
    ])
    .unwrap();
    let f = |p: &[f64]| Ok((6.0 * p[0]).sin() * (4.0 * p[1]).cos());
    let mut previous = f64::NEG_INFINITY;
    for budget in [6, 10, 16, 24] {
        let settings = OptimizerSettings {
            budget,
            init_trials: 6,
            candidates: 256,
        };
        let (best, _) = run_optimization(&space, f, &settings, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(best.score >= previous);
        previous = best.score;
    }
}

#[test]
fn pinned_dimension_is_respected() {
    let space = ParamSpace::new(vec![
        Dimension::continuous("x", 0.25, 0.25, false),
        Dimension::integer("k", 3, 3, false),
    ])
    .unwrap();
    let gp = GpSurrogate::fit(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.1, 0.2]).unwrap();
    let p = propose_next(&gp, &space, 32, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(p, vec![0.25, 3.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ei_nonnegative_and_monotone_in_spread(mean in -2.0f64..2.0, best in -2.0f64..2.0,
                                             v1 in 1e-6f64..4.0, dv in 0.0f64..4.0) {
        let a = expected_improvement_from_moments(mean, v1, best);
        let b = expected_improvement_from_moments(mean, v1 + dv, best);
        prop_assert!(a >= 0.0);
        prop_assert!(a >= (mean - best).max(0.0) - 1e-12);
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn posterior_variance_bounded_by_prior(seed in 0u64..1000, n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let gp = GpSurrogate::fit(&points, &scores).unwrap();
        for _ in 0..10 {
            let q = vec![rng.gen(), rng.gen()];
            let (m, v) = gp.posterior(&q);
            prop_assert!(m.is_finite());
            prop_assert!(v >= 0.0 && v <= gp.prior_variance() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn proposals_stay_in_the_space(seed in 0u64..1000) {
        let space = ParamSpace::new(vec![
            Dimension::continuous("lr", 1e-5, 1e-1, true),
            Dimension::integer("units", 32, 512, true),
            Dimension::integer("layers", 1, 3, false),
            Dimension::continuous("rate", 0.0, 0.5, false),
        ]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.gen()).collect()).collect();
        let scores: Vec<f64> = (0..6).map(|_| rng.gen()).collect();
        let gp = GpSurrogate::fit(&points, &scores).unwrap();
        let p = propose_next(&gp, &space, 64, &mut rng);
        prop_assert!(space.contains(&p), "{:?}", p);
    }
}
