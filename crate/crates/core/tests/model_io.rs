use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survnet::coxnet::ElasticNetCoxModel;
use survnet::data::Standardizer;
use survnet::model_io::{Pipeline, Predictor};
use survnet::nn::{Activation, Network};

fn random_pipeline(seed: u64, p: usize, widths: &[usize], act: Activation) -> Pipeline {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(p, widths, act, &mut rng);
    for layer in net.layers_mut() {
        // awkward magnitudes stress the float formatting
        layer
            .weights
            .mapv_inplace(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-12..4)));
        layer.bias.mapv_inplace(|_| rng.gen::<f64>() / 3.0);
    }
    let standardizer = Standardizer {
        means: Array1::from_shape_fn(p, |_| rng.gen_range(-1e3..1e3)),
        scales: Array1::from_shape_fn(p, |_| rng.gen_range(1e-6..1e2)),
    };
    Pipeline::new(standardizer, Predictor::Network(net)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn network_files_round_trip(
        seed in any::<u64>(),
        p in 1usize..6,
        widths in prop::collection::vec(1usize..7, 0..4),
        relu in any::<bool>(),
    ) {
        let act = if relu { Activation::Relu } else { Activation::Sigmoid };
        let pipe = random_pipeline(seed, p, &widths, act);
        let back = Pipeline::from_text(&pipe.to_text()).unwrap();
        prop_assert_eq!(&back, &pipe);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x = Array2::from_shape_fn((5, p), |_| rng.gen_range(-3.0..3.0));
        prop_assert_eq!(back.predict(&x).unwrap(), pipe.predict(&x).unwrap());
    }

    #[test]
    fn coxnet_files_round_trip(coefs in prop::collection::vec(-1e3..1e3f64, 0..8), lambda in 1e-6..10.0f64) {
        let p = coefs.len();
        let pipe = Pipeline::new(
            Standardizer::identity(p),
            Predictor::Coxnet(ElasticNetCoxModel { coefficients: coefs, lambda, alpha: 0.25 }),
        )
        .unwrap();
        prop_assert_eq!(Pipeline::from_text(&pipe.to_text()).unwrap(), pipe);
    }
}

#[test]
fn saved_files_load_back() {
    let pipe = random_pipeline(7, 3, &[5, 4], Activation::Relu);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.model");
    pipe.save(&path).unwrap();
    assert_eq!(Pipeline::load(&path).unwrap(), pipe);
    assert!(Pipeline::load(&dir.path().join("missing.model")).is_err());
}
