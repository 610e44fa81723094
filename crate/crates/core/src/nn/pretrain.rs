//! Greedy layer-wise denoising-autoencoder pretraining.
//!
//! Each hidden layer is trained as the encoder of an autoencoder with an
//! untied linear decoder. Inputs are corrupted with masking noise and the
//! decoder reconstructs the clean inputs under squared error. Decoders are
//! discarded once their layer is trained.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{Activation, DenseLayer, Network, TrainConfig};
use crate::error::{Result, SurvError};

/// Sets each entry to zero independently with probability `rate`.
pub fn corrupt<R: Rng + ?Sized>(inputs: &Array2<f64>, rate: f64, rng: &mut R) -> Array2<f64> {
    let mut out = inputs.clone();
    if rate > 0.0 {
        out.map_inplace(|v| {
            if rng.gen::<f64>() < rate {
                *v = 0.0;
            }
        });
    }
    out
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub encoder: DenseLayer,
    pub decoder: DenseLayer,
    /// Clean-input reconstruction MSE before any update.
    pub initial_mse: f64,
    /// Clean-input reconstruction MSE after each epoch.
    pub trace: Vec<f64>,
}

impl PretrainOutcome {
    pub fn final_mse(&self) -> f64 {
        self.trace.last().copied().unwrap_or(self.initial_mse)
    }
}

/// Mean squared error per entry of reconstructing `inputs` through the pair.
pub fn reconstruction_mse(encoder: &DenseLayer, decoder: &DenseLayer, inputs: &Array2<f64>) -> f64 {
    if inputs.is_empty() {
        return 0.0;
    }
    let recon = decoder.output(&encoder.output(inputs));
    let sq: f64 = recon.iter().zip(inputs.iter()).map(|(r, x)| (r - x) * (r - x)).sum();
    sq / inputs.len() as f64
}

/// Trains `layer` as a denoising autoencoder on `inputs` by minibatch SGD.
///
/// The per-batch objective is the squared reconstruction error summed over
/// features and averaged over samples.
pub fn pretrain_layer<R: Rng + ?Sized>(
    layer: &DenseLayer,
    inputs: &Array2<f64>,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<PretrainOutcome> {
    layer.check_input(inputs)?;
    config.validate()?;
    let mut encoder = layer.clone();
    let mut decoder = DenseLayer::init(layer.fan_out(), layer.fan_in(), Activation::Linear, rng);
    let initial_mse = reconstruction_mse(&encoder, &decoder, inputs);
    let mut trace = Vec::with_capacity(config.pretrain_epochs);
    let n = inputs.nrows();
    if n == 0 {
        return Ok(PretrainOutcome {
            encoder,
            decoder,
            initial_mse,
            trace,
        });
    }
    let lr = config.pretrain_learning_rate;
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..config.pretrain_epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.minibatch_size_pretrain) {
            let clean = inputs.select(Axis(0), batch);
            let noisy = corrupt(&clean, config.corruption_rate, rng);
            let (z_enc, h) = encoder.forward(&noisy);
            let (z_dec, recon) = decoder.forward(&h);
            let scale = 1.0 / batch.len() as f64;
            let diff = recon - &clean;
            let loss = diff.iter().map(|d| d * d).sum::<f64>() * scale;
            if !loss.is_finite() {
                return Err(SurvError::Divergence {
                    epoch,
                    detail: "reconstruction loss is not finite".into(),
                });
            }
            let grad_recon = diff * (2.0 * scale);
            let (gw_dec, gb_dec, grad_h) = decoder.backward(&h, &z_dec, &z_dec, &grad_recon);
            let (gw_enc, gb_enc, _) = encoder.backward(&noisy, &z_enc, &h, &grad_h);
            decoder.step(&gw_dec, &gb_dec, lr, config.l2_penalty);
            encoder.step(&gw_enc, &gb_enc, lr, config.l2_penalty);
        }
        let mse = reconstruction_mse(&encoder, &decoder, inputs);
        if !mse.is_finite() {
            return Err(SurvError::Divergence {
                epoch,
                detail: "reconstruction error is not finite".into(),
            });
        }
        log::trace!("pretrain epoch {epoch}: mse {mse}");
        trace.push(mse);
    }
    Ok(PretrainOutcome {
        encoder,
        decoder,
        initial_mse,
        trace,
    })
}

/// Pretrains every hidden layer in turn on the clean codes of the layers
/// below it. The risk head is left untouched.
pub fn stacked_pretrain<R: Rng + ?Sized>(
    network: &Network,
    inputs: &Array2<f64>,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Network> {
    let mut trained = network.clone();
    let mut codes = inputs.clone();
    for (k, layer) in trained.hidden_mut().iter_mut().enumerate() {
        let outcome = pretrain_layer(layer, &codes, config, rng)?;
        log::debug!(
            "pretrained layer {k}: mse {} -> {}",
            outcome.initial_mse,
            outcome.final_mse()
        );
        *layer = outcome.encoder;
        codes = layer.output(&codes);
    }
    Ok(trained)
}
