use super::Activation;
use crate::error::{Result, SurvError};

/// Optimization settings for pretraining and Cox fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub pretrain_learning_rate: f64,
    pub finetune_learning_rate: f64,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    /// Probability of masking each input entry to zero during pretraining.
    pub corruption_rate: f64,
    pub minibatch_size_pretrain: usize,
    pub rng_seed: u64,
    pub l2_penalty: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pretrain_learning_rate: 0.001,
            finetune_learning_rate: 0.0009,
            pretrain_epochs: 10,
            finetune_epochs: 100,
            corruption_rate: 0.2,
            minibatch_size_pretrain: 32,
            rng_seed: 0,
            l2_penalty: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SurvError::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        positive("pretrain_learning_rate", self.pretrain_learning_rate)?;
        positive("finetune_learning_rate", self.finetune_learning_rate)?;
        if !(0.0..1.0).contains(&self.corruption_rate) {
            return Err(SurvError::InvalidInput(format!(
                "corruption_rate must lie in [0, 1), got {}",
                self.corruption_rate
            )));
        }
        if self.minibatch_size_pretrain == 0 {
            return Err(SurvError::InvalidInput(
                "minibatch_size_pretrain must be positive".into(),
            ));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(SurvError::InvalidInput(format!(
                "l2_penalty must be nonnegative, got {}",
                self.l2_penalty
            )));
        }
        Ok(())
    }
}

/// Shape of the hidden stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub activation: Activation,
    /// Run greedy denoising-autoencoder pretraining before fine-tuning.
    pub pretrain: bool,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_units: 250,
            activation: Activation::Relu,
            pretrain: true,
        }
    }
}

impl Architecture {
    pub fn widths(&self) -> Vec<usize> {
        vec![self.hidden_units; self.hidden_layers]
    }
}
