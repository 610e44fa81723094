//! Dense networks with a linear Cox risk head, denoising-autoencoder
//! pretraining and full-batch Cox fine-tuning.

mod activation;
mod config;
mod finetune;
mod layer;
mod network;
mod pretrain;

pub use activation::Activation;
pub use config::{Architecture, TrainConfig};
pub use finetune::{cox_loss_and_gradients, finetune_cox, EpochRecord, FinetuneHistory};
pub use layer::DenseLayer;
pub use network::{ForwardCache, Gradients, Network};
pub use pretrain::{corrupt, pretrain_layer, reconstruction_mse, stacked_pretrain, PretrainOutcome};
