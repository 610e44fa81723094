pub mod config;
pub mod coxnet;
pub mod data;
pub mod error;
pub mod harness;
pub mod hyperopt;
pub mod model_io;
pub mod nn;
pub mod survival;

pub use error::{Result, SurvError};
