//! Gaussian-process guided search over a box of hyperparameters.

mod gp;
mod optimizer;
mod space;

pub use gp::{gp_posterior, GpHyperparameters, GpSurrogate, NOISE_FLOOR};
pub use optimizer::{
    best_trial, expected_improvement, expected_improvement_from_moments, format_trial_line, parse_trial_line,
    propose_next, read_trial_log, run_optimization, run_optimization_with, OptimizerSettings, Trial, TrialLog,
    TrialStatus,
};
pub use space::{Dimension, ParamKind, ParamSpace};
