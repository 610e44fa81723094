use ndarray::Array2;

use super::{Network, TrainConfig};
use crate::error::{Result, SurvError};
use crate::survival::{concordance_index, CoxObjective, SurvivalLabels};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Cox loss of the parameters entering this epoch (penalty excluded).
    pub loss: f64,
    /// Validation concordance of the same parameters, when defined.
    pub validation_ci: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FinetuneHistory {
    pub epochs: Vec<EpochRecord>,
    /// Number of updates applied to the returned parameters.
    pub selected_epoch: usize,
    pub selected_validation_ci: Option<f64>,
}

/// Cox loss and the gradients of all network parameters.
pub fn cox_loss_and_gradients(
    network: &Network,
    inputs: &Array2<f64>,
    objective: &CoxObjective,
) -> Result<(f64, super::Gradients)> {
    let (risk, cache) = network.forward(inputs)?;
    let (loss, grad_risk) = objective.loss_and_gradient(&risk)?;
    Ok((loss, network.backward(&cache, &grad_risk)))
}

/// Full-batch gradient descent on the Cox negative log partial likelihood of
/// the network's risk output.
///
/// With a validation set, the parameters with the best validation
/// concordance seen over the run (including the final state) are returned.
pub fn finetune_cox(
    network: &Network,
    inputs: &Array2<f64>,
    labels: &SurvivalLabels,
    config: &TrainConfig,
    validation: Option<(&Array2<f64>, &SurvivalLabels)>,
) -> Result<(Network, FinetuneHistory)> {
    config.validate()?;
    if inputs.nrows() != labels.len() {
        return Err(SurvError::DimensionMismatch(format!(
            "{} input rows for {} labels",
            inputs.nrows(),
            labels.len()
        )));
    }
    if labels.n_events() == 0 {
        return Err(SurvError::UndefinedLoss);
    }
    let mut history = FinetuneHistory::default();
    if config.finetune_epochs == 0 {
        return Ok((network.clone(), history));
    }
    let objective = CoxObjective::new(labels);
    let lr = config.finetune_learning_rate;
    let mut current = network.clone();
    let mut best: Option<(Network, f64, usize)> = None;

    let validation_ci = |net: &Network| -> Result<Option<f64>> {
        let Some((vx, vy)) = validation else {
            return Ok(None);
        };
        let (risk, _) = net.forward(vx)?;
        if risk.iter().any(|r| !r.is_finite()) {
            return Ok(None);
        }
        match concordance_index(&risk, vy) {
            Ok(ci) => Ok(Some(ci)),
            Err(SurvError::UndefinedMetric) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut consider = |net: &Network, ci: Option<f64>, epoch: usize| {
        if let Some(ci) = ci {
            if best.as_ref().is_none_or(|(_, b, _)| ci > *b) {
                best = Some((net.clone(), ci, epoch));
            }
        }
    };

    for epoch in 0..config.finetune_epochs {
        let (risk, cache) = current.forward(inputs)?;
        if risk.iter().any(|r| !r.is_finite()) {
            return Err(SurvError::Divergence {
                epoch,
                detail: "risk output is not finite".into(),
            });
        }
        let (loss, grad_risk) = objective.loss_and_gradient(&risk)?;
        if !loss.is_finite() {
            return Err(SurvError::Divergence {
                epoch,
                detail: "Cox loss is not finite".into(),
            });
        }
        let ci = validation_ci(&current)?;
        consider(&current, ci, epoch);
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            validation_ci: ci,
        });
        log::trace!("finetune epoch {epoch}: loss {loss} validation ci {ci:?}");

        let grads = current.backward(&cache, &grad_risk);
        current.apply_gradients(&grads, lr, config.l2_penalty);
    }

    if !current.is_finite() {
        return Err(SurvError::Divergence {
            epoch: config.finetune_epochs,
            detail: "parameters are not finite".into(),
        });
    }
    let ci = validation_ci(&current)?;
    consider(&current, ci, config.finetune_epochs);

    match best {
        Some((net, ci, epoch)) => {
            history.selected_epoch = epoch;
            history.selected_validation_ci = Some(ci);
            Ok((net, history))
        }
        None => {
            history.selected_epoch = config.finetune_epochs;
            Ok((current, history))
        }
    }
}
