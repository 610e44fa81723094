use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::methods::{Method, RiskModel};
use super::report::{EvalReport, MethodReport, PermutationResult};
use super::split::{make_split, SplitPlan};
use crate::data::{write_atomic, Dataset};
use crate::error::{Result, SurvError};
use crate::hyperopt::{run_optimization_with, OptimizerSettings, Trial, TrialLog};
use crate::survival::concordance_index;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOptions {
    pub permutations: usize,
    pub base_seed: u64,
    pub optimizer: OptimizerSettings,
    /// Where trial logs and fitted models go, if anywhere.
    pub run_dir: Option<PathBuf>,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            permutations: 10,
            base_seed: 0,
            optimizer: OptimizerSettings::default(),
            run_dir: None,
        }
    }
}

pub struct TuneOutcome {
    pub best: Trial,
    pub trials: Vec<Trial>,
    /// The best trial's model, fitted on the training rows.
    pub model: Box<dyn RiskModel>,
    pub params: Vec<(String, f64)>,
}

/// Search stream for a method: seeded by the permutation, with the stream
/// picked by the method name so methods do not share random draws.
pub fn tuning_rng(seed: u64, method: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // FNV-1a keeps the stream stable across runs and method lists
    let stream = method.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    });
    rng.set_stream(stream);
    rng
}

pub fn validation_score(model: &dyn RiskModel, validation: &Dataset) -> Result<f64> {
    let risk = model.predict(validation)?;
    concordance_index(&risk, validation.labels())
}

/// Tunes `method` on one train/validation pair, optionally appending to
/// and resuming from a trial log.
pub fn tune_method(
    method: &dyn Method,
    train: &Dataset,
    validation: &Dataset,
    seed: u64,
    optimizer: &OptimizerSettings,
    log_path: Option<&Path>,
) -> Result<TuneOutcome> {
    let space = method.space().clone();
    let (mut log, recorded) = match log_path {
        Some(p) => {
            let (log, recorded) = TrialLog::open(p, &space)?;
            (Some(log), recorded)
        }
        None => (None, Vec::new()),
    };
    let mut rng = tuning_rng(seed, method.name());
    let mut kept: Option<(Vec<f64>, f64, Box<dyn RiskModel>)> = None;
    let objective = |params: &[f64]| -> Result<f64> {
        let model = method.fit(params, train, validation, seed)?;
        let score = validation_score(model.as_ref(), validation)?;
        if kept.as_ref().is_none_or(|(_, best, _)| score > *best) {
            kept = Some((params.to_vec(), score, model));
        }
        Ok(score)
    };
    let (best, trials) = run_optimization_with(&space, objective, optimizer, &mut rng, &recorded, |t, replayed| {
        log::info!("{} trial: score {} params {:?}", method.name(), t.score, t.params);
        match log.as_mut() {
            Some(l) if !replayed => l.append(t),
            _ => Ok(()),
        }
    })?;
    if let (Some(l), Some(p)) = (log.as_mut(), log_path) {
        // a log from a different run was only partly reusable
        if recorded.len() > trials.len() || trials[..recorded.len()] != recorded[..] {
            l.rewrite(p, &trials)?;
        }
    }
    let model = match kept {
        Some((params, _, model)) if params == best.params => model,
        // the best trial came from the log; fitting is deterministic in (params, seed)
        _ => method.fit(&best.params, train, validation, seed)?,
    };
    let params = space
        .names()
        .into_iter()
        .map(String::from)
        .zip(best.params.iter().copied())
        .collect();
    Ok(TuneOutcome {
        best,
        trials,
        model,
        params,
    })
}

pub struct SplitData {
    pub plan: SplitPlan,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

pub fn split_dataset(dataset: &Dataset, seed: u64) -> Result<SplitData> {
    let plan = make_split(dataset.len(), seed)?;
    Ok(SplitData {
        train: dataset.subset(&plan.train)?,
        validation: dataset.subset(&plan.validation)?,
        test: dataset.subset(&plan.test)?,
        plan,
    })
}

fn evaluate(
    method: &dyn Method,
    split: &SplitData,
    seed: u64,
    options: &ProtocolOptions,
    tag: &str,
) -> Result<(f64, Vec<(String, f64)>)> {
    let log_path = options
        .run_dir
        .as_ref()
        .map(|d| d.join("trials").join(format!("{tag}.log")));
    let outcome = tune_method(
        method,
        &split.train,
        &split.validation,
        seed,
        &options.optimizer,
        log_path.as_deref(),
    )?;
    // the test rows reach the model only here, after tuning is over
    let risk = outcome.model.predict(&split.test)?;
    let ci = concordance_index(&risk, split.test.labels())?;
    if let (Some(dir), Some(text)) = (&options.run_dir, outcome.model.to_text()) {
        write_atomic(&dir.join("models").join(format!("{tag}.model")), text.as_bytes())?;
    }
    Ok((ci, outcome.params))
}

/// Every method is tuned and scored on the same splits. A method failing
/// on a permutation is recorded and the run goes on.
pub fn run_protocol(dataset: &Dataset, methods: &[&dyn Method], options: &ProtocolOptions) -> Result<EvalReport> {
    if options.permutations == 0 {
        return Err(SurvError::InvalidInput("need at least one permutation".into()));
    }
    if let Some(dir) = &options.run_dir {
        std::fs::create_dir_all(dir.join("trials"))?;
        std::fs::create_dir_all(dir.join("models"))?;
    }
    let mut report = EvalReport {
        methods: methods
            .iter()
            .map(|m| MethodReport {
                method: m.name().to_string(),
                results: Vec::new(),
            })
            .collect(),
    };
    for k in 0..options.permutations {
        let seed = options.base_seed + k as u64;
        let split = split_dataset(dataset, seed)?;
        for (method, slot) in methods.iter().zip(report.methods.iter_mut()) {
            let tag = format!("{}-perm{k}", method.name());
            let (outcome, params) = match evaluate(*method, &split, seed, options, &tag) {
                Ok((ci, params)) => (Ok(ci), params),
                Err(e @ SurvError::Io(_)) => return Err(e),
                Err(e) => {
                    log::warn!("{tag} failed: {e}");
                    (Err(e.to_string()), Vec::new())
                }
            };
            log::info!("{tag}: {outcome:?}");
            slot.results.push(PermutationResult {
                permutation: k,
                seed,
                outcome,
                params,
            });
        }
    }
    Ok(report)
}

/// Writes `config.txt`, `report.csv` and `report.txt` into `dir`.
pub fn write_report_files(dir: &Path, config_text: &str, report: &EvalReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (table, csv) = super::report::summarize(report);
    write_atomic(&dir.join("config.txt"), config_text.as_bytes())?;
    write_atomic(&dir.join("report.csv"), csv.as_bytes())?;
    write_atomic(&dir.join("report.txt"), table.as_bytes())
}
