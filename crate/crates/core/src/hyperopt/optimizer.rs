use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::gp::GpSurrogate;
use super::space::ParamSpace;
use crate::error::{Result, SurvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: Vec<f64>,
    /// Objective value (higher is better); `-inf` for failed trials.
    pub score: f64,
    pub status: TrialStatus,
    pub message: Option<String>,
}

impl Trial {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub budget: usize,
    pub init_trials: usize,
    /// Random candidates scored by expected improvement per proposal.
    pub candidates: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            budget: 40,
            init_trials: 10,
            candidates: 2048,
        }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement over `best` of a normal belief `N(mean, variance)`,
/// for maximization.
pub fn expected_improvement_from_moments(mean: f64, variance: f64, best: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    let gap = mean - best;
    if sigma <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    (gap * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0)
}

pub fn expected_improvement(surrogate: &GpSurrogate, query: &[f64], best_score: f64) -> f64 {
    let (mean, variance) = surrogate.posterior(query);
    expected_improvement_from_moments(mean, variance, best_score)
}

fn random_point<R: Rng + ?Sized>(space: &ParamSpace, rng: &mut R) -> Vec<f64> {
    let unit: Vec<f64> = (0..space.len()).map(|_| rng.gen::<f64>()).collect();
    space.from_unit(&unit)
}

/// The expected-improvement maximizer among `candidates` uniform draws in
/// the transformed cube, in native units.
pub fn propose_next<R: Rng + ?Sized>(
    surrogate: &GpSurrogate,
    space: &ParamSpace,
    candidates: usize,
    rng: &mut R,
) -> Vec<f64> {
    let best = surrogate.best_score();
    let mut chosen: Option<(f64, Vec<f64>)> = None;
    for _ in 0..candidates.max(1) {
        let point = random_point(space, rng);
        let ei = expected_improvement(surrogate, &space.to_unit(&point), best);
        if chosen.as_ref().is_none_or(|(b, _)| ei > *b) {
            chosen = Some((ei, point));
        }
    }
    chosen.expect("at least one candidate").1
}

/// Random initial design followed by GP-guided proposals.
pub fn run_optimization<R, F>(
    space: &ParamSpace,
    objective: F,
    settings: &OptimizerSettings,
    rng: &mut R,
) -> Result<(Trial, Vec<Trial>)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    run_optimization_with(space, objective, settings, rng, &[], |_, _| Ok(()))
}

/// As [`run_optimization`], replaying `recorded` trials whose parameters
/// match the proposal at the same position instead of re-evaluating them.
/// Each finished trial goes to `observe` along with whether it was replayed.
/// Replay stops at the first recorded trial that does not match.
pub fn run_optimization_with<R, F, O>(
    space: &ParamSpace,
    mut objective: F,
    settings: &OptimizerSettings,
    rng: &mut R,
    recorded: &[Trial],
    mut observe: O,
) -> Result<(Trial, Vec<Trial>)>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
    O: FnMut(&Trial, bool) -> Result<()>,
{
    if settings.init_trials == 0 || settings.budget < settings.init_trials {
        return Err(SurvError::InvalidInput(format!(
            "need budget >= init_trials >= 1, got budget {} and init {}",
            settings.budget, settings.init_trials
        )));
    }
    let mut trials: Vec<Trial> = Vec::with_capacity(settings.budget);
    let mut replaying = true;
    for k in 0..settings.budget {
        let ok: Vec<&Trial> = trials.iter().filter(|t| t.is_ok()).collect();
        let params = if k < settings.init_trials || ok.is_empty() {
            random_point(space, rng)
        } else {
            let units: Vec<Vec<f64>> = ok.iter().map(|t| space.to_unit(&t.params)).collect();
            let scores: Vec<f64> = ok.iter().map(|t| t.score).collect();
            match GpSurrogate::fit(&units, &scores) {
                Ok(gp) => propose_next(&gp, space, settings.candidates, rng),
                Err(e) => {
                    log::warn!("surrogate fit failed ({e}); drawing a random point");
                    random_point(space, rng)
                }
            }
        };
        replaying = replaying && recorded.get(k).is_some_and(|t| t.params == params);
        let trial = match recorded.get(k).filter(|_| replaying) {
            Some(previous) => previous.clone(),
            None => match objective(&params) {
                Ok(score) if score.is_finite() => Trial {
                    params,
                    score,
                    status: TrialStatus::Ok,
                    message: None,
                },
                Ok(score) => failed(params, format!("objective returned {score}")),
                Err(e) => failed(params, e.to_string()),
            },
        };
        observe(&trial, replaying)?;
        trials.push(trial);
    }
    let best = best_trial(&trials).ok_or(SurvError::OptimizationFailed(trials.len()))?;
    Ok((best.clone(), trials))
}

fn failed(params: Vec<f64>, message: String) -> Trial {
    Trial {
        params,
        score: f64::NEG_INFINITY,
        status: TrialStatus::Failed,
        message: Some(message),
    }
}

/// Highest-scoring successful trial; the earliest wins ties.
pub fn best_trial(trials: &[Trial]) -> Option<&Trial> {
    trials
        .iter()
        .filter(|t| t.is_ok())
        .fold(None, |best: Option<&Trial>, t| match best {
            Some(b) if b.score >= t.score => Some(b),
            _ => Some(t),
        })
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialRecord {
    index: usize,
    status: String,
    score: Option<f64>,
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

/// One JSON object per line: `index`, `status`, `score`, `params`, and
/// `message` for failures.
pub fn format_trial_line(space: &ParamSpace, index: usize, trial: &Trial) -> String {
    let record = TrialRecord {
        index,
        status: match trial.status {
            TrialStatus::Ok => "ok".into(),
            TrialStatus::Failed => "failed".into(),
        },
        score: trial.is_ok().then_some(trial.score),
        params: space
            .names()
            .into_iter()
            .map(String::from)
            .zip(trial.params.iter().copied())
            .collect(),
        message: trial.message.clone(),
    };
    serde_json::to_string(&record).expect("trial records serialize")
}

pub fn parse_trial_line(space: &ParamSpace, line: &str) -> Result<Trial> {
    let record: TrialRecord =
        serde_json::from_str(line).map_err(|e| SurvError::InvalidInput(format!("bad trial record: {e}")))?;
    let params = space
        .names()
        .into_iter()
        .map(|name| {
            record
                .params
                .get(name)
                .copied()
                .ok_or_else(|| SurvError::InvalidInput(format!("trial record lacks parameter `{name}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (status, score) = match (record.status.as_str(), record.score) {
        ("ok", Some(s)) => (TrialStatus::Ok, s),
        ("failed", _) => (TrialStatus::Failed, f64::NEG_INFINITY),
        (other, _) => {
            return Err(SurvError::InvalidInput(format!("bad trial status `{other}`")));
        }
    };
    Ok(Trial {
        params,
        score,
        status,
        message: record.message,
    })
}

/// Append-only trial log backing resumable optimization runs.
pub struct TrialLog {
    file: File,
    space: ParamSpace,
    next_index: usize,
}

impl TrialLog {
    /// Opens (creating if needed) the log and returns the trials already in it.
    pub fn open(path: &Path, space: &ParamSpace) -> Result<(Self, Vec<Trial>)> {
        let existing = if path.exists() {
            read_trial_log(path, space)?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok((
            Self {
                file,
                space: space.clone(),
                next_index: existing.len(),
            },
            existing,
        ))
    }

    /// Replaces the whole log with `trials`.
    pub fn rewrite(&mut self, path: &Path, trials: &[Trial]) -> Result<()> {
        let mut text = String::new();
        for (k, t) in trials.iter().enumerate() {
            text.push_str(&format_trial_line(&self.space, k, t));
            text.push('\n');
        }
        crate::data::write_atomic(path, text.as_bytes())?;
        self.file = OpenOptions::new().append(true).open(path)?;
        self.next_index = trials.len();
        Ok(())
    }

    pub fn append(&mut self, trial: &Trial) -> Result<()> {
        writeln!(self.file, "{}", format_trial_line(&self.space, self.next_index, trial))?;
        self.next_index += 1;
        Ok(())
    }
}

pub fn read_trial_log(path: &Path, space: &ParamSpace) -> Result<Vec<Trial>> {
    let reader = BufReader::new(File::open(path)?);
    let mut trials = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        trials.push(parse_trial_line(space, &line)?);
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperopt::space::Dimension;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ei_closed_forms() {
        assert_eq!(expected_improvement_from_moments(0.7, 0.0, 0.7), 0.0);
        assert_eq!(expected_improvement_from_moments(0.5, 0.0, 0.7), 0.0);
        let at_best = expected_improvement_from_moments(1.0, 1.0, 1.0);
        assert!((at_best - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn settings_are_validated() {
        let space = ParamSpace::new(vec![Dimension::continuous("x", 0.0, 1.0, false)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = OptimizerSettings {
            budget: 3,
            init_trials: 5,
            candidates: 10,
        };
        assert!(run_optimization(&space, |_| Ok(0.0), &bad, &mut rng).is_err());
    }

    #[test]
    fn all_failed_is_an_error() {
        let space = ParamSpace::new(vec![Dimension::continuous("x", 0.0, 1.0, false)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let settings = OptimizerSettings {
            budget: 4,
            init_trials: 2,
            candidates: 10,
        };
        let out = run_optimization(
            &space,
            |_| Err(SurvError::Numerical("boom".into())),
            &settings,
            &mut rng,
        );
        assert!(matches!(out, Err(SurvError::OptimizationFailed(4))));
    }

    #[test]
    fn trial_lines_round_trip() {
        let space = ParamSpace::new(vec![
            Dimension::continuous("lr", 1e-5, 1e-1, true),
            Dimension::integer("layers", 1, 3, false),
        ])
        .unwrap();
        let ok = Trial {
            params: vec![0.000_123_456_789, 2.0],
            score: 0.712_345_678_901_234_5,
            status: TrialStatus::Ok,
            message: None,
        };
        let bad = failed(vec![0.05, 1.0], "diverged".into());
        for t in [ok, bad] {
            let line = format_trial_line(&space, 3, &t);
            assert_eq!(parse_trial_line(&space, &line).unwrap(), t);
        }
    }
}
