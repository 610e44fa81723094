use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::Dataset;
use crate::error::{Result, SurvError};
use crate::survival::SurvivalLabels;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskKind {
    Linear,
    Nonlinear,
}

impl fmt::Display for RiskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskKind::Linear => "linear",
            RiskKind::Nonlinear => "nonlinear",
        })
    }
}

impl FromStr for RiskKind {
    type Err = SurvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RiskKind::Linear),
            "nonlinear" => Ok(RiskKind::Nonlinear),
            other => Err(SurvError::InvalidInput(format!("unknown risk kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub risk_kind: RiskKind,
    /// Number of features that enter the true risk.
    pub sparsity: usize,
    pub censoring_rate: f64,
    pub seed: u64,
    /// Standard deviation of the true risk across the population.
    pub signal_scale: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 628,
            p: 183,
            risk_kind: RiskKind::Nonlinear,
            sparsity: 5,
            censoring_rate: 0.3,
            seed: 0,
            signal_scale: 2.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SurvError::InvalidInput(m));
        if self.n < 10 {
            return bad(format!("n must be at least 10, got {}", self.n));
        }
        if self.sparsity > self.p {
            return bad(format!("sparsity {} exceeds p = {}", self.sparsity, self.p));
        }
        if !(self.censoring_rate > 0.0 && self.censoring_rate < 1.0) {
            return bad(format!(
                "censoring rate must lie in (0, 1), got {}",
                self.censoring_rate
            ));
        }
        if !(self.signal_scale.is_finite() && self.signal_scale >= 0.0) {
            return bad(format!(
                "signal scale must be finite and nonnegative, got {}",
                self.signal_scale
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub true_risk: Vec<f64>,
    /// Indices of the features that drive the risk.
    pub active: Vec<usize>,
    pub realized_censoring: f64,
}

const CALIBRATION_STEPS: usize = 200;
const CALIBRATION_TOLERANCE: f64 = 0.05;

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, p, s) = (spec.n, spec.p, spec.sparsity);
    let x = Array2::from_shape_simple_fn((n, p), || rng.sample::<f64, _>(StandardNormal));
    let mut active = sample(&mut rng, p, s).into_vec();
    active.sort_unstable();
    let signs: Vec<f64> = (0..s).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();

    let linear: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|row| active.iter().zip(&signs).map(|(&k, w)| w * row[k]).sum::<f64>())
        .collect();
    let true_risk: Vec<f64> = match spec.risk_kind {
        RiskKind::Linear if s > 0 => {
            let w = spec.signal_scale / (s as f64).sqrt();
            linear.iter().map(|v| w * v).collect()
        }
        RiskKind::Nonlinear if s > 0 => {
            let raw: Vec<f64> = x
                .rows()
                .into_iter()
                .zip(&linear)
                .map(|(row, lin)| {
                    let squares: f64 = active.iter().map(|&k| row[k] * row[k] - 1.0).sum();
                    let pairs: f64 = active.windows(2).map(|w| row[w[0]] * row[w[1]]).sum();
                    lin / (s as f64).sqrt()
                        + squares / (2.0 * s as f64).sqrt()
                        + if s > 1 { pairs / ((s - 1) as f64).sqrt() } else { 0.0 }
                })
                .collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            let sd = (raw.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            if sd > 0.0 {
                raw.iter().map(|r| spec.signal_scale * (r - mean) / sd).collect()
            } else {
                vec![0.0; n]
            }
        }
        _ => vec![0.0; n],
    };

    let death_draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let censor_draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let deaths: Vec<f64> = death_draws
        .iter()
        .zip(&true_risk)
        .map(|(d, r)| (d * (-r).exp()).max(f64::MIN_POSITIVE))
        .collect();
    let censored_fraction = |rate: f64| {
        deaths
            .iter()
            .zip(&censor_draws)
            .filter(|(d, c)| *c / rate < **d)
            .count() as f64
            / n as f64
    };

    // censoring fraction grows with the censoring rate; bisect on its log and
    // keep the closest fraction seen
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..CALIBRATION_STEPS {
        let mid = 0.5 * (lo + hi);
        let gap = censored_fraction(mid.exp()) - spec.censoring_rate;
        if best.is_none_or(|(g, _)| gap.abs() < g) {
            best = Some((gap.abs(), mid.exp()));
        }
        if gap == 0.0 || hi - lo < 1e-12 {
            break;
        }
        if gap < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rate = match best {
        Some((gap, rate)) if gap <= CALIBRATION_TOLERANCE => rate,
        _ => {
            return Err(SurvError::Generation(format!(
                "could not reach censoring fraction {} within {CALIBRATION_TOLERANCE}",
                spec.censoring_rate
            )))
        }
    };

    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for (d, c) in deaths.iter().zip(&censor_draws) {
        let c = (c / rate).max(f64::MIN_POSITIVE);
        times.push(d.min(c));
        events.push(*d <= c);
    }
    let realized_censoring = events.iter().filter(|e| !**e).count() as f64 / n as f64;
    let width = (n - 1).to_string().len();
    let ids = (0..n).map(|i| format!("s{i:0width$}")).collect();
    let names = (0..p).map(|j| format!("f{j}")).collect();
    let dataset = Dataset::new(ids, x, SurvivalLabels::new(times, events)?, names)?;
    Ok(SyntheticData {
        dataset,
        true_risk,
        active,
        realized_censoring,
    })
}
