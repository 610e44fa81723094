//! Censored survival labels, the Cox negative log partial likelihood, its
//! gradient with respect to the risk scores, and the concordance index.
//!
//! Risk scores are hazard oriented throughout: a larger score means a larger
//! hazard and a shorter expected survival. Tied event times share a single
//! risk set (Breslow), and the risk set of an event at time `t` contains every
//! sample whose time is `>= t`, so an event always belongs to its own risk set.

use std::collections::BTreeMap;
use std::ops::Deref;

use crate::error::{Result, SurvError};

/// Event or last-follow-up time plus event indicator for each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalLabels {
    times: Vec<f64>,
    events: Vec<bool>,
}

impl SurvivalLabels {
    pub fn new(times: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        if times.len() != events.len() {
            return Err(SurvError::DimensionMismatch(format!(
                "{} times but {} event flags",
                times.len(),
                events.len()
            )));
        }
        if times.is_empty() {
            return Err(SurvError::InvalidInput("empty dataset".into()));
        }
        if let Some((i, t)) = times.iter().enumerate().find(|(_, t)| !(t.is_finite() && **t > 0.0)) {
            return Err(SurvError::InvalidInput(format!(
                "time of sample {i} must be positive and finite, got {t}"
            )));
        }
        Ok(Self { times, events })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|e| **e).count()
    }

    /// Labels restricted to `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.times[i]).collect(),
            indices.iter().map(|&i| self.events[i]).collect(),
        )
    }
}

/// One finite risk score per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskVector(Vec<f64>);

impl RiskVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        check_finite(&scores)?;
        Ok(Self(scores))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for RiskVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_finite(scores: &[f64]) -> Result<()> {
    match scores.iter().position(|r| !r.is_finite()) {
        Some(i) => Err(SurvError::InvalidInput(format!(
            "risk score {i} is not finite ({})",
            scores[i]
        ))),
        None => Ok(()),
    }
}

fn check_risk(risk: &[f64], labels: &SurvivalLabels) -> Result<()> {
    if risk.len() != labels.len() {
        return Err(SurvError::DimensionMismatch(format!(
            "{} risk scores for {} samples",
            risk.len(),
            labels.len()
        )));
    }
    check_finite(risk)
}

/// Map from each uncensored sample to the indices of its risk set, ascending.
pub type RiskSetIndex = BTreeMap<usize, Vec<usize>>;

pub fn build_risk_sets(labels: &SurvivalLabels) -> Result<RiskSetIndex> {
    if labels.is_empty() {
        return Err(SurvError::InvalidInput("empty dataset".into()));
    }
    let times = labels.times();
    Ok(labels
        .events()
        .iter()
        .enumerate()
        .filter(|(_, e)| **e)
        .map(|(i, _)| {
            let members = (0..labels.len()).filter(|&j| times[j] >= times[i]).collect();
            (i, members)
        })
        .collect())
}

/// Running log-sum-exp that rescales whenever a new maximum arrives.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Cox partial likelihood for a fixed set of labels.
///
/// The time ordering is computed once so repeated evaluations during
/// training cost `O(n)` each.
#[derive(Debug, Clone)]
pub struct CoxObjective {
    n: usize,
    events: Vec<bool>,
    /// Sample indices sorted by ascending time.
    order: Vec<usize>,
    /// Half-open ranges into `order` of samples sharing one time, ascending.
    groups: Vec<(usize, usize)>,
    n_events: usize,
}

impl CoxObjective {
    pub fn new(labels: &SurvivalLabels) -> Self {
        let times = labels.times();
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut groups = Vec::new();
        let mut start = 0;
        for k in 1..=order.len() {
            if k == order.len() || times[order[k]] != times[order[start]] {
                groups.push((start, k));
                start = k;
            }
        }
        Self {
            n: labels.len(),
            events: labels.events().to_vec(),
            order,
            groups,
            n_events: labels.n_events(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    /// Log risk-set denominators per time group, plus the loss.
    fn denominators(&self, risk: &[f64]) -> (Vec<f64>, f64) {
        let mut log_denoms = vec![0.0; self.groups.len()];
        let mut acc = LogSumExp::new();
        let mut loss = 0.0;
        for (g, &(start, end)) in self.groups.iter().enumerate().rev() {
            for &i in &self.order[start..end] {
                acc.add(risk[i]);
            }
            let lse = acc.value();
            log_denoms[g] = lse;
            for &i in &self.order[start..end] {
                if self.events[i] {
                    loss += lse - risk[i];
                }
            }
        }
        (log_denoms, loss)
    }

    pub fn loss(&self, risk: &[f64]) -> Result<f64> {
        self.check(risk)?;
        Ok(self.denominators(risk).1)
    }

    pub fn gradient(&self, risk: &[f64]) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(risk)?.1)
    }

    pub fn loss_and_gradient(&self, risk: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(risk)?;
        let (log_denoms, loss) = self.denominators(risk);
        let mut grad = vec![0.0; self.n];
        // log of sum over event groups at or before the current time of d_g / S_g
        let mut acc = LogSumExp::new();
        for (g, &(start, end)) in self.groups.iter().enumerate() {
            let members = &self.order[start..end];
            let deaths = members.iter().filter(|&&i| self.events[i]).count();
            if deaths > 0 {
                acc.add((deaths as f64).ln() - log_denoms[g]);
            }
            let log_weight = acc.value();
            for &i in members {
                let share = if log_weight.is_finite() {
                    (risk[i] + log_weight).exp()
                } else {
                    0.0
                };
                grad[i] = share - if self.events[i] { 1.0 } else { 0.0 };
            }
        }
        Ok((loss, grad))
    }

    fn check(&self, risk: &[f64]) -> Result<()> {
        if risk.len() != self.n {
            return Err(SurvError::DimensionMismatch(format!(
                "{} risk scores for {} samples",
                risk.len(),
                self.n
            )));
        }
        check_finite(risk)
    }
}

/// Negative log partial likelihood `-sum_{i in U} (r_i - log sum_{j in R_i} e^{r_j})`.
///
/// An all-censored dataset has an empty sum and yields 0. Training routines
/// that need a defined objective reject that case themselves.
pub fn neg_log_partial_likelihood(risk: &[f64], labels: &SurvivalLabels) -> Result<f64> {
    check_risk(risk, labels)?;
    CoxObjective::new(labels).loss(risk)
}

/// Gradient of [`neg_log_partial_likelihood`] with respect to each risk score:
/// `g_i = -c_i + sum_{j in U, i in R_j} e^{r_i} / sum_{k in R_j} e^{r_k}`.
pub fn partial_likelihood_gradient(risk: &[f64], labels: &SurvivalLabels) -> Result<Vec<f64>> {
    check_risk(risk, labels)?;
    CoxObjective::new(labels).gradient(risk)
}

/// Concordant and orderable pair counts for hazard-oriented risk.
///
/// A pair is orderable when the earlier time is an observed event and the
/// other time is strictly later. It is concordant when the earlier sample
/// has the strictly larger risk; tied risks count as discordant.
pub fn concordance_counts(risk: &[f64], labels: &SurvivalLabels) -> Result<(u64, u64)> {
    check_risk(risk, labels)?;
    let times = labels.times();
    let events = labels.events();
    let n = risk.len();

    let mut sorted_risk: Vec<f64> = risk.to_vec();
    sorted_risk.sort_by(f64::total_cmp);
    sorted_risk.dedup();
    let rank = |r: f64| sorted_risk.partition_point(|&x| x < r);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));

    let mut tree = Fenwick::new(sorted_risk.len());
    let mut inserted = 0u64;
    let (mut concordant, mut orderable) = (0u64, 0u64);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && times[order[end]] == times[order[start]] {
            end += 1;
        }
        for &i in &order[start..end] {
            if events[i] {
                orderable += inserted;
                concordant += tree.prefix(rank(risk[i]));
            }
        }
        for &i in &order[start..end] {
            tree.add(rank(risk[i]));
            inserted += 1;
        }
        start = end;
    }
    Ok((concordant, orderable))
}

/// Fraction of orderable pairs ranked correctly by hazard-oriented risk.
///
/// Scores in the opposite (survival) orientation are handled by negating
/// them: `concordance_index(-s)`.
pub fn concordance_index(risk: &[f64], labels: &SurvivalLabels) -> Result<f64> {
    let (concordant, orderable) = concordance_counts(risk, labels)?;
    if orderable == 0 {
        return Err(SurvError::UndefinedMetric);
    }
    Ok(concordant as f64 / orderable as f64)
}

/// Counts over risk ranks; `prefix(k)` is the number of entries with rank `< k`.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, rank: usize) {
        let mut k = rank + 1;
        while k < self.tree.len() {
            self.tree[k] += 1;
            k += k & k.wrapping_neg();
        }
    }

    fn prefix(&self, rank: usize) -> u64 {
        let mut k = rank;
        let mut total = 0;
        while k > 0 {
            total += self.tree[k];
            k -= k & k.wrapping_neg();
        }
        total
    }
}
