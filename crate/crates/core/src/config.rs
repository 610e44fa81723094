//! Line-oriented `key = value` configuration with one section per module.
//!
//! ```text
//! # comments run to the end of the line
//! [nn]
//! hidden_layers = 2
//! hidden_units = 250
//! pretrain_learning_rate = 0.001
//!
//! [tune]
//! budget = 40
//! space.nn.hidden_units = 32 512 log
//! space.coxnet.alpha = 0 1
//! ```
//!
//! Every key has a default, so any subset may be given. Unknown sections,
//! unknown keys and repeated keys are errors. `space.<family>.<param>` lines
//! replace (or add) one dimension of a method family's search space, where
//! the family is `nn` or `coxnet`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::coxnet::CoxnetOptions;
use crate::data::{RiskKind, SyntheticSpec};
use crate::error::{Result, SurvError};
use crate::hyperopt::{Dimension, OptimizerSettings, ParamKind};
use crate::nn::{Architecture, TrainConfig};

/// Network shape and training settings. The activation comes from the
/// method name (`nn-sigmoid` or `nn-relu`), not from this section.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NnSettings {
    pub architecture: Architecture,
    pub train: TrainConfig,
}

pub const NN_KEYS: [&str; 11] = [
    "hidden_layers",
    "hidden_units",
    "pretrain",
    "pretrain_learning_rate",
    "finetune_learning_rate",
    "pretrain_epochs",
    "finetune_epochs",
    "corruption_rate",
    "minibatch_size_pretrain",
    "l2_penalty",
    "rng_seed",
];

impl NnSettings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.architecture;
        let t = &mut self.train;
        match key {
            "hidden_layers" => a.hidden_layers = parse(key, value)?,
            "hidden_units" => a.hidden_units = parse(key, value)?,
            "pretrain" => a.pretrain = parse(key, value)?,
            "pretrain_learning_rate" => t.pretrain_learning_rate = parse(key, value)?,
            "finetune_learning_rate" => t.finetune_learning_rate = parse(key, value)?,
            "pretrain_epochs" => t.pretrain_epochs = parse(key, value)?,
            "finetune_epochs" => t.finetune_epochs = parse(key, value)?,
            "corruption_rate" => t.corruption_rate = parse(key, value)?,
            "minibatch_size_pretrain" => t.minibatch_size_pretrain = parse(key, value)?,
            "l2_penalty" => t.l2_penalty = parse(key, value)?,
            "rng_seed" => t.rng_seed = parse(key, value)?,
            _ => return Err(unknown(key)),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let a = &self.architecture;
        let t = &self.train;
        Some(match key {
            "hidden_layers" => a.hidden_layers.to_string(),
            "hidden_units" => a.hidden_units.to_string(),
            "pretrain" => a.pretrain.to_string(),
            "pretrain_learning_rate" => t.pretrain_learning_rate.to_string(),
            "finetune_learning_rate" => t.finetune_learning_rate.to_string(),
            "pretrain_epochs" => t.pretrain_epochs.to_string(),
            "finetune_epochs" => t.finetune_epochs.to_string(),
            "corruption_rate" => t.corruption_rate.to_string(),
            "minibatch_size_pretrain" => t.minibatch_size_pretrain.to_string(),
            "l2_penalty" => t.l2_penalty.to_string(),
            "rng_seed" => t.rng_seed.to_string(),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxnetSettings {
    pub lambda: f64,
    pub alpha: f64,
    pub options: CoxnetOptions,
}

impl Default for CoxnetSettings {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            alpha: 0.5,
            options: CoxnetOptions::default(),
        }
    }
}

pub const COXNET_KEYS: [&str; 5] = ["lambda", "alpha", "tol", "max_iter", "standardize"];

impl CoxnetSettings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lambda" => self.lambda = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "tol" => self.options.tol = parse(key, value)?,
            "max_iter" => self.options.max_iter = parse(key, value)?,
            "standardize" => self.options.standardize = parse(key, value)?,
            _ => return Err(unknown(key)),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "lambda" => self.lambda.to_string(),
            "alpha" => self.alpha.to_string(),
            "tol" => self.options.tol.to_string(),
            "max_iter" => self.options.max_iter.to_string(),
            "standardize" => self.options.standardize.to_string(),
            _ => return None,
        })
    }
}

pub const SYNTHETIC_KEYS: [&str; 7] = [
    "n",
    "p",
    "risk_kind",
    "sparsity",
    "censoring_rate",
    "seed",
    "signal_scale",
];

fn set_synthetic(s: &mut SyntheticSpec, key: &str, value: &str) -> Result<()> {
    match key {
        "n" => s.n = parse(key, value)?,
        "p" => s.p = parse(key, value)?,
        "risk_kind" => s.risk_kind = value.parse::<RiskKind>().map_err(|e| bad_value(key, &e.to_string()))?,
        "sparsity" => s.sparsity = parse(key, value)?,
        "censoring_rate" => s.censoring_rate = parse(key, value)?,
        "seed" => s.seed = parse(key, value)?,
        "signal_scale" => s.signal_scale = parse(key, value)?,
        _ => return Err(unknown(key)),
    }
    Ok(())
}

fn get_synthetic(s: &SyntheticSpec, key: &str) -> String {
    match key {
        "n" => s.n.to_string(),
        "p" => s.p.to_string(),
        "risk_kind" => s.risk_kind.to_string(),
        "sparsity" => s.sparsity.to_string(),
        "censoring_rate" => s.censoring_rate.to_string(),
        "seed" => s.seed.to_string(),
        "signal_scale" => s.signal_scale.to_string(),
        _ => unreachable!("synthetic keys are fixed"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceOverride {
    /// `nn` or `coxnet`.
    pub family: String,
    pub dimension: Dimension,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TuneSettings {
    pub optimizer: OptimizerSettings,
    pub space_overrides: Vec<SpaceOverride>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSettings {
    pub permutations: usize,
    pub base_seed: u64,
    pub methods: Vec<String>,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            permutations: 10,
            base_seed: 0,
            methods: vec!["coxnet".into(), "nn-sigmoid".into(), "nn-relu".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    /// Dataset path from `[data] path = ...`, as written in the file.
    pub data_path: Option<String>,
    pub nn: NnSettings,
    pub coxnet: CoxnetSettings,
    pub synthetic: SyntheticSpec,
    pub tune: TuneSettings,
    pub benchmark: BenchmarkSettings,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad_value(key, &format!("cannot parse `{value}`")))
}

fn bad_value(key: &str, why: &str) -> SurvError {
    SurvError::InvalidInput(format!("`{key}`: {why}"))
}

fn unknown(key: &str) -> SurvError {
    SurvError::InvalidInput(format!("unknown key `{key}`"))
}

/// Integer-valued tunables; everything else is searched as a real.
fn is_integer_param(name: &str) -> bool {
    matches!(
        name,
        "hidden_layers"
            | "hidden_units"
            | "pretrain_epochs"
            | "finetune_epochs"
            | "minibatch_size_pretrain"
            | "max_iter"
    )
}

fn parse_space(key: &str, value: &str) -> Result<SpaceOverride> {
    let mut parts = key.splitn(3, '.');
    let (_, family, name) = (parts.next(), parts.next(), parts.next());
    let (family, name) = match (family, name) {
        (Some(f @ ("nn" | "coxnet")), Some(n)) => (f, n),
        _ => return Err(bad_value(key, "expected `space.nn.<param>` or `space.coxnet.<param>`")),
    };
    let tunable = match family {
        "nn" => NN_KEYS.contains(&name) && name != "pretrain" && name != "rng_seed",
        _ => matches!(name, "lambda" | "alpha"),
    };
    if !tunable {
        return Err(bad_value(key, &format!("`{name}` is not tunable")));
    }
    let fields: Vec<&str> = value.split_whitespace().collect();
    let log_scale = match fields.as_slice() {
        [_, _] => false,
        [_, _, "log"] => true,
        _ => return Err(bad_value(key, "expected `<lower> <upper> [log]`")),
    };
    let lower: f64 = parse(key, fields[0])?;
    let upper: f64 = parse(key, fields[1])?;
    let kind = if is_integer_param(name) {
        ParamKind::Integer
    } else {
        ParamKind::Continuous
    };
    let dimension = Dimension {
        name: name.to_string(),
        kind,
        lower,
        upper,
        log_scale,
    };
    crate::hyperopt::ParamSpace::new(vec![dimension.clone()]).map_err(|e| bad_value(key, &e.to_string()))?;
    Ok(SpaceOverride {
        family: family.to_string(),
        dimension,
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| SurvError::Config { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["data", "nn", "coxnet", "synthetic", "tune", "benchmark"].contains(&name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let sec = section
                .as_deref()
                .ok_or_else(|| err(format!("`{key}` appears before any section")))?;
            if !seen.insert(format!("{sec}.{key}")) {
                return Err(err(format!("`{key}` repeated in [{sec}]")));
            }
            let outcome = match sec {
                "data" if key == "path" => {
                    cfg.data_path = Some(value.to_string());
                    Ok(())
                }
                "data" => Err(unknown(key)),
                "nn" => cfg.nn.set(key, value),
                "coxnet" => cfg.coxnet.set(key, value),
                "synthetic" => set_synthetic(&mut cfg.synthetic, key, value),
                "tune" => cfg.set_tune(key, value),
                _ => cfg.set_benchmark(key, value),
            };
            outcome.map_err(|e| err(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set_tune(&mut self, key: &str, value: &str) -> Result<()> {
        let o = &mut self.tune.optimizer;
        match key {
            "budget" => o.budget = parse(key, value)?,
            "init_trials" => o.init_trials = parse(key, value)?,
            "candidates" => o.candidates = parse(key, value)?,
            k if k.starts_with("space.") => {
                let ov = parse_space(k, value)?;
                self.tune.space_overrides.push(ov);
            }
            _ => return Err(unknown(key)),
        }
        Ok(())
    }

    fn set_benchmark(&mut self, key: &str, value: &str) -> Result<()> {
        let b = &mut self.benchmark;
        match key {
            "permutations" => b.permutations = parse(key, value)?,
            "base_seed" => b.base_seed = parse(key, value)?,
            "methods" => {
                b.methods = value
                    .split(',')
                    .map(|m| m.trim().to_string())
                    .filter(|m| !m.is_empty())
                    .collect()
            }
            _ => return Err(unknown(key)),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SurvError::Config { line: 0, message: m });
        if let Err(e) = self.nn.train.validate() {
            return fail(e.to_string());
        }
        if self.nn.architecture.hidden_layers == 0 || self.nn.architecture.hidden_units == 0 {
            return fail("hidden_layers and hidden_units must be positive".into());
        }
        let o = &self.tune.optimizer;
        if o.init_trials == 0 || o.budget < o.init_trials || o.candidates == 0 {
            return fail("need budget >= init_trials >= 1 and candidates >= 1".into());
        }
        if self.benchmark.permutations == 0 {
            return fail("permutations must be positive".into());
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Full snapshot with every key; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.data_path {
            writeln!(out, "[data]\npath = {p}\n").unwrap();
        }
        out.push_str("[nn]\n");
        for key in NN_KEYS {
            writeln!(out, "{key} = {}", self.nn.get(key).expect("listed key")).unwrap();
        }
        out.push_str("\n[coxnet]\n");
        for key in COXNET_KEYS {
            writeln!(out, "{key} = {}", self.coxnet.get(key).expect("listed key")).unwrap();
        }
        out.push_str("\n[synthetic]\n");
        for key in SYNTHETIC_KEYS {
            writeln!(out, "{key} = {}", get_synthetic(&self.synthetic, key)).unwrap();
        }
        let o = &self.tune.optimizer;
        writeln!(
            out,
            "\n[tune]\nbudget = {}\ninit_trials = {}\ncandidates = {}",
            o.budget, o.init_trials, o.candidates
        )
        .unwrap();
        for ov in &self.tune.space_overrides {
            let d = &ov.dimension;
            write!(out, "space.{}.{} = {} {}", ov.family, d.name, d.lower, d.upper).unwrap();
            out.push_str(if d.log_scale { " log\n" } else { "\n" });
        }
        let b = &self.benchmark;
        writeln!(
            out,
            "\n[benchmark]\npermutations = {}\nbase_seed = {}\nmethods = {}",
            b.permutations,
            b.base_seed,
            b.methods.join(",")
        )
        .unwrap();
        out
    }
}
