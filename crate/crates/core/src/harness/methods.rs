use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{CoxnetSettings, NnSettings, SpaceOverride};
use crate::coxnet::{fit_elastic_net_cox, CoxnetFit};
use crate::data::{Dataset, Standardizer};
use crate::error::{Result, SurvError};
use crate::hyperopt::{Dimension, ParamSpace};
use crate::model_io::{Pipeline, Predictor};
use crate::nn::{finetune_cox, stacked_pretrain, Activation, FinetuneHistory, Network};

/// A fitted model that scores samples it has never seen.
pub trait RiskModel {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>>;

    /// Model file contents, for models that have a file form.
    fn to_text(&self) -> Option<String> {
        None
    }
}

impl RiskModel for Pipeline {
    fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(Pipeline::predict(self, data.features())?.into_inner())
    }

    fn to_text(&self) -> Option<String> {
        Some(Pipeline::to_text(self))
    }
}

/// A tunable model family. Tuning only ever hands it training and
/// validation rows.
pub trait Method {
    fn name(&self) -> &str;
    fn space(&self) -> &ParamSpace;
    fn fit(&self, params: &[f64], train: &Dataset, validation: &Dataset, seed: u64) -> Result<Box<dyn RiskModel>>;
}

pub fn default_nn_space() -> ParamSpace {
    ParamSpace::new(vec![
        Dimension::integer("hidden_layers", 1, 3, false),
        Dimension::integer("hidden_units", 32, 512, true),
        Dimension::continuous("pretrain_learning_rate", 1e-5, 1e-1, true),
        Dimension::continuous("finetune_learning_rate", 1e-5, 1e-1, true),
        Dimension::continuous("corruption_rate", 0.0, 0.5, false),
    ])
    .expect("valid default space")
}

pub fn default_coxnet_space() -> ParamSpace {
    ParamSpace::new(vec![
        Dimension::continuous("lambda", 1e-4, 1e1, true),
        Dimension::continuous("alpha", 0.0, 1.0, false),
    ])
    .expect("valid default space")
}

/// Replaces same-named dimensions of `base` and appends new ones.
pub fn apply_overrides(base: ParamSpace, family: &str, overrides: &[SpaceOverride]) -> Result<ParamSpace> {
    let mut dims = base.dims().to_vec();
    for ov in overrides.iter().filter(|o| o.family == family) {
        match dims.iter_mut().find(|d| d.name == ov.dimension.name) {
            Some(d) => *d = ov.dimension.clone(),
            None => dims.push(ov.dimension.clone()),
        }
    }
    ParamSpace::new(dims)
}

/// Trains a network pipeline on `train`, selecting the epoch on `validation`.
/// The network's random state is seeded from `settings.train.rng_seed`.
pub fn train_network(
    settings: &NnSettings,
    activation: Activation,
    train: &Dataset,
    validation: Option<&Dataset>,
) -> Result<(Pipeline, FinetuneHistory)> {
    let standardizer = Standardizer::fit(train.features())?;
    let x = standardizer.transform(train.features())?;
    let xv: Option<Array2<f64>> = validation.map(|v| standardizer.transform(v.features())).transpose()?;
    let arch = &settings.architecture;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.train.rng_seed);
    let mut net = Network::new(x.ncols(), &arch.widths(), activation, &mut rng);
    if arch.pretrain {
        net = stacked_pretrain(&net, &x, &settings.train, &mut rng)?;
    }
    let val = xv.as_ref().zip(validation).map(|(x, d)| (x, d.labels()));
    let (net, history) = finetune_cox(&net, &x, train.labels(), &settings.train, val)?;
    Ok((Pipeline::new(standardizer, Predictor::Network(net))?, history))
}

pub fn train_coxnet(settings: &CoxnetSettings, train: &Dataset) -> Result<(Pipeline, CoxnetFit)> {
    let standardizer = Standardizer::fit(train.features())?;
    let x = standardizer.transform(train.features())?;
    let fit = fit_elastic_net_cox(&x, train.labels(), settings.lambda, settings.alpha, &settings.options)?;
    let pipeline = Pipeline::new(standardizer, Predictor::Coxnet(fit.model.clone()))?;
    Ok((pipeline, fit))
}

pub struct NnMethod {
    name: String,
    activation: Activation,
    base: NnSettings,
    space: ParamSpace,
}

impl NnMethod {
    pub fn new(activation: Activation, base: NnSettings, space: ParamSpace) -> Result<Self> {
        for d in space.dims() {
            if base.get(&d.name).is_none() || d.name == "rng_seed" || d.name == "pretrain" {
                return Err(SurvError::InvalidInput(format!(
                    "`{}` is not a network parameter",
                    d.name
                )));
            }
        }
        Ok(Self {
            name: format!("nn-{}", activation.name()),
            activation,
            base,
            space,
        })
    }

    /// Base settings with `params` applied and the seed installed.
    pub fn settings_for(&self, params: &[f64], seed: u64) -> Result<NnSettings> {
        let mut s = self.base.clone();
        for (d, v) in self.space.dims().iter().zip(params) {
            s.set(&d.name, &v.to_string())?;
        }
        s.train.rng_seed = seed;
        Ok(s)
    }
}

impl Method for NnMethod {
    fn name(&self) -> &str {
        &self.name
    }

    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn fit(&self, params: &[f64], train: &Dataset, validation: &Dataset, seed: u64) -> Result<Box<dyn RiskModel>> {
        let settings = self.settings_for(params, seed)?;
        let (pipeline, _) = train_network(&settings, self.activation, train, Some(validation))?;
        Ok(Box::new(pipeline))
    }
}

pub struct CoxnetMethod {
    base: CoxnetSettings,
    space: ParamSpace,
}

impl CoxnetMethod {
    pub fn new(base: CoxnetSettings, space: ParamSpace) -> Result<Self> {
        for d in space.dims() {
            if !matches!(d.name.as_str(), "lambda" | "alpha") {
                return Err(SurvError::InvalidInput(format!(
                    "`{}` is not a coxnet parameter",
                    d.name
                )));
            }
        }
        Ok(Self { base, space })
    }

    pub fn settings_for(&self, params: &[f64]) -> Result<CoxnetSettings> {
        let mut s = self.base.clone();
        for (d, v) in self.space.dims().iter().zip(params) {
            s.set(&d.name, &v.to_string())?;
        }
        Ok(s)
    }
}

impl Method for CoxnetMethod {
    fn name(&self) -> &str {
        "coxnet"
    }

    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn fit(&self, params: &[f64], train: &Dataset, _validation: &Dataset, _seed: u64) -> Result<Box<dyn RiskModel>> {
        let (pipeline, _) = train_coxnet(&self.settings_for(params)?, train)?;
        Ok(Box::new(pipeline))
    }
}

/// Built-in method by name: `coxnet`, `nn-sigmoid` or `nn-relu`.
pub fn builtin_method(name: &str, config: &crate::config::Config) -> Result<Box<dyn Method>> {
    let overrides = &config.tune.space_overrides;
    match name {
        "coxnet" => Ok(Box::new(CoxnetMethod::new(
            config.coxnet.clone(),
            apply_overrides(default_coxnet_space(), "coxnet", overrides)?,
        )?)),
        "nn-sigmoid" | "nn-relu" => {
            let activation = if name == "nn-relu" {
                Activation::Relu
            } else {
                Activation::Sigmoid
            };
            Ok(Box::new(NnMethod::new(
                activation,
                config.nn.clone(),
                apply_overrides(default_nn_space(), "nn", overrides)?,
            )?))
        }
        other => Err(SurvError::InvalidInput(format!(
            "unknown method `{other}` (expected coxnet, nn-sigmoid or nn-relu)"
        ))),
    }
}
