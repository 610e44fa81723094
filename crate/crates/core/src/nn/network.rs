use ndarray::{Array1, Array2};
use rand::Rng;

use super::{Activation, DenseLayer};
use crate::error::{Result, SurvError};
use crate::survival::RiskVector;

/// Hidden dense layers followed by a single-output linear risk head.
///
/// The head weights play the role of the Cox coefficients applied to the
/// learned representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    hidden: Vec<DenseLayer>,
    head: DenseLayer,
}

/// Per-layer inputs, pre-activations and outputs kept for backprop.
/// Index `hidden.len()` is the head.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub pre_activations: Vec<Array2<f64>>,
    pub outputs: Vec<Array2<f64>>,
}

/// Parameter gradients in layer order, head last.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Network {
    pub fn from_layers(hidden: Vec<DenseLayer>, head: DenseLayer) -> Result<Self> {
        if head.fan_out() != 1 || head.activation != Activation::Linear {
            return Err(SurvError::InvalidInput("risk head must have one linear output".into()));
        }
        for pair in hidden.windows(2) {
            if pair[1].fan_in() != pair[0].fan_out() {
                return Err(SurvError::DimensionMismatch(format!(
                    "layer of width {} feeds a layer expecting {}",
                    pair[0].fan_out(),
                    pair[1].fan_in()
                )));
            }
        }
        if let Some(last) = hidden.last() {
            if head.fan_in() != last.fan_out() {
                return Err(SurvError::DimensionMismatch(format!(
                    "risk head expects {} inputs, last hidden layer has {}",
                    head.fan_in(),
                    last.fan_out()
                )));
            }
        }
        Ok(Self { hidden, head })
    }

    /// Randomly initialized hidden layers and a zero risk head.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_widths: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut hidden = Vec::with_capacity(hidden_widths.len());
        let mut fan_in = input_dim;
        for &width in hidden_widths {
            hidden.push(DenseLayer::init(fan_in, width, activation, rng));
            fan_in = width;
        }
        Self {
            hidden,
            head: DenseLayer::zeros(fan_in, 1, Activation::Linear),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().map_or(self.head.fan_in(), DenseLayer::fan_in)
    }

    pub fn hidden(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn hidden_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.hidden
    }

    pub fn head(&self) -> &DenseLayer {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut DenseLayer {
        &mut self.head
    }

    /// All layers, head last.
    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.hidden.iter().chain(std::iter::once(&self.head))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.head))
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(DenseLayer::is_finite)
    }

    /// Hidden representation after the last hidden layer.
    pub fn encode(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(inputs)?;
        let mut h = inputs.clone();
        for layer in &self.hidden {
            h = layer.output(&h);
        }
        Ok(h)
    }

    pub fn forward(&self, inputs: &Array2<f64>) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(inputs)?;
        let depth = self.hidden.len() + 1;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(depth),
            pre_activations: Vec::with_capacity(depth),
            outputs: Vec::with_capacity(depth),
        };
        let mut current = inputs.clone();
        for layer in self.layers() {
            let (z, a) = layer.forward(&current);
            cache.inputs.push(current);
            cache.pre_activations.push(z);
            current = a.clone();
            cache.outputs.push(a);
        }
        let risk = current.column(0).to_vec();
        Ok((risk, cache))
    }

    pub fn predict_risk(&self, inputs: &Array2<f64>) -> Result<RiskVector> {
        let (risk, _) = self.forward(inputs)?;
        RiskVector::new(risk)
    }

    /// Parameter gradients of a loss whose gradient with respect to the risk
    /// output is `grad_risk`.
    pub fn backward(&self, cache: &ForwardCache, grad_risk: &[f64]) -> Gradients {
        let depth = self.hidden.len() + 1;
        let mut upstream = Array2::from_shape_vec((grad_risk.len(), 1), grad_risk.to_vec())
            .expect("risk gradient has one entry per sample");
        let mut layers = Vec::with_capacity(depth);
        for (k, layer) in self.layers().collect::<Vec<_>>().into_iter().enumerate().rev() {
            let (gw, gb, gin) = layer.backward(
                &cache.inputs[k],
                &cache.pre_activations[k],
                &cache.outputs[k],
                &upstream,
            );
            layers.push((gw, gb));
            upstream = gin;
        }
        layers.reverse();
        Gradients { layers }
    }

    pub(crate) fn apply_gradients(&mut self, grads: &Gradients, lr: f64, l2: f64) {
        for (layer, (gw, gb)) in self.layers_mut().zip(&grads.layers) {
            layer.step(gw, gb, lr, l2);
        }
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers()
            .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    fn check_input(&self, inputs: &Array2<f64>) -> Result<()> {
        match self.hidden.first() {
            Some(first) => first.check_input(inputs),
            None => self.head.check_input(inputs),
        }
    }
}
