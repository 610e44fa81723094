use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::Activation;
use crate::error::{Result, SurvError};

/// Fully connected layer computing `activation(x W^T + b)` row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `fan_out x fan_in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Uniform initialization in `±sqrt(6 / (fan_in + fan_out))`, widened by
    /// `sqrt(2)` for ReLU layers. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut R) -> Self {
        let mut limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        if activation == Activation::Relu {
            limit *= std::f64::consts::SQRT_2;
        }
        let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.gen_range(-limit..=limit));
        Self {
            weights,
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }

    pub fn check_input(&self, inputs: &Array2<f64>) -> Result<()> {
        if inputs.ncols() != self.fan_in() {
            return Err(SurvError::DimensionMismatch(format!(
                "layer expects {} inputs, got {}",
                self.fan_in(),
                inputs.ncols()
            )));
        }
        Ok(())
    }

    /// Returns `(pre_activation, output)`.
    pub fn forward(&self, inputs: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let z = inputs.dot(&self.weights.t()) + &self.bias;
        let act = self.activation;
        let a = z.mapv(|v| act.apply(v));
        (z, a)
    }

    pub fn output(&self, inputs: &Array2<f64>) -> Array2<f64> {
        self.forward(inputs).1
    }

    /// Back-propagates `grad_output` (dL/da) through the layer.
    ///
    /// Returns `(dL/dW, dL/db, dL/dinputs)`.
    pub fn backward(
        &self,
        inputs: &Array2<f64>,
        z: &Array2<f64>,
        a: &Array2<f64>,
        grad_output: &Array2<f64>,
    ) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
        let act = self.activation;
        let mut delta = grad_output.clone();
        if act != Activation::Linear {
            ndarray::Zip::from(&mut delta)
                .and(z)
                .and(a)
                .for_each(|d, &zv, &av| *d *= act.derivative(zv, av));
        }
        let grad_w = delta.t().dot(inputs);
        let grad_b = delta.sum_axis(Axis(0));
        let grad_in = delta.dot(&self.weights);
        (grad_w, grad_b, grad_in)
    }

    pub(crate) fn step(&mut self, grad_w: &Array2<f64>, grad_b: &Array1<f64>, lr: f64, l2: f64) {
        if l2 > 0.0 {
            self.weights *= 1.0 - lr * l2;
        }
        self.weights.scaled_add(-lr, grad_w);
        self.bias.scaled_add(-lr, grad_b);
    }
}
