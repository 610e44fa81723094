use ndarray::{Array1, Array2, Axis};

use crate::error::{Result, SurvError};

/// Per-column centering and scaling learned from one matrix (the training
/// split) and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Array1<f64>,
    /// Population standard deviations; constant columns get 1.
    pub scales: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: &Array2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(SurvError::InvalidInput("cannot standardize zero rows".into()));
        }
        let means = x.mean_axis(Axis(0)).expect("non-empty");
        let scales = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 0.0 && s.is_finite() { s } else { 1.0 });
        Ok(Self { means, scales })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            means: Array1::zeros(p),
            scales: Array1::ones(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(SurvError::DimensionMismatch(format!(
                "standardizer fitted on {} columns, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok((x - &self.means) / &self.scales)
    }
}
