//! Datasets, CSV ingest, synthetic generation and feature standardization.

mod csv_io;
mod standardize;
mod synthetic;

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Result, SurvError};
use crate::survival::SurvivalLabels;

pub use csv_io::{load_csv, load_risk_csv, parse_csv, save_csv, save_risk_csv, write_csv};
pub use standardize::Standardizer;
pub use synthetic::{generate, RiskKind, SyntheticData, SyntheticSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sample_ids: Vec<String>,
    features: Array2<f64>,
    labels: SurvivalLabels,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        sample_ids: Vec<String>,
        features: Array2<f64>,
        labels: SurvivalLabels,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if sample_ids.len() != n || features.nrows() != n {
            return Err(SurvError::DimensionMismatch(format!(
                "{} ids, {} feature rows and {} labels",
                sample_ids.len(),
                features.nrows(),
                n
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(SurvError::DimensionMismatch(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        let mut sorted: Vec<&String> = feature_names.iter().collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(SurvError::InvalidInput(format!("duplicate feature name `{}`", w[0])));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(SurvError::InvalidInput("features must be finite".into()));
        }
        Ok(Self {
            sample_ids,
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &SurvivalLabels {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(SurvError::InvalidInput(format!(
                "row {i} out of range for {} samples",
                self.len()
            )));
        }
        Ok(Self {
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            features: self.features.select(Axis(0), indices),
            labels: self.labels.subset(indices)?,
            feature_names: self.feature_names.clone(),
        })
    }

    /// Same rows with the features replaced.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Self::new(
            self.sample_ids.clone(),
            features,
            self.labels.clone(),
            self.feature_names.clone(),
        )
    }
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| SurvError::Io(e.error))?;
    Ok(())
}
