//! Tree ensembles for regression: a bagged Random Forest and a
//! histogram-based gradient-boosted model, sharing one model type and file
//! format.

mod binning;
mod boost;
mod forest;
mod persist;
pub mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binning::BinMapper;
pub use boost::{train_gbdt, train_gbdt_traced, BoostTrace, GbdtConfig};
pub use forest::{train_rf, RfConfig};
pub use persist::{load_model, model_from_json, model_to_json, save_model, FORMAT_VERSION};
pub use tree::{Tree, TreeNode};

use crate::matrix::DesignMatrix;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("training data is empty")]
    EmptyData,
    #[error("validation data is empty")]
    EmptyValidation,
    #[error("{what}: {got} labels for {rows} rows")]
    LengthMismatch {
        what: &'static str,
        rows: usize,
        got: usize,
    },
    #[error("{what}: non-finite value at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },
    #[error(
        "column mismatch at position {position}: model expects `{expected}`, input has `{found}`"
    )]
    ColumnMismatch {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("model schema: {0}")]
    Schema(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, EnsembleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bagged,
    Boosted,
}

/// Training configuration snapshot stored with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Rf(RfConfig),
    Gbdt(GbdtConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub kind: ModelKind,
    pub trees: Vec<Tree>,
    pub columns: Vec<String>,
    /// Boosted only: mean training label; 0 for bagged models.
    pub base_score: f64,
    /// Boosted only: shrinkage applied to every tree output.
    pub learning_rate: f64,
    /// Boosted only: number of leading trees used for prediction.
    pub best_iteration: usize,
    pub config: ModelConfig,
}

impl ForestModel {
    /// Trees that take part in prediction.
    pub fn active_trees(&self) -> &[Tree] {
        match self.kind {
            ModelKind::Bagged => &self.trees,
            ModelKind::Boosted => &self.trees[..self.best_iteration.min(self.trees.len())],
        }
    }

    pub fn check_columns(&self, columns: &[String]) -> Result<()> {
        let n = self.columns.len().max(columns.len());
        for position in 0..n {
            let expected = self.columns.get(position);
            let found = columns.get(position);
            if expected != found {
                return Err(EnsembleError::ColumnMismatch {
                    position,
                    expected: expected.cloned().unwrap_or_else(|| "<none>".into()),
                    found: found.cloned().unwrap_or_else(|| "<none>".into()),
                });
            }
        }
        Ok(())
    }

    /// Prediction for one row laid out in the model's column order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Bagged => tree::stable_mean(self.trees.iter().map(|t| t.predict(row))),
            ModelKind::Boosted => {
                let mut acc = 0.0;
                for t in self.active_trees() {
                    acc += t.predict(row);
                }
                self.base_score + self.learning_rate * acc
            }
        }
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        self.check_columns(x.columns())?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|r| self.predict_row(x.row(r)))
            .collect())
    }

    /// Column indices referenced by any active tree.
    pub fn used_features(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&f| self.active_trees().iter().any(|t| t.uses_feature(f)))
            .collect()
    }
}

pub(crate) fn check_training_data(what: &'static str, x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(EnsembleError::LengthMismatch {
            what,
            rows: x.n_rows(),
            got: y.len(),
        });
    }
    if let Some(pos) = x.values().iter().position(|v| !v.is_finite()) {
        return Err(EnsembleError::NonFinite {
            what,
            row: pos / x.n_cols().max(1),
            col: pos % x.n_cols().max(1),
        });
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(EnsembleError::NonFinite {
            what,
            row,
            col: x.n_cols(),
        });
    }
    Ok(())
}
