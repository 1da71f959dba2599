//! Spatially blocked cross-validation, regression metrics, confidence
//! intervals and permutation importance.

mod cv;
mod folds;
mod importance;
mod metrics;
mod report;

use thiserror::Error;

pub use cv::{
    carve_validation, cross_validate, fit_model, CvConfig, EvalReport, FoldResult, ImportanceRow,
    ModelChoice, Summary, DEFAULT_VALIDATION_FRACTION,
};
pub use folds::{
    assign_spatial_folds, cell_hash, cell_of, Cell, FoldAssignment, DEFAULT_FOLDS,
    DEFAULT_GRID_SIZE_M,
};
pub use importance::permutation_importance;
pub use metrics::{
    confidence_interval, median, metrics, rmse, t_quantile_975, MetricSet, P_AT_THRESHOLDS_MM,
};
pub use report::{
    render_summary, report_rows, write_importance_csv, write_report_csv, REPORT_HEADERS, UNDEFINED,
};

use crate::ensemble::EnsembleError;
use crate::io::IoError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no values to evaluate")]
    EmptyInput,
    #[error("{labels} labels but {predictions} predictions")]
    LengthMismatch { labels: usize, predictions: usize },
    #[error("a confidence interval needs at least 2 values, got {0}")]
    TooFewValues(usize),
    #[error("grid size must be positive, got {0}")]
    BadGrid(f64),
    #[error("need at least 2 folds, got {0}")]
    BadFolds(usize),
    #[error("only {cells} occupied grid cells for {folds} folds")]
    TooFewCells { cells: usize, folds: usize },
    #[error("fold {fold} has an empty train or test set")]
    EmptyFold { fold: usize },
    #[error(
        "training data spans {cells} grid cell(s); at least 2 are needed to carve a validation set"
    )]
    ValidationCarve { cells: usize },
    #[error("repeats must be at least 1")]
    BadRepeats,
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Io(#[from] IoError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
