//! Spatial cross-validation of both ensembles.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::folds::{Cell, FoldAssignment};
use super::importance::permutation_importance;
use super::metrics::{confidence_interval, metrics, MetricSet};
use super::{EvalError, Result};
use crate::ensemble::{train_gbdt, train_rf, ForestModel, GbdtConfig, RfConfig};
use crate::matrix::DesignMatrix;
use crate::rng::{derive_seed_path, substream, tags};

/// Share of training cells held out for GBDT early stopping.
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Rf,
    Gbdt,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Rf => "rf",
            ModelChoice::Gbdt => "gbdt",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelChoice::Rf => "RF",
            ModelChoice::Gbdt => "GBDT",
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rf" => Ok(ModelChoice::Rf),
            "gbdt" | "xgboost" => Ok(ModelChoice::Gbdt),
            other => Err(format!("unknown model `{other}` (expected rf or gbdt)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub models: Vec<ModelChoice>,
    pub rf: RfConfig,
    pub gbdt: GbdtConfig,
    pub validation_fraction: f64,
    /// Permutation repeats per fold; 0 skips importance.
    pub importance_repeats: usize,
    /// Per-fold model, carve and shuffle seeds are derived from this.
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            models: vec![ModelChoice::Rf, ModelChoice::Gbdt],
            rf: RfConfig::default(),
            gbdt: GbdtConfig::default(),
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            importance_repeats: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub model: ModelChoice,
    pub fold: usize,
    pub metrics: MetricSet,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub best_iteration: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRow {
    pub model: ModelChoice,
    pub feature: String,
    pub fold: usize,
    pub delta_rmse_mm: f64,
}

/// Mean and 95% half-width over folds.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub model: ModelChoice,
    pub rmse_mm: (f64, f64),
    pub mae_mm: (f64, f64),
    pub medae_mm: (f64, f64),
    /// `None` if any fold had an undefined R².
    pub r2: Option<(f64, f64)>,
    pub p_at: [(f64, f64); 5],
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n_folds: usize,
    pub results: Vec<FoldResult>,
    pub importance: Vec<ImportanceRow>,
}

impl EvalReport {
    pub fn models(&self) -> Vec<ModelChoice> {
        self.results
            .iter()
            .map(|r| r.model)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn fold_results(&self, model: ModelChoice) -> Vec<&FoldResult> {
        self.results.iter().filter(|r| r.model == model).collect()
    }

    pub fn summary(&self, model: ModelChoice) -> Result<Summary> {
        let folds = self.fold_results(model);
        let ci = |f: &dyn Fn(&MetricSet) -> f64| {
            let v: Vec<f64> = folds.iter().map(|r| f(&r.metrics)).collect();
            confidence_interval(&v)
        };
        let r2: Option<Vec<f64>> = folds.iter().map(|r| r.metrics.r2).collect();
        let mut p_at = [(0.0, 0.0); 5];
        for (i, slot) in p_at.iter_mut().enumerate() {
            *slot = ci(&|m| m.p_at[i])?;
        }
        Ok(Summary {
            model,
            rmse_mm: ci(&|m| m.rmse_mm)?,
            mae_mm: ci(&|m| m.mae_mm)?,
            medae_mm: ci(&|m| m.medae_mm)?,
            r2: r2.map(|v| confidence_interval(&v)).transpose()?,
            p_at,
            runtime_s: folds.iter().map(|r| r.metrics.runtime_s).sum::<f64>()
                / folds.len().max(1) as f64,
        })
    }

    pub fn importance_for(&self, model: ModelChoice) -> Vec<ImportanceRow> {
        self.importance
            .iter()
            .filter(|r| r.model == model)
            .cloned()
            .collect()
    }
}

/// Splits `rows` into (fit, validation) by holding out whole grid cells.
/// `cells[i]` is the cell of row `rows[i]`.
pub fn carve_validation(
    rows: &[usize],
    cells: &[Cell],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let distinct: Vec<Cell> = cells
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if distinct.len() < 2 {
        return Err(EvalError::ValidationCarve {
            cells: distinct.len(),
        });
    }
    let take = ((fraction * distinct.len() as f64).round() as usize).clamp(1, distinct.len() - 1);
    let mut shuffled = distinct;
    shuffled.shuffle(&mut substream(seed, &[tags::VALIDATION]));
    let held: BTreeSet<Cell> = shuffled[..take].iter().copied().collect();
    let (mut fit, mut val) = (Vec::new(), Vec::new());
    for (&r, c) in rows.iter().zip(cells) {
        if held.contains(c) {
            val.push(r);
        } else {
            fit.push(r);
        }
    }
    Ok((fit, val))
}

/// Trains one model on `train` rows; GBDT holds out validation cells first.
pub fn fit_model(
    model: ModelChoice,
    x: &DesignMatrix,
    y: &[f64],
    train: &[usize],
    cells: &[Cell],
    config: &CvConfig,
    seed: u64,
) -> Result<(ForestModel, usize)> {
    let pick = |rows: &[usize]| {
        (
            x.select_rows(rows),
            rows.iter().map(|&r| y[r]).collect::<Vec<f64>>(),
        )
    };
    match model {
        ModelChoice::Rf => {
            let rf = RfConfig {
                seed: derive_seed_path(seed, &[tags::RF]),
                ..config.rf.clone()
            };
            let (xt, yt) = pick(train);
            Ok((train_rf(&xt, &yt, &rf)?, 0))
        }
        ModelChoice::Gbdt => {
            let row_cells: Vec<Cell> = train.iter().map(|&r| cells[r]).collect();
            let (fit, val) = carve_validation(train, &row_cells, config.validation_fraction, seed)?;
            let gb = GbdtConfig {
                seed: derive_seed_path(seed, &[tags::GBDT]),
                ..config.gbdt.clone()
            };
            let (xt, yt) = pick(&fit);
            let (xv, yv) = pick(&val);
            Ok((train_gbdt(&xt, &yt, &xv, &yv, &gb)?, val.len()))
        }
    }
}

pub fn cross_validate(
    x: &DesignMatrix,
    y: &[f64],
    folds: &FoldAssignment,
    config: &CvConfig,
) -> Result<EvalReport> {
    if y.len() != x.n_rows() || folds.len() != x.n_rows() {
        return Err(EvalError::LengthMismatch {
            labels: y.len(),
            predictions: x.n_rows(),
        });
    }
    let mut results = Vec::new();
    let mut importance = Vec::new();
    for fold in 0..folds.n_folds {
        let test = folds.test_rows(fold);
        let train = folds.train_rows(fold);
        if test.is_empty() || train.is_empty() {
            return Err(EvalError::EmptyFold { fold });
        }
        let x_test = x.select_rows(&test);
        let y_test: Vec<f64> = test.iter().map(|&r| y[r]).collect();
        for &model in &config.models {
            let seed = derive_seed_path(config.seed, &[fold as u64, model as u64]);
            let start = Instant::now();
            let (fitted, n_val) = fit_model(model, x, y, &train, &folds.cells, config, seed)?;
            let pred = fitted.predict(&x_test)?;
            let runtime_s = start.elapsed().as_secs_f64();
            let mut m = metrics(&y_test, &pred)?;
            m.runtime_s = runtime_s;
            results.push(FoldResult {
                model,
                fold,
                metrics: m,
                n_train: train.len() - n_val,
                n_val,
                n_test: test.len(),
                best_iteration: (model == ModelChoice::Gbdt).then_some(fitted.best_iteration),
            });
            if config.importance_repeats > 0 {
                let seed = derive_seed_path(seed, &[tags::IMPORTANCE]);
                let deltas = permutation_importance(
                    &fitted,
                    &x_test,
                    &y_test,
                    config.importance_repeats,
                    seed,
                )?;
                for (feature, delta) in x.columns().iter().zip(deltas) {
                    importance.push(ImportanceRow {
                        model,
                        feature: feature.clone(),
                        fold,
                        delta_rmse_mm: delta,
                    });
                }
            }
        }
    }
    Ok(EvalReport {
        n_folds: folds.n_folds,
        results,
        importance,
    })
}
