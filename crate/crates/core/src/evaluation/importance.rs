//! Permutation feature importance on held-out data.

use rand::seq::SliceRandom;

use super::metrics::rmse;
use super::{EvalError, Result};
use crate::ensemble::ForestModel;
use crate::matrix::DesignMatrix;
use crate::rng::substream;

/// Mean RMSE increase per column after shuffling that column alone.
/// Column `j`, repeat `r` uses the stream `substream(seed, [j, r])`.
pub fn permutation_importance(
    model: &ForestModel,
    x: &DesignMatrix,
    y: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if repeats == 0 {
        return Err(EvalError::BadRepeats);
    }
    if x.n_rows() == 0 {
        return Err(EvalError::EmptyInput);
    }
    if y.len() != x.n_rows() {
        return Err(EvalError::LengthMismatch {
            labels: y.len(),
            predictions: x.n_rows(),
        });
    }
    let baseline = rmse(y, &model.predict(x)?);
    let mut work = x.clone();
    let mut out = Vec::with_capacity(x.n_cols());
    for j in 0..x.n_cols() {
        let original = x.column(j);
        let mut total = 0.0;
        for r in 0..repeats {
            let mut shuffled = original.clone();
            shuffled.shuffle(&mut substream(seed, &[j as u64, r as u64]));
            for (row, v) in shuffled.iter().enumerate() {
                work.set(row, j, *v);
            }
            total += rmse(y, &model.predict(&work)?) - baseline;
        }
        for (row, v) in original.iter().enumerate() {
            work.set(row, j, *v);
        }
        out.push(total / repeats as f64);
    }
    Ok(out)
}
