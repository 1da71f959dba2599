//! Spatially blocked fold assignment on a regular XY grid.
//!
//! A point in cell `(ix, iy) = (floor(x / g), floor(y / g))` gets fold
//! `h mod n_folds` with
//! `h = splitmix64(splitmix64(splitmix64(seed) ^ ix) ^ iy)`,
//! where the cell indices are reinterpreted as `u64`.

use std::collections::BTreeSet;

use super::{EvalError, Result};
use crate::io::Point3;
use crate::rng::splitmix64;

pub const DEFAULT_GRID_SIZE_M: f64 = 3.0;
pub const DEFAULT_FOLDS: usize = 5;

pub type Cell = (i64, i64);

pub fn cell_of(p: &Point3, grid_size: f64) -> Cell {
    (
        (p.x / grid_size).floor() as i64,
        (p.y / grid_size).floor() as i64,
    )
}

pub fn cell_hash(cell: Cell, seed: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ cell.0 as u64) ^ cell.1 as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    pub fold: Vec<usize>,
    pub cells: Vec<Cell>,
    pub grid_size: f64,
    pub n_folds: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn len(&self) -> usize {
        self.fold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold.is_empty()
    }

    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.fold[i] == f).collect()
    }

    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.fold[i] != f).collect()
    }

    pub fn cells_of(&self, rows: &[usize]) -> BTreeSet<Cell> {
        rows.iter().map(|&i| self.cells[i]).collect()
    }

    /// Restriction to a subset of rows, e.g. the retained points.
    pub fn select(&self, rows: &[usize]) -> FoldAssignment {
        FoldAssignment {
            fold: rows.iter().map(|&i| self.fold[i]).collect(),
            cells: rows.iter().map(|&i| self.cells[i]).collect(),
            ..self.clone()
        }
    }
}

pub fn assign_spatial_folds(
    points: &[Point3],
    grid_size: f64,
    n_folds: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    if !(grid_size > 0.0 && grid_size.is_finite()) {
        return Err(EvalError::BadGrid(grid_size));
    }
    if n_folds < 2 {
        return Err(EvalError::BadFolds(n_folds));
    }
    let cells: Vec<Cell> = points.iter().map(|p| cell_of(p, grid_size)).collect();
    let occupied: BTreeSet<Cell> = cells.iter().copied().collect();
    if occupied.len() < n_folds {
        return Err(EvalError::TooFewCells {
            cells: occupied.len(),
            folds: n_folds,
        });
    }
    let fold = cells
        .iter()
        .map(|&c| (cell_hash(c, seed) % n_folds as u64) as usize)
        .collect();
    Ok(FoldAssignment {
        fold,
        cells,
        grid_size,
        n_folds,
        seed,
    })
}
