//! Cloud-to-cloud (C2C) labels and the retention filter.
//!
//! The label of an MLS point is the distance to its nearest reference point,
//! in millimetres. The direction matters: labels are MLS -> reference.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::io::{self, IoError, PointCloud};
use crate::spatial::{KdTree, SpatialError};

/// Retention threshold used for training data (mm).
pub const DEFAULT_RETENTION_MM: f64 = 80.0;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("reference cloud is empty")]
    EmptyReference,
    #[error("MLS cloud is empty")]
    EmptyMls,
    #[error("retention threshold must be positive, got {0} mm")]
    BadThreshold(f64),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("label table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, LabelError>;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    /// Index of each labelled point in the MLS cloud.
    pub indices: Vec<usize>,
    pub c2c_mm: Vec<f64>,
    /// `c2c_mm < threshold`; all true before filtering.
    pub retained: Vec<bool>,
}

impl LabeledCloud {
    pub fn len(&self) -> usize {
        self.c2c_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c2c_mm.is_empty()
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().filter(|&&r| r).count()
    }

    /// Positions (not cloud indices) of retained rows.
    pub fn retained_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.retained[i]).collect()
    }

    /// Writes `idx,c2c_mm,retained` with retained as 1/0.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|i| {
                vec![
                    self.indices[i] as f64,
                    self.c2c_mm[i],
                    if self.retained[i] { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        io::write_csv(&["idx", "c2c_mm", "retained"], &rows, path)?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<LabeledCloud> {
        let t = io::read_csv(path)?;
        if t.headers != ["idx", "c2c_mm", "retained"] {
            return Err(LabelError::Table(format!(
                "expected header idx,c2c_mm,retained, found {}",
                t.headers.join(",")
            )));
        }
        let mut out = LabeledCloud {
            indices: Vec::with_capacity(t.rows.len()),
            c2c_mm: Vec::with_capacity(t.rows.len()),
            retained: Vec::with_capacity(t.rows.len()),
        };
        for (i, r) in t.rows.iter().enumerate() {
            if !(r[1] >= 0.0) {
                return Err(LabelError::Table(format!(
                    "row {}: invalid c2c_mm {}",
                    i + 1,
                    r[1]
                )));
            }
            out.indices.push(r[0] as usize);
            out.c2c_mm.push(r[1]);
            out.retained.push(r[2] != 0.0);
        }
        Ok(out)
    }
}

/// Nearest-reference distance for every MLS point, in millimetres.
pub fn c2c_label(mls: &PointCloud, reference: &PointCloud) -> Result<LabeledCloud> {
    if reference.is_empty() {
        return Err(LabelError::EmptyReference);
    }
    if mls.is_empty() {
        return Err(LabelError::EmptyMls);
    }
    let tree = KdTree::build(reference)?;
    let c2c_mm: Vec<f64> = mls
        .points()
        .par_iter()
        .map(|p| tree.nearest(*p).distance * 1000.0)
        .collect();
    Ok(LabeledCloud {
        indices: (0..mls.len()).collect(),
        retained: vec![true; c2c_mm.len()],
        c2c_mm,
    })
}

/// Keeps points with `c2c_mm < threshold_mm` (strict).
pub fn retention_filter(labels: &LabeledCloud, threshold_mm: f64) -> Result<LabeledCloud> {
    if !(threshold_mm > 0.0) {
        return Err(LabelError::BadThreshold(threshold_mm));
    }
    Ok(LabeledCloud {
        indices: labels.indices.clone(),
        c2c_mm: labels.c2c_mm.clone(),
        retained: labels.c2c_mm.iter().map(|&d| d < threshold_mm).collect(),
    })
}
