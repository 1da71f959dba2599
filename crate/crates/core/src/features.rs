//! The 26 local geometric features plus the selected neighbourhood size,
//! assembled into a fixed-order design matrix.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, IoError, Point3, PointCloud};
use crate::matrix::DesignMatrix;
use crate::neighborhood::{
    eigenentropy, normalized_evs_or_degenerate, optimal_neighborhood_with, KRange,
    NeighborhoodError, NeighborhoodStats, NormalizedEigenvalues,
};
use crate::spatial::{GridRaster2D, KdTree, SpatialError};

/// Bumped whenever the column set or order changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

macro_rules! features {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// One column of the design matrix, in frozen order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Feature { $($variant),* }

        impl Feature {
            pub const ALL: [Feature; 27] = [$(Feature::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Feature::$variant => $name),* }
            }
        }

        pub const FEATURE_NAMES: [&str; 27] = [$($name),*];
    };
}

features! {
    Linearity => "linearity",
    Planarity => "planarity",
    Scattering => "scattering",
    Omnivariance => "omnivariance",
    Anisotropy => "anisotropy",
    Eigenentropy => "eigenentropy",
    SumEvs => "sum_EVs",
    ChangeOfCurvature => "change_of_curvature",
    ZVals => "Z_vals",
    RadiusKnn => "radius_kNN",
    Density => "density",
    Verticality => "verticality",
    DeltaZKnn => "delta_Z_kNN",
    StdZKnn => "std_Z_kNN",
    RadiusKnn2d => "radius_kNN_2D",
    Density2d => "density_2D",
    SumEvs2d => "sum_EVs_2D",
    EvRatio => "EV_ratio",
    FrequencyAccMap => "frequency_acc_map",
    DeltaZ => "delta_z",
    StdZ => "std_z",
    Ev3d1 => "EV3D_1",
    Ev3d2 => "EV3D_2",
    Ev3d3 => "EV3D_3",
    Ev2d1 => "EV2D_1",
    Ev2d2 => "EV2D_2",
    OptN => "OptN",
}

impl Feature {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Closed range of the feature's admissible values, when bounded above.
    pub fn bounds(self) -> (f64, f64) {
        use Feature::*;
        match self {
            Linearity | Planarity | Scattering | Anisotropy | ChangeOfCurvature | EvRatio
            | Ev3d1 | Ev3d2 | Ev3d3 | Ev2d1 | Ev2d2 => (0.0, 1.0),
            Omnivariance => (0.0, 1.0 / 3.0),
            Eigenentropy => (0.0, crate::neighborhood::LN_3),
            Verticality => (0.0, 1.0),
            ZVals => (f64::NEG_INFINITY, f64::INFINITY),
            OptN => (1.0, f64::INFINITY),
            SumEvs | RadiusKnn | Density | DeltaZKnn | StdZKnn | RadiusKnn2d | Density2d
            | SumEvs2d | FrequencyAccMap | DeltaZ | StdZ => (0.0, f64::INFINITY),
        }
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cloud has {got} points; at least k_max + 1 = {required} are required")]
    CloudTooSmall { got: usize, required: usize },
    #[error(transparent)]
    Neighborhood(#[from] NeighborhoodError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("feature table column {position} is `{found}`, expected `{expected}`")]
    ColumnMismatch {
        position: usize,
        found: String,
        expected: String,
    },
    #[error("feature table is missing the `{0}` column")]
    MissingColumn(&'static str),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub k_range: KRange,
    /// XY raster cell size for the grid features (m).
    pub cell_size: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            k_range: KRange::default(),
            cell_size: 0.25,
        }
    }
}

/// Eigenvalue shape descriptors plus the XY eigenvalue features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFeatures {
    pub linearity: f64,
    pub planarity: f64,
    pub scattering: f64,
    pub omnivariance: f64,
    pub anisotropy: f64,
    pub eigenentropy: f64,
    pub sum_evs: f64,
    pub change_of_curvature: f64,
    pub ev3d: [f64; 3],
    pub sum_evs_2d: f64,
    pub ev_ratio: f64,
    pub ev2d: [f64; 2],
}

pub fn shape_features(stats: &NeighborhoodStats, norm: &NormalizedEigenvalues) -> ShapeFeatures {
    let [l1, l2, l3] = norm.l;
    let [m1, m2] = norm.m;
    ShapeFeatures {
        linearity: (l1 - l2) / l1,
        planarity: (l2 - l3) / l1,
        scattering: l3 / l1,
        omnivariance: (l1 * l2 * l3).cbrt(),
        anisotropy: (l1 - l3) / l1,
        eigenentropy: eigenentropy(&norm.l),
        sum_evs: stats.trace(),
        change_of_curvature: l3,
        ev3d: norm.l,
        sum_evs_2d: stats.trace_2d(),
        ev_ratio: m2 / m1,
        ev2d: norm.m,
    }
}

/// Height, radius and density features. Densities are `None` when the
/// corresponding radius is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightDensityFeatures {
    pub z: f64,
    pub radius_3d: f64,
    pub density: Option<f64>,
    pub verticality: f64,
    pub delta_z: f64,
    pub std_z: f64,
    pub radius_2d: f64,
    pub density_2d: Option<f64>,
}

pub fn height_density_features(
    stats: &NeighborhoodStats,
    point: Point3,
    k: usize,
) -> HeightDensityFeatures {
    let count = (k + 1) as f64;
    let r3 = stats.radius_3d;
    let r2 = stats.radius_2d;
    HeightDensityFeatures {
        z: point.z,
        radius_3d: r3,
        density: (r3 > 0.0).then(|| count / (4.0 / 3.0 * PI * r3 * r3 * r3)),
        verticality: 1.0 - stats.eigenvectors[0][2],
        delta_z: stats.z_max - stats.z_min,
        std_z: stats.z_std,
        radius_2d: r2,
        density_2d: (r2 > 0.0).then(|| count / (PI * r2 * r2)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridFeatures {
    pub frequency: f64,
    pub delta_z: f64,
    pub std_z: f64,
}

pub fn grid_features(raster: &GridRaster2D, point: &Point3) -> GridFeatures {
    match raster.stats_at(point) {
        Some(s) => GridFeatures {
            frequency: s.count as f64,
            delta_z: s.delta_z(),
            std_z: s.z_std,
        },
        None => GridFeatures {
            frequency: 0.0,
            delta_z: 0.0,
            std_z: 0.0,
        },
    }
}

/// Assembles one 27-value row. Missing densities are written as NaN and
/// replaced by the run's cap afterwards.
pub fn assemble_row(
    shape: &ShapeFeatures,
    hd: &HeightDensityFeatures,
    grid: &GridFeatures,
    opt_n: usize,
) -> [f64; 27] {
    [
        shape.linearity,
        shape.planarity,
        shape.scattering,
        shape.omnivariance,
        shape.anisotropy,
        shape.eigenentropy,
        shape.sum_evs,
        shape.change_of_curvature,
        hd.z,
        hd.radius_3d,
        hd.density.unwrap_or(f64::NAN),
        hd.verticality,
        hd.delta_z,
        hd.std_z,
        hd.radius_2d,
        hd.density_2d.unwrap_or(f64::NAN),
        shape.sum_evs_2d,
        shape.ev_ratio,
        grid.frequency,
        grid.delta_z,
        grid.std_z,
        shape.ev3d[0],
        shape.ev3d[1],
        shape.ev3d[2],
        shape.ev2d[0],
        shape.ev2d[1],
        opt_n as f64,
    ]
}

/// Design matrix with optional labels (mm) and indices into the source cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: DesignMatrix,
    /// Source-cloud index of each row.
    pub indices: Vec<usize>,
    pub labels: Option<Vec<f64>>,
    /// Rows where a degenerate-neighbourhood convention or density cap applied.
    pub degenerate: Vec<bool>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.x.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, f: Feature) -> Vec<f64> {
        self.x.column(f.index())
    }

    /// Rows at the given positions.
    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select_rows(rows),
            indices: rows.iter().map(|&r| self.indices[r]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| rows.iter().map(|&r| l[r]).collect()),
            degenerate: rows.iter().map(|&r| self.degenerate[r]).collect(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Self {
        assert_eq!(labels.len(), self.len(), "label count must match row count");
        self.labels = Some(labels);
        self
    }

    /// Writes `idx,<27 feature names>[,label_mm]`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut headers: Vec<String> = vec!["idx".into()];
        headers.extend(self.x.columns().iter().cloned());
        if self.labels.is_some() {
            headers.push("label_mm".into());
        }
        let rows: Vec<Vec<f64>> = (0..self.len())
            .map(|r| {
                let mut row = Vec::with_capacity(headers.len());
                row.push(self.indices[r] as f64);
                row.extend_from_slice(self.x.row(r));
                if let Some(l) = &self.labels {
                    row.push(l[r]);
                }
                row
            })
            .collect();
        io::write_csv(&headers, &rows, path)?;
        Ok(())
    }

    /// Reads a feature CSV, refusing any column order other than the frozen one.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
        let table = io::read_csv(path)?;
        let mut expected: Vec<&str> = vec!["idx"];
        expected.extend(FEATURE_NAMES);
        for (position, want) in expected.iter().enumerate() {
            match table.headers.get(position) {
                Some(h) if h == want => {}
                Some(h) => {
                    return Err(FeatureError::ColumnMismatch {
                        position,
                        found: h.clone(),
                        expected: want.to_string(),
                    })
                }
                None => {
                    return Err(FeatureError::ColumnMismatch {
                        position,
                        found: String::new(),
                        expected: want.to_string(),
                    })
                }
            }
        }
        let has_labels = match table.headers.get(28).map(String::as_str) {
            None => false,
            Some("label_mm") if table.headers.len() == 29 => true,
            Some(other) => {
                return Err(FeatureError::ColumnMismatch {
                    position: 28,
                    found: other.to_string(),
                    expected: "label_mm".into(),
                })
            }
        };
        let n = table.rows.len();
        let mut data = Vec::with_capacity(n * 27);
        let mut indices = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(if has_labels { n } else { 0 });
        for row in &table.rows {
            indices.push(row[0] as usize);
            data.extend_from_slice(&row[1..28]);
            if has_labels {
                labels.push(row[28]);
            }
        }
        Ok(FeatureMatrix {
            x: DesignMatrix::new(feature_columns(), n, data).expect("shape checked above"),
            indices,
            labels: has_labels.then_some(labels),
            degenerate: vec![false; n],
        })
    }
}

pub fn feature_columns() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Nearest-rank 99.9th percentile of the finite values, 0 if none.
pub fn density_cap(values: impl Iterator<Item = f64>) -> f64 {
    let mut finite: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return 0.0;
    }
    finite.sort_by(|a, b| a.total_cmp(b));
    let rank = ((0.999 * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
    finite[rank - 1]
}

/// Per-point features for the whole cloud, rows in cloud order.
pub fn extract_features(cloud: &PointCloud, config: &FeatureConfig) -> Result<FeatureMatrix> {
    let required = config.k_range.k_max + 1;
    if cloud.len() < required {
        return Err(FeatureError::CloudTooSmall {
            got: cloud.len(),
            required,
        });
    }
    config.k_range.validate(cloud.len())?;
    let tree = KdTree::build(cloud)?;
    let raster = GridRaster2D::build(cloud, config.cell_size)?;

    let rows: Vec<([f64; 27], bool)> = (0..cloud.len())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(required),
            |scratch, i| -> Result<([f64; 27], bool)> {
                let (best, stats) =
                    optimal_neighborhood_with(cloud, &tree, i, &config.k_range, scratch)?;
                let (norm, degenerate) = normalized_evs_or_degenerate(&stats);
                let shape = shape_features(&stats, &norm);
                let p = cloud.point(i);
                let hd = height_density_features(&stats, p, best.k);
                let grid = grid_features(&raster, &p);
                let capped = hd.density.is_none() || hd.density_2d.is_none();
                Ok((
                    assemble_row(&shape, &hd, &grid, best.k),
                    degenerate || capped,
                ))
            },
        )
        .collect::<Result<_>>()?;

    let density = Feature::Density.index();
    let density_2d = Feature::Density2d.index();
    let cap_3d = density_cap(rows.iter().map(|r| r.0[density]));
    let cap_2d = density_cap(rows.iter().map(|r| r.0[density_2d]));

    let n = rows.len();
    let mut data = Vec::with_capacity(n * 27);
    let mut degenerate = Vec::with_capacity(n);
    for (mut row, flag) in rows {
        if row[density].is_nan() {
            row[density] = cap_3d;
        }
        if row[density_2d].is_nan() {
            row[density_2d] = cap_2d;
        }
        data.extend_from_slice(&row);
        degenerate.push(flag);
    }
    Ok(FeatureMatrix {
        x: DesignMatrix::new(feature_columns(), n, data).expect("27 values per row"),
        indices: (0..n).collect(),
        labels: None,
        degenerate,
    })
}
