//! Synthetic co-registered scene pairs with a planted error field.
//!
//! A reference cloud is sampled uniformly from simple surfaces. The MLS cloud
//! is a subsample of it, each point displaced by an isotropic Gaussian whose
//! scale depends on range to a virtual scanner, sampling density and height.
//!
//! Scene files are TOML:
//!
//! ```toml
//! [scene]
//! density = 430.0      # reference points per m²
//! seed = 7
//! mls_fraction = 0.5   # share of reference points kept for the MLS cloud
//!
//! [error]              # sigma(p) in mm
//! sigma0_mm = 2.0
//! range_mm_per_m = 0.2
//! density_mm = 800.0   # divided by the local sampling density (points/m²)
//! height_mm = 30.0     # times 1 - exp(-z / height_scale_m)
//! height_scale_m = 1.5
//! scanner = [10.0, 10.0, 1.5]
//! truncate_mm = 80.0
//!
//! [[plane]]
//! origin = [0.0, 0.0, 0.0]
//! u = [20.0, 0.0, 0.0]
//! v = [0.0, 20.0, 0.0]
//!
//! [[box]]              # four sides and the top; no bottom face
//! center = [4.0, 5.0, 0.6]
//! size = [2.0, 1.5, 1.2]
//! yaw_deg = 0.0
//!
//! [[cylinder]]         # lateral surface only; `rod` takes the same keys
//! base = [8.0, 8.0, 0.0]
//! axis = [0.0, 0.0, 3.0]
//! radius = 0.3
//! ```
//!
//! Every primitive also accepts `density_scale` (default 1).

mod corrupt;
mod sample;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corrupt::{corrupt, generate_pair, ScenePair};
pub use sample::{generate_reference, primitive_area};

use crate::io::Point3;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene config: {0}")]
    Parse(String),
    #[error("scene config: `{key}` {message}")]
    Invalid { key: String, message: String },
    #[error("scene config: {kind} #{index} has zero area")]
    Degenerate { kind: &'static str, index: usize },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SceneError>;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSettings {
    /// Reference points per m² before `density_scale`.
    pub density: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mls_fraction")]
    pub mls_fraction: f64,
}

fn default_mls_fraction() -> f64 {
    0.5
}

/// `sigma(p) = sigma0 + a * range + b / density + c * (1 - exp(-z / h))`, in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorLaw {
    pub sigma0_mm: f64,
    pub range_mm_per_m: f64,
    pub density_mm: f64,
    pub height_mm: f64,
    pub height_scale_m: f64,
    pub scanner: [f64; 3],
    pub truncate_mm: f64,
}

impl Default for ErrorLaw {
    fn default() -> Self {
        Self {
            sigma0_mm: 0.0,
            range_mm_per_m: 0.0,
            density_mm: 0.0,
            height_mm: 0.0,
            height_scale_m: 1.0,
            scanner: [0.0; 3],
            truncate_mm: 80.0,
        }
    }
}

impl ErrorLaw {
    pub fn constant(sigma_mm: f64) -> Self {
        Self {
            sigma0_mm: sigma_mm,
            ..Default::default()
        }
    }

    /// Displacement scale at `p` for a surface sampled at `density` points/m².
    pub fn sigma_mm(&self, p: &Point3, density: f64) -> f64 {
        let s = Point3::from(self.scanner);
        let mut sigma = self.sigma0_mm + self.range_mm_per_m * p.distance(&s);
        if self.density_mm != 0.0 {
            sigma += self.density_mm / density;
        }
        if self.height_mm != 0.0 {
            sigma += self.height_mm * (1.0 - (-p.z.max(0.0) / self.height_scale_m).exp());
        }
        sigma
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("error.sigma0_mm", self.sigma0_mm),
            ("error.range_mm_per_m", self.range_mm_per_m),
            ("error.density_mm", self.density_mm),
            ("error.height_mm", self.height_mm),
        ];
        for (key, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(key, "must be a finite value >= 0"));
            }
        }
        if !(self.height_scale_m.is_finite() && self.height_scale_m > 0.0) {
            return Err(invalid("error.height_scale_m", "must be positive"));
        }
        if !(self.truncate_mm > 0.0) {
            return Err(invalid("error.truncate_mm", "must be positive"));
        }
        if self.scanner.iter().any(|v| !v.is_finite()) {
            return Err(invalid("error.scanner", "must be finite"));
        }
        Ok(())
    }
}

fn invalid(key: &str, message: &str) -> SceneError {
    SceneError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub origin: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
    #[serde(default = "one")]
    pub density_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: [f64; 3],
    pub size: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default = "one")]
    pub density_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub base: [f64; 3],
    pub axis: [f64; 3],
    pub radius: f64,
    #[serde(default = "one")]
    pub density_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub scene: SceneSettings,
    #[serde(default)]
    pub error: ErrorLaw,
    #[serde(default, rename = "plane", skip_serializing_if = "Vec::is_empty")]
    pub planes: Vec<PlaneSpec>,
    #[serde(default, rename = "box", skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BoxSpec>,
    #[serde(default, rename = "cylinder", skip_serializing_if = "Vec::is_empty")]
    pub cylinders: Vec<CylinderSpec>,
    #[serde(default, rename = "rod", skip_serializing_if = "Vec::is_empty")]
    pub rods: Vec<CylinderSpec>,
}

/// Flattened view used for sampling; indices follow planes, boxes,
/// cylinders, rods.
#[derive(Debug, Clone, Copy)]
pub enum Primitive<'a> {
    Plane(&'a PlaneSpec),
    Box(&'a BoxSpec),
    Cylinder(&'a CylinderSpec),
    Rod(&'a CylinderSpec),
}

impl Primitive<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            Primitive::Plane(_) => "plane",
            Primitive::Box(_) => "box",
            Primitive::Cylinder(_) => "cylinder",
            Primitive::Rod(_) => "rod",
        }
    }

    pub fn density_scale(&self) -> f64 {
        match self {
            Primitive::Plane(p) => p.density_scale,
            Primitive::Box(b) => b.density_scale,
            Primitive::Cylinder(c) | Primitive::Rod(c) => c.density_scale,
        }
    }
}

impl SceneSpec {
    pub fn from_toml_str(text: &str) -> Result<SceneSpec> {
        let spec: SceneSpec =
            toml::from_str(text).map_err(|e| SceneError::Parse(e.message().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<SceneSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene serialization cannot fail")
    }

    pub fn primitives(&self) -> Vec<Primitive<'_>> {
        let mut out: Vec<Primitive<'_>> = self.planes.iter().map(Primitive::Plane).collect();
        out.extend(self.boxes.iter().map(Primitive::Box));
        out.extend(self.cylinders.iter().map(Primitive::Cylinder));
        out.extend(self.rods.iter().map(Primitive::Rod));
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scene.density.is_finite() && self.scene.density > 0.0) {
            return Err(invalid("scene.density", "must be positive"));
        }
        if !(self.scene.mls_fraction > 0.0 && self.scene.mls_fraction <= 1.0) {
            return Err(invalid("scene.mls_fraction", "must be in (0, 1]"));
        }
        self.error.validate()?;
        let prims = self.primitives();
        if prims.is_empty() {
            return Err(invalid("plane", "scene needs at least one primitive"));
        }
        for (i, p) in prims.iter().enumerate() {
            let s = p.density_scale();
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid(
                    &format!("{}.density_scale", p.kind()),
                    "must be positive",
                ));
            }
            let area = primitive_area(p);
            if !(area.is_finite() && area > 0.0) {
                return Err(SceneError::Degenerate {
                    kind: p.kind(),
                    index: i,
                });
            }
        }
        Ok(())
    }

    /// Expected reference point count.
    pub fn expected_points(&self) -> f64 {
        self.primitives()
            .iter()
            .map(|p| self.scene.density * p.density_scale() * primitive_area(p))
            .sum()
    }

    /// 20 x 20 m hall: floor, four 4 m walls, five boxes, three columns and
    /// two thin rods, about 300k reference points.
    ///
    /// Sparse, tall walls carry the largest errors; the densely sampled floor
    /// the smallest.
    pub fn default_scene() -> SceneSpec {
        let plane = |origin: [f64; 3], u: [f64; 3], v: [f64; 3], density_scale: f64| PlaneSpec {
            origin,
            u,
            v,
            density_scale,
        };
        let boxed = |center: [f64; 3], size: [f64; 3], yaw_deg: f64| BoxSpec {
            center,
            size,
            yaw_deg,
            density_scale: 1.5,
        };
        let column =
            |base: [f64; 3], axis: [f64; 3], radius: f64, density_scale: f64| CylinderSpec {
                base,
                axis,
                radius,
                density_scale,
            };
        SceneSpec {
            scene: SceneSettings {
                density: 430.0,
                seed: 7,
                mls_fraction: 0.5,
            },
            error: ErrorLaw {
                sigma0_mm: 2.0,
                range_mm_per_m: 0.2,
                density_mm: 800.0,
                height_mm: 30.0,
                height_scale_m: 1.5,
                scanner: [10.0, 10.0, 1.5],
                truncate_mm: 80.0,
            },
            planes: vec![
                plane([0.0, 0.0, 0.0], [20.0, 0.0, 0.0], [0.0, 20.0, 0.0], 1.0),
                plane([0.0, 0.0, 0.0], [20.0, 0.0, 0.0], [0.0, 0.0, 4.0], 0.4),
                plane([0.0, 20.0, 0.0], [20.0, 0.0, 0.0], [0.0, 0.0, 4.0], 0.4),
                plane([0.0, 0.0, 0.0], [0.0, 20.0, 0.0], [0.0, 0.0, 4.0], 0.4),
                plane([20.0, 0.0, 0.0], [0.0, 20.0, 0.0], [0.0, 0.0, 4.0], 0.4),
            ],
            boxes: vec![
                boxed([4.0, 5.0, 0.6], [2.0, 1.5, 1.2], 0.0),
                boxed([14.0, 4.5, 0.9], [3.0, 2.0, 1.8], 30.0),
                boxed([10.0, 12.0, 0.5], [1.5, 1.5, 1.0], 45.0),
                boxed([5.0, 15.0, 1.25], [2.5, 1.2, 2.5], 10.0),
                boxed([15.5, 15.0, 0.75], [2.0, 2.0, 1.5], 60.0),
            ],
            cylinders: vec![
                column([8.0, 8.0, 0.0], [0.0, 0.0, 3.0], 0.3, 2.0),
                column([16.5, 9.0, 0.0], [0.0, 0.0, 3.5], 0.25, 2.0),
                column([2.5, 10.0, 0.0], [0.0, 0.0, 2.5], 0.4, 2.0),
            ],
            rods: vec![
                column([12.0, 17.5, 0.0], [0.0, 0.0, 3.0], 0.03, 3.0),
                column([2.0, 18.5, 2.5], [6.0, 0.0, 0.0], 0.04, 3.0),
            ],
        }
    }
}
