//! Per-point uncertainty prediction for mobile laser scanning (MLS) point
//! clouds.
//!
//! The pipeline labels every MLS point with its cloud-to-cloud distance to a
//! reference scan, describes it with 27 local geometric features, and learns
//! the mapping with tree ensembles evaluated under spatially blocked
//! cross-validation.

pub mod cli;
pub mod eigen;
pub mod ensemble;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod labeling;
pub mod matrix;
pub mod neighborhood;
pub mod rng;
pub mod spatial;
pub mod synthetic;
