//! Spatially blocked 5-fold cross-validation of both models on a small
//! synthetic scene, with the per-fold report written as CSV.

use mls_uncertainty::ensemble::RfConfig;
use mls_uncertainty::evaluation::{
    assign_spatial_folds, cross_validate, render_summary, write_report_csv, CvConfig,
    DEFAULT_FOLDS, DEFAULT_GRID_SIZE_M,
};
use mls_uncertainty::features::{extract_features, FeatureConfig};
use mls_uncertainty::labeling::{c2c_label, retention_filter, DEFAULT_RETENTION_MM};
use mls_uncertainty::synthetic::{generate_pair, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SceneSpec::default_scene();
    spec.scene.density = 60.0;
    let pair = generate_pair(&spec)?;
    let features = extract_features(&pair.mls, &FeatureConfig::default())?;
    let labels = retention_filter(
        &c2c_label(&pair.mls, &pair.reference)?,
        DEFAULT_RETENTION_MM,
    )?;
    let rows = labels.retained_rows();
    let data = features.select(&rows);
    let y: Vec<f64> = rows.iter().map(|&r| labels.c2c_mm[r]).collect();
    let points: Vec<_> = data.indices.iter().map(|&i| pair.mls.point(i)).collect();

    let folds = assign_spatial_folds(&points, DEFAULT_GRID_SIZE_M, DEFAULT_FOLDS, 0)?;
    for fold in 0..folds.n_folds {
        let train = folds.cells_of(&folds.train_rows(fold));
        let test = folds.cells_of(&folds.test_rows(fold));
        assert!(train.is_disjoint(&test));
        println!(
            "fold {fold}: {} test cells, {} test points",
            test.len(),
            folds.test_rows(fold).len()
        );
    }

    let config = CvConfig {
        rf: RfConfig {
            n_estimators: 30,
            ..RfConfig::default()
        },
        ..CvConfig::default()
    };
    let report = cross_validate(&data.x, &y, &folds, &config)?;
    println!("\n{}", render_summary(&report)?);
    let out = std::env::temp_dir().join("mls_cv_report.csv");
    write_report_csv(&report, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
