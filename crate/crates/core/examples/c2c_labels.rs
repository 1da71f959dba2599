//! Cloud-to-cloud labels: nearest-reference distances in mm, then the
//! strict 80 mm retention filter.

use mls_uncertainty::labeling::{c2c_label, retention_filter, DEFAULT_RETENTION_MM};
use mls_uncertainty::synthetic::{generate_pair, ErrorLaw, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SceneSpec::default_scene();
    spec.scene.density = 60.0;
    spec.error = ErrorLaw::constant(25.0);
    let pair = generate_pair(&spec)?;
    let labels = c2c_label(&pair.mls, &pair.reference)?;
    let planted = pair.true_error_mm();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("MLS points:            {}", labels.len());
    println!("mean planted shift:    {:.2} mm", mean(planted));
    println!(
        "mean C2C label:        {:.2} mm (never above the planted shift)",
        mean(&labels.c2c_mm)
    );

    for threshold in [DEFAULT_RETENTION_MM, 40.0, 10.0] {
        let kept = retention_filter(&labels, threshold)?;
        println!(
            "retained below {threshold:>4} mm: {}",
            kept.retained_count()
        );
    }
    Ok(())
}
