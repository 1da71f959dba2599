//! The 27 per-point features on a small synthetic scene, summarised per
//! column and written as CSV.

use mls_uncertainty::features::{extract_features, FeatureConfig};
use mls_uncertainty::neighborhood::KRange;
use mls_uncertainty::synthetic::{generate_pair, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SceneSpec::default_scene();
    spec.scene.density = 40.0;
    let pair = generate_pair(&spec)?;
    let config = FeatureConfig {
        k_range: KRange::new(10, 50, 1),
        ..FeatureConfig::default()
    };
    let start = std::time::Instant::now();
    let fm = extract_features(&pair.mls, &config)?;
    println!(
        "{} points, {:.2} s\n",
        fm.len(),
        start.elapsed().as_secs_f64()
    );
    println!(
        "{:<20} {:>12} {:>12} {:>12}",
        "feature", "min", "mean", "max"
    );
    for (j, name) in fm.x.columns().iter().enumerate() {
        let col = fm.x.column(j);
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        println!("{name:<20} {lo:>12.4} {mean:>12.4} {hi:>12.4}");
    }
    let out = std::env::temp_dir().join("mls_features.csv");
    fm.write_csv(&out)?;
    println!("\nwrote {}", out.display());
    Ok(())
}
