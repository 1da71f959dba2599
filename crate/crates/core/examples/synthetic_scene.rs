//! Generates the bundled default scene and reports how points and planted
//! error split across primitive types.

use mls_uncertainty::synthetic::{generate_pair, primitive_area, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenes/default.toml");
    let spec = SceneSpec::from_file(path)?;
    println!("expected reference points: {:.0}", spec.expected_points());
    let start = std::time::Instant::now();
    let pair = generate_pair(&spec)?;
    println!(
        "generated {} reference and {} MLS points in {:.2} s\n",
        pair.reference.len(),
        pair.mls.len(),
        start.elapsed().as_secs_f64()
    );

    let prims = spec.primitives();
    let primitive = pair.mls.scalar("primitive").unwrap();
    let error = pair.true_error_mm();
    println!(
        "{:<10} {:>9} {:>10} {:>14}",
        "kind", "area m²", "MLS points", "mean error mm"
    );
    for kind in ["plane", "box", "cylinder", "rod"] {
        let ids: Vec<usize> = (0..prims.len())
            .filter(|&i| prims[i].kind() == kind)
            .collect();
        let area: f64 = ids.iter().map(|&i| primitive_area(&prims[i])).sum();
        let errs: Vec<f64> = primitive
            .iter()
            .zip(error)
            .filter(|(p, _)| ids.contains(&(**p as usize)))
            .map(|(_, e)| *e)
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
        println!("{kind:<10} {area:>9.1} {:>10} {mean:>14.2}", errs.len());
    }
    Ok(())
}
