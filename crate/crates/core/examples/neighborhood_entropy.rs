//! Eigenentropy-optimal neighbourhood sizes for points on a line, a plane
//! and inside a blob.

use mls_uncertainty::io::{Point3, PointCloud};
use mls_uncertainty::neighborhood::{normalized_evs, optimal_neighborhood, KRange, LN_3};
use mls_uncertainty::spatial::KdTree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn describe(name: &str, points: Vec<Point3>) -> Result<(), Box<dyn std::error::Error>> {
    let cloud = PointCloud::new(points);
    let tree = KdTree::build(&cloud)?;
    let range = KRange::default();
    let (best, stats) = optimal_neighborhood(&cloud, &tree, 0, &range)?;
    let l = normalized_evs(&stats)?.l;
    println!(
        "{name:<6} k = {:>3}  entropy = {:.4}  (l1, l2, l3) = ({:.3}, {:.3}, {:.3})",
        best.k, best.entropy, l[0], l[1], l[2]
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.002)?;
    let line: Vec<Point3> = (0..400)
        .map(|i| {
            Point3::new(
                i as f64 * 0.01,
                noise.sample(&mut rng),
                noise.sample(&mut rng),
            )
        })
        .collect();
    let plane: Vec<Point3> = (0..400)
        .map(|i| {
            Point3::new(
                (i % 20) as f64 * 0.05,
                (i / 20) as f64 * 0.05,
                noise.sample(&mut rng),
            )
        })
        .collect();
    let unit = Normal::new(0.0, 1.0)?;
    let blob: Vec<Point3> = (0..400)
        .map(|_| {
            Point3::new(
                unit.sample(&mut rng),
                unit.sample(&mut rng),
                unit.sample(&mut rng),
            )
        })
        .collect();
    describe("line", line)?;
    describe("plane", plane)?;
    describe("blob", blob)?;
    println!("ln 3 = {LN_3:.4} is the entropy of a perfectly isotropic neighbourhood");
    Ok(())
}
