//! Exact k-nearest-neighbour queries against a kd-tree, checked against a
//! brute-force scan.

use mls_uncertainty::io::{Point3, PointCloud};
use mls_uncertainty::spatial::KdTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<Point3> = (0..50_000)
        .map(|_| {
            Point3::new(
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..10.0),
                rng.gen_range(0.0..1.0),
            )
        })
        .collect();
    let cloud = PointCloud::new(points);
    let start = std::time::Instant::now();
    let tree = KdTree::build(&cloud)?;
    println!(
        "built tree over {} points in {:.1} ms",
        tree.len(),
        start.elapsed().as_secs_f64() * 1e3
    );

    let query = Point3::new(5.0, 5.0, 0.5);
    let found = tree.knn(query, 8)?;
    let mut brute: Vec<(f64, usize)> = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.distance(&query), i))
        .collect();
    brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (n, b) in found.iter().zip(&brute) {
        assert_eq!(n.index, b.1);
        println!("#{:<6} {:.6} m", n.index, n.distance);
    }
    let nearest = tree.nearest(Point3::new(-1.0, -1.0, 0.0));
    println!(
        "nearest to (-1, -1, 0): #{} at {:.4} m",
        nearest.index, nearest.distance
    );
    Ok(())
}
