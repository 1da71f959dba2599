use mls_uncertainty::io::{Point3, PointCloud};
use mls_uncertainty::neighborhood::*;
use mls_uncertainty::spatial::KdTree;
use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn cloud(points: Vec<Point3>) -> (PointCloud, KdTree) {
    let c = PointCloud::new(points);
    let t = KdTree::build(&c).unwrap();
    (c, t)
}

/// Dense covariance + library eigen-solve, independent of the closed form.
fn oracle_eigenvalues(points: &[Point3]) -> [f64; 3] {
    let n = points.len() as f64;
    let mean = points.iter().fold([0.0; 3], |m, p| {
        [m[0] + p.x / n, m[1] + p.y / n, m[2] + p.z / n]
    });
    let mut c = Matrix3::zeros();
    for p in points {
        let d = nalgebra::Vector3::new(p.x - mean[0], p.y - mean[1], p.z - mean[2]);
        c += d * d.transpose();
    }
    c /= n - 1.0;
    let mut v: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    [v[0], v[1], v[2]]
}

#[test]
fn unit_square_is_planar() {
    let (c, t) = cloud(vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
    ]);
    let s = eigen_stats(&c, &t, 0, 3).unwrap();
    assert_eq!(s.n, 4);
    assert_eq!(s.eigenvalues[2], 0.0);
    assert_eq!(s.eigenvectors[2], [0.0, 0.0, 1.0]);
    // Unbiased: each coordinate has variance (4 * 0.25) / 3.
    assert!((s.eigenvalues[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((s.radius_3d - 2f64.sqrt()).abs() < 1e-15);
    assert!((s.radius_2d - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn collinear_points() {
    let (c, t) = cloud(
        (0..10)
            .map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0))
            .collect(),
    );
    let s = eigen_stats(&c, &t, 4, 6).unwrap();
    assert!(s.eigenvalues[0] > 0.0);
    assert_eq!(s.eigenvalues[1], 0.0);
    assert_eq!(s.eigenvalues[2], 0.0);
    assert_eq!(s.eigenvectors[0], [1.0, 0.0, 0.0]);
}

#[test]
fn random_neighbourhood_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pts: Vec<Point3> = (0..50)
        .map(|_| Point3::new(rng.gen::<f64>() * 2.0, rng.gen(), rng.gen::<f64>() * 0.5))
        .collect();
    let (c, t) = cloud(pts.clone());
    let s = eigen_stats(&c, &t, 0, 49).unwrap();
    let want = oracle_eigenvalues(&pts);
    for i in 0..3 {
        assert!(
            (s.eigenvalues[i] - want[i]).abs() <= 1e-10 * want[i].abs(),
            "{:?} {:?}",
            s.eigenvalues,
            want
        );
    }
}

#[test]
fn k_out_of_range() {
    let (c, t) = cloud(vec![Point3::default(), Point3::new(1.0, 0.0, 0.0)]);
    assert!(eigen_stats(&c, &t, 0, 0).is_err());
    assert!(eigen_stats(&c, &t, 0, 2).is_err());
    assert!(eigen_stats(&c, &t, 0, 1).is_ok());
}

fn stats_with(ev: [f64; 3], ev2: [f64; 2]) -> NeighborhoodStats {
    NeighborhoodStats {
        eigenvalues: ev,
        eigenvectors: [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        eigenvalues_2d: ev2,
        n: 11,
        radius_3d: 1.0,
        radius_2d: 1.0,
        z_min: 0.0,
        z_max: 0.0,
        z_std: 0.0,
    }
}

#[test]
fn normalization_examples() {
    let n = normalized_evs(&stats_with([3.0, 2.0, 1.0], [4.0, 1.0])).unwrap();
    assert_eq!(n.l, [0.5, 1.0 / 3.0, 1.0 / 6.0]);
    assert_eq!(n.m, [0.8, 0.2]);
    let n = normalized_evs(&stats_with([1.0, 1.0, 1.0], [1.0, 1.0])).unwrap();
    assert_eq!(n.l, [1.0 / 3.0; 3]);
    assert_eq!(
        normalized_evs(&stats_with([0.0; 3], [0.0; 2])),
        Err(NeighborhoodError::Degenerate)
    );
    let (d, flag) = normalized_evs_or_degenerate(&stats_with([1.0, 0.0, 0.0], [0.0; 2]));
    assert!(flag);
    assert_eq!(d.l, [1.0, 0.0, 0.0]);
    assert_eq!(d.m, [0.5, 0.5]);
}

#[test]
fn entropy_examples() {
    assert!((eigenentropy(&[1.0 / 3.0; 3]) - 3f64.ln()).abs() < 1e-15);
    assert_eq!(eigenentropy(&[1.0, 0.0, 0.0]), 0.0);
    // -(0.5 ln 0.5 + 0.3 ln 0.3 + 0.2 ln 0.2) by hand: 0.34657 + 0.36119 + 0.32189.
    assert!((eigenentropy(&[0.5, 0.3, 0.2]) - 1.029_653).abs() < 1e-6);
    assert_eq!(LN_3, 3f64.ln());
}

/// Centre point plus squares of four points at growing radii. Every
/// neighbourhood made of whole rings is exactly planar and isotropic.
#[test]
fn isotropic_plane_ties_resolve_to_k_min() {
    let mut pts = vec![Point3::new(0.0, 0.0, 0.0)];
    for ring in 1..=12 {
        let r = ring as f64 * 0.1;
        let a0 = ring as f64 * 0.37;
        for j in 0..4 {
            let a = a0 + j as f64 * std::f64::consts::FRAC_PI_2;
            pts.push(Point3::new(r * a.cos(), r * a.sin(), 0.0));
        }
    }
    let (c, t) = cloud(pts);
    let range = KRange::new(4, 40, 4);
    let best = optimal_k(&c, &t, 0, &range).unwrap();
    assert_eq!(best.k, 4);
    assert!((best.entropy - PLANAR_ISOTROPIC_ENTROPY).abs() < 1e-12);
}

#[test]
fn noisy_plane_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let noise = Normal::new(0.0, 0.001).unwrap();
    let mut pts = Vec::new();
    for i in 0..40 {
        for j in 0..40 {
            pts.push(Point3::new(
                i as f64 * 0.01,
                j as f64 * 0.01,
                noise.sample(&mut rng),
            ));
        }
    }
    let (c, t) = cloud(pts);
    let range = KRange::new(10, 60, 1);
    for idx in [0usize, 55, 820, 1599, 777] {
        let got = optimal_k(&c, &t, idx, &range).unwrap();
        let mut best = (usize::MAX, f64::INFINITY);
        for k in range.candidates() {
            let s = eigen_stats(&c, &t, idx, k).unwrap();
            let h = eigenentropy(&normalized_evs(&s).unwrap().l);
            if h < best.1 - ENTROPY_TIE_TOLERANCE {
                best = (k, h);
            }
        }
        assert_eq!(got.k, best.0, "point {idx}");
        assert!((got.entropy - best.1).abs() < 1e-9);
    }
}

#[test]
fn single_candidate_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (c, t) = cloud(
        (0..30)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect(),
    );
    assert_eq!(optimal_k(&c, &t, 3, &KRange::new(12, 12, 1)).unwrap().k, 12);
    assert!(optimal_k(&c, &t, 3, &KRange::new(12, 30, 1)).is_err());
    assert!(optimal_k(&c, &t, 3, &KRange::new(12, 10, 1)).is_err());
    assert!(optimal_k(&c, &t, 3, &KRange::new(2, 10, 0)).is_err());
}

#[test]
fn coincident_points_are_degenerate() {
    let (c, t) = cloud(vec![Point3::new(1.0, 1.0, 1.0); 20]);
    let (best, s) = optimal_neighborhood(&c, &t, 0, &KRange::new(5, 10, 1)).unwrap();
    assert_eq!(best.k, 5);
    assert_eq!(best.entropy, LN_3);
    assert_eq!(s.trace(), 0.0);
    assert_eq!(s.radius_3d, 0.0);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn pts_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -0.3f64..0.3), 25..60)
    }

    fn all_stats(pts: &[Point3], k: usize) -> NeighborhoodStats {
        let (c, t) = cloud(pts.to_vec());
        eigen_stats(&c, &t, 0, k).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rigid_motion_invariance(
            raw in pts_strategy(),
            angle in 0.0f64..std::f64::consts::TAU,
            shift in (-50.0f64..50.0, -50.0f64..50.0, -5.0f64..5.0),
        ) {
            let pts: Vec<Point3> = raw.iter().map(|t| Point3::new(t.0, t.1, t.2)).collect();
            let (s, co) = angle.sin_cos();
            let moved: Vec<Point3> = pts.iter().map(|p| Point3::new(
                co * p.x - s * p.y + shift.0,
                s * p.x + co * p.y + shift.1,
                p.z + shift.2,
            )).collect();
            // Use the whole cloud so the neighbour set cannot change.
            let k = pts.len() - 1;
            let a = all_stats(&pts, k);
            let b = all_stats(&moved, k);
            for i in 0..3 {
                prop_assert!((a.eigenvalues[i] - b.eigenvalues[i]).abs() < 1e-9);
            }
            for i in 0..2 {
                prop_assert!((a.eigenvalues_2d[i] - b.eigenvalues_2d[i]).abs() < 1e-9);
            }
            let ha = eigenentropy(&normalized_evs(&a).unwrap().l);
            let hb = eigenentropy(&normalized_evs(&b).unwrap().l);
            prop_assert!((ha - hb).abs() < 1e-9);
            prop_assert!((a.eigenvectors[0][2] - b.eigenvectors[0][2]).abs() < 1e-6
                || a.eigenvalues[0] - a.eigenvalues[1] < 1e-6);
        }

        #[test]
        fn scale_covariance(raw in pts_strategy(), factor in 0.01f64..100.0) {
            let pts: Vec<Point3> = raw.iter().map(|t| Point3::new(t.0, t.1, t.2)).collect();
            let scaled: Vec<Point3> = pts.iter().map(|p| Point3::new(p.x * factor, p.y * factor, p.z * factor)).collect();
            let k = pts.len() - 1;
            let a = all_stats(&pts, k);
            let b = all_stats(&scaled, k);
            let f2 = factor * factor;
            for i in 0..3 {
                prop_assert!((a.eigenvalues[i] * f2 - b.eigenvalues[i]).abs() <= 1e-9 * b.eigenvalues[0]);
            }
            let na = normalized_evs(&a).unwrap();
            let nb = normalized_evs(&b).unwrap();
            for i in 0..3 {
                prop_assert!((na.l[i] - nb.l[i]).abs() < 1e-9);
            }
            for i in 0..2 {
                prop_assert!((na.m[i] - nb.m[i]).abs() < 1e-9);
            }
            prop_assert!((eigenentropy(&na.l) - eigenentropy(&nb.l)).abs() < 1e-9);
        }

        #[test]
        fn entropy_bounds(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let s = a + b + c;
            prop_assume!(s > 0.0);
            let h = eigenentropy(&[a / s, b / s, c / s]);
            prop_assert!((0.0..=LN_3).contains(&h));
        }
    }
}
