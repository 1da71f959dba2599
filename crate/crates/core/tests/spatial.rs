use mls_uncertainty::io::{Point3, PointCloud};
use mls_uncertainty::spatial::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_knn(points: &[Point3], q: Point3, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.distance_squared(&q)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
        .collect()
}

#[test]
fn single_point_tree() {
    let t = KdTree::from_points(&[Point3::new(1.0, 2.0, 3.0)]).unwrap();
    let n = t.nearest(Point3::new(-5.0, 9.0, 0.0));
    assert_eq!(n.index, 0);
}

#[test]
fn empty_cloud_rejected() {
    assert_eq!(
        KdTree::from_points(&[]).unwrap_err(),
        SpatialError::EmptyCloud
    );
}

#[test]
fn knn_matches_brute_force_1000_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts = random_points(&mut rng, 1000);
    let tree = KdTree::from_points(&pts).unwrap();
    for _ in 0..100 {
        let q = Point3::new(rng.gen(), rng.gen(), rng.gen());
        let got: Vec<usize> = tree.knn(q, 10).unwrap().iter().map(|n| n.index).collect();
        let want: Vec<usize> = brute_knn(&pts, q, 10).iter().map(|n| n.0).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn duplicates_both_retrievable() {
    let p = Point3::new(0.5, 0.5, 0.5);
    let pts = vec![p, Point3::new(9.0, 9.0, 9.0), p];
    let tree = KdTree::from_points(&pts).unwrap();
    let r = tree.knn(p, 2).unwrap();
    assert_eq!(r.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 2]);
    assert!(r.iter().all(|n| n.distance == 0.0));
}

#[test]
fn query_on_stored_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pts = random_points(&mut rng, 50);
    let tree = KdTree::from_points(&pts).unwrap();
    let r = tree.knn(pts[17], 1).unwrap();
    assert_eq!(
        r,
        vec![Neighbor {
            index: 17,
            distance: 0.0
        }]
    );
}

#[test]
fn unit_square_tie_break_by_index() {
    let pts = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
    ];
    let tree = KdTree::from_points(&pts).unwrap();
    let r = tree.knn(Point3::new(0.0, 0.0, 0.0), 2).unwrap();
    assert_eq!(
        r[0],
        Neighbor {
            index: 0,
            distance: 0.0
        }
    );
    assert_eq!(
        r[1],
        Neighbor {
            index: 1,
            distance: 1.0
        }
    );
}

#[test]
fn tie_break_survives_many_equidistant_points() {
    // A ring of equidistant points forces ties across subtrees.
    let n = 200;
    let pts: Vec<Point3> = (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            Point3::new(a.cos(), a.sin(), 0.0)
        })
        .chain(std::iter::repeat(Point3::new(0.0, 0.0, 1.0)).take(30))
        .collect();
    let tree = KdTree::from_points(&pts).unwrap();
    let q = Point3::new(0.0, 0.0, 1.0);
    let got: Vec<usize> = tree.knn(q, 40).unwrap().iter().map(|n| n.index).collect();
    let want: Vec<usize> = brute_knn(&pts, q, 40).iter().map(|n| n.0).collect();
    assert_eq!(got, want);
}

#[test]
fn k_equals_n_returns_all_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 37);
    let tree = KdTree::from_points(&pts).unwrap();
    let r = tree.knn(Point3::default(), 37).unwrap();
    assert_eq!(r.len(), 37);
    assert!(r.windows(2).all(|w| w[0].distance <= w[1].distance));
    assert!(matches!(
        tree.knn(Point3::default(), 38),
        Err(SpatialError::KOutOfRange { .. })
    ));
    assert!(matches!(
        tree.knn(Point3::default(), 0),
        Err(SpatialError::KOutOfRange { .. })
    ));
}

#[test]
fn nearest_five_millimetres() {
    let tree = KdTree::from_points(&[Point3::new(0.0, 0.0, 0.0)]).unwrap();
    let n = tree.nearest(Point3::new(0.0, 0.0, 0.005));
    assert!((n.distance - 0.005).abs() < 1e-15);
}

#[test]
fn nearest_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts = random_points(&mut rng, 500);
    let tree = KdTree::from_points(&pts).unwrap();
    for _ in 0..200 {
        let q = Point3::new(rng.gen(), rng.gen(), rng.gen());
        assert_eq!(tree.nearest(q).index, brute_knn(&pts, q, 1)[0].0);
    }
}

#[test]
fn raster_three_points_one_cell() {
    let c = PointCloud::new(vec![
        Point3::new(0.1, 0.1, 0.0),
        Point3::new(0.2, 0.1, 1.0),
        Point3::new(0.1, 0.2, 2.0),
    ]);
    let r = GridRaster2D::build_with_origin(&c, 1.0, (0.0, 0.0)).unwrap();
    let s = r.stats_at(&c.point(0)).unwrap();
    assert_eq!(s.count, 3);
    assert_eq!(s.delta_z(), 2.0);
    assert!((s.z_std - 1.0).abs() < 1e-15);
}

#[test]
fn raster_single_point_and_boundary() {
    let c = PointCloud::new(vec![Point3::new(0.0, 0.0, 5.0), Point3::new(1.0, 0.5, 3.0)]);
    let r = GridRaster2D::build_with_origin(&c, 1.0, (0.0, 0.0)).unwrap();
    assert_eq!(r.cell_of(&c.point(1)), (1, 0));
    let s = r.stats_at(&c.point(0)).unwrap();
    assert_eq!((s.count, s.delta_z(), s.z_std), (1, 0.0, 0.0));
    assert_eq!(r.occupied_cells(), 2);
}

#[test]
fn raster_rejects_bad_cell_size() {
    let c = PointCloud::new(vec![Point3::default()]);
    assert!(GridRaster2D::build(&c, 0.0).is_err());
    assert!(GridRaster2D::build(&c, -1.0).is_err());
    assert!(GridRaster2D::build(&PointCloud::default(), 1.0).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn raster_counts_partition_cloud(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0), 1..300),
            cell in 0.05f64..3.0,
        ) {
            let c = PointCloud::new(pts.iter().map(|t| Point3::new(t.0, t.1, t.2)).collect());
            let r = GridRaster2D::build(&c, cell).unwrap();
            let total: usize = r.cells().map(|(_, s)| s.count).sum();
            prop_assert_eq!(total, c.len());
            prop_assert!(r.cells().all(|(_, s)| s.count >= 1 && s.z_max >= s.z_min));
        }

        #[test]
        fn knn_distances_monotone(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..200),
            q in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
            k in 1usize..50,
        ) {
            let pts: Vec<Point3> = pts.iter().map(|t| Point3::new(t.0, t.1, t.2)).collect();
            let tree = KdTree::from_points(&pts).unwrap();
            let k = k.min(pts.len());
            let r = tree.knn(Point3::new(q.0, q.1, q.2), k).unwrap();
            prop_assert_eq!(r.len(), k);
            prop_assert!(r.windows(2).all(|w| w[0].distance <= w[1].distance));
        }
    }
}
