use mls_uncertainty::io::Point3;
use mls_uncertainty::io::PointCloud;
use mls_uncertainty::labeling::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    PointCloud::new(
        (0..n)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect(),
    )
}

#[test]
fn identical_clouds_label_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = random_cloud(&mut rng, 100);
    let l = c2c_label(&c, &c).unwrap();
    assert!(l.c2c_mm.iter().all(|&d| d == 0.0));
}

#[test]
fn five_millimetres() {
    let mls = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.005)]);
    let reference = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0)]);
    let l = c2c_label(&mls, &reference).unwrap();
    assert!((l.c2c_mm[0] - 5.0).abs() < 1e-12);
}

#[test]
fn matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mls = random_cloud(&mut rng, 200);
    let reference = random_cloud(&mut rng, 300);
    let l = c2c_label(&mls, &reference).unwrap();
    for (p, got) in mls.points().iter().zip(&l.c2c_mm) {
        let want = reference
            .points()
            .iter()
            .map(|q| p.distance(q))
            .fold(f64::INFINITY, f64::min)
            * 1000.0;
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn empty_reference_rejected() {
    let mls = PointCloud::new(vec![Point3::default()]);
    assert!(matches!(
        c2c_label(&mls, &PointCloud::default()),
        Err(LabelError::EmptyReference)
    ));
}

#[test]
fn direction_is_mls_to_reference() {
    // Dense reference along a line, one MLS point off its end.
    let reference = PointCloud::new(
        (0..100)
            .map(|i| Point3::new(i as f64 * 0.01, 0.0, 0.0))
            .collect(),
    );
    let mls = PointCloud::new(vec![Point3::new(0.0, 0.02, 0.0)]);
    let forward = c2c_label(&mls, &reference).unwrap();
    let backward = c2c_label(&reference, &mls).unwrap();
    assert!((forward.c2c_mm[0] - 20.0).abs() < 1e-9);
    let far = backward.c2c_mm.last().unwrap();
    assert!((far - (0.99f64.hypot(0.02) * 1000.0)).abs() < 1e-6);
}

fn labels(values: &[f64]) -> LabeledCloud {
    LabeledCloud {
        indices: (0..values.len()).collect(),
        c2c_mm: values.to_vec(),
        retained: vec![true; values.len()],
    }
}

#[test]
fn strict_threshold() {
    let l = retention_filter(&labels(&[5.0, 79.999, 80.0, 120.0]), 80.0).unwrap();
    assert_eq!(l.retained, vec![true, true, false, false]);
    let l = retention_filter(&labels(&[0.0; 4]), 80.0).unwrap();
    assert!(l.retained.iter().all(|&r| r));
    let l = retention_filter(&labels(&[5.0, 1e6]), 1e9).unwrap();
    assert!(l.retained.iter().all(|&r| r));
    assert!(retention_filter(&labels(&[1.0]), 0.0).is_err());
}

#[test]
fn csv_round_trip() {
    let l = retention_filter(&labels(&[5.0, 80.0]), 80.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.csv");
    l.write_csv(&p).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        "idx,c2c_mm,retained\n0,5,1\n1,80,0\n"
    );
    assert_eq!(LabeledCloud::read_csv(&p).unwrap(), l);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn raising_threshold_never_drops(
            values in prop::collection::vec(0.0f64..200.0, 1..100),
            t in 0.1f64..150.0,
            dt in 0.0f64..50.0,
        ) {
            let l = labels(&values);
            let a = retention_filter(&l, t).unwrap();
            let b = retention_filter(&l, t + dt).unwrap();
            for (x, y) in a.retained.iter().zip(&b.retained) {
                prop_assert!(!x | y);
            }
        }
    }
}
