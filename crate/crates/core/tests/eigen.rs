use mls_uncertainty::eigen::*;
use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

fn oracle(a: &Mat3) -> [f64; 3] {
    let m = Matrix3::from_fn(|i, j| a[i][j]);
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    [v[0], v[1], v[2]]
}

fn check_decomposition(a: &Mat3, tol: f64) {
    let (vals, vecs) = sym3_eigen(a);
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..3 {
        let av = mat_vec(a, &vecs[i]);
        let lv = scale(&vecs[i], vals[i]);
        let resid = sub(&av, &lv);
        assert!(
            dot(&resid, &resid).sqrt() <= tol * norm,
            "residual {resid:?} for {a:?}"
        );
        for j in 0..3 {
            let d = dot(&vecs[i], &vecs[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((d - want).abs() < 1e-9, "orthonormality {i}{j}: {d}");
        }
    }
}

#[test]
fn random_matrices_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let got = sym3_eigenvalues(&a);
        let want = oracle(&a);
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() < 1e-12, "{got:?} vs {want:?}");
        }
        check_decomposition(&a, 1e-10);
    }
}

#[test]
fn repeated_eigenvalues_give_orthonormal_basis() {
    let cases: Vec<Mat3> = vec![
        [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]],
        [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
        [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]],
        [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]],
        [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.0]],
    ];
    for a in &cases {
        check_decomposition(a, 1e-10);
    }
}

#[test]
fn plane_normal_is_z() {
    let a = [[0.3, 0.1, 0.0], [0.1, 0.2, 0.0], [0.0, 0.0, 0.0]];
    let (vals, vecs) = sym3_eigen(&a);
    assert!(vals[2].abs() < 1e-15);
    assert_eq!(vecs[2], [0.0, 0.0, 1.0]);
}

#[test]
fn sign_convention() {
    assert_eq!(canonicalize_sign([0.0, 0.0, -1.0]), [0.0, 0.0, 1.0]);
    assert_eq!(canonicalize_sign([-0.8, 0.6, 0.0]), [0.8, -0.6, 0.0]);
    assert_eq!(canonicalize_sign([0.1, 0.2, 0.3]), [0.1, 0.2, 0.3]);
}

#[test]
fn two_by_two() {
    assert_eq!(sym2_eigenvalues(4.0, 0.0, 1.0), [4.0, 1.0]);
    let [hi, lo] = sym2_eigenvalues(2.0, 1.0, 2.0);
    assert!((hi - 3.0).abs() < 1e-15 && (lo - 1.0).abs() < 1e-15);
    assert_eq!(sym2_eigenvalues(0.0, 0.0, 0.0), [0.0, 0.0]);
}
