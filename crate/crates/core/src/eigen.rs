//! Closed-form eigen-decomposition of symmetric 3x3 and 2x2 matrices.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic
//! cubic, followed by one guarded Newton step. Eigenvectors use the
//! row-cross-product construction for the most isolated eigenvalue and a
//! projected 2x2 solve for the second, so repeated eigenvalues still yield an
//! orthonormal basis.

use std::f64::consts::PI;

pub type Mat3 = [[f64; 3]; 3];

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn scale(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
fn mat_vec(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Eigenvalues of a symmetric matrix, descending. Only the upper triangle is read.
pub fn sym3_eigenvalues(a: &Mat3) -> [f64; 3] {
    let max_abs = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return [0.0; 3];
    }
    let s = 1.0 / max_abs;
    let m = [
        [a[0][0] * s, a[0][1] * s, a[0][2] * s],
        [a[0][1] * s, a[1][1] * s, a[1][2] * s],
        [a[0][2] * s, a[1][2] * s, a[2][2] * s],
    ];
    let (ev, _) = scaled_decomposition(&m);
    [ev[0] * max_abs, ev[1] * max_abs, ev[2] * max_abs]
}

/// Isolated root from the cubic, the other two from the 2x2 problem on its
/// orthogonal complement. The projection keeps close roots accurate.
fn scaled_decomposition(m: &Mat3) -> ([f64; 3], [[f64; 3]; 3]) {
    let ev = scaled_eigenvalues(m);
    let iso = if ev[0] - ev[1] >= ev[1] - ev[2] { 0 } else { 2 };
    let w = eigenvector_isolated(m, ev[iso]);
    let (u, v) = orthonormal_complement(&w);
    let mu = mat_vec(m, &u);
    let mv = mat_vec(m, &v);
    let [hi, lo] = sym2_eigenvalues(dot(&u, &mu), dot(&u, &mv), dot(&v, &mv));
    let rq = dot(&w, &mat_vec(m, &w));
    if iso == 0 {
        let top = rq.max(hi);
        let v1 = eigenvector_in_complement(m, &w, hi);
        let v2 = cross(&w, &v1);
        ([top, hi, lo], [w, v1, v2])
    } else {
        let bottom = rq.min(lo);
        let v1 = eigenvector_in_complement(m, &w, lo);
        let v0 = cross(&v1, &w);
        ([hi, lo, bottom], [v0, v1, w])
    }
}

fn scaled_eigenvalues(m: &Mat3) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| b.total_cmp(a));
        return d;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let b00 = m[0][0] - q;
    let b11 = m[1][1] - q;
    let b22 = m[2][2] - q;
    let p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let det_b = b00 * (b11 * b22 - m[1][2] * m[1][2])
        - m[0][1] * (m[0][1] * b22 - m[1][2] * m[0][2])
        + m[0][2] * (m[0][1] * m[1][2] - b11 * m[0][2]);
    let r = (det_b / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut ev = [e1, e2, e3];

    // Characteristic polynomial f(x) = det(m - x I) = -x^3 + c2 x^2 - c1 x + c0.
    let c2 = m[0][0] + m[1][1] + m[2][2];
    let c1 = m[0][0] * m[1][1] + m[0][0] * m[2][2] + m[1][1] * m[2][2]
        - m[0][1] * m[0][1]
        - m[0][2] * m[0][2]
        - m[1][2] * m[1][2];
    let c0 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[1][2])
        - m[0][1] * (m[0][1] * m[2][2] - m[1][2] * m[0][2])
        + m[0][2] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]);
    let f = |x: f64| ((-x + c2) * x - c1) * x + c0;
    let df = |x: f64| (-3.0 * x + 2.0 * c2) * x - c1;
    for x in ev.iter_mut() {
        let fx = f(*x);
        let d = df(*x);
        if d.abs() > 1e-8 {
            let candidate = *x - fx / d;
            if f(candidate).abs() < fx.abs() {
                *x = candidate;
            }
        }
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn orthonormal_complement(w: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let u = if w[0].abs() > w[1].abs() {
        let inv = 1.0 / (w[0] * w[0] + w[2] * w[2]).sqrt();
        [-w[2] * inv, 0.0, w[0] * inv]
    } else {
        let inv = 1.0 / (w[1] * w[1] + w[2] * w[2]).sqrt();
        [0.0, w[2] * inv, -w[1] * inv]
    };
    let v = cross(w, &u);
    (u, v)
}

fn eigenvector_isolated(m: &Mat3, lambda: f64) -> [f64; 3] {
    let r0 = [m[0][0] - lambda, m[0][1], m[0][2]];
    let r1 = [m[0][1], m[1][1] - lambda, m[1][2]];
    let r2 = [m[0][2], m[1][2], m[2][2] - lambda];
    let c = [cross(&r0, &r1), cross(&r0, &r2), cross(&r1, &r2)];
    let norms = [dot(&c[0], &c[0]), dot(&c[1], &c[1]), dot(&c[2], &c[2])];
    let best = (0..3)
        .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
        .unwrap();
    if norms[best] > 0.0 {
        scale(&c[best], 1.0 / norms[best].sqrt())
    } else {
        [1.0, 0.0, 0.0]
    }
}

fn eigenvector_in_complement(m: &Mat3, first: &[f64; 3], lambda: f64) -> [f64; 3] {
    let (u, v) = orthonormal_complement(first);
    let mu = mat_vec(m, &u);
    let mv = mat_vec(m, &v);
    let mut m00 = dot(&u, &mu) - lambda;
    let mut m01 = dot(&u, &mv);
    let mut m11 = dot(&v, &mv) - lambda;
    let a00 = m00.abs();
    let a01 = m01.abs();
    let a11 = m11.abs();
    if a00 >= a11 {
        let max = a00.max(a01);
        if max > 0.0 {
            if a00 >= a01 {
                m01 /= m00;
                m00 = 1.0 / (1.0 + m01 * m01).sqrt();
                m01 *= m00;
            } else {
                m00 /= m01;
                m01 = 1.0 / (1.0 + m00 * m00).sqrt();
                m00 *= m01;
            }
            sub(&scale(&u, m01), &scale(&v, m00))
        } else {
            u
        }
    } else {
        let max = a11.max(a01);
        if max > 0.0 {
            if a11 >= a01 {
                m01 /= m11;
                m11 = 1.0 / (1.0 + m01 * m01).sqrt();
                m01 *= m11;
            } else {
                m11 /= m01;
                m01 = 1.0 / (1.0 + m11 * m11).sqrt();
                m11 *= m01;
            }
            sub(&scale(&u, m11), &scale(&v, m01))
        } else {
            u
        }
    }
}

#[inline]
fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Flips `v` so its z-component is positive; when z is zero the
/// largest-magnitude component is made positive instead.
pub fn canonicalize_sign(v: [f64; 3]) -> [f64; 3] {
    let pivot = if v[2] != 0.0 {
        v[2]
    } else {
        let i = (0..3)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap();
        v[i]
    };
    if pivot < 0.0 {
        scale(&v, -1.0)
    } else {
        v
    }
}

/// Full decomposition: eigenvalues descending with their unit eigenvectors
/// (`vectors[i]` belongs to `values[i]`), signs canonicalized.
pub fn sym3_eigen(a: &Mat3) -> ([f64; 3], [[f64; 3]; 3]) {
    let max_abs = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return (
            [0.0; 3],
            [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        );
    }
    let s = 1.0 / max_abs;
    let m = [
        [a[0][0] * s, a[0][1] * s, a[0][2] * s],
        [a[0][1] * s, a[1][1] * s, a[1][2] * s],
        [a[0][2] * s, a[1][2] * s, a[2][2] * s],
    ];
    let (ev, vectors) = if m[0][1] == 0.0 && m[0][2] == 0.0 && m[1][2] == 0.0 {
        // Diagonal: eigenvectors are the axes, ordered like the values.
        let mut axes: Vec<(f64, usize)> = (0..3).map(|i| (m[i][i], i)).collect();
        axes.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut out = [[0.0; 3]; 3];
        for (slot, (_, axis)) in out.iter_mut().zip(&axes) {
            slot[*axis] = 1.0;
        }
        ([axes[0].0, axes[1].0, axes[2].0], out)
    } else {
        scaled_decomposition(&m)
    };
    let values = [ev[0] * max_abs, ev[1] * max_abs, ev[2] * max_abs];
    (values, vectors.map(canonicalize_sign))
}

/// Eigenvalues of `[[a, b], [b, c]]`, descending.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let hi = mean + radius;
    // The small root via the determinant avoids cancellation.
    let det = a * c - b * b;
    let lo = if hi > 0.0 { det / hi } else { mean - radius };
    [hi, lo.min(hi)]
}
