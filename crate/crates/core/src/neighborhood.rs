//! Local covariance analysis of k-NN neighbourhoods and per-point selection
//! of the neighbourhood size by eigenentropy minimisation.
//!
//! A neighbourhood of size `k` always contains the query point itself, so it
//! holds `n = k + 1` points. Covariances are unbiased (divisor `n - 1`).

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::eigen::{sym2_eigenvalues, sym3_eigen, sym3_eigenvalues};
use crate::io::{Point3, PointCloud};
use crate::spatial::KdTree;

pub const LN_3: f64 = 1.098_612_288_668_109_8;

/// Entropy differences at or below this are treated as ties (smallest k wins).
pub const ENTROPY_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum NeighborhoodError {
    #[error("k = {k} out of range 1..{n} (cloud has {n} points)")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid candidate range k_min={k_min}, k_max={k_max}, k_step={k_step}: {reason}")]
    InvalidRange {
        k_min: usize,
        k_max: usize,
        k_step: usize,
        reason: String,
    },
    #[error("degenerate neighbourhood: zero covariance trace")]
    Degenerate,
}

pub type Result<T> = std::result::Result<T, NeighborhoodError>;

/// Candidate neighbourhood sizes `k_min, k_min + k_step, ... <= k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct KRange {
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
}

impl Default for KRange {
    fn default() -> Self {
        Self {
            k_min: 10,
            k_max: 100,
            k_step: 1,
        }
    }
}

impl KRange {
    pub fn new(k_min: usize, k_max: usize, k_step: usize) -> Self {
        Self {
            k_min,
            k_max,
            k_step,
        }
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        let err = |reason: String| {
            Err(NeighborhoodError::InvalidRange {
                k_min: self.k_min,
                k_max: self.k_max,
                k_step: self.k_step,
                reason,
            })
        };
        if self.k_min == 0 {
            return err("k_min must be at least 1".into());
        }
        if self.k_step == 0 {
            return err("k_step must be at least 1".into());
        }
        if self.k_min > self.k_max {
            return err("k_min exceeds k_max".into());
        }
        if self.k_max + 1 > n_points {
            return err(format!(
                "k_max + 1 = {} exceeds the {n_points} available points",
                self.k_max + 1
            ));
        }
        Ok(())
    }

    pub fn candidates(&self) -> impl Iterator<Item = usize> {
        (self.k_min..=self.k_max).step_by(self.k_step.max(1))
    }
}

/// Eigen-analysis of one neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodStats {
    /// 3D covariance eigenvalues, descending, clamped at 0 (m^2).
    pub eigenvalues: [f64; 3],
    /// Unit eigenvectors, `eigenvectors[i]` for `eigenvalues[i]`, z >= 0.
    pub eigenvectors: [[f64; 3]; 3],
    /// XY covariance eigenvalues, descending (m^2).
    pub eigenvalues_2d: [f64; 2],
    /// Number of points in the neighbourhood (k + 1).
    pub n: usize,
    /// Distance to the k-th neighbour.
    pub radius_3d: f64,
    /// Largest XY distance from the query among the neighbourhood.
    pub radius_2d: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Unbiased standard deviation of z.
    pub z_std: f64,
}

impl NeighborhoodStats {
    pub fn k(&self) -> usize {
        self.n - 1
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn trace_2d(&self) -> f64 {
        self.eigenvalues_2d.iter().sum()
    }
}

/// Normalised eigenvalues `l_i = λ_i / Σλ` and `m_i = μ_i / Σμ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedEigenvalues {
    pub l: [f64; 3],
    pub m: [f64; 2],
}

impl NormalizedEigenvalues {
    /// Convention for neighbourhoods whose points coincide.
    pub const DEGENERATE: Self = Self {
        l: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        m: [0.5, 0.5],
    };
}

fn normalize3(ev: &[f64; 3]) -> Option<[f64; 3]> {
    let s = ev[0] + ev[1] + ev[2];
    (s > 0.0).then(|| [ev[0] / s, ev[1] / s, ev[2] / s])
}

fn normalize2(ev: &[f64; 2]) -> Option<[f64; 2]> {
    let s = ev[0] + ev[1];
    (s > 0.0).then(|| [ev[0] / s, ev[1] / s])
}

/// Fails with [`NeighborhoodError::Degenerate`] when either trace is zero.
pub fn normalized_evs(stats: &NeighborhoodStats) -> Result<NormalizedEigenvalues> {
    match (
        normalize3(&stats.eigenvalues),
        normalize2(&stats.eigenvalues_2d),
    ) {
        (Some(l), Some(m)) => Ok(NormalizedEigenvalues { l, m }),
        _ => Err(NeighborhoodError::Degenerate),
    }
}

/// Normalises, substituting the degenerate convention separately for the 3D
/// and XY parts. The flag reports whether any substitution happened.
pub fn normalized_evs_or_degenerate(stats: &NeighborhoodStats) -> (NormalizedEigenvalues, bool) {
    let l = normalize3(&stats.eigenvalues);
    let m = normalize2(&stats.eigenvalues_2d);
    let degenerate = l.is_none() || m.is_none();
    (
        NormalizedEigenvalues {
            l: l.unwrap_or(NormalizedEigenvalues::DEGENERATE.l),
            m: m.unwrap_or(NormalizedEigenvalues::DEGENERATE.m),
        },
        degenerate,
    )
}

/// Shannon entropy `-Σ l ln l` with `0 ln 0 = 0`, clamped to `[0, ln 3]`.
pub fn eigenentropy(l: &[f64; 3]) -> f64 {
    let h: f64 = l.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    h.clamp(0.0, LN_3)
}

/// Selected neighbourhood size and the entropy at that size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalK {
    pub k: usize,
    pub entropy: f64,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        Err(NeighborhoodError::KOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// Statistics of the neighbourhood of size `k` around point `index`.
pub fn eigen_stats(
    cloud: &PointCloud,
    tree: &KdTree,
    index: usize,
    k: usize,
) -> Result<NeighborhoodStats> {
    check_k(k, cloud.len())?;
    let query = cloud.point(index);
    let mut neighbors = Vec::with_capacity(k + 1);
    tree.knn_sq_into(query, k + 1, &mut neighbors)
        .map_err(|_| NeighborhoodError::KOutOfRange { k, n: cloud.len() })?;
    Ok(stats_from_neighbors(cloud.points(), query, &neighbors))
}

/// Statistics from a neighbour list sorted by distance (query included).
pub fn stats_from_neighbors(
    points: &[Point3],
    query: Point3,
    neighbors: &[(usize, f64)],
) -> NeighborhoodStats {
    let n = neighbors.len();
    debug_assert!(n >= 1);
    // Work relative to the query to limit cancellation far from the origin.
    let rel = |i: usize| {
        let p = points[i];
        [p.x - query.x, p.y - query.y, p.z - query.z]
    };
    let mut mean = [0.0; 3];
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    let mut r2d_sq = 0.0f64;
    for &(i, _) in neighbors {
        let d = rel(i);
        for a in 0..3 {
            mean[a] += d[a];
        }
        let z = points[i].z;
        z_min = z_min.min(z);
        z_max = z_max.max(z);
        r2d_sq = r2d_sq.max(d[0] * d[0] + d[1] * d[1]);
    }
    let inv_n = 1.0 / n as f64;
    for m in mean.iter_mut() {
        *m *= inv_n;
    }
    let mut c = [[0.0f64; 3]; 3];
    for &(i, _) in neighbors {
        let d = rel(i);
        let e = [d[0] - mean[0], d[1] - mean[1], d[2] - mean[2]];
        for a in 0..3 {
            for b in a..3 {
                c[a][b] += e[a] * e[b];
            }
        }
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    for a in 0..3 {
        for b in a..3 {
            c[a][b] /= denom;
            c[b][a] = c[a][b];
        }
    }
    let (mut values, vectors) = sym3_eigen(&c);
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let ev2 = sym2_eigenvalues(c[0][0], c[0][1], c[1][1]).map(|v| v.max(0.0));
    NeighborhoodStats {
        eigenvalues: values,
        eigenvectors: vectors,
        eigenvalues_2d: ev2,
        n,
        radius_3d: neighbors[n - 1].1.sqrt(),
        radius_2d: r2d_sq.sqrt(),
        z_min,
        z_max,
        z_std: c[2][2].max(0.0).sqrt(),
    }
}

/// Eigenentropy of a neighbourhood given its covariance; coincident points
/// take the degenerate value `ln 3`.
fn covariance_entropy(c: &[[f64; 3]; 3]) -> f64 {
    let ev = sym3_eigenvalues(c).map(|v| v.max(0.0));
    match normalize3(&ev) {
        Some(l) => eigenentropy(&l),
        None => LN_3,
    }
}

/// Picks the candidate size minimising eigenentropy from a neighbour list of
/// at least `range.k_max + 1` entries sorted by distance. Covariances are
/// accumulated incrementally as neighbours are added.
pub fn select_k(
    points: &[Point3],
    query: Point3,
    neighbors: &[(usize, f64)],
    range: &KRange,
) -> OptimalK {
    debug_assert!(neighbors.len() > range.k_max);
    let mut s1 = [0.0f64; 3];
    let mut s2 = [0.0f64; 6];
    let mut best = OptimalK {
        k: range.k_min,
        entropy: f64::INFINITY,
    };
    let mut next = range.k_min;
    for (count, &(i, _)) in neighbors.iter().take(range.k_max + 1).enumerate() {
        let p = points[i];
        let d = [p.x - query.x, p.y - query.y, p.z - query.z];
        s1[0] += d[0];
        s1[1] += d[1];
        s1[2] += d[2];
        s2[0] += d[0] * d[0];
        s2[1] += d[0] * d[1];
        s2[2] += d[0] * d[2];
        s2[3] += d[1] * d[1];
        s2[4] += d[1] * d[2];
        s2[5] += d[2] * d[2];
        let n = count + 1;
        let k = count;
        if k != next {
            continue;
        }
        next += range.k_step;
        let nf = n as f64;
        let inv = 1.0 / (nf - 1.0);
        let cov = |s: f64, a: usize, b: usize| (s - s1[a] * s1[b] / nf) * inv;
        let c = [
            [cov(s2[0], 0, 0), cov(s2[1], 0, 1), cov(s2[2], 0, 2)],
            [cov(s2[1], 0, 1), cov(s2[3], 1, 1), cov(s2[4], 1, 2)],
            [cov(s2[2], 0, 2), cov(s2[4], 1, 2), cov(s2[5], 2, 2)],
        ];
        let h = covariance_entropy(&c);
        if h < best.entropy - ENTROPY_TIE_TOLERANCE {
            best = OptimalK { k, entropy: h };
        }
    }
    best
}

/// Entropy-minimising neighbourhood size for point `index`.
pub fn optimal_k(
    cloud: &PointCloud,
    tree: &KdTree,
    index: usize,
    range: &KRange,
) -> Result<OptimalK> {
    optimal_neighborhood(cloud, tree, index, range).map(|(k, _)| k)
}

/// [`optimal_k`] together with the statistics at the selected size, reusing
/// one k-NN query of `k_max + 1` points.
pub fn optimal_neighborhood(
    cloud: &PointCloud,
    tree: &KdTree,
    index: usize,
    range: &KRange,
) -> Result<(OptimalK, NeighborhoodStats)> {
    let mut scratch = Vec::with_capacity(range.k_max + 1);
    optimal_neighborhood_with(cloud, tree, index, range, &mut scratch)
}

pub(crate) fn optimal_neighborhood_with(
    cloud: &PointCloud,
    tree: &KdTree,
    index: usize,
    range: &KRange,
    scratch: &mut Vec<(usize, f64)>,
) -> Result<(OptimalK, NeighborhoodStats)> {
    range.validate(cloud.len())?;
    let query = cloud.point(index);
    tree.knn_sq_into(query, range.k_max + 1, scratch)
        .map_err(|_| NeighborhoodError::KOutOfRange {
            k: range.k_max,
            n: cloud.len(),
        })?;
    let best = select_k(cloud.points(), query, scratch, range);
    let stats = stats_from_neighbors(cloud.points(), query, &scratch[..best.k + 1]);
    Ok((best, stats))
}

/// Entropy of an exactly planar, in-plane isotropic neighbourhood.
pub const PLANAR_ISOTROPIC_ENTROPY: f64 = LN_2;
