//! Quantile binning for histogram split search.

use rayon::prelude::*;

use crate::matrix::DesignMatrix;

/// Per-column cut points. A value `v` falls in bin `#{c in cuts : c < v}`,
/// so bin `<= b` is equivalent to `v <= cuts[b]`.
pub struct BinMapper {
    cuts: Vec<Vec<f64>>,
}

impl BinMapper {
    /// At most `n_bins` bins per column; cut points are data values.
    pub fn fit(x: &DesignMatrix, n_bins: usize) -> Self {
        let cuts = (0..x.n_cols())
            .into_par_iter()
            .map(|f| {
                let mut col = x.column(f);
                col.sort_unstable_by(f64::total_cmp);
                let Some(&max) = col.last() else {
                    return Vec::new();
                };
                let mut distinct = col.clone();
                distinct.dedup();
                if distinct.len() <= n_bins {
                    distinct.pop();
                    return distinct;
                }
                // Quantiles of the data, duplicates included.
                let n = col.len();
                let mut cuts: Vec<f64> = (1..n_bins)
                    .map(|i| col[i * n / n_bins])
                    .filter(|&c| c < max)
                    .collect();
                cuts.dedup();
                cuts
            })
            .collect();
        Self { cuts }
    }

    pub fn cuts(&self, f: usize) -> &[f64] {
        &self.cuts[f]
    }

    pub fn n_bins(&self, f: usize) -> usize {
        self.cuts[f].len() + 1
    }

    #[inline]
    pub fn bin(&self, f: usize, v: f64) -> u8 {
        self.cuts[f].partition_point(|&c| c < v) as u8
    }

    /// Column-major bin codes: `out[f * n_rows + r]`.
    pub fn transform(&self, x: &DesignMatrix) -> Vec<u8> {
        let n = x.n_rows();
        let mut out = vec![0u8; n * x.n_cols()];
        out.par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(f, chunk)| {
                if f < x.n_cols() {
                    for (r, slot) in chunk.iter_mut().enumerate() {
                        *slot = self.bin(f, x.get(r, f));
                    }
                }
            });
        out
    }
}
