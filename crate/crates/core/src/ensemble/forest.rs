//! Random Forest regression: bootstrap-aggregated CART trees split on
//! variance reduction over random feature subsets.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{stable_mean, Tree, TreeNode};
use super::{check_training_data, EnsembleError, ForestModel, ModelConfig, ModelKind, Result};
use crate::matrix::DesignMatrix;
use crate::rng::{substream, tags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfConfig {
    pub n_estimators: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    /// Sample size per tree as a fraction of the training rows.
    pub max_samples: f64,
    /// Draw with replacement; when false each tree sees a plain subsample.
    pub bootstrap: bool,
    /// Fraction of columns tried at every node.
    pub max_features: f64,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: Some(20),
            max_samples: 0.5,
            bootstrap: true,
            max_features: 1.0 / 3.0,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EnsembleError::InvalidConfig(m.to_string()));
        if self.n_estimators == 0 {
            return bad("n_estimators must be at least 1");
        }
        if !(self.max_samples > 0.0 && self.max_samples <= 1.0) {
            return bad("max_samples must be in (0, 1]");
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return bad("max_features must be in (0, 1]");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be at least 1");
        }
        Ok(())
    }

    pub fn features_per_node(&self, n_cols: usize) -> usize {
        ((self.max_features * n_cols as f64).ceil() as usize).clamp(1, n_cols)
    }
}

/// Per-column ranks of the training data, shared by all trees.
struct Ranked {
    /// `ranks[f][row]`: position of the row's value among the distinct values.
    ranks: Vec<Vec<u32>>,
    distinct: Vec<Vec<f64>>,
}

impl Ranked {
    fn new(x: &DesignMatrix) -> Self {
        let (ranks, distinct) = (0..x.n_cols())
            .into_par_iter()
            .map(|f| {
                let col = x.column(f);
                let mut order: Vec<u32> = (0..col.len() as u32).collect();
                order.sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                let mut ranks = vec![0u32; col.len()];
                let mut distinct: Vec<f64> = Vec::new();
                for &r in &order {
                    let v = col[r as usize];
                    if distinct.last() != Some(&v) {
                        distinct.push(v);
                    }
                    ranks[r as usize] = (distinct.len() - 1) as u32;
                }
                (ranks, distinct)
            })
            .unzip();
        Self { ranks, distinct }
    }
}

struct Builder<'a, R: Rng> {
    ranked: &'a Ranked,
    y: &'a [f64],
    config: &'a RfConfig,
    mtry: usize,
    rng: R,
    nodes: Vec<TreeNode>,
    features: Vec<usize>,
    keys: Vec<u64>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, rows: &mut [u32], depth: usize) -> usize {
        let id = self.nodes.len();
        let y = self.y;
        let first = y[rows[0] as usize];
        let pure = rows.iter().all(|&r| y[r as usize] == first);
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        let too_small = rows.len() < 2 * self.config.min_samples_leaf;
        let split = if pure || depth_capped || too_small {
            None
        } else {
            self.best_split(rows)
        };
        let Some(split) = split else {
            let value = if pure {
                first
            } else {
                stable_mean(rows.iter().map(|&r| y[r as usize]))
            };
            self.nodes.push(TreeNode::Leaf { value });
            return id;
        };

        // Partition in place: left block keeps rows with value <= threshold.
        let f = split.feature;
        let distinct = &self.ranked.distinct[f];
        let ranks = &self.ranked.ranks[f];
        let mut mid = 0;
        for i in 0..rows.len() {
            if distinct[ranks[rows[i] as usize] as usize] <= split.threshold {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        self.nodes.push(TreeNode::Internal {
            feature: f,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        if let TreeNode::Internal {
            left: a, right: b, ..
        } = &mut self.nodes[id]
        {
            *a = left;
            *b = right;
        }
        id
    }

    /// Best variance-reduction split over up to `mtry` non-constant columns.
    fn best_split(&mut self, rows: &[u32]) -> Option<Split> {
        let n = rows.len();
        let y = self.y;
        let total: f64 = rows.iter().map(|&r| y[r as usize]).sum();
        let parent = total * total / n as f64;
        let min_leaf = self.config.min_samples_leaf;
        self.features.shuffle(&mut self.rng);
        let mut best: Option<Split> = None;
        let mut tried = 0;
        let features = std::mem::take(&mut self.features);
        for &f in &features {
            if tried == self.mtry {
                break;
            }
            let ranks = &self.ranked.ranks[f];
            self.keys.clear();
            self.keys.extend(
                rows.iter()
                    .enumerate()
                    .map(|(j, &r)| ((ranks[r as usize] as u64) << 32) | j as u64),
            );
            self.keys.sort_unstable();
            let lo_rank = self.keys[0] >> 32;
            let hi_rank = self.keys[n - 1] >> 32;
            if lo_rank == hi_rank {
                continue;
            }
            tried += 1;
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                let j = (self.keys[i] & 0xffff_ffff) as usize;
                left_sum += y[rows[j] as usize];
                let rank = self.keys[i] >> 32;
                let next_rank = self.keys[i + 1] >> 32;
                if rank == next_rank {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64;
                if score > parent && best.as_ref().map_or(true, |b| score > b.score) {
                    let distinct = &self.ranked.distinct[f];
                    let lo = distinct[rank as usize];
                    let hi = distinct[next_rank as usize];
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if !(threshold >= lo && threshold < hi) {
                        threshold = lo;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        self.features = features;
        best
    }
}

fn sample_rows(rng: &mut impl Rng, n: usize, config: &RfConfig) -> Vec<u32> {
    let size = ((config.max_samples * n as f64).round() as usize).clamp(1, n);
    if config.bootstrap {
        (0..size).map(|_| rng.gen_range(0..n as u32)).collect()
    } else if size == n {
        (0..n as u32).collect()
    } else {
        let mut all: Vec<u32> = (0..n as u32).collect();
        let (chosen, _) = all.partial_shuffle(rng, size);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        chosen
    }
}

pub fn train_rf(x: &DesignMatrix, y: &[f64], config: &RfConfig) -> Result<ForestModel> {
    config.validate()?;
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(EnsembleError::EmptyData);
    }
    check_training_data("training data", x, y)?;
    if x.n_rows() > u32::MAX as usize {
        return Err(EnsembleError::InvalidConfig("too many rows".into()));
    }
    let ranked = Ranked::new(x);
    let mtry = config.features_per_node(x.n_cols());
    let trees = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(config.seed, &[tags::RF, t as u64]);
            let mut rows = sample_rows(&mut rng, x.n_rows(), config);
            let mut b = Builder {
                ranked: &ranked,
                y,
                config,
                mtry,
                rng,
                nodes: Vec::new(),
                features: (0..x.n_cols()).collect(),
                keys: Vec::with_capacity(rows.len()),
            };
            b.grow(&mut rows, 0);
            Tree::from_nodes(b.nodes)
        })
        .collect();
    Ok(ForestModel {
        kind: ModelKind::Bagged,
        trees,
        columns: x.columns().to_vec(),
        base_score: 0.0,
        learning_rate: 1.0,
        best_iteration: config.n_estimators,
        config: ModelConfig::Rf(config.clone()),
    })
}
