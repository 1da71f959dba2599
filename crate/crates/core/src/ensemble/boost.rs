//! Histogram gradient boosting with squared-error loss.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinMapper;
use super::tree::{stable_mean, Tree, TreeNode};
use super::{check_training_data, EnsembleError, ForestModel, ModelConfig, ModelKind, Result};
use crate::matrix::DesignMatrix;
use crate::rng::{substream, tags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbdtConfig {
    pub max_depth: usize,
    pub eta: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub num_boost_round: usize,
    pub early_stopping_rounds: usize,
    pub n_bins: usize,
    pub l2_lambda: f64,
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            max_depth: 8,
            eta: 0.05,
            subsample: 0.8,
            colsample_bytree: 0.8,
            num_boost_round: 1000,
            early_stopping_rounds: 50,
            n_bins: 256,
            l2_lambda: 1.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EnsembleError::InvalidConfig(m.to_string()));
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must be in (0, 1]");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad("colsample_bytree must be in (0, 1]");
        }
        if self.num_boost_round == 0 {
            return bad("num_boost_round must be at least 1");
        }
        if self.early_stopping_rounds == 0 {
            return bad("early_stopping_rounds must be at least 1");
        }
        if !(2..=256).contains(&self.n_bins) {
            return bad("n_bins must be in [2, 256]");
        }
        if !(self.l2_lambda >= 0.0) || !self.l2_lambda.is_finite() {
            return bad("l2_lambda must be a finite value >= 0");
        }
        if !(self.min_child_weight >= 0.0) || !self.min_child_weight.is_finite() {
            return bad("min_child_weight must be a finite value >= 0");
        }
        Ok(())
    }

    pub fn columns_per_tree(&self, n_cols: usize) -> usize {
        ((self.colsample_bytree * n_cols as f64).round() as usize).clamp(1, n_cols)
    }
}

/// RMSE after each round; index 0 is the base score alone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoostTrace {
    pub train_rmse: Vec<f64>,
    pub val_rmse: Vec<f64>,
    pub best_iteration: usize,
}

impl BoostTrace {
    pub fn rounds(&self) -> usize {
        self.val_rmse.len().saturating_sub(1)
    }
}

pub fn train_gbdt(
    x_train: &DesignMatrix,
    y_train: &[f64],
    x_val: &DesignMatrix,
    y_val: &[f64],
    config: &GbdtConfig,
) -> Result<ForestModel> {
    train_gbdt_traced(x_train, y_train, x_val, y_val, config).map(|(m, _)| m)
}

pub fn train_gbdt_traced(
    x_train: &DesignMatrix,
    y_train: &[f64],
    x_val: &DesignMatrix,
    y_val: &[f64],
    config: &GbdtConfig,
) -> Result<(ForestModel, BoostTrace)> {
    config.validate()?;
    if x_train.n_rows() == 0 || x_train.n_cols() == 0 {
        return Err(EnsembleError::EmptyData);
    }
    if x_val.n_rows() == 0 {
        return Err(EnsembleError::EmptyValidation);
    }
    check_training_data("training data", x_train, y_train)?;
    check_training_data("validation data", x_val, y_val)?;
    if let Some(position) = (0..x_train.n_cols().max(x_val.n_cols()))
        .find(|&i| x_train.columns().get(i) != x_val.columns().get(i))
    {
        let name = |c: &[String]| c.get(position).cloned().unwrap_or_else(|| "<none>".into());
        return Err(EnsembleError::ColumnMismatch {
            position,
            expected: name(x_train.columns()),
            found: name(x_val.columns()),
        });
    }

    let n = x_train.n_rows();
    let n_cols = x_train.n_cols();
    let mapper = BinMapper::fit(x_train, config.n_bins);
    let train_bins = mapper.transform(x_train);
    let val_bins = mapper.transform(x_val);
    let base = stable_mean(y_train.iter().copied());

    let mut acc_train = vec![0.0; n];
    let mut acc_val = vec![0.0; x_val.n_rows()];
    let rmse = |acc: &[f64], y: &[f64]| {
        let sse: f64 = acc
            .iter()
            .zip(y)
            .map(|(a, t)| {
                let e = base + config.eta * a - t;
                e * e
            })
            .sum();
        (sse / y.len() as f64).sqrt()
    };
    let mut trace = BoostTrace {
        train_rmse: vec![rmse(&acc_train, y_train)],
        val_rmse: vec![rmse(&acc_val, y_val)],
        best_iteration: 0,
    };
    let mut best = trace.val_rmse[0];
    let mut trees = Vec::new();
    let n_rows_sampled = ((config.subsample * n as f64).round() as usize).clamp(1, n);
    let n_cols_sampled = config.columns_per_tree(n_cols);
    let mut grad = vec![0.0; n];
    let mut all_rows: Vec<u32> = (0..n as u32).collect();
    let mut all_cols: Vec<usize> = (0..n_cols).collect();

    for round in 0..config.num_boost_round {
        let mut rng = substream(config.seed, &[tags::GBDT, round as u64]);
        for ((g, a), t) in grad.iter_mut().zip(&acc_train).zip(y_train) {
            *g = base + config.eta * a - t;
        }
        let mut rows = if n_rows_sampled == n {
            all_rows.clone()
        } else {
            all_rows
                .partial_shuffle(&mut rng, n_rows_sampled)
                .0
                .to_vec()
        };
        rows.sort_unstable();
        let mut cols = if n_cols_sampled == n_cols {
            all_cols.clone()
        } else {
            all_cols
                .partial_shuffle(&mut rng, n_cols_sampled)
                .0
                .to_vec()
        };
        cols.sort_unstable();

        let mut grower = Grower {
            bins: &train_bins,
            n_rows: n,
            grad: &grad,
            mapper: &mapper,
            cols: &cols,
            stride: 2 * config.n_bins,
            config,
            nodes: Vec::new(),
            bin_splits: Vec::new(),
        };
        let hist = grower.histogram(&rows);
        let (g_sum, h_sum) = hist_totals(&hist[..grower.stride]);
        grower.grow(rows, hist, g_sum, h_sum, 0);
        let tree = Tree::from_nodes(grower.nodes);
        let bin_splits = grower.bin_splits;

        let leaf = |bins: &[u8], n_rows: usize, r: usize| -> f64 {
            let mut i = 0;
            loop {
                match tree.nodes()[i] {
                    TreeNode::Leaf { value } => return value,
                    TreeNode::Internal {
                        feature,
                        left,
                        right,
                        ..
                    } => {
                        let b = bin_splits[i];
                        i = if bins[feature * n_rows + r] <= b {
                            left
                        } else {
                            right
                        };
                    }
                }
            }
        };
        acc_train
            .par_iter_mut()
            .enumerate()
            .for_each(|(r, a)| *a += leaf(&train_bins, n, r));
        let n_val = x_val.n_rows();
        acc_val
            .par_iter_mut()
            .enumerate()
            .for_each(|(r, a)| *a += leaf(&val_bins, n_val, r));
        trees.push(tree);

        trace.train_rmse.push(rmse(&acc_train, y_train));
        let v = rmse(&acc_val, y_val);
        trace.val_rmse.push(v);
        if v < best {
            best = v;
            trace.best_iteration = round + 1;
        } else if round + 1 - trace.best_iteration >= config.early_stopping_rounds {
            break;
        }
    }

    trees.truncate(trace.best_iteration);
    let model = ForestModel {
        kind: ModelKind::Boosted,
        trees,
        columns: x_train.columns().to_vec(),
        base_score: base,
        learning_rate: config.eta,
        best_iteration: trace.best_iteration,
        config: ModelConfig::Gbdt(config.clone()),
    };
    Ok((model, trace))
}

fn hist_totals(h: &[f64]) -> (f64, f64) {
    h.chunks_exact(2)
        .fold((0.0, 0.0), |(g, c), b| (g + b[0], c + b[1]))
}

struct Grower<'a> {
    bins: &'a [u8],
    n_rows: usize,
    grad: &'a [f64],
    mapper: &'a BinMapper,
    cols: &'a [usize],
    /// Histogram slots per sampled column: (gradient, hessian) per bin.
    stride: usize,
    config: &'a GbdtConfig,
    nodes: Vec<TreeNode>,
    /// Bin threshold of each internal node (unused for leaves).
    bin_splits: Vec<u8>,
}

struct BinSplit {
    col: usize,
    bin: usize,
    gain: f64,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[u32]) -> Vec<f64> {
        let mut hist = vec![0.0; self.cols.len() * self.stride];
        hist.par_chunks_mut(self.stride)
            .zip(self.cols.par_iter())
            .for_each(|(h, &f)| {
                let bins = &self.bins[f * self.n_rows..(f + 1) * self.n_rows];
                for &r in rows {
                    let b = bins[r as usize] as usize;
                    h[2 * b] += self.grad[r as usize];
                    h[2 * b + 1] += 1.0;
                }
            });
        hist
    }

    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.config.l2_lambda)
    }

    fn best_split(&self, hist: &[f64], g: f64, h: f64) -> Option<BinSplit> {
        let lambda = self.config.l2_lambda;
        let mcw = self.config.min_child_weight.max(f64::MIN_POSITIVE);
        let parent = g * g / (h + lambda);
        let mut best: Option<BinSplit> = None;
        for (k, &f) in self.cols.iter().enumerate() {
            let hf = &hist[k * self.stride..(k + 1) * self.stride];
            let nb = self.mapper.n_bins(f);
            let (mut gl, mut hl) = (0.0, 0.0);
            for b in 0..nb - 1 {
                gl += hf[2 * b];
                hl += hf[2 * b + 1];
                let (gr, hr) = (g - gl, h - hl);
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 0.0 && best.as_ref().map_or(true, |s| gain > s.gain) {
                    best = Some(BinSplit {
                        col: k,
                        bin: b,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<u32>, mut hist: Vec<f64>, g: f64, h: f64, depth: usize) -> usize {
        let id = self.nodes.len();
        let split = if depth < self.config.max_depth && rows.len() >= 2 {
            self.best_split(&hist, g, h)
        } else {
            None
        };
        let Some(split) = split else {
            self.nodes.push(TreeNode::Leaf {
                value: self.leaf_weight(g, h),
            });
            self.bin_splits.push(0);
            return id;
        };
        let f = self.cols[split.col];
        let fbins = &self.bins[f * self.n_rows..(f + 1) * self.n_rows];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&r| fbins[r as usize] as usize <= split.bin);
        drop(rows);

        let left_is_small = left_rows.len() <= right_rows.len();
        let small = self.histogram(if left_is_small {
            &left_rows
        } else {
            &right_rows
        });
        for (p, s) in hist.iter_mut().zip(&small) {
            *p -= s;
        }
        let (left_hist, right_hist) = if left_is_small {
            (small, hist)
        } else {
            (hist, small)
        };
        let (gl, hl) =
            hist_totals(&left_hist[split.col * self.stride..(split.col + 1) * self.stride]);
        let (gr, hr) =
            hist_totals(&right_hist[split.col * self.stride..(split.col + 1) * self.stride]);

        self.nodes.push(TreeNode::Internal {
            feature: f,
            threshold: self.mapper.cuts(f)[split.bin],
            left: 0,
            right: 0,
        });
        self.bin_splits.push(split.bin as u8);
        let left = self.grow(left_rows, left_hist, gl, hl, depth + 1);
        let right = self.grow(right_rows, right_hist, gr, hr, depth + 1);
        if let TreeNode::Internal {
            left: a, right: b, ..
        } = &mut self.nodes[id]
        {
            *a = left;
            *b = right;
        }
        id
    }
}
