//! Versioned JSON model files.
//!
//! Trees are flat node arrays; leaves carry `feature = -1`. Reals are written
//! in shortest round-trip form, so a load gives bit-identical predictions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{Tree, TreeNode};
use super::{EnsembleError, ForestModel, ModelConfig, ModelKind, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    feature: i64,
    threshold: f64,
    left: i64,
    right: i64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    kind: ModelKind,
    columns: Vec<String>,
    config: ModelConfig,
    base_score: f64,
    learning_rate: f64,
    best_iteration: usize,
    trees: Vec<Vec<NodeRecord>>,
}

fn to_records(tree: &Tree) -> Vec<NodeRecord> {
    tree.nodes()
        .iter()
        .map(|n| match *n {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => NodeRecord {
                feature: feature as i64,
                threshold,
                left: left as i64,
                right: right as i64,
                value: 0.0,
            },
            TreeNode::Leaf { value } => NodeRecord {
                feature: -1,
                threshold: 0.0,
                left: -1,
                right: -1,
                value,
            },
        })
        .collect()
}

fn from_records(t: usize, records: &[NodeRecord], n_features: usize) -> Result<Tree> {
    let nodes = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.feature < 0 {
                if r.left != -1 || r.right != -1 {
                    return Err(format!("tree {t} node {i}: leaf with children"));
                }
                Ok(TreeNode::Leaf { value: r.value })
            } else if r.left < 0 || r.right < 0 {
                Err(format!("tree {t} node {i}: internal node without children"))
            } else {
                Ok(TreeNode::Internal {
                    feature: r.feature as usize,
                    threshold: r.threshold,
                    left: r.left as usize,
                    right: r.right as usize,
                })
            }
        })
        .collect::<std::result::Result<Vec<_>, String>>()
        .map_err(EnsembleError::Schema)?;
    let tree = Tree::from_nodes(nodes);
    tree.validate(n_features)
        .map_err(|e| EnsembleError::Schema(format!("tree {t}: {e}")))?;
    Ok(tree)
}

pub fn model_to_json(model: &ForestModel) -> String {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        kind: model.kind,
        columns: model.columns.clone(),
        config: model.config.clone(),
        base_score: model.base_score,
        learning_rate: model.learning_rate,
        best_iteration: model.best_iteration,
        trees: model.trees.iter().map(to_records).collect(),
    };
    serde_json::to_string(&file).expect("model serialization cannot fail")
}

pub fn model_from_json(text: &str) -> Result<ForestModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| EnsembleError::Schema(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| EnsembleError::Schema("missing format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(EnsembleError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| EnsembleError::Schema(e.to_string()))?;
    let kind_matches = matches!(
        (&file.kind, &file.config),
        (ModelKind::Bagged, ModelConfig::Rf(_)) | (ModelKind::Boosted, ModelConfig::Gbdt(_))
    );
    if !kind_matches {
        return Err(EnsembleError::Schema("kind does not match config".into()));
    }
    if file.columns.is_empty() {
        return Err(EnsembleError::Schema("no columns".into()));
    }
    if file.kind == ModelKind::Bagged && file.trees.is_empty() {
        return Err(EnsembleError::Schema("bagged model without trees".into()));
    }
    if file.best_iteration > file.trees.len() && file.kind == ModelKind::Boosted {
        return Err(EnsembleError::Schema(format!(
            "best_iteration {} exceeds {} trees",
            file.best_iteration,
            file.trees.len()
        )));
    }
    if !file.base_score.is_finite() || !file.learning_rate.is_finite() {
        return Err(EnsembleError::Schema(
            "non-finite base_score or learning_rate".into(),
        ));
    }
    let trees = file
        .trees
        .iter()
        .enumerate()
        .map(|(t, r)| from_records(t, r, file.columns.len()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        kind: file.kind,
        trees,
        columns: file.columns,
        base_score: file.base_score,
        learning_rate: file.learning_rate,
        best_iteration: file.best_iteration,
        config: file.config,
    })
}

pub fn save_model(model: &ForestModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(model)).map_err(|source| EnsembleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForestModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EnsembleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text)
}
