//! Permutation importance: a hand-built one-split model ignores every other
//! column exactly, and a trained booster ranks a planted driver above noise.

use mls_uncertainty::ensemble::{
    train_gbdt, ForestModel, GbdtConfig, ModelConfig, ModelKind, RfConfig, Tree, TreeNode,
};
use mls_uncertainty::evaluation::permutation_importance;
use mls_uncertainty::matrix::DesignMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 3000;
    let columns: Vec<String> = ["height", "density", "noise"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut values = Vec::with_capacity(n * 3);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (h, d, e): (f64, f64, f64) = (
            rng.gen_range(0.0..4.0),
            rng.gen_range(50.0..500.0),
            rng.gen(),
        );
        values.extend([h, d, e]);
        y.push(2.0 + 6.0 * h + 800.0 / d + rng.gen_range(-1.0..1.0));
    }
    let x = DesignMatrix::new(columns.clone(), n, values)?;

    let stump = Tree::from_nodes(vec![
        TreeNode::Internal {
            feature: 0,
            threshold: 2.0,
            left: 1,
            right: 2,
        },
        TreeNode::Leaf { value: 8.0 },
        TreeNode::Leaf { value: 20.0 },
    ]);
    let hand_built = ForestModel {
        kind: ModelKind::Bagged,
        trees: vec![stump],
        columns: columns.clone(),
        base_score: 0.0,
        learning_rate: 1.0,
        best_iteration: 0,
        config: ModelConfig::Rf(RfConfig::default()),
    };
    let delta = permutation_importance(&hand_built, &x, &y, 3, 1)?;
    println!("one-split model on `height`:");
    for (c, d) in columns.iter().zip(&delta) {
        println!("  {c:<8} ΔRMSE {d:.4} mm");
    }
    assert_eq!(delta[1], 0.0);
    assert_eq!(delta[2], 0.0);

    let (fit, val) = (
        x.select_rows(&(0..2500).collect::<Vec<_>>()),
        x.select_rows(&(2500..n).collect::<Vec<_>>()),
    );
    let model = train_gbdt(&fit, &y[..2500], &val, &y[2500..], &GbdtConfig::default())?;
    let delta = permutation_importance(&model, &val, &y[2500..], 5, 2)?;
    println!("\ntrained booster, held-out rows:");
    for (c, d) in columns.iter().zip(&delta) {
        println!("  {c:<8} ΔRMSE {d:.4} mm");
    }
    Ok(())
}
