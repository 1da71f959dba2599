//! Trains the bagged forest and the histogram booster on a noisy smooth
//! function of one column, traces boosting rounds and round-trips both
//! models through JSON.

use mls_uncertainty::ensemble::{
    load_model, save_model, train_gbdt_traced, train_rf, GbdtConfig, RfConfig,
};
use mls_uncertainty::evaluation::rmse;
use mls_uncertainty::matrix::DesignMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(n: usize, rng: &mut ChaCha8Rng) -> (DesignMatrix, Vec<f64>) {
    let mut values = Vec::with_capacity(n * 2);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        values.extend([a, b]);
        y.push(20.0 + 10.0 * (std::f64::consts::TAU * a).sin() + rng.gen_range(-1.0..1.0));
    }
    (
        DesignMatrix::new(vec!["signal".into(), "noise".into()], n, values).unwrap(),
        y,
    )
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (x, y) = dataset(4000, &mut rng);
    let (xv, yv) = dataset(1000, &mut rng);
    let (xt, yt) = dataset(1000, &mut rng);

    let rf = train_rf(
        &x,
        &y,
        &RfConfig {
            n_estimators: 50,
            ..RfConfig::default()
        },
    )?;
    println!(
        "RF   {} trees, test RMSE {:.3}",
        rf.trees.len(),
        rmse(&yt, &rf.predict(&xt)?)
    );

    let config = GbdtConfig {
        eta: 0.1,
        ..GbdtConfig::default()
    };
    let (gb, trace) = train_gbdt_traced(&x, &y, &xv, &yv, &config)?;
    println!(
        "GBDT best iteration {} of {} rounds run, test RMSE {:.3}",
        trace.best_iteration,
        trace.rounds(),
        rmse(&yt, &gb.predict(&xt)?)
    );
    for round in [0, 1, 5, 10, 20, 40, trace.best_iteration] {
        if round < trace.val_rmse.len() {
            println!(
                "  round {round:>3}: train {:.3}  validation {:.3}",
                trace.train_rmse[round], trace.val_rmse[round]
            );
        }
    }

    let dir = tempfile::tempdir()?;
    for (name, model) in [("rf", &rf), ("gbdt", &gb)] {
        let path = dir.path().join(format!("{name}.json"));
        save_model(model, &path)?;
        let back = load_model(&path)?;
        assert_eq!(back.predict(&xt)?, model.predict(&xt)?);
        println!(
            "{name}: {} bytes, predictions identical after reload",
            std::fs::metadata(&path)?.len()
        );
    }
    Ok(())
}
