use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use mls_uncertainty::ensemble::{save_model, train_rf, RfConfig};
use mls_uncertainty::io::{read_ply, write_cloud, Point3, PointCloud};
use mls_uncertainty::matrix::DesignMatrix;
use mls_uncertainty::synthetic::SceneSpec;

const BIN: &str = env!("CARGO_BIN_EXE_mls-uncertainty");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fails(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(1), "{args:?} should exit 1");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// A small synthetic pair with features and labels, built once.
struct Fixture {
    dir: PathBuf,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = scratch("fixture");
        let mut spec = SceneSpec::default_scene();
        spec.scene.density = 20.0;
        let scene = dir.join("scene.toml");
        std::fs::write(&scene, spec.to_toml_string()).unwrap();
        let f = Fixture { dir };
        let (r, m, fe, l) = (
            f.path("ref.ply"),
            f.path("mls.ply"),
            f.path("f.csv"),
            f.path("l.csv"),
        );
        ok(&[
            "synth",
            "--scene",
            s(&scene),
            "--ref-out",
            s(&r),
            "--mls-out",
            s(&m),
        ]);
        ok(&["features", "--mls", s(&m), "--out", s(&fe), "--k-max", "30"]);
        ok(&["label", "--mls", s(&m), "--ref", s(&r), "--out", s(&l)]);
        f
    })
}

fn csv_header(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .next()
        .unwrap()
        .split(',')
        .map(String::from)
        .collect()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let col = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

// ---------------------------------------------------------------- features

#[test]
fn features_csv_has_index_and_27_columns() {
    let f = fixture();
    let header = csv_header(&f.path("f.csv"));
    assert_eq!(header.len(), 28);
    assert_eq!(header[0], "idx");
    assert_eq!(header[27], "OptN");
}

#[test]
fn features_k_max_is_honored() {
    let opt_n = csv_column(&fixture().path("f.csv"), "OptN");
    assert!(opt_n.iter().all(|&k| (10.0..=30.0).contains(&k)));
    assert!(opt_n.iter().any(|&k| k > 20.0));
}

#[test]
fn features_on_a_tiny_cloud_names_the_required_size() {
    let dir = scratch("tiny");
    let cloud = PointCloud::new((0..50).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect());
    let xyz = dir.join("tiny.xyz");
    write_cloud(&cloud, &xyz).unwrap();
    let out = dir.join("f.csv");
    let err = fails(&["features", "--mls", s(&xyz), "--out", s(&out)]);
    assert!(err.contains("101"), "{err}");
    assert!(!out.exists());
}

// ---------------------------------------------------------------- label

#[test]
fn labels_of_identical_clouds_are_zero_and_retained() {
    let f = fixture();
    let out = scratch("identical").join("l.csv");
    ok(&[
        "label",
        "--mls",
        s(&f.path("mls.ply")),
        "--ref",
        s(&f.path("mls.ply")),
        "--out",
        s(&out),
    ]);
    assert!(csv_column(&out, "c2c_mm").iter().all(|&v| v == 0.0));
    assert!(csv_column(&out, "retained").iter().all(|&v| v == 1.0));
}

#[test]
fn tiny_threshold_drops_nearly_everything_and_reports_it() {
    let f = fixture();
    let out = scratch("threshold").join("l.csv");
    let stdout = ok(&[
        "label",
        "--mls",
        s(&f.path("mls.ply")),
        "--ref",
        s(&f.path("ref.ply")),
        "--out",
        s(&out),
        "--threshold-mm",
        "0.001",
    ]);
    let retained = csv_column(&out, "retained");
    let kept = retained.iter().filter(|&&r| r == 1.0).count();
    assert!(kept * 100 < retained.len(), "{kept} of {}", retained.len());
    assert!(
        stdout.contains(&format!("retained {kept} of {}", retained.len())),
        "{stdout}"
    );
    assert!(stdout.contains("dropped"), "{stdout}");
}

#[test]
fn missing_reference_exits_1() {
    let f = fixture();
    let out = scratch("missing").join("l.csv");
    let err = fails(&[
        "label",
        "--mls",
        s(&f.path("mls.ply")),
        "--ref",
        "/nonexistent/ref.ply",
        "--out",
        s(&out),
    ]);
    assert!(err.contains("/nonexistent/ref.ply"), "{err}");
}

// ---------------------------------------------------------------- train / predict

fn train(model: &str, out: &Path, extra: &[&str]) -> String {
    let f = fixture();
    let (fe, l) = (f.path("f.csv"), f.path("l.csv"));
    let mut args = vec![
        "train",
        "--features",
        s(&fe),
        "--labels",
        s(&l),
        "--out",
        s(out),
        "--model",
        model,
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn train_writes_models_and_summaries() {
    let f = fixture();
    let dir = scratch("train");
    let mls = f.path("mls.ply");
    let rf = train("rf", &dir.join("rf.json"), &["--mls", s(&mls)]);
    assert!(rf.contains("RF: 100 trees"), "{rf}");
    let gb = train("gbdt", &dir.join("gb.json"), &["--mls", s(&mls)]);
    assert!(
        gb.contains("GBDT:") && gb.contains("best iteration"),
        "{gb}"
    );
    for name in ["rf.json", "gb.json"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        assert!(text.starts_with("{\"format_version\":1"), "{}", &text[..40]);
    }
}

#[test]
fn gbdt_notes_the_default_validation_carve() {
    let f = fixture();
    let dir = scratch("carve");
    let mls = f.path("mls.ply");
    let stdout = train("gbdt", &dir.join("gb.json"), &["--mls", s(&mls)]);
    assert!(
        stdout.contains("note: holding out 10% of 3 m grid cells"),
        "{stdout}"
    );
    let stdout = train("gbdt", &dir.join("gb2.json"), &[]);
    assert!(stdout.contains("note: no --mls given"), "{stdout}");
}

#[test]
fn row_count_mismatch_is_an_error() {
    let f = fixture();
    let dir = scratch("mismatch");
    let text = std::fs::read_to_string(f.path("l.csv")).unwrap();
    let short: Vec<&str> = text.lines().take(100).collect();
    let labels = dir.join("short.csv");
    std::fs::write(&labels, short.join("\n") + "\n").unwrap();
    let out = dir.join("m.json");
    let err = fails(&[
        "train",
        "--features",
        s(&f.path("f.csv")),
        "--labels",
        s(&labels),
        "--out",
        s(&out),
    ]);
    assert!(err.contains("rows"), "{err}");
    assert!(!out.exists());
}

#[test]
fn predict_writes_prediction_and_error_scalars() {
    let f = fixture();
    let dir = scratch("predict");
    let model = dir.join("gb.json");
    let mls = f.path("mls.ply");
    train("gbdt", &model, &["--mls", s(&mls)]);
    let (m, fe) = (f.path("mls.ply"), f.path("f.csv"));
    let plain = dir.join("plain.ply");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--features",
        s(&fe),
        "--mls",
        s(&m),
        "--out",
        s(&plain),
    ]);
    let cloud = read_ply(&plain).unwrap();
    assert!(cloud.scalar("pred_c2c_mm").is_some());
    assert!(cloud.scalar("abs_err_mm").is_none());

    let labelled = dir.join("labelled.ply");
    let l = f.path("l.csv");
    ok(&[
        "predict",
        "--model",
        s(&model),
        "--features",
        s(&fe),
        "--mls",
        s(&m),
        "--out",
        s(&labelled),
        "--labels",
        s(&l),
    ]);
    let cloud = read_ply(&labelled).unwrap();
    let pred = cloud.scalar("pred_c2c_mm").unwrap();
    let abs = cloud.scalar("abs_err_mm").unwrap();
    let res = cloud.scalar("residual_mm").unwrap();
    let y = csv_column(&l, "c2c_mm");
    for i in 0..pred.len() {
        assert_eq!(res[i], pred[i] - y[i]);
        assert_eq!(abs[i], (y[i] - pred[i]).abs());
    }
}

#[test]
fn predict_with_foreign_model_names_the_column() {
    let f = fixture();
    let dir = scratch("foreign");
    let x = DesignMatrix::from_rows(
        vec!["height".into()],
        &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
    )
    .unwrap();
    let model = train_rf(
        &x,
        &[1.0, 2.0, 3.0, 4.0],
        &RfConfig {
            n_estimators: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let path = dir.join("foreign.json");
    save_model(&model, &path).unwrap();
    let out = dir.join("p.ply");
    let err = fails(&[
        "predict",
        "--model",
        s(&path),
        "--features",
        s(&f.path("f.csv")),
        "--mls",
        s(&f.path("mls.ply")),
        "--out",
        s(&out),
    ]);
    assert!(err.contains("height"), "{err}");
    assert!(!out.exists());
}

// ---------------------------------------------------------------- evaluate

fn evaluate(dir: &Path, extra: &[&str]) -> String {
    let f = fixture();
    let report = dir.join("report.csv");
    let config = dir.join("fast.toml");
    std::fs::write(&config, "[rf]\nn_estimators = 20\n").unwrap();
    let (fe, l, m) = (f.path("f.csv"), f.path("l.csv"), f.path("mls.ply"));
    let mut args = vec![
        "--config",
        s(&config),
        "evaluate",
        "--features",
        s(&fe),
        "--labels",
        s(&l),
        "--mls",
        s(&m),
        "--report",
        s(&report),
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn evaluate_writes_fold_and_aggregate_rows() {
    let dir = scratch("evaluate");
    let stdout = evaluate(&dir, &[]);
    let report = dir.join("report.csv");
    let header = csv_header(&report);
    assert_eq!(&header[..3], ["model", "fold", "n_train"]);
    assert!(header.contains(&"runtime_s".to_string()) && header.contains(&"p10".to_string()));
    let text = std::fs::read_to_string(&report).unwrap();
    for model in ["rf", "gbdt"] {
        let rows: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with(&format!("{model},")))
            .collect();
        assert_eq!(rows.len(), 5 + 2, "{model}: {rows:?}");
        assert!(rows
            .iter()
            .any(|r| r.starts_with(&format!("{model},mean,"))));
        assert!(rows
            .iter()
            .any(|r| r.starts_with(&format!("{model},ci95,"))));
    }
    for row in [
        "RMSE (mm)",
        "MAE (mm)",
        "MedAE (mm)",
        "R²",
        "Runtime / fold (s)",
        "P@10 mm",
        "P@50 mm",
    ] {
        assert!(
            stdout.lines().any(|l| l.starts_with(row)),
            "missing {row}:\n{stdout}"
        );
    }
    let header_line = stdout.lines().find(|l| l.starts_with("Metric")).unwrap();
    assert!(
        header_line.contains("RF") && header_line.contains("GBDT"),
        "{header_line}"
    );
}

#[test]
fn evaluate_honors_fold_count_and_model_list() {
    let dir = scratch("evaluate3");
    let stdout = evaluate(&dir, &["--folds", "3", "--models", "gbdt"]);
    assert!(stdout.starts_with("3-fold"), "{stdout}");
    let text = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert_eq!(
        text.lines().filter(|l| l.starts_with("gbdt,")).count(),
        3 + 2
    );
    assert!(!text.lines().any(|l| l.starts_with("rf,")));
}

// ---------------------------------------------------------------- importance

fn importance(dir: &Path, labels: &Path, repeats: &str) -> Output {
    let f = fixture();
    let model = dir.join("gb.json");
    if !model.exists() {
        let mls = f.path("mls.ply");
        train("gbdt", &model, &["--mls", s(&mls)]);
    }
    let out = dir.join(format!("imp{repeats}.csv"));
    let fe = f.path("f.csv");
    run(&[
        "importance",
        "--model",
        s(&model),
        "--features",
        s(&fe),
        "--labels",
        s(labels),
        "--out",
        s(&out),
        "--repeats",
        repeats,
    ])
}

#[test]
fn importance_writes_one_row_per_feature() {
    let dir = scratch("importance");
    let out = importance(&dir, &fixture().path("l.csv"), "2");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = dir.join("imp2.csv");
    assert_eq!(csv_header(&path), ["feature", "delta_rmse_mm"]);
    let delta = csv_column(&path, "delta_rmse_mm");
    assert_eq!(delta.len(), 27);
    assert!(delta.iter().any(|&d| d > 0.0));
}

#[test]
fn importance_rejects_mismatched_labels() {
    let dir = scratch("importance_mismatch");
    let text = std::fs::read_to_string(fixture().path("l.csv")).unwrap();
    let labels = dir.join("short.csv");
    std::fs::write(
        &labels,
        text.lines().take(50).collect::<Vec<_>>().join("\n") + "\n",
    )
    .unwrap();
    let out = importance(&dir, &labels, "2");
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.join("imp2.csv").exists());
}

#[test]
fn importance_repeats_are_honored() {
    let dir = scratch("importance_repeats");
    let l = fixture().path("l.csv");
    for r in ["1", "4"] {
        assert!(importance(&dir, &l, r).status.success());
    }
    assert_ne!(
        csv_column(&dir.join("imp1.csv"), "delta_rmse_mm"),
        csv_column(&dir.join("imp4.csv"), "delta_rmse_mm")
    );
    assert_eq!(importance(&dir, &l, "0").status.code(), Some(1));
}

// ---------------------------------------------------------------- synth

#[test]
fn synth_writes_two_clouds_deterministically() {
    let dir = scratch("synth");
    let mut spec = SceneSpec::default_scene();
    spec.scene.density = 5.0;
    let scene = dir.join("scene.toml");
    std::fs::write(&scene, spec.to_toml_string()).unwrap();
    let gen = |tag: &str, seed: &str| {
        let (r, m) = (
            dir.join(format!("r{tag}.ply")),
            dir.join(format!("m{tag}.ply")),
        );
        ok(&[
            "--seed",
            seed,
            "synth",
            "--scene",
            s(&scene),
            "--ref-out",
            s(&r),
            "--mls-out",
            s(&m),
        ]);
        (std::fs::read(r).unwrap(), std::fs::read(m).unwrap())
    };
    let a = gen("a", "3");
    assert_eq!(a, gen("b", "3"));
    assert_ne!(a, gen("c", "4"));
    let mls = read_ply(dir.join("ma.ply")).unwrap();
    assert!(mls.scalar("true_error_mm").is_some());
}

#[test]
fn bad_scene_key_is_named() {
    let dir = scratch("bad_scene");
    let scene = dir.join("scene.toml");
    std::fs::write(&scene, "[scene]\ndensity = 10.0\n[error]\nsigma0 = 1.0\n").unwrap();
    let (r, m) = (dir.join("r.ply"), dir.join("m.ply"));
    let err = fails(&[
        "synth",
        "--scene",
        s(&scene),
        "--ref-out",
        s(&r),
        "--mls-out",
        s(&m),
    ]);
    assert!(err.contains("sigma0"), "{err}");
    assert!(!r.exists() && !m.exists());
}

// ---------------------------------------------------------------- config and failure handling

#[test]
fn flags_win_over_the_config_file() {
    let f = fixture();
    let dir = scratch("config");
    let config = dir.join("run.toml");
    std::fs::write(&config, "[features]\nk_max = 12\n").unwrap();
    let out = dir.join("f.csv");
    ok(&[
        "--config",
        s(&config),
        "features",
        "--mls",
        s(&f.path("mls.ply")),
        "--out",
        s(&out),
    ]);
    assert!(csv_column(&out, "OptN").iter().all(|&k| k <= 12.0));
    ok(&[
        "--config",
        s(&config),
        "features",
        "--mls",
        s(&f.path("mls.ply")),
        "--out",
        s(&out),
        "--k-max",
        "14",
    ]);
    let opt_n = csv_column(&out, "OptN");
    assert!(opt_n.iter().all(|&k| k <= 14.0) && opt_n.iter().any(|&k| k > 12.0));
}

#[test]
fn invalid_config_names_the_key() {
    let f = fixture();
    let dir = scratch("bad_config");
    let out = dir.join("f.csv");
    let mls = f.path("mls.ply");
    for (text, key) in [
        ("[rf]\nn_estimators = 0\n", "rf.n_estimators"),
        ("[gbdt]\nlearning_rate = 0.1\n", "gbdt.learning_rate"),
        ("[cv]\nfolds = 1\n", "cv.folds"),
        ("[features]\nk_min = 50\nk_max = 20\n", "features.k_max"),
    ] {
        let config = dir.join("run.toml");
        std::fs::write(&config, text).unwrap();
        let err = fails(&[
            "--config",
            s(&config),
            "features",
            "--mls",
            s(&mls),
            "--out",
            s(&out),
        ]);
        assert!(err.contains(key), "{key}: {err}");
        assert!(!out.exists());
    }
}

#[test]
fn failed_pipeline_leaves_no_outputs() {
    let f = fixture();
    let dir = scratch("pipeline_fail");
    let out_dir = dir.join("out");
    let err = fails(&[
        "pipeline",
        "--mls",
        s(&f.path("mls.ply")),
        "--ref",
        s(&f.path("ref.ply")),
        "--out-dir",
        s(&out_dir),
        "--k-max",
        "20",
        "--folds",
        "5000",
    ]);
    assert!(err.contains("5000"), "{err}");
    assert_eq!(std::fs::read_dir(&out_dir).unwrap().count(), 0);
}

#[test]
fn thread_count_does_not_change_results() {
    let f = fixture();
    let dir = scratch("threads");
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    let m = f.path("mls.ply");
    ok(&[
        "--threads",
        "1",
        "features",
        "--mls",
        s(&m),
        "--out",
        s(&a),
        "--k-max",
        "20",
    ]);
    ok(&[
        "--threads",
        "3",
        "features",
        "--mls",
        s(&m),
        "--out",
        s(&b),
        "--k-max",
        "20",
    ]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}
