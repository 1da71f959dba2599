//! The whole pipeline through the command-line entry point: synthesize a
//! scene, extract features, label, cross-validate, train and predict.
//!
//! Pass `--full` to run on the full-density default scene (a few minutes on
//! one core); the default run uses a sparser copy.

use mls_uncertainty::cli::main_with;
use mls_uncertainty::synthetic::SceneSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let full = std::env::args().any(|a| a == "--full");
    let dir = std::env::temp_dir().join("mls_end_to_end");
    std::fs::create_dir_all(&dir)?;
    let mut spec = SceneSpec::default_scene();
    if !full {
        spec.scene.density = 60.0;
    }
    let scene = dir.join("scene.toml");
    std::fs::write(&scene, spec.to_toml_string())?;

    let scene = scene.to_string_lossy().into_owned();
    let out = dir.to_string_lossy().into_owned();
    let mut args = vec![
        "mls-uncertainty",
        "--seed",
        "0",
        "pipeline",
        "--scene",
        &scene,
        "--out-dir",
        &out,
    ];
    if !full {
        args.extend(["--k-max", "50"]);
    }
    let status = main_with(args);
    if status != std::process::ExitCode::SUCCESS {
        return Err("pipeline failed".into());
    }
    let mut files: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name())
        .collect();
    files.sort();
    println!("\noutputs in {}:", dir.display());
    for f in files {
        println!("  {}", f.to_string_lossy());
    }
    Ok(())
}
