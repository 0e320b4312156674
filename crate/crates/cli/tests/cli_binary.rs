//! End-to-end checks through the installed binary: exit codes, stdout
//! summaries, and the machine-readable JSON error channel on stderr.

use std::path::Path;
use std::process::Command;

fn rising() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rising"))
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("run");
    let config = serde_json::json!({
        "name": "cli-small",
        "dataset": {
            "generate": {
                "phantom": {
                    "grid": {"n": 16, "pixel_size": 1.0},
                    "num_ellipses_range": [4, 8],
                    "num_lines_range": [2, 5],
                    "intensity_range": [-0.5, 0.8],
                    "size_range": [0.08, 0.45],
                    "background": 0.0,
                    "seed": 0
                },
                "count": 4,
                "train_count": 3
            }
        },
        "geometry": {"protocol": "P_360_12"},
        "noise_level": 0.01,
        "solver": {
            "lambda": 4e-5,
            "beta": 1e-3,
            "max_iters": 50,
            "stop_tol": 1e-6,
            "alpha_bounds": [1e-10, 1e10],
            "scaling_bounds": [1e-5, 1e5],
            "linesearch": {"sigma": 1e-4, "rho": 0.4, "memory": 10},
            "bb_alternation": 3
        },
        "k": 3,
        "network": {"levels": 2, "base_channels": 4, "convs_per_level": 1, "kernel_size": 3},
        "training": {
            "epochs": 2, "batch_size": 8,
            "lr_start": 1e-3, "lr_end": 1e-5, "lr_power": 1.0,
            "grad_clip": 5.0,
            "adam": {"beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
            "shuffle_seed": 4
        },
        "mode": "rising",
        "output_dir": out,
        "seeds": {"data": 1, "noise": 2, "init": 3, "shuffle": 4}
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn stages_run_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());

    for sub in ["generate-data", "simulate", "build-targets", "build-ris", "train"] {
        let output = rising()
            .args([sub, "--config"])
            .arg(&config)
            .env("RISING_THREADS", "2")
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{sub} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }

    let ckpt = dir.path().join("run/checkpoint_rising_k3.ckpt");
    assert!(ckpt.exists());

    let output = rising()
        .args(["evaluate", "--config"])
        .arg(&config)
        .arg("--checkpoint")
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("x_RIS"));
    assert!(stdout.contains("x_ING"));

    // Profile a generated image through the binary.
    let gt = dir.path().join("run/phantom_0000.imgraw");
    let output = rising()
        .arg("profile")
        .arg(&gt)
        .args(["--row", "8"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.lines().count(), 1 + 16);
}

#[test]
fn failures_emit_json_errors_on_stderr() {
    let output = rising()
        .args(["simulate", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let parsed: serde_json::Value = serde_json::from_str(stderr.trim())
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {stderr}"));
    assert!(parsed["error"].is_string());
    assert!(parsed["kind"].is_string());

    // A bad override is rejected the same way.
    let dir = tempfile::tempdir().unwrap();
    let config = write_small_config(dir.path());
    let output = rising()
        .args(["generate-data", "--config"])
        .arg(&config)
        .args(["--mode", "bogus"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let parsed: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(parsed["kind"], "invalid_config");
}

#[test]
fn init_config_writes_a_loadable_default() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("desk.json");
    let output = rising()
        .arg("init-config")
        .arg(&path)
        .args(["--output-dir"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let cfg = rising_cli::ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.k, 10);
    assert_eq!(cfg.noise_level, 0.01);
}
