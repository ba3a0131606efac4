//! Black-box tests of the `gsn` binary: error reporting, determinism,
//! clamped completion, and the verification runner.

use std::path::PathBuf;
use std::process::{Command, Output};

use gsn_core::gsn::{GsnConfig, GsnModel, VisibleKind};
use gsn_core::ndnum::Matrix;
use gsn_core::sampler::write_pgm_grid;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Runs the binary from the crate root so fixture paths resolve.
fn gsn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsn"))
        .args(args)
        .current_dir(manifest_dir())
        .output()
        .expect("binary launches")
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gsn_cli_{}_{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &PathBuf, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Trains the committed fixture into `dir` and returns the checkpoint path.
fn train_fixture(dir: &PathBuf) -> String {
    let out = gsn(&["train", "--config", "tests/fixtures/train.cfg", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "fixture training failed: {}", stderr(&out));
    dir.join("checkpoint.gsn").to_str().unwrap().to_string()
}

#[test]
fn missing_dataset_key_is_named_on_train() {
    let dir = fresh_dir("missing_dataset");
    let cfg = write_cfg(&dir, "train.cfg", "epochs = 1\n");
    let out = gsn(&["train", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("\"dataset\""), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = fresh_dir("unknown_key");
    let cfg = write_cfg(&dir, "bad.cfg", "datasett = somewhere.csv\n");
    let out = gsn(&["train", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("unknown config key \"datasett\""), "stderr: {err}");
}

#[test]
fn epochs_zero_saves_the_initialized_model() {
    let dir = fresh_dir("epochs_zero");
    let out = gsn(&[
        "train",
        "--config",
        "tests/fixtures/train.cfg",
        "--epochs",
        "0",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let saved = GsnModel::load(&dir.join("checkpoint.gsn")).unwrap();
    let mut expected_cfg = GsnConfig::new(4, vec![8], 0.0, 0.1, VisibleKind::Binary, 42).unwrap();
    expected_cfg.walkback_steps = 1;
    let expected = GsnModel::new(expected_cfg).unwrap();
    assert_eq!(saved.params_checksum(), expected.params_checksum());

    let report = std::fs::read_to_string(dir.join("train_report.csv")).unwrap();
    assert_eq!(report, "epoch,mean_nll,lr\n");
}

#[test]
fn sample_grids_reproduce_byte_exactly_per_seed() {
    let train_dir = fresh_dir("sample_repro_train");
    let checkpoint = train_fixture(&train_dir);
    let cfg_text = format!("checkpoint = {checkpoint}\nnum_samples = 24\nburn_in = 50\n");
    let cfg = write_cfg(&train_dir, "sample.cfg", &cfg_text);

    let run = |name: &str, seed: &str| {
        let dir = fresh_dir(name);
        let out = gsn(&["sample", "--config", &cfg, "--seed", seed, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        (
            std::fs::read(dir.join("samples.csv")).unwrap(),
            std::fs::read(dir.join("samples.pgm")).unwrap(),
        )
    };
    let (csv_a, pgm_a) = run("sample_repro_a", "9");
    let (csv_b, pgm_b) = run("sample_repro_b", "9");
    assert_eq!(csv_a, csv_b, "same seed must reproduce the CSV byte-exactly");
    assert_eq!(pgm_a, pgm_b, "same seed must reproduce the PGM byte-exactly");

    let (csv_c, _) = run("sample_repro_c", "10");
    assert_ne!(csv_a, csv_c, "a different seed must change the samples");
}

#[test]
fn inpaint_all_ones_mask_tiles_the_clamp_image() {
    let dir = fresh_dir("inpaint_tile");
    let checkpoint = train_fixture(&dir);
    std::fs::write(dir.join("mask.csv"), "1,1,1,1\n").unwrap();
    std::fs::write(dir.join("image.csv"), "1,0,1,0\n").unwrap();
    let cfg_text = format!(
        "checkpoint = {checkpoint}\nclamp_mask = {}\nclamp_image = {}\nnum_samples = 6\nburn_in = 10\ngrid_cols = 3\n",
        dir.join("mask.csv").display(),
        dir.join("image.csv").display()
    );
    let cfg = write_cfg(&dir, "inpaint.cfg", &cfg_text);
    let out = gsn(&["inpaint", "--config", &cfg, "--seed", "4", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let csv = std::fs::read_to_string(dir.join("inpaint.csv")).unwrap();
    for line in csv.lines() {
        assert_eq!(line, "1,0,1,0", "fully clamped rows must equal the clamp image");
    }

    let tiled = Matrix::from_vec(6, 4, vec![1.0, 0.0, 1.0, 0.0].repeat(6)).unwrap();
    let expected_path = dir.join("expected.pgm");
    write_pgm_grid(&tiled, 2, 2, 3, &expected_path).unwrap();
    let expected = std::fs::read(expected_path).unwrap();
    let actual = std::fs::read(dir.join("inpaint.pgm")).unwrap();
    assert_eq!(actual, expected, "the grid must be the clamp image tiled");
}

#[test]
fn eval_parzen_reports_finite_numbers() {
    let dir = fresh_dir("eval_parzen");
    let checkpoint = train_fixture(&dir);
    let sample_cfg = write_cfg(
        &dir,
        "sample.cfg",
        &format!("checkpoint = {checkpoint}\nnum_samples = 200\nburn_in = 100\nmean_field = true\n"),
    );
    let out = gsn(&["sample", "--config", &sample_cfg, "--seed", "2", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let eval_cfg = write_cfg(
        &dir,
        "eval.cfg",
        &format!(
            "samples = {}\ndataset = tests/fixtures/data.csv\n",
            dir.join("samples.csv").display()
        ),
    );
    let out = gsn(&["eval-parzen", "--config", &eval_cfg, "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let csv = std::fs::read_to_string(dir.join("parzen.csv")).unwrap();
    let row = csv.lines().nth(1).expect("one data row");
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 4);
    let mean: f64 = fields[0].parse().unwrap();
    let se: f64 = fields[1].parse().unwrap();
    assert!(mean.is_finite() && se.is_finite() && se >= 0.0, "row: {row}");
}

#[test]
fn verify_report_row_count_equals_trials() {
    let dir = fresh_dir("verify_rows");
    let cfg = write_cfg(&dir, "verify.cfg", "trials = 37\n");
    let out = gsn(&["verify", "--config", &cfg, "--seed", "6", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("[pass] perturbation-bound: 37/37 trials hold"));

    let report = std::fs::read_to_string(dir.join("verify_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 38, "header plus one row per trial");
    assert_eq!(report.lines().next().unwrap(), "trial,label,irreducible,period,lhs,rhs,holds");
}

#[test]
fn verify_injected_counterexample_is_caught() {
    let dir = fresh_dir("verify_inject");
    let cfg = write_cfg(&dir, "verify.cfg", "trials = 10\ninject_counterexample = true\n");
    let out = gsn(&["verify", "--config", &cfg, "--seed", "6", "--out", dir.to_str().unwrap()]);
    assert!(!out.status.success(), "the mislabeled chain must fail the run");
    let text = stdout(&out);
    assert!(text.contains("[FAIL] injected-counterexample"), "stdout: {text}");
    assert!(text.contains("period 2"), "stdout: {text}");
}

#[test]
fn resolved_config_is_logged_and_written() {
    let dir = fresh_dir("resolved_cfg");
    let cfg = write_cfg(&dir, "verify.cfg", "trials = 3\ngibbs_trials = 2\n");
    let out = gsn(&["verify", "--config", &cfg, "--seed", "5", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let text = stdout(&out);
    assert!(text.contains("resolved config:"), "stdout: {text}");
    assert!(text.contains("seed = 5"), "the --seed override must be logged: {text}");

    let written = std::fs::read_to_string(dir.join("resolved.cfg")).unwrap();
    assert!(written.contains("trials = 3"));
    assert!(written.contains("seed = 5"));
}
