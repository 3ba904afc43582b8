use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sae(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sae"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TINY: &[&str] = &[
    "--data",
    "data",
    "--image-size",
    "8x8",
    "--layers",
    "64,16,8",
    "--epochs",
    "60,60,200,40",
    "--lr",
    "0.5,0.5,0.1",
    "--seed",
    "3",
];

/// Temp dir holding `data/` with 12 noisy 8×8 samples per class.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = sae(
        &[
            "synth",
            "--out",
            "data",
            "--samples-per-class",
            "12",
            "--side",
            "8",
            "--noise",
            "0.1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

fn train(dir: &Path, out: &str) -> Output {
    let mut args = vec!["train", "--out", out];
    args.extend_from_slice(TINY);
    sae(&args, dir)
}

#[test]
fn train_writes_all_artifacts() {
    let dir = workspace();
    let o = train(dir.path(), "out");
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "model.saem",
        "model.classes",
        "trace.csv",
        "report.txt",
        "config.json",
    ] {
        assert!(dir.path().join("out").join(f).is_file(), "{f} missing");
    }
    assert!(stdout(&o).contains("accuracy"));
    let classes = fs::read_to_string(dir.path().join("out/model.classes")).unwrap();
    assert_eq!(classes, "defective\nhealthy\n");
}

#[test]
fn missing_data_dir_is_a_single_line_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = sae(
        &[
            "train",
            "--data",
            "no-such-dir",
            "--image-size",
            "8x8",
            "--layers",
            "64,16,8",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(
        err.starts_with("error[data]:") && err.contains("no-such-dir"),
        "{err}"
    );
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let dir = workspace();
    assert!(train(dir.path(), "a").status.success());
    assert!(train(dir.path(), "b").status.success());
    for f in ["model.saem", "trace.csv", "report.txt"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn eval_reproduces_training_report() {
    let dir = workspace();
    assert!(train(dir.path(), "out").status.success());
    let o = sae(
        &[
            "eval",
            "--model",
            "out/model.saem",
            "--config",
            "out/config.json",
            "--split",
            "val",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        fs::read_to_string(dir.path().join("out/report.txt")).unwrap()
    );
}

#[test]
fn eval_rejects_width_mismatch_naming_both_widths() {
    let dir = workspace();
    assert!(train(dir.path(), "out").status.success());
    let o = sae(
        &[
            "eval",
            "--model",
            "out/model.saem",
            "--data",
            "data",
            "--image-size",
            "4x4",
            "--layers",
            "16,8,4",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("64") && err.contains("16"), "{err}");
}

#[test]
fn overfit_run_scores_perfectly_on_its_training_split() {
    let dir = tempfile::tempdir().unwrap();
    let o = sae(
        &[
            "synth",
            "--out",
            "data",
            "--samples-per-class",
            "4",
            "--side",
            "8",
            "--noise",
            "0",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let o = train(dir.path(), "out");
    assert!(o.status.success(), "{}", stderr(&o));
    let o = sae(
        &[
            "eval",
            "--model",
            "out/model.saem",
            "--config",
            "out/config.json",
            "--split",
            "train",
        ],
        dir.path(),
    );
    assert!(
        stdout(&o).contains("accuracy           1.0000"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"seeed": 4}"#).unwrap();
    let o = sae(&["train", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seeed"));
    let o = sae(&["train", "--layers", "10,5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--print-config"];
    args.extend_from_slice(TINY);
    let o = sae(&args, dir.path());
    assert!(o.status.success());
    let printed = stdout(&o);
    fs::write(dir.path().join("c.json"), &printed).unwrap();
    let again = sae(
        &["train", "--print-config", "--config", "c.json"],
        dir.path(),
    );
    assert_eq!(stdout(&again), printed);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn predict_and_visualize() {
    let dir = workspace();
    assert!(train(dir.path(), "out").status.success());
    let images: Vec<PathBuf> = ["data/defective/00000.pgm", "data/healthy/00012.pgm"]
        .iter()
        .map(PathBuf::from)
        .collect();
    let o = sae(
        &[
            "predict",
            "--model",
            "out/model.saem",
            "--config",
            "out/config.json",
            images[0].to_str().unwrap(),
            images[1].to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("defective=") && lines[0].contains("healthy="));

    let o = sae(
        &[
            "visualize",
            "--model",
            "out/model.saem",
            "--layer",
            "1",
            "--out",
            "tiles",
            "--tile",
            "4x4",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_dir(dir.path().join("tiles")).unwrap().count(), 8);
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sae(&["gradcheck", "--seed", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("max relative error"));
}
