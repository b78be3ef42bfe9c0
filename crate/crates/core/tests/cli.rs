use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gfna(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfna"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
seed = 3

[data]
samples = 1000
calibration_samples = 200

[train]
epochs = 2
ensemble = 2

[network]
width = 16
depth = 2
"#;

#[test]
fn flops_table1_prints_reference_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfna(&["flops", "--table1", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for cell in ["4.99e6", "5.59e6", "6.19e6", "7.91e6", "1.30e7", "1.92e7", "1.68e7", "4.29e7", "9.19e7"] {
        assert!(text.contains(cell), "missing {cell}");
    }
    assert!(dir.path().join("o/flops.csv").is_file());
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gfna(&["sweep", "--config", "missing.cfg"], dir.path()).status.code(), Some(1));
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfna(&["train", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[sweep]\ntrials = 0\n").unwrap();
    assert_eq!(gfna(&["sweep", "--config", "bad.toml"], dir.path()).status.code(), Some(1));
    fs::write(dir.path().join("typo.toml"), "[scenario]\ndevicez = 4\n").unwrap();
    assert_eq!(gfna(&["train", "--config", "typo.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = gfna(&["flops", "--table1", "--out", "blocker/sub"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfna(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["--config", "--seed", "--out", "gen-data", "train", "bank", "sweep", "flops", "estimate"] {
        assert!(text.contains(needle), "help lacks {needle}");
    }
    let flops = gfna(&["flops", "--help"], dir.path());
    assert!(String::from_utf8(flops.stdout).unwrap().contains("--table1"));
}

#[test]
fn train_with_same_seed_twice_gives_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    for out in ["a", "b"] {
        let run = gfna(&["train", "--config", "small.toml", "--seed", "7", "--out", out], dir.path());
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for file in ["member_0.daud", "member_1.daud", "loss_0.csv", "validation_1.csv", "train_manifest.toml"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn bank_then_estimate_and_gen_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[bank]\nmax_sparsity = 2\n\n[estimate]\nsparsity = [1, 2]\ntrials = 20\n");
    fs::write(dir.path().join("small.toml"), config).unwrap();
    let bank = gfna(&["bank", "--config", "small.toml", "--out", "o"], dir.path());
    assert_eq!(bank.status.code(), Some(0), "{}", String::from_utf8_lossy(&bank.stderr));
    assert!(dir.path().join("o/bank.toml").is_file());
    let est = gfna(&["estimate", "--config", "small.toml", "--out", "o"], dir.path());
    assert_eq!(est.status.code(), Some(0), "{}", String::from_utf8_lossy(&est.stderr));
    let csv = fs::read_to_string(dir.path().join("o/estimate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let gen = gfna(&["gen-data", "--config", "small.toml", "--out", "o"], dir.path());
    assert_eq!(gen.status.code(), Some(0));
    assert!(dir.path().join("o/train.gfna").is_file());
}

#[test]
fn estimate_without_bank_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gfna(&["estimate", "--out", "empty"], dir.path()).status.code(), Some(1));
}
