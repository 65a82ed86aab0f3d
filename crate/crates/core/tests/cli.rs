use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_chebdqn");

fn chebdqn(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("CHEBDQN_OUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const QUICK: &[&str] = &["--episodes", "6", "--warmup", "32", "--window", "3", "--seeds", "0,1"];

#[test]
fn params_prints_table() {
    let out = chebdqn(&["params", "--env", "cartpole-v1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for count in ["4,610", "5,634", "6,146", "6,658"] {
        assert!(text.contains(count), "{text}");
    }
    assert!(!text.contains('*'), "cartpole matches the published counts");

    let out = chebdqn(&["params", "--env", "mountaincar-v0"]);
    let text = stdout(&out);
    assert!(text.contains("4,547") && text.contains("4,483") && text.contains('*'));
}

#[test]
fn unknown_env_is_usage_error() {
    assert_eq!(chebdqn(&["params", "--env", "pong"]).status.code(), Some(2));
    assert_eq!(chebdqn(&["train", "--env", "pong"]).status.code(), Some(2));
    assert_eq!(chebdqn(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn check_passes_and_catches_faults() {
    let ok = chebdqn(&["check"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let text = stdout(&ok);
    let passes = text.lines().filter(|l| l.starts_with("PASS")).count();
    assert!(passes >= 5, "{text}");

    let bad = chebdqn(&["check", "--perturb-gradient", "0.01"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).lines().any(|l| l.starts_with("FAIL") && l.contains("gradient")));
}

#[test]
fn degree_requires_chebyshev() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let mut args = vec!["train", "--env", "cartpole-v1", "--arch", "mlp", "--degree", "4", "--out", out_dir];
    args.extend(QUICK);
    assert_eq!(chebdqn(&args).status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn empty_sweep_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "seeds = [0]\ncells = []\n").unwrap();
    let out = chebdqn(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cells"));
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn single_cell_sweep_matches_train() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    let mut args = vec!["train", "--env", "cartpole-v1", "--arch", "cheb", "--degree", "6"];
    args.extend(["--out", train_dir.to_str().unwrap()]);
    args.extend(QUICK);
    assert_eq!(chebdqn(&args).status.code(), Some(0));

    let sweep_dir = dir.path().join("sweep");
    let cfg = dir.path().join("grid.toml");
    fs::write(&cfg, "[[cells]]\nenv = \"cartpole-v1\"\narch = \"cheb\"\ndegree = 6\n").unwrap();
    let mut args = vec!["sweep", "--config", cfg.to_str().unwrap()];
    args.extend(["--out", sweep_dir.to_str().unwrap()]);
    args.extend(QUICK);
    assert_eq!(chebdqn(&args).status.code(), Some(0));

    let train = csv_files(&train_dir);
    assert_eq!(train.len(), 2);
    assert_eq!(train, csv_files(&sweep_dir));
    assert!(train_dir.join("summary.md").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "env = \"mountaincar-v0\"\narch = \"mlp\"\nepisodes = 50\nseeds = [4]\nout = \"{}\"\n",
            dir.path().join("from_file").display()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("from_flag");
    let out = chebdqn(&[
        "train", "--config", cfg.to_str().unwrap(), "--episodes", "2", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = fs::read_to_string(out_dir.join("mountaincar-v0__mlp__seed4.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(!dir.path().join("from_file").exists());
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["train", "--env", "cartpole-v1", "--arch", "mlp"])
        .args(QUICK)
        .env("CHEBDQN_OUT", dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_files(dir.path()).len(), 2);

    // `report` finds the same files through the variable and rebuilds the summary.
    let summary = fs::read_to_string(dir.path().join("summary.md")).unwrap();
    fs::remove_file(dir.path().join("summary.md")).unwrap();
    let report = Command::new(BIN)
        .arg("report")
        .env("CHEBDQN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("summary.md")).unwrap(), summary);
}

#[test]
fn report_on_missing_directory_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = chebdqn(&["report", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_documents_defaults() {
    let out = chebdqn(&["train", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for needle in ["--env", "--arch", "--degree", "[default: 4]", "[default: 0,1,2]", "CHEBDQN_OUT"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn summary_accumulates_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    for arch in ["mlp", "cheb"] {
        let mut args = vec!["train", "--env", "cartpole-v1", "--arch", arch, "--out", out_dir];
        args.extend(QUICK);
        assert_eq!(chebdqn(&args).status.code(), Some(0));
    }
    let summary = fs::read_to_string(dir.path().join("summary.md")).unwrap();
    assert!(summary.contains("| Standard DQN |") && summary.contains("| Ch-DQN (N=4) |"), "{summary}");
}
