use sparse_defense::svm::TrainConfig;
use sparse_defense_cli::config::ExperimentConfig;
use sparse_defense_cli::experiments;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_SUITE: &str = r#"
semiwhite_n = 32
semiwhite_k = 8
semiwhite_trials = 400
moments_sizes = [[32, 4]]
moments_trials = 400
bound_instances = 500
clt_n = 256
clt_trials = 500
white_n = 256
white_ks = [2, 4, 8, 16]
white_trials = 100
white_random_n = 64
white_random_trials = 50
scaling_ns = [256, 512]
scaling_trials = 200
distributions = ["standard_normal"]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-defense"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = s(&dir.path().join("out"));

    let missing = run(&["table1", "--data-dir", &s(&empty), "--out", &out]);
    assert_eq!(missing.status.code(), Some(3));

    assert_eq!(run(&["table1", "--epsilon", "-1", "--out", &out]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--pair", "3,3", "--out", &out]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "no_such_key = 1\n");
    assert_eq!(run(&["ensemble", "--config", &bad, "--out", &out]).status.code(), Some(2));

    let strict = write(dir.path(), "strict.toml", &format!("{SMALL_SUITE}semiwhite_band = 1e-9\n"));
    let failed = run(&["ensemble", "--config", &strict, "--out", &out]);
    assert_eq!(failed.status.code(), Some(4));
}

#[test]
fn ensemble_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "suite.toml", SMALL_SUITE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["ensemble", "--config", &cfg, "--seed", "5", "--out", &s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["ensemble.csv", "ensemble_white.csv", "ensemble_checks.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert!(a.join("ensemble_manifest.json").exists());
}

#[test]
fn mnist_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", "epochs = 3\nburn_in_epochs = 1\n");
    let data = s(&mnist_dir());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", &cfg, "--data-dir", &data, "--rho", "0.02,0.2", "--out", &s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(a.join("sweep.csv")).unwrap(), std::fs::read(b.join("sweep.csv")).unwrap());
}

#[test]
fn mnist_train_and_attack_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", "epochs = 3\nburn_in_epochs = 1\n");
    let data = s(&mnist_dir());
    let model = s(&dir.path().join("m.json"));
    let out = s(&dir.path().join("out"));
    let t = run(&["train", "--config", &cfg, "--data-dir", &data, "--model", &model, "--out", &out]);
    assert_eq!(t.status.code(), Some(0), "{}", String::from_utf8_lossy(&t.stderr));
    let a = run(&["attack", "--config", &cfg, "--data-dir", &data, "--model", &model, "--out", &out]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
}

#[test]
fn mnist_training_accuracy_is_not_below_test_accuracy() {
    let cfg = ExperimentConfig { data_dir: Some(mnist_dir()), ..Default::default() };
    let data = experiments::load_pair(&cfg).unwrap();
    let tc = TrainConfig { epochs: 10, ..cfg.train_config() };
    let (model, train) = experiments::train_model(&data, None, &tc).unwrap();
    let test = experiments::attack_model(&data, &model, None, cfg.epsilon).unwrap().clean;
    assert!(train.accuracy() >= test.accuracy() - 0.05, "{} vs {}", train.accuracy(), test.accuracy());
}
