use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semveh"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn semveh");
    eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn small_train(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--set",
        "scenario.num_vehicles=2",
        "--set",
        "scenario.episode_steps=20",
        "--set",
        "rl.iterations=3",
        "--set",
        "rl.steps_per_iteration=128",
        "--set",
        "rl.minibatch_size=32",
        "--set",
        "rl.hidden_sizes=[8]",
        "--set",
        "rl.checkpoint_every=2",
        "--set",
        "rl.eval_episodes=2",
        "--seeds",
        "2",
        "--out",
    ];
    args.push(out.to_str().unwrap());
    args.extend(extra);
    run(&args)
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn train_writes_declared_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(small_train(&out, &[]).status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    // Per seed: log, checkpoints at it 2 and 3, eval; plus summary and plot.
    for name in [
        "train_seed0.csv",
        "checkpoint_seed0_it0002.json",
        "checkpoint_seed0_it0003.json",
        "eval_seed1.csv",
        "eval_summary.csv",
        "plot.gp",
    ] {
        assert!(out.join(name).exists(), "{name}");
        assert!(manifest.contains(name), "{name} not in manifest");
    }
    let entries = std::fs::read_dir(&out).unwrap().count();
    assert_eq!(entries, 2 * 4 + 2 + 1);
    let summary = data_lines(&out.join("eval_summary.csv"));
    assert!(summary[1].contains(",gae-ppo,"));
}

#[test]
fn lambda_zero_is_labelled_ppo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(small_train(&out, &["--set", "rl.gae_lambda=0"]).status.success());
    let summary = data_lines(&out.join("eval_summary.csv"));
    assert!(summary.iter().skip(1).all(|l| l.contains(",ppo,")), "{summary:?}");
}

#[test]
fn rerun_reproduces_training_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(small_train(&a, &[]).status.success());
    let m = a.join("manifest.json");
    assert!(run(&["rerun", "--manifest", m.to_str().unwrap(), "--out", b.to_str().unwrap()]).status.success());
    for name in ["train_seed0.csv", "train_seed1.csv", "eval_seed0.csv", "eval_summary.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    // Rerunning into the source directory is refused.
    assert!(!run(&["rerun", "--manifest", m.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
}

#[test]
fn eval_reads_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert!(small_train(&run_dir, &[]).status.success());
    let ck = run_dir.join("checkpoint_seed0_it0003.json");
    let ev = dir.path().join("eval");
    let out = run(&["eval", "--checkpoint", ck.to_str().unwrap(), "--episodes", "3", "--out", ev.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(data_lines(&ev.join("eval_episodes.csv")).len(), 4);
    assert_eq!(data_lines(&ev.join("eval_demand.csv")).len(), 3);
}

#[test]
fn oracle_on_tiny_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("oracle");
    let cfg = repo().join("configs/tiny.toml");
    let o = run(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(data_lines(&out.join("oracle_values.csv")).len(), 1008 + 1);
    let hist = data_lines(&out.join("oracle_histogram.csv"));
    let total: usize = hist.iter().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 1008);
    let best = data_lines(&out.join("oracle_optimum.csv"));
    assert!(best[1].contains(",1008,"), "{best:?}");
}

#[test]
fn extract_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = repo().join("data/fixtures");
    let ok = run(&["extract", "--fixtures", fixtures.to_str().unwrap(), "--out", dir.path().join("a").to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));

    // A corpus whose captions are as large as their images fails with exit 3.
    let bad = dir.path().join("bad");
    std::fs::create_dir(&bad).unwrap();
    std::fs::write(bad.join("001.jpg"), [0xFFu8, 0xD8, 0xFF, 0xD9]).unwrap();
    std::fs::write(bad.join("001.txt"), "a b c d").unwrap();
    std::fs::write(bad.join("manifest.csv"), "id,image_bytes,text_bytes\n001,4,7\n").unwrap();
    let fail = run(&["extract", "--fixtures", bad.to_str().unwrap(), "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(3));
}

#[test]
fn config_prints_overrides_and_rejects_unknown_keys() {
    let o = run(&["config", "--set", "rl.gae_lambda=0.5"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("gae_lambda = 0.5"));
    let bad = run(&["config", "--set", "rl.no_such_key=1"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bad_seed_list_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train", "--seeds", "1,x", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad seed list"));
}
