use std::path::Path;

use semveh_core::config::{ScenarioConfig, TrainConfig};
use semveh_core::experiment::{read_csv, rerun, run_oracle, run_sweep, RunManifest, SweepAxis, MANIFEST_FILE};
use semveh_core::ExperimentConfig;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioConfig {
            num_vehicles: 2,
            episode_steps: 15,
            ..Default::default()
        },
        rl: TrainConfig {
            hidden_sizes: vec![8],
            iterations: 2,
            steps_per_iteration: 96,
            minibatch_size: 32,
            eval_episodes: 2,
            checkpoint_every: 100,
            ..Default::default()
        },
    }
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    read_csv(path).unwrap().1
}

#[test]
fn sweep_aggregates_every_method_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let methods: Vec<String> = ["gae-ppo", "ppo", "random"].map(String::from).to_vec();
    let (points, agg, manifest) = run_sweep(&small(), SweepAxis::UMax, &[1, 2], &methods, &[0, 1], dir.path()).unwrap();
    assert_eq!(points.len(), 2 * 3 * 2);
    assert!(points.iter().all(|p| p.result.is_ok()));
    assert_eq!(agg.len(), 6);
    assert!(agg.iter().all(|r| r.n == 2 && r.ci95 >= 0.0));

    let sweep = rows(&dir.path().join("sweep.csv"));
    assert_eq!(sweep.len(), 6);
    assert_eq!(sweep[0][..2], ["1".to_string(), "gae-ppo".to_string()]);
    assert!(rows(&dir.path().join("sweep_failures.csv")).is_empty());
    for f in &manifest.files {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn failed_sweep_points_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let methods = vec!["random".to_string()];
    // Zero vehicles is an invalid scenario.
    let (points, agg, _) = run_sweep(&small(), SweepAxis::NumVehicles, &[2, 0], &methods, &[0], dir.path()).unwrap();
    assert_eq!(points.iter().filter(|p| p.result.is_err()).count(), 1);
    assert_eq!(agg.len(), 1);
    let failures = rows(&dir.path().join("sweep_failures.csv"));
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0][0], "0");
}

#[test]
fn unknown_method_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_sweep(&small(), SweepAxis::UMax, &[1], &["a2c".to_string()], &[0], dir.path());
    assert!(err.is_err());
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn oracle_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let (best, manifest) = run_oracle(&small(), 3, 20, &a).unwrap();
    assert!(best.reward.is_finite());
    let loaded = RunManifest::load(&a.join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded.files, manifest.files);
    let b = dir.path().join("b");
    rerun(&a.join(MANIFEST_FILE), &b).unwrap();
    for f in &manifest.files {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let hist = rows(&a.join("oracle_histogram.csv"));
    assert_eq!(hist.len(), 20);
    let total: usize = hist.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(total, rows(&a.join("oracle_values.csv")).len());
}
