use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "semveh-manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NumVehicles,
    UMax,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NumVehicles => "num_vehicles",
            SweepAxis::UMax => "u_max",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "num_vehicles" | "vehicles" => Ok(SweepAxis::NumVehicles),
            "u_max" => Ok(SweepAxis::UMax),
            _ => Err(Error::invalid("axis", format!("unknown sweep axis `{s}` (num_vehicles | u_max)"))),
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: u32) {
        match self {
            SweepAxis::NumVehicles => cfg.scenario.num_vehicles = value as usize,
            SweepAxis::UMax => cfg.scenario.u_max = value,
        }
    }
}

/// The command a manifest reproduces, with every argument that affects output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Train,
    Eval {
        checkpoint: PathBuf,
        checkpoint_sha256: String,
        episodes: usize,
        eval_seed: u64,
    },
    Sweep {
        axis: SweepAxis,
        values: Vec<u32>,
        methods: Vec<String>,
    },
    Oracle {
        channel_seed: u64,
        bins: usize,
    },
    Extract {
        fixtures: PathBuf,
        l_max: usize,
        /// `None` means the fixture-backed mock.
        remote: Option<String>,
        timeout_s: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval { .. } => "eval",
            Command::Sweep { .. } => "sweep",
            Command::Oracle { .. } => "oracle",
            Command::Extract { .. } => "extract",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: String,
    pub git: Option<String>,
    #[serde(flatten)]
    pub command: Command,
    pub method: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub created_unix_s: u64,
    pub finished_unix_s: Option<u64>,
    /// Output files relative to `out_dir`, in write order.
    pub files: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .stderr(std::process::Stdio::null())
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: Command, config: ExperimentConfig, seeds: Vec<u64>, out_dir: &Path) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            version: format!("semveh {}", env!("CARGO_PKG_VERSION")),
            git: git_revision(),
            command,
            method: config.rl.method_label().to_string(),
            config_hash: config.hash(),
            config,
            seeds,
            out_dir: out_dir.to_path_buf(),
            created_unix_s: now(),
            finished_unix_s: None,
            files: Vec::new(),
        }
    }

    pub fn path_of(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Registers an output file; panics on duplicates, which would break the
    /// one-manifest-per-file contract.
    pub fn add_file(&mut self, name: impl Into<String>) -> PathBuf {
        let name = name.into();
        assert!(!self.files.contains(&name), "output file {name} registered twice");
        let path = self.out_dir.join(&name);
        self.files.push(name);
        path
    }

    /// Stamps the finish time, checks every listed file exists and writes
    /// `manifest.json`.
    pub fn finish(&mut self) -> Result<PathBuf> {
        for f in &self.files {
            let p = self.out_dir.join(f);
            if !p.is_file() {
                return Err(Error::invalid("manifest", format!("listed output {} was not written", p.display())));
            }
        }
        self.finished_unix_s = Some(now());
        let path = self.out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::invalid("format", format!("unsupported manifest format `{}`", m.format)));
        }
        if m.config.hash() != m.config_hash {
            return Err(Error::invalid("config_hash", "embedded config does not match its hash"));
        }
        m.config.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_tamper_check() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new(Command::Train, ExperimentConfig::default(), vec![0, 1], dir.path());
        let p = m.add_file("a.csv");
        std::fs::write(&p, "x").unwrap();
        let path = m.finish().unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.method, "gae-ppo");

        let text = std::fs::read_to_string(&path).unwrap().replace("\"gae_lambda\": 0.95", "\"gae_lambda\": 0.5");
        std::fs::write(&path, text).unwrap();
        assert!(RunManifest::load(&path).is_err());
    }

    #[test]
    fn missing_output_fails_finish() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new(Command::Train, ExperimentConfig::default(), vec![0], dir.path());
        m.add_file("never.csv");
        assert!(m.finish().is_err());
    }

    #[test]
    fn lambda_zero_is_labelled_ppo() {
        let mut cfg = ExperimentConfig::default();
        cfg.rl.gae_lambda = 0.0;
        let m = RunManifest::new(Command::Train, cfg, vec![0], Path::new("."));
        assert_eq!(m.method, "ppo");
    }

    #[test]
    fn axis_names_parse() {
        assert_eq!(SweepAxis::parse("u_max").unwrap(), SweepAxis::UMax);
        assert_eq!(SweepAxis::parse("vehicles").unwrap(), SweepAxis::NumVehicles);
        assert!(SweepAxis::parse("speed").is_err());
    }
}
