use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::agent::{Agent, ValueNorm};
use super::mlp::{num_params, Mlp};
use super::policy::{ActionLayout, Policy};
use super::train::Trainer;
use crate::config::ExperimentConfig;
use crate::env::{RewardWeights, Scenario};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "semveh-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetState {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl NetState {
    fn from_mlp(m: &Mlp) -> Self {
        NetState {
            sizes: m.sizes.clone(),
            params: m.params.clone(),
        }
    }

    fn to_mlp(&self, what: &str) -> Result<Mlp> {
        let expected = num_params(&self.sizes);
        if self.sizes.len() < 2 || expected != self.params.len() {
            return Err(Error::invalid(
                what,
                format!("{} parameters for layer sizes {:?}", self.params.len(), self.sizes),
            ));
        }
        Ok(Mlp {
            sizes: self.sizes.clone(),
            params: self.params.clone(),
        })
    }
}

/// Everything needed to resume training bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub iteration: usize,
    pub actor: NetState,
    pub log_std: Vec<f64>,
    pub critic: NetState,
    pub value_norm: ValueNorm,
    pub actor_opt: AdamState,
    pub log_std_opt: AdamState,
    pub critic_opt: AdamState,
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn from_trainer(t: &Trainer) -> Self {
        let config = ExperimentConfig {
            scenario: t.scenario.cfg.clone(),
            rl: t.cfg.clone(),
        };
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            config_hash: config.hash(),
            config,
            seed: t.seed,
            iteration: t.iteration,
            actor: NetState::from_mlp(&t.agent.policy.net),
            log_std: t.agent.policy.log_std.clone(),
            critic: NetState::from_mlp(&t.agent.critic),
            value_norm: t.agent.value_norm.clone(),
            actor_opt: t.actor_opt.clone(),
            log_std_opt: t.log_std_opt.clone(),
            critic_opt: t.critic_opt.clone(),
            rng: t.rng.clone(),
        }
    }

    pub fn agent(&self) -> Result<Agent> {
        let layout = ActionLayout::from_scenario(&self.config.scenario);
        let net = self.actor.to_mlp("actor")?;
        let mut policy = Policy::new(layout, self.config.rl.head, net, self.config.rl.initial_log_std);
        if policy.log_std.len() != self.log_std.len() {
            return Err(Error::invalid("log_std", "length does not match the head"));
        }
        policy.log_std = self.log_std.clone();
        if policy.net.output_dim() != Policy::output_dim(&layout, policy.head) {
            return Err(Error::Dimension {
                expected: Policy::output_dim(&layout, policy.head),
                got: policy.net.output_dim(),
            });
        }
        Ok(Agent {
            policy,
            critic: self.critic.to_mlp("critic")?,
            value_norm: self.value_norm.clone(),
        })
    }

    pub fn scenario(&self) -> Result<std::sync::Arc<Scenario>> {
        Scenario::new(self.config.scenario.clone(), RewardWeights::from_train(&self.config.rl))
    }

    pub fn to_trainer(&self) -> Result<Trainer> {
        Ok(Trainer::from_parts(
            self.scenario()?,
            self.config.rl.clone(),
            self.seed,
            self.agent()?,
            Some((self.actor_opt.clone(), self.log_std_opt.clone(), self.critic_opt.clone())),
            self.rng.clone(),
            self.iteration,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let ck: Checkpoint = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: format!("{} at `{}`", e.inner(), e.path()),
        })?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::invalid("format", format!("unsupported checkpoint format {}", ck.format)));
        }
        if ck.config.hash() != ck.config_hash {
            return Err(Error::invalid("config_hash", "does not match the embedded config"));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, TrainConfig};

    fn trainer() -> Trainer {
        let cfg = ScenarioConfig {
            num_vehicles: 2,
            episode_steps: 8,
            ..Default::default()
        };
        let rl = TrainConfig {
            hidden_sizes: vec![8],
            iterations: 4,
            steps_per_iteration: 32,
            minibatch_size: 16,
            epochs_per_update: 1,
            num_envs: 2,
            lr_initial: 1e-3,
            ..Default::default()
        };
        let sc = Scenario::new(cfg, RewardWeights::from_train(&rl)).unwrap();
        Trainer::new(sc, rl, 3).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut t = trainer();
        t.train_iteration().unwrap();
        let ck = Checkpoint::from_trainer(&t);
        let back = Checkpoint::from_json(&ck.to_json().unwrap(), "mem").unwrap();
        assert_eq!(ck, back);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let mut full = trainer();
        let mut log_full = Vec::new();
        for _ in 0..4 {
            log_full.push(full.train_iteration().unwrap());
        }
        let mut part = trainer();
        part.train_iteration().unwrap();
        part.train_iteration().unwrap();
        let text = Checkpoint::from_trainer(&part).to_json().unwrap();
        let mut resumed = Checkpoint::from_json(&text, "mem").unwrap().to_trainer().unwrap();
        let rest = vec![resumed.train_iteration().unwrap(), resumed.train_iteration().unwrap()];
        assert_eq!(&log_full[2..], &rest[..]);
        assert_eq!(full.agent, resumed.agent);
    }

    #[test]
    fn tampered_config_rejected() {
        let t = trainer();
        let mut ck = Checkpoint::from_trainer(&t);
        ck.config.rl.clip = 0.2;
        assert!(Checkpoint::from_json(&ck.to_json().unwrap(), "mem").is_err());
    }
}
