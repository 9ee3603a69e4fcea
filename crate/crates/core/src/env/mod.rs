//! The transmission MDP: observation encoding, action projection, penalized
//! reward and demand bookkeeping.
//!
//! The channel used by step `t` is drawn at the start of that step, so the
//! observation the policy acts on always describes the previous step.

mod action;
mod demand;
mod reward;
mod sim;
mod state;

use std::sync::Arc;

pub use action::{project_action, project_action_with, Action};
pub use demand::{episode_metrics, DemandTracker, EpisodeCsvWriter, EpisodeSummary, Fulfillment, StepRecord};
pub use reward::{delivered_words, evaluate_action, pilot_sinr_db, Evaluation};
pub use sim::{Env, StepResult};
pub use state::{encode_state, state_dim, Observation, GAIN_CENTER_DB, GAIN_SCALE_DB, SINR_CENTER_DB, SINR_SCALE_DB};

use crate::config::{ScenarioConfig, TrainConfig};
use crate::error::Result;
use crate::semantics::{QoeParams, SimilarityModel};

/// Penalty weights `lambda_1` (similarity) and `lambda_2` (SINR).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub similarity: f64,
    pub sinr: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            similarity: 1.0,
            sinr: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn from_train(cfg: &TrainConfig) -> Self {
        RewardWeights {
            similarity: cfg.penalty_similarity,
            sinr: cfg.penalty_sinr,
        }
    }
}

/// Everything the reward depends on besides the channel. Immutable and
/// shared between environment copies.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub similarity: SimilarityModel,
    pub qoe: QoeParams,
    pub weights: RewardWeights,
}

impl Scenario {
    pub fn new(cfg: ScenarioConfig, weights: RewardWeights) -> Result<Arc<Self>> {
        cfg.validate()?;
        let similarity = SimilarityModel::from_config(&cfg.similarity)?;
        let qoe = QoeParams::from_scenario(&cfg);
        Ok(Arc::new(Scenario {
            cfg,
            similarity,
            qoe,
            weights,
        }))
    }

    pub fn num_v2i(&self) -> usize {
        self.cfg.num_v2i_links()
    }

    pub fn num_v2v(&self) -> usize {
        self.cfg.num_v2v_pairs()
    }

    pub fn state_dim(&self) -> usize {
        state_dim(&self.cfg)
    }
}
