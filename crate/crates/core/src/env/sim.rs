use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::action::{project_action_with, Action};
use super::demand::{DemandTracker, StepRecord};
use super::reward::{evaluate_action, pilot_sinr_db, Evaluation};
use super::state::{encode_state, Observation};
use super::Scenario;
use crate::channel::{
    sample_fading, sample_shadowing, sinr_v2i, update_mobility, ChannelState, Fading, Shadowing, Topology, TxPlan,
};
use crate::config::FadingMode;
use crate::error::{Error, Result};
use crate::units::linear_to_db;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub qoe: f64,
    pub state: Vec<f64>,
    pub done: bool,
    pub evaluation: Evaluation,
}

impl StepResult {
    pub fn record(&self, remaining_words: &[f64]) -> StepRecord {
        StepRecord {
            reward: self.reward,
            qoe: self.qoe,
            xi_min: self.evaluation.xi_min(),
            sinr_min_db: self.evaluation.sinr_min_db(),
            remaining_words: remaining_words.to_vec(),
        }
    }
}

/// One simulated road segment. Shadowing is drawn per episode, fading per
/// step (or per episode in `frozen_per_episode` mode).
#[derive(Debug, Clone)]
pub struct Env {
    scenario: Arc<Scenario>,
    rng: ChaCha8Rng,
    topology: Topology,
    shadowing: Shadowing,
    fading: Fading,
    channel: ChannelState,
    tracker: DemandTracker,
    obs: Observation,
    steps: usize,
    done: bool,
}

impl Env {
    /// Creates the environment and performs the first reset.
    pub fn new(scenario: Arc<Scenario>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = &scenario.cfg;
        let topology = Topology::random(cfg, &mut rng);
        let shadowing = sample_shadowing(cfg, &mut rng);
        let fading = sample_fading(cfg, &mut rng);
        let channel = ChannelState::compose(&topology, cfg, &shadowing, &fading);
        let tracker = DemandTracker::new(cfg.num_v2v_pairs(), cfg.demand_words);
        let mut env = Env {
            obs: Observation {
                v2i_gain_db: Vec::new(),
                v2i_sinr_db: Vec::new(),
                v2v_sinr_db: Vec::new(),
                extras: None,
            },
            scenario,
            rng,
            topology,
            shadowing,
            fading,
            channel,
            tracker,
            steps: 0,
            done: false,
        };
        env.obs = env.initial_observation();
        env
    }

    /// Fresh topology, shadowing, fading and demand.
    pub fn reset(&mut self) -> Vec<f64> {
        let cfg = &self.scenario.cfg;
        self.topology = Topology::random(cfg, &mut self.rng);
        self.shadowing = sample_shadowing(cfg, &mut self.rng);
        self.fading = sample_fading(cfg, &mut self.rng);
        self.channel = ChannelState::compose(&self.topology, cfg, &self.shadowing, &self.fading);
        self.tracker = DemandTracker::new(cfg.num_v2v_pairs(), cfg.demand_words);
        self.steps = 0;
        self.done = false;
        self.obs = self.initial_observation();
        self.state()
    }

    fn initial_observation(&self) -> Observation {
        let cfg = &self.scenario.cfg;
        let plan = TxPlan::silent(cfg.num_v2i_links(), cfg.num_v2v_pairs(), cfg.v2i_power_dbm);
        let v2i_sinr_db = (0..cfg.num_v2i_links())
            .map(|w| linear_to_db(sinr_v2i(w, &plan, &self.channel, cfg.noise_a_dbm)))
            .collect();
        let v2v_sinr_db = (0..cfg.num_v2v_pairs())
            .map(|q| pilot_sinr_db(&self.scenario, &self.channel, q))
            .collect();
        Observation {
            v2i_gain_db: self.channel.v2i_bs.iter().map(|g| g.db()).collect(),
            v2i_sinr_db,
            v2v_sinr_db,
            extras: self.extras(),
        }
    }

    fn extras(&self) -> Option<(Vec<f64>, f64)> {
        let cfg = &self.scenario.cfg;
        cfg.state_extras.then(|| {
            let demand = self
                .tracker
                .remaining_words
                .iter()
                .map(|&r| if cfg.demand_words > 0.0 { r / cfg.demand_words } else { 0.0 })
                .collect();
            let time = 1.0 - self.steps as f64 / cfg.episode_steps as f64;
            (demand, time)
        })
    }

    pub fn state(&self) -> Vec<f64> {
        encode_state(&self.obs)
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn channel(&self) -> &ChannelState {
        &self.channel
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn tracker(&self) -> &DemandTracker {
        &self.tracker
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Pairs that still have words to deliver.
    pub fn active_pairs(&self) -> Vec<bool> {
        self.tracker.remaining_words.iter().map(|&r| r > 0.0).collect()
    }

    /// Feasible version of `raw` under the configured conflict rule.
    pub fn project(&mut self, raw: &Action) -> Action {
        let rule = self.scenario.cfg.conflict_resolution;
        project_action_with(raw, &self.scenario.cfg, rule, &self.channel, &mut self.rng)
    }

    /// Moves vehicles by one step and redraws fading per the fading mode.
    pub fn advance_channel(&mut self) {
        let cfg = &self.scenario.cfg;
        self.topology = update_mobility(&self.topology, cfg.step_duration_s);
        if cfg.fading == FadingMode::Rayleigh {
            self.fading = sample_fading(cfg, &mut self.rng);
        }
        self.channel = ChannelState::compose(&self.topology, cfg, &self.shadowing, &self.fading);
    }

    /// Applies a feasible action on the current channel without advancing it.
    pub fn apply(&mut self, action: &Action) -> Result<StepResult> {
        let cfg = &self.scenario.cfg;
        if self.done {
            return Err(Error::Infeasible("episode already finished; call reset".into()));
        }
        if !action.is_feasible(cfg) {
            return Err(Error::Infeasible(format!("{action:?}")));
        }
        let active = self.active_pairs();
        let eval = evaluate_action(&self.scenario, &self.channel, action, Some(&active));
        self.tracker.record(
            &eval.delivered_words,
            eval.qoe,
            eval.reward,
            eval.xi.iter().flatten().copied(),
        );
        self.steps += 1;
        self.done = self.tracker.all_met() || self.steps >= cfg.episode_steps;

        let v2v_sinr_db = (0..cfg.num_v2v_pairs())
            .map(|q| eval.v2v_sinr_db[q].unwrap_or_else(|| pilot_sinr_db(&self.scenario, &self.channel, q)))
            .collect();
        self.obs = Observation {
            v2i_gain_db: self.channel.v2i_bs.iter().map(|g| g.db()).collect(),
            v2i_sinr_db: eval.v2i_sinr_db.clone(),
            v2v_sinr_db,
            extras: self.extras(),
        };
        Ok(StepResult {
            reward: eval.reward,
            qoe: eval.qoe,
            state: self.state(),
            done: self.done,
            evaluation: eval,
        })
    }

    /// Advances the channel and applies `action`.
    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        if !action.is_feasible(&self.scenario.cfg) {
            return Err(Error::Infeasible(format!("{action:?}")));
        }
        self.advance_channel();
        self.apply(action)
    }
}
