use std::sync::Arc;

use rand::Rng;

use super::agent::Agent;
use super::policy::PolicySample;
use crate::env::{Env, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub sample: PolicySample,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// On-policy storage of complete episodes. Cleared after every update.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    /// Undiscounted penalized return of every stored episode.
    pub episode_returns: Vec<f64>,
    pub episode_qoe: Vec<f64>,
    pub capacity: usize,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        RolloutBuffer {
            capacity,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    /// Appends one finished episode; its last transition must be terminal.
    pub fn push_episode(&mut self, episode: Episode) -> Result<()> {
        if episode.transitions.last().is_some_and(|t| !t.done) {
            return Err(Error::invalid("rollout", "episode must end with a terminal step"));
        }
        self.episode_returns.push(episode.transitions.iter().map(|t| t.reward).sum());
        self.episode_qoe.push(episode.qoe);
        self.transitions.extend(episode.transitions);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.episode_returns.clear();
        self.episode_qoe.clear();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub qoe: f64,
}

/// Runs one full episode from the env's current (reset) state, sampling
/// from the policy.
pub fn run_sampled_episode<R: Rng + ?Sized>(agent: &Agent, env: &mut Env, rng: &mut R) -> Result<Episode> {
    let mut state = env.state();
    let mut transitions = Vec::with_capacity(env.scenario().cfg.episode_steps);
    let mut qoe = 0.0;
    loop {
        let out = agent.policy.forward_one(&state)?;
        let sample = agent.policy.sample(&out, rng);
        let log_prob = agent.policy.log_prob(&out, &sample);
        let value = agent.value(&state)?;
        let action = env.project(&agent.policy.to_action(&sample));
        let step = env.step(&action)?;
        qoe += step.qoe;
        transitions.push(Transition {
            state,
            sample,
            log_prob,
            reward: step.reward,
            value,
            done: step.done,
        });
        if step.done {
            return Ok(Episode { transitions, qoe });
        }
        state = step.state;
    }
}

/// Collects complete episodes from a fresh environment seeded with
/// `env_seed` until at least `min_steps` transitions are gathered.
pub fn collect_worker<R: Rng + ?Sized>(
    agent: &Agent,
    scenario: &Arc<Scenario>,
    env_seed: u64,
    min_steps: usize,
    rng: &mut R,
) -> Result<Vec<Episode>> {
    let mut env = Env::new(scenario.clone(), env_seed);
    let mut episodes = Vec::new();
    let mut steps = 0;
    while steps < min_steps {
        if !episodes.is_empty() {
            env.reset();
        }
        let ep = run_sampled_episode(agent, &mut env, rng)?;
        steps += ep.transitions.len();
        episodes.push(ep);
    }
    Ok(episodes)
}
