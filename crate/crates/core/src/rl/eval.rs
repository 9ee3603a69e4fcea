use std::sync::Arc;

use rand::Rng;

use super::agent::Agent;
use crate::env::{episode_metrics, project_action, Action, Env, EpisodeSummary, Scenario, StepRecord};
use crate::error::Result;
use crate::par;
use crate::seeding::{derive_rng, derive_seed, stream};

/// How actions are chosen during evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    /// Argmax of every head.
    Greedy(&'a Agent),
    /// Sampled from the policy.
    Stochastic(&'a Agent),
    /// Uniform over raw actions, then projected.
    Random,
}

pub fn uniform_random_action<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Action {
    let cfg = &scenario.cfg;
    let w = cfg.num_v2i_links();
    let q = cfg.num_v2v_pairs();
    let raw = Action {
        subband: (0..q)
            .map(|_| {
                let s = rng.random_range(0..=w);
                (s < w).then_some(s)
            })
            .collect(),
        power_level: (0..q).map(|_| rng.random_range(0..cfg.num_power_levels())).collect(),
        u: (0..q).map(|_| rng.random_range(1..=cfg.u_max)).collect(),
    };
    project_action(&raw, cfg)
}

impl Controller<'_> {
    pub fn act<R: Rng + ?Sized>(&self, env: &mut Env, state: &[f64], rng: &mut R) -> Result<Action> {
        let raw = match self {
            Controller::Greedy(agent) => {
                let out = agent.policy.forward_one(state)?;
                agent.policy.to_action(&agent.policy.greedy(&out))
            }
            Controller::Stochastic(agent) => {
                let out = agent.policy.forward_one(state)?;
                agent.policy.to_action(&agent.policy.sample(&out, rng))
            }
            Controller::Random => uniform_random_action(env.scenario(), rng),
        };
        Ok(env.project(&raw))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub summary: EpisodeSummary,
    pub records: Vec<StepRecord>,
}

pub fn run_episode<R: Rng + ?Sized>(controller: Controller<'_>, env: &mut Env, rng: &mut R) -> Result<EpisodeTrace> {
    let mut state = env.state();
    let mut records = Vec::new();
    loop {
        let action = controller.act(env, &state, rng)?;
        let step = env.step(&action)?;
        records.push(step.record(&env.tracker().remaining_words));
        if step.done {
            break;
        }
        state = step.state;
    }
    Ok(EpisodeTrace {
        summary: episode_metrics(env.tracker()),
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeTrace>,
    pub mean_return: f64,
    pub mean_qoe: f64,
    /// Per vehicle, unmet demand counted as the episode length.
    pub mean_steps_to_demand: Vec<f64>,
    pub met_fraction: Vec<f64>,
    pub mean_similarity: Option<f64>,
}

impl EvalReport {
    pub fn from_episodes(episodes: Vec<EpisodeTrace>) -> Self {
        let n = episodes.len().max(1) as f64;
        let q = episodes.first().map_or(0, |e| e.summary.steps_to_fulfillment.len());
        let mean_return = episodes.iter().map(|e| e.summary.cumulative_reward).sum::<f64>() / n;
        let mean_qoe = episodes.iter().map(|e| e.summary.cumulative_qoe).sum::<f64>() / n;
        let mean_steps_to_demand = (0..q)
            .map(|v| {
                episodes
                    .iter()
                    .map(|e| e.summary.steps_to_fulfillment[v].steps() as f64)
                    .sum::<f64>()
                    / n
            })
            .collect();
        let met_fraction = (0..q)
            .map(|v| episodes.iter().filter(|e| e.summary.steps_to_fulfillment[v].is_met()).count() as f64 / n)
            .collect();
        let sims: Vec<f64> = episodes.iter().filter_map(|e| e.summary.mean_similarity).collect();
        let mean_similarity = (!sims.is_empty()).then(|| sims.iter().sum::<f64>() / sims.len() as f64);
        EvalReport {
            episodes,
            mean_return,
            mean_qoe,
            mean_steps_to_demand,
            met_fraction,
            mean_similarity,
        }
    }
}

/// Runs `episodes` independent episodes. Episode `e` always sees the same
/// environment seed for a given `seed`, so controllers are compared on
/// identical channel draws.
pub fn evaluate(scenario: &Arc<Scenario>, controller: Controller<'_>, episodes: usize, seed: u64) -> Result<EvalReport> {
    let traces = par::map_range(episodes, |e| {
        let mut env = Env::new(scenario.clone(), derive_seed(seed, stream::EVAL_ENV, e as u64));
        let mut rng = derive_rng(seed, stream::EVAL_POLICY, e as u64);
        run_episode(controller, &mut env, &mut rng)
    });
    Ok(EvalReport::from_episodes(traces.into_iter().collect::<Result<_>>()?))
}

/// Deterministic greedy evaluation of a trained agent.
pub fn evaluate_policy(scenario: &Arc<Scenario>, agent: &Agent, episodes: usize, seed: u64) -> Result<EvalReport> {
    evaluate(scenario, Controller::Greedy(agent), episodes, seed)
}

pub fn evaluate_random(scenario: &Arc<Scenario>, episodes: usize, seed: u64) -> Result<EvalReport> {
    evaluate(scenario, Controller::Random, episodes, seed)
}
