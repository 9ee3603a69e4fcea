use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::adam::{clip_grad_norm, AdamState, LinearSchedule};
use super::agent::{actor_loss_and_grad, critic_loss_and_grad, Agent};
use super::gae::{gae_advantages, normalize_advantages, one_step_targets};
use super::policy::ActionLayout;
use super::rollout::{collect_worker, RolloutBuffer};
use crate::config::{TrainConfig, ValueTarget};
use crate::env::Scenario;
use crate::error::{Error, Result};
use crate::par;
use crate::seeding::{derive_rng, derive_seed, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub mean_return: f64,
    pub mean_qoe: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub kl: f64,
    pub entropy: f64,
    pub lr: f64,
    pub steps: usize,
    pub episodes: usize,
}

/// GAE-PPO learner. Setting `gae_lambda = 0` gives plain PPO with one-step
/// TD advantages through the same code path.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub scenario: Arc<Scenario>,
    pub cfg: TrainConfig,
    pub seed: u64,
    pub agent: Agent,
    pub actor_opt: AdamState,
    pub log_std_opt: AdamState,
    pub critic_opt: AdamState,
    pub rng: ChaCha8Rng,
    pub iteration: usize,
    schedule: LinearSchedule,
}

impl Trainer {
    pub fn new(scenario: Arc<Scenario>, cfg: TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut init_rng = derive_rng(seed, stream::INIT, 0);
        let layout = ActionLayout::from_scenario(&scenario.cfg);
        let agent = Agent::new(scenario.state_dim(), layout, &cfg, &mut init_rng);
        Ok(Self::from_parts(
            scenario,
            cfg,
            seed,
            agent,
            None,
            derive_rng(seed, stream::SHUFFLE, 0),
            0,
        ))
    }

    pub fn from_parts(
        scenario: Arc<Scenario>,
        cfg: TrainConfig,
        seed: u64,
        agent: Agent,
        optimizers: Option<(AdamState, AdamState, AdamState)>,
        rng: ChaCha8Rng,
        iteration: usize,
    ) -> Self {
        let (actor_opt, log_std_opt, critic_opt) = optimizers.unwrap_or_else(|| {
            (
                AdamState::new(agent.policy.net.params.len()),
                AdamState::new(agent.policy.log_std.len()),
                AdamState::new(agent.critic.params.len()),
            )
        });
        let schedule = LinearSchedule {
            initial: cfg.lr_initial,
            final_: cfg.lr_final,
            iterations: cfg.iterations,
        };
        Trainer {
            scenario,
            cfg,
            seed,
            agent,
            actor_opt,
            log_std_opt,
            critic_opt,
            rng,
            iteration,
            schedule,
        }
    }

    pub fn lr(&self) -> f64 {
        self.schedule.at(self.iteration)
    }

    /// Gathers at least `steps_per_iteration` transitions from `num_envs`
    /// workers, each running complete episodes.
    pub fn collect(&self) -> Result<RolloutBuffer> {
        let n = self.cfg.num_envs;
        let per_env = self.cfg.steps_per_iteration.div_ceil(n);
        let it = self.iteration as u64;
        let results = par::map_range(n, |k| {
            let env_seed = derive_seed(self.seed, stream::ROLLOUT_ENV, it * n as u64 + k as u64);
            let mut rng = derive_rng(self.seed, stream::ROLLOUT_POLICY, it * n as u64 + k as u64);
            collect_worker(&self.agent, &self.scenario, env_seed, per_env, &mut rng)
        });
        let mut buffer = RolloutBuffer::new(self.cfg.steps_per_iteration);
        for episodes in results {
            for ep in episodes? {
                buffer.push_episode(ep)?;
            }
        }
        Ok(buffer)
    }

    /// One collect-and-update cycle.
    pub fn train_iteration(&mut self) -> Result<IterationMetrics> {
        let lr = self.lr();
        let mut buffer = self.collect()?;
        let metrics = self.update(&buffer, lr)?;
        buffer.clear();
        self.iteration += 1;
        Ok(metrics)
    }

    fn update(&mut self, buffer: &RolloutBuffer, lr: f64) -> Result<IterationMetrics> {
        let cfg = &self.cfg;
        let tr = &buffer.transitions;
        let n = tr.len();
        let rewards: Vec<f64> = tr.iter().map(|t| t.reward).collect();
        let dones: Vec<bool> = tr.iter().map(|t| t.done).collect();
        let mut values: Vec<f64> = tr.iter().map(|t| t.value).collect();
        values.push(0.0);
        let (mut adv, gae_targets) = gae_advantages(&rewards, &values, &dones, cfg.discount, cfg.gae_lambda);
        let targets = match cfg.value_target {
            ValueTarget::Gae => gae_targets,
            ValueTarget::OneStep => one_step_targets(&rewards, &values, &dones, cfg.discount),
        };
        self.agent.value_norm.update(&targets, &mut self.agent.critic);
        let norm_targets: Vec<f64> = targets.iter().map(|&t| self.agent.value_norm.normalize(t)).collect();
        normalize_advantages(&mut adv);

        let dim = self.scenario.state_dim();
        let mut states = Array2::<f64>::zeros((n, dim));
        for (i, t) in tr.iter().enumerate() {
            states.row_mut(i).assign(&ndarray::ArrayView1::from(&t.state[..]));
        }

        let mut order: Vec<usize> = (0..n).collect();
        let (mut actor_sum, mut critic_sum, mut kl_sum, mut ent_sum, mut batches) = (0.0, 0.0, 0.0, 0.0, 0usize);
        for _ in 0..cfg.epochs_per_update {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                let mb_states = states.select(ndarray::Axis(0), chunk);
                let samples: Vec<_> = chunk.iter().map(|&i| tr[i].sample.clone()).collect();
                let old_lp: Vec<f64> = chunk.iter().map(|&i| tr[i].log_prob).collect();
                let mb_adv: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
                let mb_tgt: Vec<f64> = chunk.iter().map(|&i| norm_targets[i]).collect();

                let mut actor = actor_loss_and_grad(
                    &self.agent.policy,
                    mb_states.view(),
                    &samples,
                    &old_lp,
                    &mb_adv,
                    cfg.clip,
                    cfg.entropy_coef,
                )?;
                let (c_loss, mut c_grad) = critic_loss_and_grad(&self.agent.critic, mb_states.view(), &mb_tgt)?;
                if !actor.loss.is_finite() || !c_loss.is_finite() {
                    return Err(self.non_finite(&format!("actor loss {} critic loss {}", actor.loss, c_loss)));
                }
                if let Some(max) = cfg.max_grad_norm {
                    clip_grad_norm(&mut actor.grad.net, max);
                    clip_grad_norm(&mut c_grad, max);
                }
                self.actor_opt.step(&mut self.agent.policy.net.params, &actor.grad.net, lr);
                if !self.agent.policy.log_std.is_empty() {
                    self.log_std_opt.step(&mut self.agent.policy.log_std, &actor.grad.log_std, lr);
                }
                self.critic_opt.step(&mut self.agent.critic.params, &c_grad, lr);
                actor_sum += actor.loss;
                critic_sum += c_loss;
                kl_sum += actor.kl;
                ent_sum += actor.entropy;
                batches += 1;
            }
        }
        if !self.agent.all_finite() {
            return Err(self.non_finite("parameters after update"));
        }
        let b = batches.max(1) as f64;
        let episodes = buffer.episode_returns.len();
        Ok(IterationMetrics {
            iteration: self.iteration,
            mean_return: buffer.episode_returns.iter().sum::<f64>() / episodes.max(1) as f64,
            mean_qoe: buffer.episode_qoe.iter().sum::<f64>() / episodes.max(1) as f64,
            actor_loss: actor_sum / b,
            critic_loss: critic_sum / b,
            kl: kl_sum / b,
            entropy: ent_sum / b,
            lr,
            steps: n,
            episodes,
        })
    }

    fn non_finite(&self, what: &str) -> Error {
        let p = &self.agent.policy.net.params;
        let bad = p.iter().filter(|v| !v.is_finite()).count();
        let max = p.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
        Error::NonFinite(format!(
            "{what} at iteration {} (seed {}): {bad} non-finite actor params, max |finite| {max:.3e}, lr {:.3e}",
            self.iteration,
            self.seed,
            self.lr()
        ))
    }

    /// Runs the remaining iterations, calling `on_iter` after each.
    pub fn train<F>(&mut self, mut on_iter: F) -> Result<()>
    where
        F: FnMut(&Trainer, &IterationMetrics) -> Result<()>,
    {
        while self.iteration < self.cfg.iterations {
            let m = self.train_iteration()?;
            on_iter(self, &m)?;
        }
        Ok(())
    }
}
