//! Actor-critic GAE-PPO with plain-PPO (`gae_lambda = 0`) and random
//! baselines.

mod adam;
mod agent;
mod checkpoint;
mod eval;
mod gae;
mod mlp;
mod policy;
mod ppo;
mod rollout;
mod train;

pub use adam::{clip_grad_norm, AdamState, LinearSchedule};
pub use agent::{
    actor_loss_and_grad, critic_loss_and_grad, finite_difference_check, gradient_check_actor, gradient_check_critic,
    relative_error, ActorLoss, Agent, GradCheckReport, ValueNorm,
};
pub use checkpoint::Checkpoint;
pub use eval::{evaluate, evaluate_policy, evaluate_random, run_episode, uniform_random_action, Controller, EpisodeTrace, EvalReport};
pub use gae::{gae_advantages, normalize_advantages, one_step_targets};
pub use mlp::{num_params, ForwardCache, Mlp};
pub use policy::{log_softmax, squash_to_index, ActionLayout, Policy, PolicyGrad, PolicySample};
pub use ppo::{critic_loss, ppo_clip_grad, ppo_clip_objective};
pub use rollout::{collect_worker, run_sampled_episode, Episode, RolloutBuffer, Transition};
pub use train::{IterationMetrics, Trainer};
