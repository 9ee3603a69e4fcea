use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::policy::{ActionLayout, Policy, PolicyGrad, PolicySample};
use super::ppo::{ppo_clip_grad, ppo_clip_objective};
use crate::config::TrainConfig;
use crate::error::Result;

/// Running target statistics for the critic. The critic predicts
/// standardized values; [`ValueNorm::update`] rescales its output layer so
/// de-normalized predictions are unchanged by a statistics update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueNorm {
    pub enabled: bool,
    pub mean: f64,
    pub mean_sq: f64,
    pub initialized: bool,
}

const VALUE_NORM_RATE: f64 = 0.1;
const MIN_VALUE_STD: f64 = 1e-4;

impl ValueNorm {
    pub fn new(enabled: bool) -> Self {
        ValueNorm {
            enabled,
            mean: 0.0,
            mean_sq: 1.0,
            initialized: false,
        }
    }

    pub fn std(&self) -> f64 {
        if !self.enabled {
            return 1.0;
        }
        (self.mean_sq - self.mean * self.mean).max(0.0).sqrt().max(MIN_VALUE_STD)
    }

    fn shift(&self) -> f64 {
        if self.enabled {
            self.mean
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        self.shift() + self.std() * v
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.shift()) / self.std()
    }

    pub fn update(&mut self, targets: &[f64], critic: &mut Mlp) {
        if !self.enabled || targets.is_empty() {
            return;
        }
        let n = targets.len() as f64;
        let m = targets.iter().sum::<f64>() / n;
        let sq = targets.iter().map(|t| t * t).sum::<f64>() / n;
        let (old_mean, old_std) = (self.mean, self.std());
        if self.initialized {
            self.mean += VALUE_NORM_RATE * (m - self.mean);
            self.mean_sq += VALUE_NORM_RATE * (sq - self.mean_sq);
        } else {
            self.mean = m;
            self.mean_sq = sq;
            self.initialized = true;
        }
        let (new_mean, new_std) = (self.mean, self.std());
        let (w, b) = critic.output_layer_mut();
        for x in w.iter_mut() {
            *x *= old_std / new_std;
        }
        for x in b.iter_mut() {
            *x = (old_std * *x + old_mean - new_mean) / new_std;
        }
    }
}

/// Actor and critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub policy: Policy,
    pub critic: Mlp,
    pub value_norm: ValueNorm,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, layout: ActionLayout, cfg: &TrainConfig, rng: &mut R) -> Self {
        let mut sizes = vec![state_dim];
        sizes.extend(&cfg.hidden_sizes);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(Policy::output_dim(&layout, cfg.head));
        sizes.push(1);
        let actor = Mlp::init(&actor_sizes, 0.01, rng);
        let critic = Mlp::init(&sizes, 1.0, rng);
        Agent {
            policy: Policy::new(layout, cfg.head, actor, cfg.initial_log_std),
            critic,
            value_norm: ValueNorm::new(cfg.normalize_values),
        }
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.value_norm.denormalize(self.critic.forward_one(state)?[0]))
    }

    pub fn all_finite(&self) -> bool {
        self.policy.net.all_finite() && self.critic.all_finite() && self.policy.log_std.iter().all(|v| v.is_finite())
    }
}

/// Diagnostics of one actor-loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorLoss {
    pub loss: f64,
    pub grad: PolicyGrad,
    /// Mean of `(rho - 1) - ln rho`, a non-negative KL estimate.
    pub kl: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
}

/// `-mean(clipped surrogate) - entropy_coef * mean(entropy)` and its gradient.
pub fn actor_loss_and_grad(
    policy: &Policy,
    states: ArrayView2<'_, f64>,
    samples: &[PolicySample],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
    entropy_coef: f64,
) -> Result<ActorLoss> {
    let (out, cache) = policy.forward(states)?;
    let b = samples.len();
    let inv = 1.0 / b as f64;
    let mut d_out = Array2::<f64>::zeros(out.raw_dim());
    let mut d_log_std = vec![0.0; policy.log_std.len()];
    let (mut obj, mut ent, mut kl, mut clipped) = (0.0, 0.0, 0.0, 0usize);
    for i in 0..b {
        let row = out.row(i);
        let row = row.as_slice().expect("row-major");
        let lp = policy.log_prob(row, &samples[i]);
        let a = advantages[i];
        obj += ppo_clip_objective(lp, old_log_probs[i], a, clip);
        ent += policy.entropy(row);
        let log_ratio = lp - old_log_probs[i];
        kl += log_ratio.exp() - 1.0 - log_ratio;
        if (log_ratio.exp() - 1.0).abs() > clip {
            clipped += 1;
        }
        let g = ppo_clip_grad(lp, old_log_probs[i], a, clip);
        let mut d_row = d_out.row_mut(i);
        let d_row = d_row.as_slice_mut().expect("row-major");
        policy.accumulate_log_prob_grad(row, &samples[i], -g * inv, d_row, &mut d_log_std);
        policy.accumulate_entropy_grad(row, -entropy_coef * inv, d_row, &mut d_log_std);
    }
    let grad = PolicyGrad {
        net: policy.net.backward(&cache, &d_out),
        log_std: d_log_std,
    };
    Ok(ActorLoss {
        loss: -obj * inv - entropy_coef * ent * inv,
        grad,
        kl: kl * inv,
        clip_fraction: clipped as f64 * inv,
        entropy: ent * inv,
    })
}

/// Mean squared error of the critic against `targets` and its gradient.
pub fn critic_loss_and_grad(critic: &Mlp, states: ArrayView2<'_, f64>, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (out, cache) = critic.forward(states)?;
    let b = targets.len() as f64;
    let mut d_out = Array2::<f64>::zeros(out.raw_dim());
    let mut loss = 0.0;
    for (i, t) in targets.iter().enumerate() {
        let e = out[[i, 0]] - t;
        loss += e * e;
        d_out[[i, 0]] = 2.0 * e / b;
    }
    Ok((loss / b, critic.backward(&cache, &d_out)))
}

/// Worst disagreements between analytic and finite-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter index, analytic, numeric, relative error)`, worst first.
    pub worst: Vec<(usize, f64, f64, f64)>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` with central differences of `f` at step `h`.
pub fn finite_difference_check<F>(params: &[f64], analytic: &[f64], h: f64, mut f: F) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = params.to_vec();
    let mut all = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let orig = p[k];
        p[k] = orig + h;
        let up = f(&p);
        p[k] = orig - h;
        let down = f(&p);
        p[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        all.push((k, analytic[k], numeric, relative_error(analytic[k], numeric, 1e-7)));
    }
    all.sort_by(|a, b| b.3.total_cmp(&a.3));
    GradCheckReport {
        max_rel_error: all.first().map_or(0.0, |w| w.3),
        worst: all.into_iter().take(5).collect(),
    }
}

/// Checks the clipped actor loss gradient (network and log-std) with
/// central differences of step `h`.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check_actor(
    policy: &Policy,
    states: ArrayView2<'_, f64>,
    samples: &[PolicySample],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
    entropy_coef: f64,
    h: f64,
) -> Result<GradCheckReport> {
    let analytic = actor_loss_and_grad(policy, states, samples, old_log_probs, advantages, clip, entropy_coef)?;
    let n_net = policy.net.params.len();
    let mut flat = policy.net.params.clone();
    flat.extend(&policy.log_std);
    let mut grad = analytic.grad.net.clone();
    grad.extend(&analytic.grad.log_std);
    let mut probe = policy.clone();
    Ok(finite_difference_check(&flat, &grad, h, |p| {
        probe.net.params.copy_from_slice(&p[..n_net]);
        probe.log_std.copy_from_slice(&p[n_net..]);
        actor_loss_and_grad(&probe, states, samples, old_log_probs, advantages, clip, entropy_coef)
            .map(|l| l.loss)
            .unwrap_or(f64::NAN)
    }))
}

pub fn gradient_check_critic(critic: &Mlp, states: ArrayView2<'_, f64>, targets: &[f64], h: f64) -> Result<GradCheckReport> {
    let (_, grad) = critic_loss_and_grad(critic, states, targets)?;
    let mut probe = critic.clone();
    Ok(finite_difference_check(&critic.params, &grad, h, |p| {
        probe.params.copy_from_slice(p);
        critic_loss_and_grad(&probe, states, targets).map(|l| l.0).unwrap_or(f64::NAN)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::HeadKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_policy(head: HeadKind, seed: u64) -> Policy {
        let layout = ActionLayout {
            num_pairs: 2,
            num_subbands: 2,
            num_levels: 4,
            u_max: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::init(&[6, 8, Policy::output_dim(&layout, head)], 1.0, &mut rng);
        Policy::new(layout, head, net, -0.2)
    }

    #[test]
    fn zero_advantage_gives_zero_surrogate_gradient() {
        let p = small_policy(HeadKind::Categorical, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let states = Array2::from_shape_fn((4, 6), |_| rng.random_range(-1.0..1.0));
        let samples: Vec<_> = (0..4)
            .map(|i| {
                let out = p.forward_one(states.row(i).as_slice().unwrap()).unwrap();
                p.sample(&out, &mut rng)
            })
            .collect();
        let l = actor_loss_and_grad(&p, states.view(), &samples, &[0.0; 4], &[0.0; 4], 0.5, 0.0).unwrap();
        assert!(l.grad.net.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_value_net_quadratic_loss_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let critic = Mlp::init(&[4, 1], 1.0, &mut rng);
        let states = Array2::from_shape_fn((10, 4), |_| rng.random_range(-1.0..1.0));
        let targets: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let r = gradient_check_critic(&critic, states.view(), &targets, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }

    #[test]
    fn value_norm_update_preserves_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut critic = Mlp::init(&[3, 5, 1], 1.0, &mut rng);
        let mut norm = ValueNorm::new(true);
        let s = [0.2, -0.4, 0.9];
        for batch in [vec![10.0, 12.0, 30.0], vec![-5.0, 0.0, 100.0], vec![1.0, 1.0]] {
            let before = norm.denormalize(critic.forward_one(&s).unwrap()[0]);
            norm.update(&batch, &mut critic);
            let after = norm.denormalize(critic.forward_one(&s).unwrap()[0]);
            assert!((before - after).abs() < 1e-9 * (1.0 + before.abs()));
        }
        assert!((norm.normalize(norm.denormalize(0.7)) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn disabled_value_norm_is_identity() {
        let mut critic = Mlp::zeros(&[1, 1]);
        let mut norm = ValueNorm::new(false);
        norm.update(&[100.0, 200.0], &mut critic);
        assert_eq!(norm.denormalize(3.0), 3.0);
        assert_eq!(critic.params, vec![0.0, 0.0]);
    }
}
