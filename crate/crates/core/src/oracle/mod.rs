//! Exhaustive and per-step greedy reference solvers for small instances.

use crate::channel::ChannelState;
use crate::config::ScenarioConfig;
use crate::env::{evaluate_action, Action, Env, Scenario};
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Number of ways to give each of `q` pairs at most one of `w` subbands with
/// no subband used twice: `sum_k C(q, k) w! / (w - k)!`.
pub fn matching_count(q: usize, w: usize) -> u128 {
    let mut total = 0u128;
    for k in 0..=q.min(w) {
        let mut c = 1u128;
        for i in 0..k {
            c = c * (q - i) as u128 / (i + 1) as u128;
        }
        let mut perm = 1u128;
        for i in 0..k {
            perm *= (w - i) as u128;
        }
        total += c * perm;
    }
    total
}

pub fn action_count(q: usize, w: usize, levels: usize, u_max: u32) -> u128 {
    let per_pair = levels as u128 * u128::from(u_max);
    matching_count(q, w).saturating_mul(per_pair.saturating_pow(q as u32))
}

/// Enumerates partial matchings in lexicographic order, with "silent"
/// ordered before subband 0.
fn matchings(q: usize, w: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(q: usize, w: usize, cur: &mut Vec<Option<usize>>, used: &mut [bool], out: &mut Vec<Vec<Option<usize>>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(q, w, cur, used, out);
        cur.pop();
        for s in 0..w {
            if !used[s] {
                used[s] = true;
                cur.push(Some(s));
                rec(q, w, cur, used, out);
                cur.pop();
                used[s] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(q, w, &mut Vec::with_capacity(q), &mut vec![false; w], &mut out);
    out
}

/// Indexable enumeration of the feasible joint actions. Index order is
/// matching-major, then power levels, then `u`, each pair-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpaceIndex {
    pub matchings: Vec<Vec<Option<usize>>>,
    pub num_pairs: usize,
    pub num_levels: usize,
    pub u_max: u32,
    pub total: usize,
}

impl ActionSpaceIndex {
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn action(&self, index: usize) -> Action {
        let q = self.num_pairs;
        let per_u = (self.u_max as usize).pow(q as u32);
        let per_power = self.num_levels.pow(q as u32) * per_u;
        let m = index / per_power;
        let mut rest = index % per_power;
        let mut p_code = rest / per_u;
        rest %= per_u;
        let mut power_level = vec![0; q];
        let mut u = vec![1; q];
        for i in (0..q).rev() {
            power_level[i] = p_code % self.num_levels;
            p_code /= self.num_levels;
            u[i] = (rest % self.u_max as usize) as u32 + 1;
            rest /= self.u_max as usize;
        }
        Action {
            subband: self.matchings[m].clone(),
            power_level,
            u,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.total).map(|i| self.action(i))
    }
}

pub fn enumerate_feasible(cfg: &ScenarioConfig) -> Result<ActionSpaceIndex> {
    enumerate_with_budget(cfg, DEFAULT_BUDGET)
}

pub fn enumerate_with_budget(cfg: &ScenarioConfig, budget: u128) -> Result<ActionSpaceIndex> {
    let q = cfg.num_v2v_pairs();
    let w = cfg.num_v2i_links();
    let count = action_count(q, w, cfg.num_power_levels(), cfg.u_max);
    if count > budget {
        return Err(Error::Budget { count, limit: budget });
    }
    let matchings = matchings(q, w);
    Ok(ActionSpaceIndex {
        matchings,
        num_pairs: q,
        num_levels: cfg.num_power_levels(),
        u_max: cfg.u_max,
        total: count as usize,
    })
}

const CHUNK: usize = 4096;

/// Penalized reward of every enumerated action, in index order.
pub fn evaluate_all(scenario: &Scenario, ch: &ChannelState, index: &ActionSpaceIndex, active: Option<&[bool]>) -> Vec<f64> {
    let chunks = index.len().div_ceil(CHUNK);
    par::map_range(chunks, |c| {
        (c * CHUNK..((c + 1) * CHUNK).min(index.len()))
            .map(|i| evaluate_action(scenario, ch, &index.action(i), active).reward)
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub index: usize,
    pub action: Action,
    pub reward: f64,
}

/// Maximizer of the penalized reward on a fixed channel; ties go to the
/// lowest index.
pub fn best_single_step(scenario: &Scenario, ch: &ChannelState, index: &ActionSpaceIndex, active: Option<&[bool]>) -> Optimum {
    let chunks = index.len().div_ceil(CHUNK);
    let best = par::map_range(chunks, |c| {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in c * CHUNK..((c + 1) * CHUNK).min(index.len()) {
            let r = evaluate_action(scenario, ch, &index.action(i), active).reward;
            if r > best.1 {
                best = (i, r);
            }
        }
        best
    })
    .into_iter()
    .fold((usize::MAX, f64::NEG_INFINITY), |acc, b| if b.1 > acc.1 { b } else { acc });
    Optimum {
        index: best.0,
        action: index.action(best.0),
        reward: best.1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub rewards: Vec<f64>,
    pub qoe: Vec<f64>,
    pub cumulative_reward: f64,
}

/// Plays the per-step optimum until the episode ends.
pub fn greedy_episode(env: &mut Env, index: &ActionSpaceIndex) -> Result<GreedyTrace> {
    let mut rewards = Vec::new();
    let mut qoe = Vec::new();
    while !env.is_done() {
        env.advance_channel();
        let active = env.active_pairs();
        let best = best_single_step(env.scenario(), env.channel(), index, Some(&active));
        let step = env.apply(&best.action)?;
        rewards.push(step.reward);
        qoe.push(step.qoe);
    }
    Ok(GreedyTrace {
        cumulative_reward: rewards.iter().sum(),
        rewards,
        qoe,
    })
}

/// Equal-width histogram over `[min, max]` of `values`:
/// `(lower edge, upper edge, count)`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FadingMode;
    use crate::env::{project_action, RewardWeights};
    use crate::rl::uniform_random_action;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn tiny_cfg() -> ScenarioConfig {
        ScenarioConfig {
            num_vehicles: 2,
            u_max: 3,
            ..Default::default()
        }
    }

    #[test]
    fn tiny_instance_has_1008_actions() {
        assert_eq!(matching_count(2, 2), 7);
        let idx = enumerate_feasible(&tiny_cfg()).unwrap();
        assert_eq!(idx.len(), 1008);
        assert_eq!(idx.matchings.len(), 7);
    }

    #[test]
    fn minimal_instance() {
        let cfg = ScenarioConfig {
            num_vehicles: 1,
            v2v_power_levels_dbm: vec![23.0],
            u_max: 1,
            ..Default::default()
        };
        let idx = enumerate_feasible(&cfg).unwrap();
        let acts: Vec<_> = idx.iter().collect();
        assert_eq!(acts.len(), 2);
        assert_eq!(acts[0].subband, vec![None]);
        assert_eq!(acts[1].subband, vec![Some(0)]);
    }

    #[test]
    fn closed_form_and_fixed_points_for_small_sizes() {
        for q in 1..=3 {
            for w in 1..=3 {
                let cfg = ScenarioConfig {
                    num_vehicles: q,
                    num_v2i: Some(w),
                    v2v_power_levels_dbm: vec![5.0, 23.0],
                    u_max: 2,
                    ..Default::default()
                };
                let idx = enumerate_feasible(&cfg).unwrap();
                let all: Vec<_> = idx.iter().collect();
                let unique: HashSet<_> = all.iter().cloned().collect();
                assert_eq!(unique.len(), all.len());
                assert_eq!(all.len() as u128, action_count(q, w, 2, 2));
                for a in &all {
                    assert!(a.is_feasible(&cfg));
                    assert_eq!(&project_action(a, &cfg), a);
                }
            }
        }
    }

    #[test]
    fn budget_refusal_reports_count() {
        let cfg = ScenarioConfig {
            num_vehicles: 8,
            ..Default::default()
        };
        match enumerate_feasible(&cfg) {
            Err(Error::Budget { count, limit }) => {
                assert_eq!(limit, DEFAULT_BUDGET);
                assert_eq!(count, action_count(8, 8, 4, 4));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn optimum_dominates_random_probes() {
        let sc = Scenario::new(tiny_cfg(), RewardWeights::default()).unwrap();
        let idx = enumerate_feasible(&sc.cfg).unwrap();
        let env = Env::new(sc.clone(), 4);
        let best = best_single_step(&sc, env.channel(), &idx, None);
        let values = evaluate_all(&sc, env.channel(), &idx, None);
        assert_eq!(values[best.index], best.reward);
        assert_eq!(values.iter().position(|&v| v == best.reward), Some(best.index));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = uniform_random_action(&sc, &mut rng);
            assert!(evaluate_action(&sc, env.channel(), &a, None).reward <= best.reward);
        }
    }

    #[test]
    fn equal_gains_prefer_top_power() {
        let cfg = ScenarioConfig {
            num_vehicles: 1,
            shadow_sigma_v2i_db: 0.0,
            shadow_sigma_v2v_db: 0.0,
            fading: FadingMode::Unity,
            ..Default::default()
        };
        let sc = Scenario::new(cfg, RewardWeights::default()).unwrap();
        let idx = enumerate_feasible(&sc.cfg).unwrap();
        let mut ch = Env::new(sc.clone(), 0).channel().clone();
        // Strong own link, negligible interference: no penalties bind.
        ch.v2v_own[0][0].path_loss_db = 40.0;
        ch.v2i_v2v[0][0].path_loss_db = 200.0;
        let best = best_single_step(&sc, &ch, &idx, None);
        assert_eq!(best.action.subband, vec![Some(0)]);
        assert_eq!(best.action.power_level, vec![3]);
        // High SINR and similarity-reward orientation: longest symbols win.
        assert_eq!(best.action.u, vec![4]);
    }

    #[test]
    fn greedy_episode_is_reproducible_and_beats_random_per_step() {
        let cfg = ScenarioConfig {
            fading: FadingMode::FrozenPerEpisode,
            episode_steps: 15,
            ..tiny_cfg()
        };
        let sc = Scenario::new(cfg, RewardWeights::default()).unwrap();
        let idx = enumerate_feasible(&sc.cfg).unwrap();
        let a = greedy_episode(&mut Env::new(sc.clone(), 8), &idx).unwrap();
        let b = greedy_episode(&mut Env::new(sc.clone(), 8), &idx).unwrap();
        assert_eq!(a, b);

        let mut env = Env::new(sc.clone(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in 0..a.rewards.len() {
            env.advance_channel();
            let active = env.active_pairs();
            let mean: f64 = (0..200)
                .map(|_| evaluate_action(&sc, env.channel(), &uniform_random_action(&sc, &mut rng), Some(&active)).reward)
                .sum::<f64>()
                / 200.0;
            let best = best_single_step(&sc, env.channel(), &idx, Some(&active));
            assert!(best.reward >= mean, "step {t}");
            env.apply(&best.action).unwrap();
        }
    }

    #[test]
    fn horizon_one_greedy_is_global_optimum() {
        let cfg = ScenarioConfig {
            episode_steps: 1,
            ..tiny_cfg()
        };
        let sc = Scenario::new(cfg, RewardWeights::default()).unwrap();
        let idx = enumerate_feasible(&sc.cfg).unwrap();
        let trace = greedy_episode(&mut Env::new(sc.clone(), 3), &idx).unwrap();
        let mut env = Env::new(sc.clone(), 3);
        env.advance_channel();
        let values = evaluate_all(&sc, env.channel(), &idx, None);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(trace.cumulative_reward, max);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0], 2);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].2 + h[1].2, 4);
        assert_eq!(h[1].2, 3);
    }
}
