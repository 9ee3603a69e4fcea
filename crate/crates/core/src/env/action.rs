use rand::Rng;

use crate::channel::ChannelState;
use crate::config::{ConflictRule, ScenarioConfig};

/// Joint decision for every V2V pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    /// Subband shared by pair `q`, or `None` to stay silent.
    pub subband: Vec<Option<usize>>,
    /// Index into `v2v_power_levels_dbm`.
    pub power_level: Vec<usize>,
    /// Semantic units per word.
    pub u: Vec<u32>,
}

impl Action {
    pub fn silent(num_v2v: usize) -> Self {
        Action {
            subband: vec![None; num_v2v],
            power_level: vec![0; num_v2v],
            u: vec![1; num_v2v],
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.subband.len()
    }

    /// One-hot sharing matrix `b[q][w]`.
    pub fn sharing_matrix(&self, num_v2i: usize) -> Vec<Vec<bool>> {
        self.subband
            .iter()
            .map(|s| (0..num_v2i).map(|w| *s == Some(w)).collect())
            .collect()
    }

    /// Whether the action satisfies the matching, power and `u` constraints.
    pub fn is_feasible(&self, cfg: &ScenarioConfig) -> bool {
        let q_count = cfg.num_v2v_pairs();
        let w_count = cfg.num_v2i_links();
        if self.subband.len() != q_count || self.power_level.len() != q_count || self.u.len() != q_count {
            return false;
        }
        let mut used = vec![false; w_count];
        for s in self.subband.iter().flatten() {
            if *s >= w_count || used[*s] {
                return false;
            }
            used[*s] = true;
        }
        self.power_level.iter().all(|&p| p < cfg.num_power_levels())
            && self.u.iter().all(|&u| (1..=cfg.u_max).contains(&u))
    }
}

fn clamp_ranges(raw: &Action, cfg: &ScenarioConfig) -> Action {
    let w_count = cfg.num_v2i_links();
    let top = cfg.num_power_levels() - 1;
    Action {
        subband: raw.subband.iter().map(|s| s.filter(|&w| w < w_count)).collect(),
        power_level: raw.power_level.iter().map(|&p| p.min(top)).collect(),
        u: raw.u.iter().map(|&u| u.clamp(1, cfg.u_max)).collect(),
    }
}

/// Projects onto the feasible set: out-of-range subbands become silent,
/// powers and `u` are clamped, and when several pairs claim a subband the
/// lowest pair index keeps it. Feasible actions are returned unchanged.
pub fn project_action(raw: &Action, cfg: &ScenarioConfig) -> Action {
    let mut out = clamp_ranges(raw, cfg);
    let mut taken = vec![false; cfg.num_v2i_links()];
    for s in out.subband.iter_mut() {
        if let Some(w) = *s {
            if taken[w] {
                *s = None;
            } else {
                taken[w] = true;
            }
        }
    }
    out
}

/// Like [`project_action`] but resolving subband conflicts with `rule`.
/// `HighestGain` ranks claimants by their own-link gain in `channel`.
pub fn project_action_with<R: Rng + ?Sized>(
    raw: &Action,
    cfg: &ScenarioConfig,
    rule: ConflictRule,
    channel: &ChannelState,
    rng: &mut R,
) -> Action {
    if rule == ConflictRule::LowestIndex {
        return project_action(raw, cfg);
    }
    let mut out = clamp_ranges(raw, cfg);
    for w in 0..cfg.num_v2i_links() {
        let claimants: Vec<usize> = (0..out.num_pairs()).filter(|&q| out.subband[q] == Some(w)).collect();
        if claimants.len() < 2 {
            continue;
        }
        let keep = match rule {
            ConflictRule::HighestGain => *claimants
                .iter()
                .max_by(|&&a, &&b| {
                    channel.v2v_own[a][w]
                        .linear()
                        .total_cmp(&channel.v2v_own[b][w].linear())
                        .then(b.cmp(&a))
                })
                .expect("non-empty"),
            ConflictRule::Random => claimants[rng.random_range(0..claimants.len())],
            ConflictRule::LowestIndex => unreachable!(),
        };
        for q in claimants {
            if q != keep {
                out.subband[q] = None;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig {
            u_max: 5,
            ..Default::default()
        }
    }

    #[test]
    fn lowest_index_keeps_conflicted_subband() {
        let raw = Action {
            subband: vec![Some(1), Some(1), None, Some(0)],
            power_level: vec![3; 4],
            u: vec![2; 4],
        };
        let p = project_action(&raw, &cfg());
        assert_eq!(p.subband, vec![Some(1), None, None, Some(0)]);
        assert!(p.is_feasible(&cfg()));
    }

    #[test]
    fn clamps_u_and_power() {
        let raw = Action {
            subband: vec![None, Some(9), None, None],
            power_level: vec![0, 7, 1, 2],
            u: vec![0, 9, 3, 5],
        };
        let p = project_action(&raw, &cfg());
        assert_eq!(p.u, vec![1, 5, 3, 5]);
        assert_eq!(p.power_level, vec![0, 3, 1, 2]);
        assert_eq!(p.subband[1], None);
    }

    #[test]
    fn feasible_input_unchanged() {
        let a = Action {
            subband: vec![Some(2), None, Some(0), Some(3)],
            power_level: vec![0, 1, 2, 3],
            u: vec![1, 2, 3, 5],
        };
        assert!(a.is_feasible(&cfg()));
        assert_eq!(project_action(&a, &cfg()), a);
    }

    fn arb_raw() -> impl Strategy<Value = Action> {
        (
            prop::collection::vec(prop::option::of(0usize..6), 4),
            prop::collection::vec(0usize..6, 4),
            prop::collection::vec(0u32..8, 4),
        )
            .prop_map(|(subband, power_level, u)| Action {
                subband,
                power_level,
                u,
            })
    }

    proptest! {
        #[test]
        fn projection_feasible_and_idempotent(raw in arb_raw()) {
            let c = cfg();
            let p = project_action(&raw, &c);
            prop_assert!(p.is_feasible(&c));
            prop_assert_eq!(project_action(&p, &c), p.clone());
            let b = p.sharing_matrix(c.num_v2i_links());
            for row in &b {
                prop_assert!(row.iter().filter(|&&x| x).count() <= 1);
            }
            for w in 0..c.num_v2i_links() {
                prop_assert!(b.iter().filter(|row| row[w]).count() <= 1);
            }
        }
    }
}
