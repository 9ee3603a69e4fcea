use super::action::Action;
use super::Scenario;
use crate::channel::{sinr_v2i, sinr_v2v, ChannelState, TxPlan};
use crate::semantics::pair_qoe;
use crate::units::{dbm_to_watts, linear_to_db};

/// Outcome of one action on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Raw objective `r_t`.
    pub qoe: f64,
    /// Penalized reward.
    pub reward: f64,
    pub penalty_similarity: f64,
    pub penalty_sinr: f64,
    /// Per pair; `None` when the pair is silent.
    pub xi: Vec<Option<f64>>,
    pub v2v_sinr_db: Vec<Option<f64>>,
    pub v2i_sinr_db: Vec<f64>,
    pub delivered_words: Vec<f64>,
}

impl Evaluation {
    pub fn xi_min(&self) -> Option<f64> {
        self.xi.iter().flatten().copied().reduce(f64::min)
    }

    pub fn sinr_min_db(&self) -> Option<f64> {
        self.v2v_sinr_db.iter().flatten().copied().reduce(f64::min)
    }

    pub fn constraints_hold(&self) -> bool {
        self.penalty_similarity == 0.0 && self.penalty_sinr == 0.0
    }
}

/// Words delivered in one step at `sinr` (linear) with `u` symbols per word.
pub fn delivered_words(scenario: &Scenario, sinr: f64, u: u32) -> f64 {
    let cfg = &scenario.cfg;
    cfg.bandwidth_per_subband_hz * (1.0 + sinr).log2() * cfg.step_duration_s
        / (f64::from(u) * cfg.bits_per_semantic_symbol)
}

/// Best SINR pair `q` could reach at the top power level with only the V2I
/// link interfering, over subbands not carrying its own transmitter's
/// uplink (all subbands if every one does). Used as the observation of a
/// silent pair.
pub fn pilot_sinr_db(scenario: &Scenario, ch: &ChannelState, q: usize) -> f64 {
    let cfg = &scenario.cfg;
    let top = *cfg.v2v_power_levels_dbm.last().expect("validated non-empty");
    let agents = cfg.num_vehicles.max(1);
    let sinr = |w: usize| {
        let signal = dbm_to_watts(top) * ch.v2v_own[q][w].linear();
        let noise = dbm_to_watts(cfg.noise_b_dbm) + dbm_to_watts(cfg.v2i_power_dbm) * ch.v2i_v2v[w][q].linear();
        signal / noise
    };
    let w_count = cfg.num_v2i_links();
    let foreign = (0..w_count).filter(|w| w % agents != q % agents);
    let best = foreign.map(sinr).fold(f64::NEG_INFINITY, f64::max);
    let best = if best.is_finite() { best } else { (0..w_count).map(sinr).fold(f64::NEG_INFINITY, f64::max) };
    linear_to_db(best)
}

/// Evaluates a feasible action. `active[q]` masks pairs whose demand is
/// already met; they are treated as silent.
pub fn evaluate_action(scenario: &Scenario, ch: &ChannelState, action: &Action, active: Option<&[bool]>) -> Evaluation {
    let cfg = &scenario.cfg;
    let w_count = cfg.num_v2i_links();
    let q_count = cfg.num_v2v_pairs();
    let subband: Vec<Option<usize>> = (0..q_count)
        .map(|q| action.subband[q].filter(|_| active.is_none_or(|a| a[q])))
        .collect();

    let mut plan = TxPlan::silent(w_count, q_count, cfg.v2i_power_dbm);
    for (q, s) in subband.iter().enumerate() {
        if let Some(w) = *s {
            plan.sharing[q][w] = true;
            plan.v2v_power_dbm[q][w] = cfg.v2v_power_levels_dbm[action.power_level[q]];
        }
    }

    let v2i_sinr_db = (0..w_count)
        .map(|w| linear_to_db(sinr_v2i(w, &plan, ch, cfg.noise_a_dbm)))
        .collect();

    let mut xi = vec![None; q_count];
    let mut v2v_sinr_db = vec![None; q_count];
    let mut delivered = vec![0.0; q_count];
    let mut qoe = 0.0;
    let mut pen_xi = 0.0;
    let mut pen_sinr = 0.0;
    for q in 0..q_count {
        let Some(w) = subband[q] else { continue };
        let sinr = sinr_v2v(q, w, &plan, ch, cfg.noise_b_dbm);
        let sinr_db = linear_to_db(sinr);
        let u = action.u[q];
        let x = scenario.similarity.similarity(f64::from(u), sinr_db);
        qoe += pair_qoe(x, plan.v2v_power_dbm[q][w], &scenario.qoe);
        pen_xi += (cfg.xi_threshold - x).max(0.0);
        pen_sinr += (cfg.sinr_threshold_db - sinr_db).max(0.0);
        delivered[q] = delivered_words(scenario, sinr, u);
        xi[q] = Some(x);
        v2v_sinr_db[q] = Some(sinr_db);
    }
    let penalty_similarity = scenario.weights.similarity * pen_xi;
    let penalty_sinr = scenario.weights.sinr * pen_sinr;
    Evaluation {
        qoe,
        reward: qoe - penalty_similarity - penalty_sinr,
        penalty_similarity,
        penalty_sinr,
        xi,
        v2v_sinr_db,
        v2i_sinr_db,
        delivered_words: delivered,
    }
}
