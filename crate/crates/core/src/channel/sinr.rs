use super::gains::ChannelState;
use crate::units::dbm_to_watts;

/// Transmit powers and subband sharing for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TxPlan {
    /// `[w]`, dBm.
    pub v2i_power_dbm: Vec<f64>,
    /// `[q][w]`, dBm; only read where `sharing[q][w]` is set or for the pair
    /// whose SINR is being evaluated.
    pub v2v_power_dbm: Vec<Vec<f64>>,
    /// `b_q[w]`.
    pub sharing: Vec<Vec<bool>>,
}

impl TxPlan {
    pub fn silent(num_v2i: usize, num_v2v: usize, v2i_power_dbm: f64) -> Self {
        TxPlan {
            v2i_power_dbm: vec![v2i_power_dbm; num_v2i],
            v2v_power_dbm: vec![vec![f64::NEG_INFINITY; num_v2i]; num_v2v],
            sharing: vec![vec![false; num_v2i]; num_v2v],
        }
    }
}

/// Linear SINR of V2I link `w` at the base station: own signal over noise
/// plus every V2V transmitter sharing subband `w`.
pub fn sinr_v2i(w: usize, plan: &TxPlan, ch: &ChannelState, noise_dbm: f64) -> f64 {
    let signal = dbm_to_watts(plan.v2i_power_dbm[w]) * ch.v2i_bs[w].linear();
    let interference: f64 = (0..plan.sharing.len())
        .filter(|&q| plan.sharing[q][w])
        .map(|q| dbm_to_watts(plan.v2v_power_dbm[q][w]) * ch.v2v_bs[q][w].linear())
        .sum();
    signal / (dbm_to_watts(noise_dbm) + interference)
}

/// Linear SINR of V2V pair `q` on subband `w`. The V2I transmitter that owns
/// `w` always interferes; other V2V pairs only when they share `w`.
pub fn sinr_v2v(q: usize, w: usize, plan: &TxPlan, ch: &ChannelState, noise_dbm: f64) -> f64 {
    let signal = dbm_to_watts(plan.v2v_power_dbm[q][w]) * ch.v2v_own[q][w].linear();
    let v2i = dbm_to_watts(plan.v2i_power_dbm[w]) * ch.v2i_v2v[w][q].linear();
    let others: f64 = (0..plan.sharing.len())
        .filter(|&qp| qp != q && plan.sharing[qp][w])
        .map(|qp| dbm_to_watts(plan.v2v_power_dbm[qp][w]) * ch.v2v_cross[qp][q][w].linear())
        .sum();
    signal / (dbm_to_watts(noise_dbm) + v2i + others)
}
