use crate::config::ScenarioConfig;

pub const GAIN_CENTER_DB: f64 = -90.0;
pub const GAIN_SCALE_DB: f64 = 30.0;
pub const SINR_CENTER_DB: f64 = 10.0;
pub const SINR_SCALE_DB: f64 = 40.0;

/// Raw (unnormalized) observation in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub v2i_gain_db: Vec<f64>,
    pub v2i_sinr_db: Vec<f64>,
    pub v2v_sinr_db: Vec<f64>,
    /// `(remaining demand fraction per pair, remaining time fraction)`.
    pub extras: Option<(Vec<f64>, f64)>,
}

/// `2W + Q`, or `2W + 3Q` with extras.
pub fn state_dim(cfg: &ScenarioConfig) -> usize {
    let w = cfg.num_v2i_links();
    let q = cfg.num_v2v_pairs();
    2 * w + q + if cfg.state_extras { 2 * q } else { 0 }
}

fn squash(x: f64, center: f64, scale: f64) -> f64 {
    let v = (x - center) / scale;
    if v.is_nan() {
        -1.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

/// Normalized state vector; every entry lies in `[-1, 1]`.
pub fn encode_state(obs: &Observation) -> Vec<f64> {
    let mut s = Vec::with_capacity(obs.v2i_gain_db.len() * 2 + obs.v2v_sinr_db.len() * 3);
    s.extend(obs.v2i_gain_db.iter().map(|&g| squash(g, GAIN_CENTER_DB, GAIN_SCALE_DB)));
    s.extend(obs.v2i_sinr_db.iter().map(|&g| squash(g, SINR_CENTER_DB, SINR_SCALE_DB)));
    s.extend(obs.v2v_sinr_db.iter().map(|&g| squash(g, SINR_CENTER_DB, SINR_SCALE_DB)));
    if let Some((demand, time)) = &obs.extras {
        s.extend(demand.iter().map(|d| 2.0 * d.clamp(0.0, 1.0) - 1.0));
        s.extend(demand.iter().map(|_| 2.0 * time.clamp(0.0, 1.0) - 1.0));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimensions() {
        let mut cfg = ScenarioConfig::default();
        assert_eq!(state_dim(&cfg), 2 * 4 + 4);
        cfg.num_v2v = Some(3);
        cfg.state_extras = true;
        assert_eq!(state_dim(&cfg), 2 * 4 + 3 * 3);
    }

    #[test]
    fn centers_map_to_zero() {
        let obs = Observation {
            v2i_gain_db: vec![-90.0],
            v2i_sinr_db: vec![10.0],
            v2v_sinr_db: vec![50.0],
            extras: Some((vec![0.5], 1.0)),
        };
        assert_eq!(encode_state(&obs), vec![0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn entries_bounded(g in -1e3f64..1e3, s in prop::num::f64::ANY) {
            let obs = Observation {
                v2i_gain_db: vec![g],
                v2i_sinr_db: vec![s],
                v2v_sinr_db: vec![f64::NEG_INFINITY],
                extras: None,
            };
            for v in encode_state(&obs) {
                prop_assert!(v.is_finite() && (-1.0..=1.0).contains(&v));
            }
        }
    }
}
