use super::logistic;
use crate::config::{PowerNormalization, QoeOrientation, ScenarioConfig};
use crate::units::dbm_to_watts;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoeParams {
    pub orientation: QoeOrientation,
    pub normalization: PowerNormalization,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
}

impl QoeParams {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        QoeParams {
            orientation: cfg.qoe_orientation,
            normalization: cfg.theta_b_power_normalization,
            p_min_dbm: cfg.p_min_dbm,
            p_max_dbm: cfg.p_max_dbm,
        }
    }
}

/// Identity on `[0, 1]`.
pub fn theta_a(x: f64) -> f64 {
    x
}

pub fn theta_b(x: f64) -> f64 {
    logistic(x)
}

pub fn normalized_power(p_dbm: f64, params: &QoeParams) -> f64 {
    match params.normalization {
        PowerNormalization::MinmaxDbm => {
            (p_dbm - params.p_min_dbm) / (params.p_max_dbm - params.p_min_dbm)
        }
        PowerNormalization::Watts => dbm_to_watts(p_dbm),
    }
}

/// Contribution of one active pair.
pub fn pair_qoe(xi: f64, p_dbm: f64, params: &QoeParams) -> f64 {
    let quality = match params.orientation {
        QoeOrientation::AsPaper => 1.0 - xi,
        QoeOrientation::SimilarityReward => xi,
    };
    theta_a(quality) * theta_b(normalized_power(p_dbm, params))
}

/// Sum of [`pair_qoe`] over every `(q, w)` with `sharing[q][w]` set; idle
/// pairs contribute nothing.
pub fn qoe(
    sharing: &[Vec<bool>],
    powers_dbm: &[Vec<f64>],
    xi: &[Vec<f64>],
    params: &QoeParams,
) -> f64 {
    let mut total = 0.0;
    for (q, row) in sharing.iter().enumerate() {
        for (w, &active) in row.iter().enumerate() {
            if active {
                total += pair_qoe(xi[q][w], powers_dbm[q][w], params);
            }
        }
    }
    total
}
