//! Power and ratio conversions shared by the channel and QoE code.

use crate::error::{Error, Result};

/// `10^((dBm - 30) / 10)` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> Result<f64> {
    if !(watts > 0.0) || !watts.is_finite() {
        return Err(Error::invalid(
            "watts",
            format!("power must be positive and finite, got {watts}"),
        ));
    }
    Ok(10.0 * watts.log10() + 30.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB. Zero maps to `-inf`.
pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_points() {
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(23.0) - 0.199_526_231_496_887_9).abs() < 1e-12);
        assert!((dbm_to_watts(-114.0) / 3.981_071_705_534_97e-15 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_watts_rejected() {
        assert!(watts_to_dbm(0.0).is_err());
        assert!(watts_to_dbm(-1.0).is_err());
        assert!(watts_to_dbm(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn dbm_round_trip(dbm in -150.0f64..30.0) {
            let back = watts_to_dbm(dbm_to_watts(dbm)).unwrap();
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }
}
