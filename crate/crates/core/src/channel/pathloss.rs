/// Which propagation profile a link uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Vehicle to base station.
    V2I,
    /// Vehicle to vehicle.
    V2V,
}

/// Distances below this are clamped before taking logarithms.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Named large-scale path-loss profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLossProfile {
    /// `128.1 + 37.6 log10(d_km)`.
    UrbanMacro,
    /// `38.77 + 16.7 log10(d_m) + 18.2 log10(f_GHz)`, urban line of sight.
    UrbanLos { carrier_hz: f64 },
}

impl PathLossProfile {
    pub fn for_link(kind: LinkKind, carrier_hz: f64) -> Self {
        match kind {
            LinkKind::V2I => PathLossProfile::UrbanMacro,
            LinkKind::V2V => PathLossProfile::UrbanLos { carrier_hz },
        }
    }

    pub fn loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(MIN_DISTANCE_M);
        match *self {
            PathLossProfile::UrbanMacro => 128.1 + 37.6 * (d / 1000.0).log10(),
            PathLossProfile::UrbanLos { carrier_hz } => {
                38.77 + 16.7 * d.log10() + 18.2 * (carrier_hz / 1e9).log10()
            }
        }
    }
}

pub fn path_loss(kind: LinkKind, distance_m: f64, carrier_hz: f64) -> f64 {
    PathLossProfile::for_link(kind, carrier_hz).loss_db(distance_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((path_loss(LinkKind::V2I, 1000.0, 1e9) - 128.1).abs() < 1e-9);
        assert!((path_loss(LinkKind::V2I, 100.0, 1e9) - 90.5).abs() < 1e-9);
        assert!((path_loss(LinkKind::V2V, 10.0, 1e9) - 55.47).abs() < 1e-9);
    }

    #[test]
    fn clamped_below_one_metre() {
        for kind in [LinkKind::V2I, LinkKind::V2V] {
            let at_one = path_loss(kind, 1.0, 2e9);
            assert_eq!(path_loss(kind, 0.0, 2e9), at_one);
            assert_eq!(path_loss(kind, 0.3, 2e9), at_one);
            assert!(at_one.is_finite());
        }
    }

    #[test]
    fn monotone_in_distance() {
        for kind in [LinkKind::V2I, LinkKind::V2V] {
            let mut prev = path_loss(kind, 1.0, 1e9);
            for i in 3..2000 {
                let cur = path_loss(kind, i as f64 * 0.5, 1e9);
                assert!(cur > prev);
                prev = cur;
            }
        }
    }
}
