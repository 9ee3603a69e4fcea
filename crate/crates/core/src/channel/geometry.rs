use rand::Rng;

use crate::config::ScenarioConfig;

/// Positions are `(x, y, z)` metres. `x` runs along a ring road of length
/// `road_length_m`; lanes stack along `y`; the lower half of the lanes drive
/// towards `+x`, the upper half towards `-x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs_position: [f64; 3],
    /// Agents first (`0..num_agents`), then one receiver per V2V pair.
    pub vehicle_positions: Vec<[f64; 3]>,
    /// Unsigned speeds in m/s.
    pub vehicle_speeds: Vec<f64>,
    pub lanes: Vec<usize>,
    /// `(tx vehicle, rx vehicle)` for every V2V pair.
    pub v2v_pairs: Vec<(usize, usize)>,
    pub num_agents: usize,
    pub num_lanes: usize,
    pub road_length_m: f64,
}

impl Topology {
    /// Drops agents uniformly on the road and places each pair receiver a
    /// random gap ahead of its transmitter.
    pub fn random<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Self {
        let agents = cfg.num_vehicles;
        let pairs = cfg.num_v2v_pairs();
        let length = cfg.road_length_m;
        let z = cfg.vehicle_height_m;
        let mut positions = Vec::with_capacity(agents + pairs);
        let mut lanes = Vec::with_capacity(agents + pairs);
        for _ in 0..agents {
            let x = rng.random_range(0.0..length);
            let lane = rng.random_range(0..cfg.num_lanes);
            positions.push([x, lane_center(lane, cfg.lane_width_m), z]);
            lanes.push(lane);
        }
        let mut v2v_pairs = Vec::with_capacity(pairs);
        for q in 0..pairs {
            let tx = q % agents;
            let gap = if cfg.pair_gap_max_m > cfg.pair_gap_min_m {
                rng.random_range(cfg.pair_gap_min_m..cfg.pair_gap_max_m)
            } else {
                cfg.pair_gap_min_m
            };
            let lane = lanes[tx];
            let x = (positions[tx][0] + direction(lane, cfg.num_lanes) * gap).rem_euclid(length);
            positions.push([x, positions[tx][1], z]);
            lanes.push(lane);
            v2v_pairs.push((tx, agents + q));
        }
        let n = positions.len();
        Topology {
            bs_position: [length / 2.0, -cfg.bs_offset_m, cfg.bs_height_m],
            vehicle_positions: positions,
            vehicle_speeds: vec![cfg.vehicle_speed_mps; n],
            lanes,
            v2v_pairs,
            num_agents: agents,
            num_lanes: cfg.num_lanes,
            road_length_m: length,
        }
    }

    /// Transmitter of V2I link `w`.
    pub fn v2i_tx(&self, w: usize) -> usize {
        w % self.num_agents
    }

    /// Distance with the minimum-image convention along the ring.
    pub fn distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let mut dx = (a[0] - b[0]).abs();
        if dx > self.road_length_m / 2.0 {
            dx = self.road_length_m - dx;
        }
        let dy = a[1] - b[1];
        let dz = a[2] - b[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn vehicle_distance(&self, a: usize, b: usize) -> f64 {
        self.distance(self.vehicle_positions[a], self.vehicle_positions[b])
    }

    pub fn bs_distance(&self, v: usize) -> f64 {
        self.distance(self.vehicle_positions[v], self.bs_position)
    }
}

fn lane_center(lane: usize, width: f64) -> f64 {
    (lane as f64 + 0.5) * width
}

fn direction(lane: usize, num_lanes: usize) -> f64 {
    if lane < num_lanes.div_ceil(2) {
        1.0
    } else {
        -1.0
    }
}

/// Advances every vehicle along its lane by `speed * dt`, wrapping at the
/// ends of the road.
pub fn update_mobility(topology: &Topology, dt: f64) -> Topology {
    debug_assert!(dt > 0.0);
    let mut next = topology.clone();
    for (i, pos) in next.vehicle_positions.iter_mut().enumerate() {
        let dir = direction(topology.lanes[i], topology.num_lanes);
        pos[0] = (pos[0] + dir * topology.vehicle_speeds[i] * dt).rem_euclid(topology.road_length_m);
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn topo(speed: f64) -> Topology {
        let cfg = ScenarioConfig {
            vehicle_speed_mps: speed,
            ..Default::default()
        };
        Topology::random(&cfg, &mut ChaCha8Rng::seed_from_u64(3))
    }

    #[test]
    fn layout_invariants() {
        let cfg = ScenarioConfig::default();
        let t = topo(15.0);
        assert_eq!(t.v2v_pairs.len(), cfg.num_v2v_pairs());
        assert_eq!(t.vehicle_positions.len(), cfg.num_vehicles + cfg.num_v2v_pairs());
        assert_eq!(t.bs_position[2], cfg.bs_height_m);
        for p in &t.vehicle_positions {
            assert_eq!(p[2], cfg.vehicle_height_m);
        }
        for &(tx, rx) in &t.v2v_pairs {
            assert_ne!(tx, rx);
            let d = t.vehicle_distance(tx, rx);
            assert!(d >= cfg.pair_gap_min_m - 1e-9 && d <= cfg.pair_gap_max_m + 1e-9, "{d}");
        }
    }

    #[test]
    fn zero_speed_is_fixed_point() {
        let t = topo(0.0);
        assert_eq!(update_mobility(&t, 1e-3), t);
    }

    #[test]
    fn displacement_matches_kinematics() {
        let t = topo(10.0);
        let n = update_mobility(&t, 1e-3);
        for (a, b) in t.vehicle_positions.iter().zip(&n.vehicle_positions) {
            let mut dx = (b[0] - a[0]).abs();
            if dx > t.road_length_m / 2.0 {
                dx = t.road_length_m - dx;
            }
            assert!((dx - 0.01).abs() < 1e-9, "{dx}");
            assert_eq!(a[1], b[1]);
        }
    }

    #[test]
    fn two_half_steps_equal_one_step() {
        let t = topo(12.5);
        let twice = update_mobility(&update_mobility(&t, 0.25), 0.25);
        let once = update_mobility(&t, 0.5);
        for (a, b) in twice.vehicle_positions.iter().zip(&once.vehicle_positions) {
            assert!(t.distance(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn pair_gap_preserved_under_motion() {
        let t = topo(15.0);
        let mut m = t.clone();
        for _ in 0..1000 {
            m = update_mobility(&m, 0.01);
        }
        for &(tx, rx) in &t.v2v_pairs {
            assert!((t.vehicle_distance(tx, rx) - m.vehicle_distance(tx, rx)).abs() < 1e-6);
        }
    }
}
