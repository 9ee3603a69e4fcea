use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::geometry::Topology;
use super::pathloss::{LinkKind, PathLossProfile};
use crate::config::{FadingMode, ScenarioConfig};
use crate::units::db_to_linear;

/// One link realization, each factor kept separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub path_loss_db: f64,
    pub shadow_db: f64,
    /// Small-scale power gain `|g|^2`.
    pub fading: f64,
}

impl LinkGain {
    /// `10^(-PL/10) * 10^(X/10) * |g|^2`.
    pub fn linear(&self) -> f64 {
        db_to_linear(self.shadow_db - self.path_loss_db) * self.fading
    }

    pub fn db(&self) -> f64 {
        self.shadow_db - self.path_loss_db + 10.0 * self.fading.log10()
    }
}

/// Per-link log-normal shadowing in dB, drawn once per episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Shadowing {
    pub v2i_bs: Vec<f64>,
    pub v2v_bs: Vec<f64>,
    pub v2v_own: Vec<f64>,
    pub v2i_v2v: Vec<Vec<f64>>,
    pub v2v_cross: Vec<Vec<f64>>,
}

/// Per-link, per-subband small-scale power gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Fading {
    pub v2i_bs: Vec<f64>,
    pub v2v_bs: Vec<Vec<f64>>,
    pub v2v_own: Vec<Vec<f64>>,
    pub v2i_v2v: Vec<Vec<f64>>,
    pub v2v_cross: Vec<Vec<Vec<f64>>>,
}

/// Gains of every link pair on every subband, as linear power ratios via
/// [`LinkGain::linear`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    /// `[w]`: V2I transmitter `w` to the base station on subband `w`.
    pub v2i_bs: Vec<LinkGain>,
    /// `[q][w]`: V2V transmitter `q` to the base station.
    pub v2v_bs: Vec<Vec<LinkGain>>,
    /// `[q][w]`: V2V transmitter `q` to its own receiver.
    pub v2v_own: Vec<Vec<LinkGain>>,
    /// `[w][q]`: V2I transmitter `w` to V2V receiver `q` on subband `w`.
    pub v2i_v2v: Vec<Vec<LinkGain>>,
    /// `[q'][q][w]`: V2V transmitter `q'` to V2V receiver `q`.
    pub v2v_cross: Vec<Vec<Vec<LinkGain>>>,
}

impl ChannelState {
    pub fn num_v2i(&self) -> usize {
        self.v2i_bs.len()
    }

    pub fn num_v2v(&self) -> usize {
        self.v2v_own.len()
    }

    pub fn all_gains(&self) -> impl Iterator<Item = &LinkGain> {
        self.v2i_bs
            .iter()
            .chain(self.v2v_bs.iter().flatten())
            .chain(self.v2v_own.iter().flatten())
            .chain(self.v2i_v2v.iter().flatten())
            .chain(self.v2v_cross.iter().flatten().flatten())
    }

    /// Builds gains from geometry and pre-drawn random factors.
    pub fn compose(
        topology: &Topology,
        cfg: &ScenarioConfig,
        shadowing: &Shadowing,
        fading: &Fading,
    ) -> Self {
        let w_count = cfg.num_v2i_links();
        let q_count = cfg.num_v2v_pairs();
        let v2i = PathLossProfile::for_link(LinkKind::V2I, cfg.carrier_freq_hz);
        let v2v = PathLossProfile::for_link(LinkKind::V2V, cfg.carrier_freq_hz);
        let gain = |pl: f64, sh: f64, f: f64| LinkGain {
            path_loss_db: pl,
            shadow_db: sh,
            fading: f,
        };
        let pair = |q: usize| topology.v2v_pairs[q];

        let v2i_bs = (0..w_count)
            .map(|w| {
                let pl = v2i.loss_db(topology.bs_distance(topology.v2i_tx(w)));
                gain(pl, shadowing.v2i_bs[w], fading.v2i_bs[w])
            })
            .collect();
        let v2v_bs = (0..q_count)
            .map(|q| {
                let pl = v2i.loss_db(topology.bs_distance(pair(q).0));
                (0..w_count)
                    .map(|w| gain(pl, shadowing.v2v_bs[q], fading.v2v_bs[q][w]))
                    .collect()
            })
            .collect();
        let v2v_own = (0..q_count)
            .map(|q| {
                let (tx, rx) = pair(q);
                let pl = v2v.loss_db(topology.vehicle_distance(tx, rx));
                (0..w_count)
                    .map(|w| gain(pl, shadowing.v2v_own[q], fading.v2v_own[q][w]))
                    .collect()
            })
            .collect();
        let v2i_v2v = (0..w_count)
            .map(|w| {
                (0..q_count)
                    .map(|q| {
                        let pl = v2v.loss_db(topology.vehicle_distance(topology.v2i_tx(w), pair(q).1));
                        gain(pl, shadowing.v2i_v2v[w][q], fading.v2i_v2v[w][q])
                    })
                    .collect()
            })
            .collect();
        let v2v_cross = (0..q_count)
            .map(|qp| {
                (0..q_count)
                    .map(|q| {
                        let pl = v2v.loss_db(topology.vehicle_distance(pair(qp).0, pair(q).1));
                        (0..w_count)
                            .map(|w| gain(pl, shadowing.v2v_cross[qp][q], fading.v2v_cross[qp][q][w]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ChannelState {
            v2i_bs,
            v2v_bs,
            v2v_own,
            v2i_v2v,
            v2v_cross,
        }
    }
}

fn normal_db<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        // Still consume a draw so streams stay aligned across sigma settings.
        let _: f64 = rng.sample(StandardNormal);
        0.0
    } else {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    }
}

pub fn sample_shadowing<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Shadowing {
    let w_count = cfg.num_v2i_links();
    let q_count = cfg.num_v2v_pairs();
    let s_i = cfg.shadow_sigma_v2i_db;
    let s_v = cfg.shadow_sigma_v2v_db;
    let v2i_bs = (0..w_count).map(|_| normal_db(s_i, rng)).collect();
    let v2v_bs = (0..q_count).map(|_| normal_db(s_i, rng)).collect();
    let v2v_own = (0..q_count).map(|_| normal_db(s_v, rng)).collect();
    let v2i_v2v = (0..w_count)
        .map(|_| (0..q_count).map(|_| normal_db(s_v, rng)).collect())
        .collect();
    let v2v_cross = (0..q_count)
        .map(|_| (0..q_count).map(|_| normal_db(s_v, rng)).collect())
        .collect();
    Shadowing {
        v2i_bs,
        v2v_bs,
        v2v_own,
        v2i_v2v,
        v2v_cross,
    }
}

/// `|g|^2` for `g ~ CN(0, 1)`; exponential with unit mean.
fn rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (re * re + im * im) / 2.0
}

pub fn sample_fading<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Fading {
    let w_count = cfg.num_v2i_links();
    let q_count = cfg.num_v2v_pairs();
    let unity = cfg.fading == FadingMode::Unity;
    let draw = |rng: &mut R| if unity { 1.0 } else { rayleigh_power(rng) };
    let v2i_bs = (0..w_count).map(|_| draw(rng)).collect();
    let v2v_bs = (0..q_count)
        .map(|_| (0..w_count).map(|_| draw(rng)).collect())
        .collect();
    let v2v_own = (0..q_count)
        .map(|_| (0..w_count).map(|_| draw(rng)).collect())
        .collect();
    let v2i_v2v = (0..w_count)
        .map(|_| (0..q_count).map(|_| draw(rng)).collect())
        .collect();
    let v2v_cross = (0..q_count)
        .map(|_| {
            (0..q_count)
                .map(|_| (0..w_count).map(|_| draw(rng)).collect())
                .collect()
        })
        .collect();
    Fading {
        v2i_bs,
        v2v_bs,
        v2v_own,
        v2i_v2v,
        v2v_cross,
    }
}

/// Draws fresh shadowing and fading for `topology`.
pub fn sample_gains<R: Rng + ?Sized>(
    topology: &Topology,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> ChannelState {
    let shadowing = sample_shadowing(cfg, rng);
    let fading = sample_fading(cfg, rng);
    ChannelState::compose(topology, cfg, &shadowing, &fading)
}
