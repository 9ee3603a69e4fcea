use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::{ForwardCache, Mlp};
use crate::config::HeadKind;
use crate::env::Action;
use crate::error::Result;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Shape of the joint action: per pair, `W + 1` subband options (the last
/// one is "silent"), `L` power levels and `u_max` symbol lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionLayout {
    pub num_pairs: usize,
    pub num_subbands: usize,
    pub num_levels: usize,
    pub u_max: u32,
}

impl ActionLayout {
    pub fn from_scenario(cfg: &crate::config::ScenarioConfig) -> Self {
        ActionLayout {
            num_pairs: cfg.num_v2v_pairs(),
            num_subbands: cfg.num_v2i_links(),
            num_levels: cfg.num_power_levels(),
            u_max: cfg.u_max,
        }
    }

    /// Option counts of the three heads of one pair.
    pub fn head_sizes(&self) -> [usize; 3] {
        [self.num_subbands + 1, self.num_levels, self.u_max as usize]
    }

    /// `(offset, len)` of every categorical head, pair-major.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(3 * self.num_pairs);
        let mut off = 0;
        for _ in 0..self.num_pairs {
            for n in self.head_sizes() {
                out.push((off, n));
                off += n;
            }
        }
        out
    }

    pub fn num_logits(&self) -> usize {
        self.num_pairs * self.head_sizes().iter().sum::<usize>()
    }

    pub fn num_dims(&self) -> usize {
        3 * self.num_pairs
    }

    /// Decodes one option index per head.
    pub fn decode(&self, idx: &[usize]) -> Action {
        let q = self.num_pairs;
        Action {
            subband: (0..q)
                .map(|p| Some(idx[3 * p]).filter(|&s| s < self.num_subbands))
                .collect(),
            power_level: (0..q).map(|p| idx[3 * p + 1]).collect(),
            u: (0..q).map(|p| idx[3 * p + 2] as u32 + 1).collect(),
        }
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(&self, action: &Action) -> Vec<usize> {
        (0..self.num_pairs)
            .flat_map(|p| {
                [
                    action.subband[p].unwrap_or(self.num_subbands),
                    action.power_level[p],
                    action.u[p] as usize - 1,
                ]
            })
            .collect()
    }
}

/// Raw draw from the policy, before projection.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PolicySample {
    /// One option index per head.
    Categorical(Vec<usize>),
    /// Pre-squash Gaussian draw per action dimension.
    Gaussian(Vec<f64>),
}

/// Actor network plus, in Gaussian mode, a state-independent log-std.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub layout: ActionLayout,
    pub head: HeadKind,
    pub net: Mlp,
    pub log_std: Vec<f64>,
}

/// Gradient of a scalar with respect to the policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrad {
    pub net: Vec<f64>,
    pub log_std: Vec<f64>,
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

/// Nearest of `n` evenly spaced levels on `[-1, 1]` after `tanh`.
pub fn squash_to_index(x: f64, n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    let y = (x.tanh() + 1.0) / 2.0 * (n - 1) as f64;
    (y.round() as usize).min(n - 1)
}

impl Policy {
    pub fn new(layout: ActionLayout, head: HeadKind, net: Mlp, initial_log_std: f64) -> Self {
        let log_std = match head {
            HeadKind::Categorical => Vec::new(),
            HeadKind::Gaussian => vec![initial_log_std; layout.num_dims()],
        };
        Policy {
            layout,
            head,
            net,
            log_std,
        }
    }

    pub fn output_dim(layout: &ActionLayout, head: HeadKind) -> usize {
        match head {
            HeadKind::Categorical => layout.num_logits(),
            HeadKind::Gaussian => layout.num_dims(),
        }
    }

    pub fn forward(&self, states: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.net.forward(states)
    }

    pub fn forward_one(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.net.forward_one(state)
    }

    /// Per-head probabilities of one output row.
    pub fn probabilities(&self, out: &[f64]) -> Vec<Vec<f64>> {
        self.layout
            .segments()
            .iter()
            .map(|&(o, n)| log_softmax(&out[o..o + n]).into_iter().map(f64::exp).collect())
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, out: &[f64], rng: &mut R) -> PolicySample {
        match self.head {
            HeadKind::Categorical => PolicySample::Categorical(
                self.layout
                    .segments()
                    .iter()
                    .map(|&(o, n)| {
                        let lp = log_softmax(&out[o..o + n]);
                        let mut x: f64 = rng.random();
                        for (i, l) in lp.iter().enumerate() {
                            x -= l.exp();
                            if x < 0.0 {
                                return i;
                            }
                        }
                        n - 1
                    })
                    .collect(),
            ),
            HeadKind::Gaussian => PolicySample::Gaussian(
                out.iter()
                    .zip(&self.log_std)
                    .map(|(mu, ls)| {
                        let e: f64 = StandardNormal.sample(rng);
                        mu + ls.exp() * e
                    })
                    .collect(),
            ),
        }
    }

    /// Mode of every head.
    pub fn greedy(&self, out: &[f64]) -> PolicySample {
        match self.head {
            HeadKind::Categorical => PolicySample::Categorical(
                self.layout
                    .segments()
                    .iter()
                    .map(|&(o, n)| argmax(&out[o..o + n]))
                    .collect(),
            ),
            HeadKind::Gaussian => PolicySample::Gaussian(out.to_vec()),
        }
    }

    pub fn to_action(&self, sample: &PolicySample) -> Action {
        match sample {
            PolicySample::Categorical(idx) => self.layout.decode(idx),
            PolicySample::Gaussian(x) => {
                let sizes = self.layout.head_sizes();
                let idx: Vec<usize> = x
                    .iter()
                    .enumerate()
                    .map(|(d, &v)| squash_to_index(v, sizes[d % 3]))
                    .collect();
                self.layout.decode(&idx)
            }
        }
    }

    /// Joint log-probability, the sum over heads.
    pub fn log_prob(&self, out: &[f64], sample: &PolicySample) -> f64 {
        match sample {
            PolicySample::Categorical(idx) => self
                .layout
                .segments()
                .iter()
                .zip(idx)
                .map(|(&(o, n), &a)| log_softmax(&out[o..o + n])[a])
                .sum(),
            PolicySample::Gaussian(x) => x
                .iter()
                .zip(out)
                .zip(&self.log_std)
                .map(|((x, mu), ls)| {
                    let z = (x - mu) / ls.exp();
                    -0.5 * z * z - ls - 0.5 * LN_2PI
                })
                .sum(),
        }
    }

    pub fn entropy(&self, out: &[f64]) -> f64 {
        match self.head {
            HeadKind::Categorical => self
                .layout
                .segments()
                .iter()
                .map(|&(o, n)| {
                    let lp = log_softmax(&out[o..o + n]);
                    -lp.iter().map(|l| l.exp() * l).sum::<f64>()
                })
                .sum(),
            HeadKind::Gaussian => self.log_std.iter().map(|ls| ls + 0.5 * (1.0 + LN_2PI)).sum(),
        }
    }

    /// Adds `scale * d log_prob / d out` into `d_out`, and the log-std part
    /// into `d_log_std`.
    pub fn accumulate_log_prob_grad(
        &self,
        out: &[f64],
        sample: &PolicySample,
        scale: f64,
        d_out: &mut [f64],
        d_log_std: &mut [f64],
    ) {
        match sample {
            PolicySample::Categorical(idx) => {
                for (&(o, n), &a) in self.layout.segments().iter().zip(idx) {
                    let lp = log_softmax(&out[o..o + n]);
                    for i in 0..n {
                        let onehot = if i == a { 1.0 } else { 0.0 };
                        d_out[o + i] += scale * (onehot - lp[i].exp());
                    }
                }
            }
            PolicySample::Gaussian(x) => {
                for d in 0..x.len() {
                    let var = (2.0 * self.log_std[d]).exp();
                    let diff = x[d] - out[d];
                    d_out[d] += scale * diff / var;
                    d_log_std[d] += scale * (diff * diff / var - 1.0);
                }
            }
        }
    }

    /// Adds `scale * d entropy / d out` (and log-std) into the buffers.
    pub fn accumulate_entropy_grad(&self, out: &[f64], scale: f64, d_out: &mut [f64], d_log_std: &mut [f64]) {
        match self.head {
            HeadKind::Categorical => {
                for &(o, n) in &self.layout.segments() {
                    let lp = log_softmax(&out[o..o + n]);
                    let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
                    for i in 0..n {
                        d_out[o + i] += scale * (-lp[i].exp() * (lp[i] + h));
                    }
                }
            }
            HeadKind::Gaussian => {
                for g in d_log_std.iter_mut() {
                    *g += scale;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> ActionLayout {
        ActionLayout {
            num_pairs: 2,
            num_subbands: 2,
            num_levels: 4,
            u_max: 3,
        }
    }

    fn policy(head: HeadKind, seed: u64) -> Policy {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::init(&[5, 8, Policy::output_dim(&l, head)], 1.0, &mut rng);
        Policy::new(l, head, net, -0.3)
    }

    #[test]
    fn zero_network_is_uniform() {
        let l = layout();
        let p = Policy::new(l, HeadKind::Categorical, Mlp::zeros(&[5, 8, l.num_logits()]), 0.0);
        let out = p.forward_one(&[0.0; 5]).unwrap();
        for (probs, n) in p.probabilities(&out).iter().zip(l.segments().iter().map(|s| s.1)) {
            for v in probs {
                assert!((v - 1.0 / n as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn heads_normalize() {
        let p = policy(HeadKind::Categorical, 1);
        let out = p.forward_one(&[3.0, -2.0, 0.5, 9.0, -7.0]).unwrap();
        for probs in p.probabilities(&out) {
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn joint_log_prob_is_sum_of_heads() {
        let p = policy(HeadKind::Categorical, 2);
        let out = p.forward_one(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = p.sample(&out, &mut rng);
        let PolicySample::Categorical(idx) = &s else { unreachable!() };
        let probs = p.probabilities(&out);
        let direct: f64 = probs.iter().zip(idx).map(|(pr, &a)| pr[a].ln()).sum();
        assert!((p.log_prob(&out, &s) - direct).abs() < 1e-12);
    }

    #[test]
    fn encode_decode_round_trip() {
        let l = layout();
        for idx in [[0, 0, 0, 2, 3, 2], [1, 2, 1, 0, 1, 0]] {
            assert_eq!(l.encode(&l.decode(&idx)), idx.to_vec());
        }
        let a = l.decode(&[2, 1, 0, 0, 0, 2]);
        assert_eq!(a.subband, vec![None, Some(0)]);
        assert_eq!(a.u, vec![1, 3]);
    }

    #[test]
    fn sampling_frequencies_follow_probabilities() {
        let p = policy(HeadKind::Categorical, 3);
        let out = p.forward_one(&[1.0, 0.0, -1.0, 0.5, 0.2]).unwrap();
        let probs = p.probabilities(&out);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 40_000;
        let mut counts = vec![0usize; probs[0].len()];
        for _ in 0..n {
            if let PolicySample::Categorical(idx) = p.sample(&out, &mut rng) {
                counts[idx[0]] += 1;
            }
        }
        for (c, pr) in counts.iter().zip(&probs[0]) {
            assert!((*c as f64 / n as f64 - pr).abs() < 0.01);
        }
    }

    #[test]
    fn squash_discretization() {
        assert_eq!(squash_to_index(-50.0, 4), 0);
        assert_eq!(squash_to_index(50.0, 4), 3);
        assert_eq!(squash_to_index(0.0, 3), 1);
        assert_eq!(squash_to_index(0.3, 1), 0);
    }

    fn check_grads(head: HeadKind) {
        let p = policy(head, 5);
        let out = p.forward_one(&[0.3, -0.1, 0.7, 0.2, -0.4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = p.sample(&out, &mut rng);
        let mut d_out = vec![0.0; out.len()];
        let mut d_ls = vec![0.0; p.log_std.len()];
        p.accumulate_log_prob_grad(&out, &s, 1.0, &mut d_out, &mut d_ls);
        p.accumulate_entropy_grad(&out, 0.5, &mut d_out, &mut d_ls);
        let f = |pol: &Policy, o: &[f64]| pol.log_prob(o, &s) + 0.5 * pol.entropy(o);
        let h = 1e-6;
        for k in 0..out.len() {
            let (mut a, mut b) = (out.clone(), out.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (f(&p, &a) - f(&p, &b)) / (2.0 * h);
            assert!((fd - d_out[k]).abs() < 1e-6, "out {k}: {fd} vs {}", d_out[k]);
        }
        for k in 0..p.log_std.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.log_std[k] += h;
            b.log_std[k] -= h;
            let fd = (f(&a, &out) - f(&b, &out)) / (2.0 * h);
            assert!((fd - d_ls[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn categorical_head_gradients() {
        check_grads(HeadKind::Categorical);
    }

    #[test]
    fn gaussian_head_gradients() {
        check_grads(HeadKind::Gaussian);
    }

    #[test]
    fn gaussian_actions_are_feasible_indices() {
        let p = policy(HeadKind::Gaussian, 7);
        let out = p.forward_one(&[0.0; 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let a = p.to_action(&p.sample(&out, &mut rng));
            assert!(a.power_level.iter().all(|&l| l < 4));
            assert!(a.u.iter().all(|&u| (1..=3).contains(&u)));
        }
    }
}
