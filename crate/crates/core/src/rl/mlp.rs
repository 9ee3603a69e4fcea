use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters are stored flat, layer by layer, each as a row-major
/// `out x in` weight block followed by `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations kept from the forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    acts: Vec<Array2<f64>>,
}

pub fn num_params(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; num_params(sizes)],
        }
    }

    /// Gaussian init with std `1/sqrt(fan_in)`; the output layer is scaled
    /// by `output_gain`. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        let mut net = Mlp::zeros(sizes);
        let layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == layers { output_gain } else { 1.0 };
            let normal = Normal::new(0.0, gain / (fan_in as f64).sqrt()).expect("finite std");
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = normal.sample(rng);
            }
            off += (fan_in + 1) * fan_out;
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    fn offset(&self, layer: usize) -> usize {
        num_params(&self.sizes[..=layer])
    }

    pub fn layer(&self, l: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offset(l);
        let w = ArrayView2::from_shape((n_out, n_in), &self.params[off..off + n_in * n_out]).expect("layout");
        let b = ArrayView1::from(&self.params[off + n_in * n_out..off + (n_in + 1) * n_out]);
        (w, b)
    }

    /// Weight and bias slices of the output layer, for in-place rescaling.
    pub fn output_layer_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let l = self.sizes.len() - 2;
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offset(l);
        let (w, b) = self.params[off..off + (n_in + 1) * n_out].split_at_mut(n_in * n_out);
        (w, b)
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_owned());
        for l in 0..layers {
            let (w, b) = self.layer(l);
            let mut z = acts[l].dot(&w.t());
            z += &b;
            if l + 1 < layers {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        let out = acts.last().expect("non-empty").clone();
        Ok((out, ForwardCache { acts }))
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row");
        Ok(self.forward(view)?.0.into_raw_vec_and_offset().0)
    }

    /// Gradient of a scalar loss with respect to `params`, given
    /// `d loss / d output` for every row of the batch.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array2<f64>) -> Vec<f64> {
        let layers = self.sizes.len() - 1;
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = d_out.clone();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let gw = delta.t().dot(&cache.acts[l]);
            let gb: Array1<f64> = delta.sum_axis(Axis(0));
            grad[off..off + n_in * n_out].copy_from_slice(gw.as_slice().expect("standard layout"));
            grad[off + n_in * n_out..off + (n_in + 1) * n_out].copy_from_slice(gb.as_slice().expect("contiguous"));
            if l > 0 {
                let (w, _) = self.layer(l);
                let mut d_prev = delta.dot(&w);
                let a = &cache.acts[l];
                d_prev.zip_mut_with(a, |d, &h| *d *= 1.0 - h * h);
                delta = d_prev;
            }
        }
        grad
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count_closed_form() {
        assert_eq!(num_params(&[12, 512, 512, 512, 1]), 13 * 512 + 2 * 513 * 512 + 513);
        let net = Mlp::zeros(&[3, 4, 2]);
        assert_eq!(net.params.len(), 4 * 4 + 5 * 2);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 8, 8, 2]);
        let (out, _) = net.forward(Array2::zeros((5, 3)).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = Mlp::zeros(&[3, 2]);
        assert!(matches!(
            net.forward(Array2::zeros((1, 4)).view()),
            Err(Error::Dimension { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn hand_computed_forward() {
        let mut net = Mlp::zeros(&[2, 1, 1]);
        // hidden: tanh(1*x0 + 2*x1 + 0.5); output: 3*h - 1
        net.params = vec![1.0, 2.0, 0.5, 3.0, -1.0];
        let (out, _) = net.forward(array![[0.25, -0.5]].view()).unwrap();
        let expect = 3.0 * (0.25f64 - 1.0 + 0.5).tanh() - 1.0;
        assert!((out[[0, 0]] - expect).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::init(&[3, 5, 4, 2], 1.0, &mut rng);
        let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
        // loss = sum(out * c)
        let c = Array2::from_shape_fn((6, 2), |(i, j)| (i as f64 - j as f64) * 0.1 + 0.05);
        let (_, cache) = net.forward(x.view()).unwrap();
        let g = net.backward(&cache, &c);
        let loss = |n: &Mlp| (n.forward(x.view()).unwrap().0 * &c).sum();
        let h = 1e-5;
        for k in 0..net.params.len() {
            let mut a = net.clone();
            let mut b = net.clone();
            a.params[k] += h;
            b.params[k] -= h;
            let fd = (loss(&a) - loss(&b)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-7 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn output_layer_mut_addresses_last_block() {
        let mut net = Mlp::zeros(&[2, 3, 1]);
        let (w, b) = net.output_layer_mut();
        assert_eq!((w.len(), b.len()), (3, 1));
        b[0] = 7.0;
        assert_eq!(*net.params.last().unwrap(), 7.0);
    }
}
