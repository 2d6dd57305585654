//! Fully connected tanh network on the circle embedding of digit vectors.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupShape;

/// `sizes[0]` inputs, tanh on every hidden layer, one linear output.
/// Parameters are stored layer by layer as `W` (row-major, out × in) then `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// `(cos 2πx_k/p_k, sin 2πx_k/p_k)` for every digit of `x`.
pub fn embed(shape: &GroupShape, x: u64) -> Vec<f64> {
    let mut digits = vec![0u32; shape.dim()];
    shape.encode_into(x % shape.order(), &mut digits);
    embed_digits(shape, &digits)
}

pub fn embed_digits(shape: &GroupShape, digits: &[u32]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * digits.len());
    for (k, &v) in digits.iter().enumerate() {
        let t = TAU * v as f64 / shape.radix_at(k) as f64;
        out.push(t.cos());
        out.push(t.sin());
    }
    out
}

/// Embeddings of every `x < X`, concatenated in integer order.
pub fn embed_all(shape: &GroupShape) -> Vec<f64> {
    (0..shape.order()).flat_map(|x| embed(shape, x)).collect()
}

impl Mlp {
    /// Gaussian weights `N(0, 1/fan_in)`, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_rng(sizes, &mut rng)
    }

    pub fn with_rng<R: rand::Rng>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) || *sizes.last().unwrap() != 1 {
            return Err(Error::arg("layer sizes must be positive and end in a single output"));
        }
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let normal = Normal::new(0.0, (1.0 / w[0] as f64).sqrt()).unwrap();
            params.extend((0..w[0] * w[1]).map(|_| normal.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Mlp { sizes: sizes.to_vec(), params })
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let m = Mlp { sizes: sizes.to_vec(), params: Vec::new() };
        if params.len() != m.param_count() {
            return Err(Error::arg(format!("expected {} parameters, got {}", m.param_count(), params.len())));
        }
        Ok(Mlp { params, ..m })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn forward(&self, input: &[f64]) -> f64 {
        let mut act = input.to_vec();
        let mut off = 0;
        let layers = self.sizes.len() - 1;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let (wm, rest) = self.params[off..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            act = (0..n_out)
                .map(|o| {
                    let z = b[o] + dot(&wm[o * n_in..(o + 1) * n_in], &act);
                    if l + 1 < layers { z.tanh() } else { z }
                })
                .collect();
            off += n_in * n_out + n_out;
        }
        act[0]
    }

    /// Output and `∇_θ f` written into `grad`.
    pub fn forward_grad(&self, input: &[f64], grad: &mut [f64]) -> f64 {
        let mut scratch = Scratch::default();
        let y = self.backprop(input, &mut scratch);
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.add_scaled_grad(&scratch, 1.0, grad);
        y
    }

    /// Forward pass plus `∂f/∂z_l` for every layer, kept in `scratch`.
    pub fn backprop(&self, input: &[f64], scratch: &mut Scratch) -> f64 {
        let layers = self.sizes.len() - 1;
        scratch.acts.resize_with(layers + 1, Vec::new);
        scratch.deltas.resize_with(layers, Vec::new);
        scratch.acts[0].clear();
        scratch.acts[0].extend_from_slice(input);
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let wm = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let (done, rest) = scratch.acts.split_at_mut(l + 1);
            let prev = &done[l];
            let next = &mut rest[0];
            next.clear();
            next.extend((0..n_out).map(|o| {
                let z = b[o] + dot(&wm[o * n_in..(o + 1) * n_in], prev);
                if l + 1 < layers { z.tanh() } else { z }
            }));
            off += n_in * n_out + n_out;
        }
        scratch.deltas[layers - 1].clear();
        scratch.deltas[layers - 1].push(1.0);
        for l in (1..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            off -= n_in * n_out + n_out;
            let wm = &self.params[off..off + n_in * n_out];
            let (lo, hi) = scratch.deltas.split_at_mut(l);
            let (below, above) = (&mut lo[l - 1], &hi[0]);
            below.clear();
            below.resize(n_in, 0.0);
            for (o, &d) in above.iter().enumerate() {
                for (acc, &w) in below.iter_mut().zip(&wm[o * n_in..(o + 1) * n_in]) {
                    *acc += w * d;
                }
            }
            for (acc, &a) in below.iter_mut().zip(&scratch.acts[l]) {
                *acc *= 1.0 - a * a;
            }
        }
        scratch.acts[layers][0]
    }

    /// `‖∇_θ f‖²` after `backprop`, using `‖δ ⊗ a‖² = ‖δ‖² ‖a‖²`.
    pub fn grad_norm_sq(&self, scratch: &Scratch) -> f64 {
        (0..self.sizes.len() - 1)
            .map(|l| {
                let d2: f64 = scratch.deltas[l].iter().map(|v| v * v).sum();
                let a2: f64 = scratch.acts[l].iter().map(|v| v * v).sum();
                d2 * (a2 + 1.0)
            })
            .sum()
    }

    /// `acc += w ∇_θ f` after `backprop`.
    pub fn add_scaled_grad(&self, scratch: &Scratch, w: f64, acc: &mut [f64]) {
        let mut off = 0;
        for l in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &scratch.acts[l];
            for (o, &d) in scratch.deltas[l].iter().enumerate() {
                let wd = w * d;
                for (g, &a) in acc[off + o * n_in..off + (o + 1) * n_in].iter_mut().zip(prev) {
                    *g += wd * a;
                }
                acc[off + n_in * n_out + o] += wd;
            }
            off += n_in * n_out + n_out;
        }
    }

    /// `ρ(g)θ`: the column pair of the first layer belonging to digit `k` is
    /// rotated by `−2πg_k/p_k`, so that `f(g·x; ρ(g)θ) = f(x; θ)`.
    pub fn act(&self, shape: &GroupShape, g: u64) -> Result<Self> {
        if self.sizes[0] != 2 * shape.dim() {
            return Err(Error::arg(format!("model input {} does not match 2·dim = {}", self.sizes[0], 2 * shape.dim())));
        }
        let gd = shape.encode(g)?;
        let mut out = self.clone();
        let n_in = self.sizes[0];
        for o in 0..self.sizes[1] {
            let row = &mut out.params[o * n_in..(o + 1) * n_in];
            for (k, &v) in gd.iter().enumerate() {
                let t = -TAU * v as f64 / shape.radix_at(k) as f64;
                let (s, c) = t.sin_cos();
                let (w0, w1) = (row[2 * k], row[2 * k + 1]);
                // Row vector times R(t) on the right.
                row[2 * k] = w0 * c + w1 * s;
                row[2 * k + 1] = -w0 * s + w1 * c;
            }
        }
        Ok(out)
    }
}

/// Reusable activation and back-propagation buffers.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
pub const FD_FLOOR: f64 = 1e-3;

/// Max over coordinates of `|analytic − central difference| / max(|analytic|, |numeric|, FD_FLOOR)`.
pub fn gradient_check_input(model: &Mlp, input: &[f64]) -> f64 {
    let mut grad = vec![0.0; model.param_count()];
    model.forward_grad(input, &mut grad);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let orig = probe.params[i];
        probe.params[i] = orig + FD_STEP;
        let up = probe.forward(input);
        probe.params[i] = orig - FD_STEP;
        let down = probe.forward(input);
        probe.params[i] = orig;
        let num = (up - down) / (2.0 * FD_STEP);
        let denom = grad[i].abs().max(num.abs()).max(FD_FLOOR);
        worst = worst.max((grad[i] - num).abs() / denom);
    }
    worst
}

pub fn gradient_check(model: &Mlp, x: u64, shape: &GroupShape) -> Result<f64> {
    if model.input_dim() != 2 * shape.dim() {
        return Err(Error::arg("model input does not match the shape"));
    }
    Ok(gradient_check_input(model, &embed(shape, x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn layout_and_init() {
        let m = Mlp::new(&[4, 3, 1], 1).unwrap();
        assert_eq!(m.param_count(), 4 * 3 + 3 + 3 + 1);
        assert_eq!(&m.params()[12..15], &[0.0, 0.0, 0.0]);
        assert!(Mlp::new(&[4, 2], 0).is_err());
        assert!(Mlp::new(&[4], 0).is_err());
        assert!(Mlp::from_params(&[2, 1], vec![1.0]).is_err());
    }

    #[test]
    fn linear_model_gradient_is_input() {
        let m = Mlp::new(&[6, 1], 3).unwrap();
        let s = GroupShape::prime_power(3, 3).unwrap();
        let input = embed(&s, 17);
        let mut g = vec![0.0; 7];
        let y = m.forward_grad(&input, &mut g);
        assert_eq!(&g[..6], &input[..]);
        assert_eq!(g[6], 1.0);
        assert!((y - m.forward(&input)).abs() < 1e-15);
        assert!(gradient_check(&m, 17, &s).unwrap() < 1e-9);
    }

    #[test]
    fn zero_input_coordinates_have_zero_weight_gradient() {
        let m = Mlp::new(&[4, 5, 1], 9).unwrap();
        let input = [0.0, 0.7, 0.0, -0.2];
        let mut g = vec![0.0; m.param_count()];
        m.forward_grad(&input, &mut g);
        for o in 0..5 {
            assert_eq!(g[o * 4], 0.0);
            assert_eq!(g[o * 4 + 2], 0.0);
        }
    }

    #[test]
    fn tanh_network_gradient() {
        let s = GroupShape::new(&[2, 3], &[2, 2]).unwrap();
        let m = Mlp::new(&[8, 16, 8, 1], 4).unwrap();
        for x in [0, 5, 35] {
            assert!(gradient_check(&m, x, &s).unwrap() < 1e-5);
        }
    }

    #[test]
    fn streamed_gradient_matches_dense() {
        let m = Mlp::new(&[6, 9, 4, 1], 8).unwrap();
        let s = GroupShape::prime_power(5, 3).unwrap();
        let input = embed(&s, 77);
        let mut g = vec![0.0; m.param_count()];
        let y = m.forward_grad(&input, &mut g);
        let mut sc = Scratch::default();
        assert_eq!(m.backprop(&input, &mut sc), y);
        let n2: f64 = g.iter().map(|v| v * v).sum();
        assert!((m.grad_norm_sq(&sc) - n2).abs() < 1e-12 * n2.max(1.0));
        let mut acc = vec![1.0; m.param_count()];
        m.add_scaled_grad(&sc, 0.5, &mut acc);
        for (a, gi) in acc.iter().zip(&g) {
            assert!((a - (1.0 + 0.5 * gi)).abs() < 1e-15);
        }
    }

    #[test]
    fn equivariance() {
        let s = GroupShape::new(&[3, 5], &[2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = Mlp::new(&[6, 7, 1], 2).unwrap();
        for _ in 0..10 {
            let g = rng.random_range(0..s.order());
            let x = rng.random_range(0..s.order());
            let moved = m.act(&s, g).unwrap();
            let gx = s.act(g, x);
            assert!((moved.forward(&embed(&s, gx)) - m.forward(&embed(&s, x))).abs() < 1e-9);
        }
    }
}
