//! Noisy clipped population-gradient descent on `Mlp` models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{alignment_full_group, learning_bounds, subtract_baseline, BoundParams};
use crate::error::{Error, Result};
use crate::group::GroupShape;
use crate::learn::mlp::{embed_all, Mlp, Scratch};
use crate::spectral::transform::group_spectrum;
use crate::sum::sum_f64;

pub const MAX_TRAIN_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgdConfig {
    pub steps: usize,
    pub eta: f64,
    /// Clip radius for per-example gradients.
    pub r: f64,
    pub tau: f64,
    pub seed: u64,
    pub eps: f64,
    /// `h_*`; the zero table when absent.
    #[serde(default)]
    pub baseline: Option<Vec<f64>>,
}

impl NgdConfig {
    fn validate(&self, len: usize) -> Result<()> {
        if !(self.r > 0.0) || !(self.tau >= 0.0) || !(self.eps > 0.0) || !self.eta.is_finite() {
            return Err(Error::arg("need R > 0, τ ≥ 0, ε > 0 and a finite learning rate"));
        }
        if self.baseline.as_ref().is_some_and(|b| b.len() != len) {
            return Err(Error::arg("baseline length differs from the target"));
        }
        Ok(())
    }
}

/// The counter-based seed of trial `i`: splitmix64 of `base + (i + 1)·γ`.
pub fn trial_seed(base: u64, i: u64) -> u64 {
    let mut z = base.wrapping_add((i + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgdRun {
    pub model: Mlp,
    /// `‖f(·; θ_k) − h‖²` for `k = 0..=T`.
    pub losses: Vec<f64>,
    /// `‖h_* − h‖²`.
    pub baseline_loss: f64,
    pub success: bool,
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    sum_f64(&d) / a.len() as f64
}

fn check_sizes(model: &Mlp, target: &[f64], shape: &GroupShape) -> Result<()> {
    if target.len() != shape.len() {
        return Err(Error::arg("target length differs from the shape order"));
    }
    if target.len() > MAX_TRAIN_LEN {
        return Err(Error::Resource { what: "training table", requested: target.len() as u64, cap: MAX_TRAIN_LEN as u64 });
    }
    if model.input_dim() != 2 * shape.dim() {
        return Err(Error::arg(format!("model input {} does not match 2·dim = {}", model.input_dim(), 2 * shape.dim())));
    }
    Ok(())
}

pub fn ngd_train(model: Mlp, target: &[f64], shape: &GroupShape, cfg: &NgdConfig) -> Result<NgdRun> {
    check_sizes(&model, target, shape)?;
    cfg.validate(target.len())?;
    let inputs = embed_all(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(train_on(model, target, &inputs, cfg, &mut rng))
}

/// Training loop on precomputed embeddings; single-threaded and deterministic.
fn train_on(mut model: Mlp, target: &[f64], inputs: &[f64], cfg: &NgdConfig, rng: &mut ChaCha8Rng) -> NgdRun {
    let x = target.len();
    let dim = inputs.len() / x;
    let np = model.param_count();
    let noise = Normal::new(0.0, cfg.tau.max(0.0)).unwrap();
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut acc = vec![0.0; np];
    let mut outputs = vec![0.0; x];
    let mut scratch = Scratch::default();
    for step in 0..=cfg.steps {
        let last = step == cfg.steps;
        acc.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..x {
            let input = &inputs[i * dim..(i + 1) * dim];
            if last {
                outputs[i] = model.forward(input);
                continue;
            }
            let y = model.backprop(input, &mut scratch);
            outputs[i] = y;
            let norm = model.grad_norm_sq(&scratch).sqrt();
            let scale = if norm > cfg.r { cfg.r / norm } else { 1.0 };
            model.add_scaled_grad(&scratch, -(target[i] - y) * scale, &mut acc);
        }
        losses.push(mean_sq_diff(&outputs, target));
        if last {
            break;
        }
        for (p, a) in model.params_mut().iter_mut().zip(&acc) {
            let xi = if cfg.tau > 0.0 { noise.sample(rng) } else { 0.0 };
            *p -= cfg.eta * (a / x as f64 + xi);
        }
    }
    let baseline_loss = match &cfg.baseline {
        Some(b) => mean_sq_diff(b, target),
        None => target.iter().map(|v| v * v).sum::<f64>() / x as f64,
    };
    let success = *losses.last().unwrap() <= baseline_loss - cfg.eps;
    NgdRun { model, losses, baseline_loss, success }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgdExperiment {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// `A(h − h_*, X)` from the full spectrum.
    pub alignment: f64,
    /// Clamped `R/(2τ)·√(T·A) + A/ε`.
    pub theory_bound: f64,
    pub theory_raw: f64,
    /// Theory bound of at least 1.
    pub vacuous: bool,
    /// `√(rate·(1 − rate)/trials)`.
    pub sigma: f64,
    pub within_bound: bool,
    /// `T·(R/τ)²`.
    pub budget: f64,
    pub final_losses: Vec<f64>,
}

pub fn ngd_experiment(target: &[f64], shape: &GroupShape, cfg: &NgdConfig, trials: usize, arch: &[usize]) -> Result<NgdExperiment> {
    if trials == 0 {
        return Err(Error::arg("need at least one trial"));
    }
    if !(cfg.tau > 0.0) {
        return Err(Error::arg("the NGD bound needs τ > 0"));
    }
    let probe = Mlp::new(arch, 0)?;
    check_sizes(&probe, target, shape)?;
    cfg.validate(target.len())?;
    let centered = match &cfg.baseline {
        Some(b) => subtract_baseline(target, b)?,
        None => target.to_vec(),
    };
    let alignment = alignment_full_group(&group_spectrum(&centered, shape)?).value;
    let bounds = learning_bounds(
        alignment,
        &BoundParams { eps: cfg.eps, r: cfg.r, tau: cfg.tau, t: cfg.steps as u64, q: 0 },
    )?;
    let inputs = embed_all(shape);
    let runs: Vec<NgdRun> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, i as u64));
            let model = Mlp::with_rng(arch, &mut rng).expect("architecture checked");
            train_on(model, target, &inputs, cfg, &mut rng)
        })
        .collect();
    let successes = runs.iter().filter(|r| r.success).count();
    let rate = successes as f64 / trials as f64;
    let sigma = (rate * (1.0 - rate) / trials as f64).sqrt();
    Ok(NgdExperiment {
        trials,
        successes,
        success_rate: rate,
        alignment,
        theory_bound: bounds.ngd_fail_prob,
        theory_raw: bounds.ngd_raw,
        vacuous: bounds.ngd_raw >= 1.0,
        sigma,
        within_bound: rate <= bounds.ngd_fail_prob + 3.0 * sigma,
        budget: cfg.steps as f64 * (cfg.r / cfg.tau).powi(2),
        final_losses: runs.iter().map(|r| *r.losses.last().unwrap()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve, FunctionKind};
    use crate::group::{char_eval, CharacterIndex};
    use crate::learn::mlp::embed;

    fn cfg(steps: usize, tau: f64) -> NgdConfig {
        NgdConfig { steps, eta: 0.5, r: 1.0, tau, seed: 7, eps: 0.01, baseline: None }
    }

    #[test]
    fn zero_steps_returns_initial_model() {
        let s = GroupShape::prime_power(2, 4).unwrap();
        let m = Mlp::new(&[8, 4, 1], 1).unwrap();
        let t = vec![0.5; 16];
        let run = ngd_train(m.clone(), &t, &s, &cfg(0, 0.1)).unwrap();
        assert_eq!(run.model, m);
        assert_eq!(run.losses.len(), 1);
        assert_eq!(run.success, run.losses[0] <= 0.25 - 0.01);
    }

    #[test]
    fn noiseless_linear_descent_is_monotone() {
        let s = GroupShape::prime_power(3, 3).unwrap();
        // A target in the span of the embedding coordinates.
        let target: Vec<f64> = (0..27).map(|x| 0.3 * embed(&s, x)[2] - 0.2 * embed(&s, x)[5]).collect();
        let m = Mlp::new(&[6, 1], 2).unwrap();
        let run = ngd_train(m, &target, &s, &NgdConfig { eta: 0.2, r: 100.0, ..cfg(50, 0.0) }).unwrap();
        for w in run.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        assert!(run.success);
    }

    #[test]
    fn reproducible_traces() {
        let s = GroupShape::prime_power(2, 6).unwrap();
        let mu = sieve(FunctionKind::Mobius, 64).unwrap().to_f64();
        let a = ngd_train(Mlp::new(&[12, 4, 1], 3).unwrap(), &mu, &s, &cfg(10, 0.05)).unwrap();
        let b = ngd_train(Mlp::new(&[12, 4, 1], 3).unwrap(), &mu, &s, &cfg(10, 0.05)).unwrap();
        assert_eq!(a.losses, b.losses);
        let c = ngd_train(Mlp::new(&[12, 4, 1], 3).unwrap(), &mu, &s, &NgdConfig { seed: 8, ..cfg(10, 0.05) }).unwrap();
        assert_ne!(a.losses, c.losses);
    }

    #[test]
    fn experiment_examples() {
        // p = 2 characters are real, so the table is a single character.
        let s2 = GroupShape::prime_power(2, 5).unwrap();
        let b2 = CharacterIndex::new(vec![1, 0, 1, 0, 0], &s2).unwrap();
        let chi: Vec<f64> = (0..32).map(|x| char_eval(&b2, x, &s2).unwrap().re).collect();
        let e = ngd_experiment(&chi, &s2, &cfg(5, 0.1), 3, &[10, 3, 1]).unwrap();
        assert!((e.alignment - 1.0).abs() < 1e-12);
        assert!(e.vacuous && e.theory_bound == 1.0);

        let s = GroupShape::prime_power(3, 3).unwrap();
        let zero = vec![0.0; 27];
        let e = ngd_experiment(&zero, &s, &cfg(5, 0.1), 4, &[6, 3, 1]).unwrap();
        assert_eq!(e.success_rate, 0.0);
        assert_eq!(e.alignment, 0.0);
        assert!(ngd_experiment(&zero, &s, &cfg(5, 0.0), 4, &[6, 3, 1]).is_err());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
