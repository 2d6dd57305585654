//! Correlational statistical queries against an adversarial oracle that
//! replays the answers of a null target whenever they are τ-compatible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::alignment_full_group;
use crate::error::{Error, Result};
use crate::group::{char_eval_digits, GroupShape};
use crate::spectral::transform::group_spectrum;
use crate::sum::sum_f64;

/// A deterministic query strategy. Query `t` may depend on responses `0..t`.
pub trait CsqLearner {
    fn query(&mut self, t: usize, responses: &[f64]) -> Vec<f64>;
    fn output(&mut self, responses: &[f64]) -> Vec<f64>;
}

/// Gradient descent on fixed features `φ_t = Re χ_{a_t}` with seeded nonzero
/// `a_t`: from `w = 0`, the squared-loss step on feature `t` sets `w_t = v_t`.
/// The predictor is `clamp(Σ_t w_t φ_t, −1, 1)`.
#[derive(Debug, Clone)]
pub struct FixedFeatureLearner {
    features: Vec<Vec<f64>>,
}

impl FixedFeatureLearner {
    pub fn new(shape: &GroupShape, q: usize, seed: u64) -> Result<Self> {
        if shape.order() < 2 {
            return Err(Error::arg("group has no nontrivial characters"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut digits = vec![0u32; shape.dim()];
        let features = (0..q)
            .map(|_| {
                let a = shape.digits_of_flat(rng.random_range(1..shape.len()));
                (0..shape.order())
                    .map(|x| {
                        shape.encode_into(x, &mut digits);
                        char_eval_digits(&a, &digits, shape).re
                    })
                    .collect()
            })
            .collect();
        Ok(FixedFeatureLearner { features })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }
}

impl CsqLearner for FixedFeatureLearner {
    fn query(&mut self, t: usize, _responses: &[f64]) -> Vec<f64> {
        self.features[t % self.features.len()].clone()
    }

    fn output(&mut self, responses: &[f64]) -> Vec<f64> {
        let n = self.features.first().map_or(0, |f| f.len());
        (0..n)
            .map(|x| {
                let s: f64 = responses.iter().zip(&self.features).map(|(w, f)| w * f[x]).sum();
                s.clamp(-1.0, 1.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsqTranscript {
    pub queries: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    pub output: Vec<f64>,
    /// Rounds at which the null answer was not τ-compatible.
    pub deviations: Vec<usize>,
    pub bad_event: bool,
}

fn mean_product(a: &[f64], b: &[f64]) -> f64 {
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    sum_f64(&v) / a.len() as f64
}

/// Answers `v = E[h_* φ]` when `|E[h φ] − v| ≤ τ`, otherwise the τ-compatible value nearest to `v`.
pub fn csq_adversarial_game<L: CsqLearner>(
    learner: &mut L,
    target: &[f64],
    null_target: &[f64],
    tau: f64,
    q_max: usize,
) -> Result<CsqTranscript> {
    if !(tau > 0.0) {
        return Err(Error::arg("τ must be positive"));
    }
    if target.len() != null_target.len() || target.is_empty() {
        return Err(Error::arg("target and null target must have the same nonzero length"));
    }
    let mut queries = Vec::with_capacity(q_max);
    let mut responses = Vec::with_capacity(q_max);
    let mut deviations = Vec::new();
    for t in 0..q_max {
        let phi = learner.query(t, &responses);
        if phi.len() != target.len() {
            return Err(Error::Protocol(format!("query {t} has length {}, expected {}", phi.len(), target.len())));
        }
        if let Some(v) = phi.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Protocol(format!("query {t} takes value {v} outside [-1, 1]")));
        }
        let u = mean_product(target, &phi);
        let v = mean_product(null_target, &phi);
        let answer = if (u - v).abs() <= tau {
            v
        } else {
            deviations.push(t);
            u + tau * (v - u).signum()
        };
        responses.push(answer);
        queries.push(phi);
    }
    let output = learner.output(&responses);
    Ok(CsqTranscript { queries, responses, output, bad_event: !deviations.is_empty(), deviations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadEventRate {
    pub samples: usize,
    pub bad_events: usize,
    pub empirical_rate: f64,
    /// `A(h, X)` of the base target.
    pub alignment: f64,
    /// `q·A/τ²`.
    pub bound: f64,
    pub sigma: f64,
    pub within_bound: bool,
}

/// Plays the game against `samples` uniformly random translates `x ↦ h(g·x)` with null target 0.
pub fn csq_bad_event_rate<L: CsqLearner + Clone>(
    base: &[f64],
    shape: &GroupShape,
    learner: &L,
    tau: f64,
    q: usize,
    samples: usize,
    seed: u64,
) -> Result<BadEventRate> {
    if samples == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    if base.len() != shape.len() {
        return Err(Error::arg("target length differs from the shape order"));
    }
    let alignment = alignment_full_group(&group_spectrum(base, shape)?).value;
    let null = vec![0.0; base.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad_events = 0;
    for _ in 0..samples {
        let g = rng.random_range(0..shape.order());
        let translated = translate(base, shape, g);
        let mut l = learner.clone();
        if csq_adversarial_game(&mut l, &translated, &null, tau, q)?.bad_event {
            bad_events += 1;
        }
    }
    let rate = bad_events as f64 / samples as f64;
    let sigma = (rate * (1.0 - rate) / samples as f64).sqrt();
    let bound = q as f64 * alignment / (tau * tau);
    Ok(BadEventRate {
        samples,
        bad_events,
        empirical_rate: rate,
        alignment,
        bound,
        sigma,
        within_bound: rate <= bound + 3.0 * sigma,
    })
}

/// `x ↦ h(g·x)`.
pub fn translate(h: &[f64], shape: &GroupShape, g: u64) -> Vec<f64> {
    let mut gd = vec![0u32; shape.dim()];
    shape.encode_into(g, &mut gd);
    let mut xd = vec![0u32; shape.dim()];
    (0..shape.order())
        .map(|x| {
            shape.encode_into(x, &mut xd);
            let moved = shape.add_digits(&gd, &xd);
            h[shape.decode(&moved).expect("digits in range") as usize]
        })
        .collect()
}
