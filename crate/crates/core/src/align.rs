//! Alignment `A(f, G)` for translation groups, the digit-permutation extension
//! and subgroups, together with a brute-force Gram-operator oracle and the
//! kernel / NGD / CSQ bound formulas.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::FpMatrix;
use crate::group::{char_stats, CharacterIndex, GroupShape};
use crate::spectral::transform::{Sample, Spectrum};
use crate::sum::sum_f64;

pub const GRAM_CAP: usize = 4096;
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;
const POWER_SEED: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AlignmentWitness {
    Character { flat: usize, digits: Vec<u32> },
    Type { counts: Vec<Vec<u32>>, class_size: String },
    Coset { flat: usize, digits: Vec<u32>, syndrome: Vec<Vec<u64>> },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub method: String,
    pub value: f64,
    pub witness: AlignmentWitness,
}

/// `A(f, X) = max_a |f̂(a)|²`.
pub fn alignment_full_group(spec: &Spectrum) -> AlignmentResult {
    let (flat, mag) = spec.argmax();
    AlignmentResult {
        method: "full_group".into(),
        value: mag * mag,
        witness: AlignmentWitness::Character { flat, digits: spec.shape().digits_of_flat(flat) },
    }
}

/// Translations extended by digit permutations within each block: the
/// maximum over types of the mean squared coefficient on the type class.
pub fn alignment_semidirect(spec: &Spectrum) -> Result<AlignmentResult> {
    let shape = spec.shape();
    let mut classes: HashMap<Vec<Vec<u32>>, (Vec<f64>, usize)> = HashMap::new();
    for (flat, c) in spec.coeffs().iter().enumerate() {
        let a = CharacterIndex::from_flat(flat, shape)?;
        let e = classes.entry(a.type_counts().to_vec()).or_insert_with(|| (Vec::new(), flat));
        e.0.push(c.norm_sqr());
    }
    let mut best: Option<(f64, usize, Vec<Vec<u32>>, BigUint)> = None;
    for (ty, (masses, first)) in classes {
        let a = CharacterIndex::from_flat(first, shape)?;
        let class_size = char_stats(&a, shape)?.class_size;
        if class_size != BigUint::from(masses.len()) {
            return Err(Error::Format(format!(
                "type class of size {class_size} enumerated {} members",
                masses.len()
            )));
        }
        let v = sum_f64(&masses) / masses.len() as f64;
        let better = match &best {
            None => true,
            Some((bv, bf, _, _)) => v > *bv || (v == *bv && first < *bf),
        };
        if better {
            best = Some((v, first, ty, class_size));
        }
    }
    let (value, _, counts, class_size) = best.expect("spectrum is nonempty");
    Ok(AlignmentResult {
        method: "semidirect".into(),
        value,
        witness: AlignmentWitness::Type { counts, class_size: class_size.to_string() },
    })
}

/// A subgroup `H ≤ X_d` given by generators, with its annihilator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub generators: Vec<u64>,
    /// Row-reduced basis of `H` in each block.
    pub basis: Vec<Vec<Vec<u64>>>,
    /// Basis of `Ann(H)` in each block.
    pub annihilator: Vec<Vec<Vec<u64>>>,
    pub order: u64,
    pub annihilator_order: u64,
}

impl SubgroupSpec {
    pub fn new(shape: &GroupShape, generators: &[u64]) -> Result<Self> {
        let digits = generators
            .iter()
            .map(|&g| shape.encode(g))
            .collect::<Result<Vec<_>>>()?;
        let mut basis = Vec::new();
        let mut annihilator = Vec::new();
        let (mut order, mut ann_order) = (1u64, 1u64);
        for i in 0..shape.num_blocks() {
            let p = shape.primes()[i];
            let d = shape.exponents()[i] as usize;
            let rows: Vec<Vec<i64>> = digits
                .iter()
                .map(|g| g[shape.block_range(i)].iter().map(|&v| v as i64).collect())
                .collect();
            let mut m = if rows.is_empty() {
                FpMatrix { p, rows: 0, cols: d, data: Vec::new() }
            } else {
                FpMatrix::from_rows(p, &rows)
            };
            let rank = m.rref().len();
            basis.push((0..rank).map(|r| m.row(r).to_vec()).collect());
            annihilator.push(m.nullspace());
            order *= p.pow(rank as u32);
            ann_order *= p.pow((d - rank) as u32);
        }
        debug_assert_eq!(order * ann_order, shape.order());
        Ok(SubgroupSpec { generators: generators.to_vec(), basis, annihilator, order, annihilator_order: ann_order })
    }

    /// Coset label of `a` in the dual modulo `Ann(H)`: the values `⟨h, a⟩` on the basis of `H`.
    pub fn syndrome(&self, shape: &GroupShape, a: &[u32]) -> Vec<Vec<u64>> {
        (0..shape.num_blocks())
            .map(|i| {
                let p = shape.primes()[i];
                let ai = &a[shape.block_range(i)];
                self.basis[i]
                    .iter()
                    .map(|row| row.iter().zip(ai).map(|(&h, &v)| h * v as u64).sum::<u64>() % p)
                    .collect()
            })
            .collect()
    }

    /// `(smallest member, syndrome, Σ_{a∈C} |f̂(a)|²)` for every coset, ordered by member.
    pub fn coset_masses(&self, spec: &Spectrum) -> Vec<(usize, Vec<Vec<u64>>, f64)> {
        let shape = spec.shape();
        let mut map: HashMap<Vec<Vec<u64>>, (usize, Vec<f64>)> = HashMap::new();
        for (flat, c) in spec.coeffs().iter().enumerate() {
            let key = self.syndrome(shape, &shape.digits_of_flat(flat));
            map.entry(key).or_insert_with(|| (flat, Vec::new())).1.push(c.norm_sqr());
        }
        let mut out: Vec<_> = map.into_iter().map(|(k, (f, m))| (f, k, sum_f64(&m))).collect();
        out.sort_by_key(|e| e.0);
        out
    }
}

/// `max_C Σ_{a∈C} |f̂(a)|²` over cosets `C` of `Ann(H)`.
pub fn alignment_subgroup(spec: &Spectrum, sub: &SubgroupSpec) -> AlignmentResult {
    let mut best: Option<(usize, Vec<Vec<u64>>, f64)> = None;
    for c in sub.coset_masses(spec) {
        if best.as_ref().is_none_or(|b| c.2 > b.2) {
            best = Some(c);
        }
    }
    let (flat, syndrome, value) = best.expect("spectrum is nonempty");
    AlignmentResult {
        method: "subgroup".into(),
        value,
        witness: AlignmentWitness::Coset { flat, digits: spec.shape().digits_of_flat(flat), syndrome },
    }
}

/// `‖Γ‖_op / |G|` with `Γ_{g,g'} = (1/X) Σ_x h(g·x) conj(h(g'·x))`, by power iteration.
pub fn alignment_gram_oracle<T: Sample>(values: &[T], shape: &GroupShape, elements: &[u64]) -> Result<f64> {
    let x = shape.len();
    if values.len() != x {
        return Err(Error::arg(format!("table has length {}, shape order is {x}", values.len())));
    }
    let n = elements.len();
    if n > GRAM_CAP {
        return Err(Error::Resource { what: "Gram matrix side", requested: n as u64, cap: GRAM_CAP as u64 });
    }
    if n == 0 {
        return Err(Error::arg("element list is empty"));
    }
    // h in flat digit order.
    let mut h = vec![Complex64::new(0.0, 0.0); x];
    for (y, v) in values.iter().enumerate() {
        h[shape.flat_of_x(y as u64)] = v.to_c();
    }
    if h.iter().all(|z| z.norm_sqr() == 0.0) {
        return Ok(0.0);
    }
    let digits = elements
        .iter()
        .map(|&g| shape.encode(g))
        .collect::<Result<Vec<_>>>()?;
    // diff[r * n + c] = flat(g_c - g_r)
    let diff: Vec<u32> = (0..n * n)
        .into_par_iter()
        .map(|rc| {
            let (r, c) = (rc / n, rc % n);
            let mut flat = 0usize;
            let mut stride = 1usize;
            for k in 0..shape.dim() {
                let m = shape.radix_at(k) as u32;
                flat += stride * ((digits[c][k] + m - digits[r][k]) % m) as usize;
                stride *= m as usize;
            }
            flat as u32
        })
        .collect();
    let mut needed = vec![false; x];
    for &d in &diff {
        needed[d as usize] = true;
    }
    let autocorr: Vec<Complex64> = (0..x)
        .into_par_iter()
        .map(|d| if needed[d] { shifted_inner(&h, shape, d) } else { Complex64::new(0.0, 0.0) })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|r| {
                let row = &diff[r * n..(r + 1) * n];
                row.iter().zip(&v).map(|(&d, vi)| autocorr[d as usize] * vi).sum()
            })
            .collect();
        lambda = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        let resid = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (b - a * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wn == 0.0 {
            return Ok(0.0);
        }
        if resid <= POWER_TOL * lambda.abs() {
            break;
        }
        v = w.into_iter().map(|z| z / wn).collect();
    }
    Ok(lambda / n as f64)
}

/// `(1/X) Σ_y h(y) conj(h(δ·y))` with `h` and `δ` in flat digit order.
fn shifted_inner(h: &[Complex64], shape: &GroupShape, delta: usize) -> Complex64 {
    let dd = shape.digits_of_flat(delta);
    let dim = shape.dim();
    let radix: Vec<u32> = (0..dim).map(|k| shape.radix_at(k) as u32).collect();
    let mut strides = vec![1usize; dim];
    for k in 1..dim {
        strides[k] = strides[k - 1] * radix[k - 1] as usize;
    }
    let mut y = vec![0u32; dim];
    let mut shifted = shape.flat_index(&dd);
    let mut terms = Vec::with_capacity(h.len());
    for hy in h {
        terms.push(hy * h[shifted].conj());
        for k in 0..dim {
            let old = (y[k] + dd[k]) % radix[k];
            y[k] += 1;
            if y[k] < radix[k] {
                let new = (y[k] + dd[k]) % radix[k];
                shifted = shifted + new as usize * strides[k] - old as usize * strides[k];
                break;
            }
            y[k] = 0;
            shifted = shifted + (dd[k] as usize) * strides[k] - old as usize * strides[k];
        }
    }
    let re: Vec<f64> = terms.iter().map(|z| z.re).collect();
    let im: Vec<f64> = terms.iter().map(|z| z.im).collect();
    Complex64::new(sum_f64(&re), sum_f64(&im)) / h.len() as f64
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v {
        *z /= n;
    }
}

/// `f − baseline`, for alignment relative to a fixed offset `h_*`.
pub fn subtract_baseline(values: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    if values.len() != baseline.len() {
        return Err(Error::arg("baseline length differs from table length"));
    }
    Ok(values.iter().zip(baseline).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub eps: f64,
    pub r: f64,
    pub tau: f64,
    pub t: u64,
    pub q: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningBounds {
    /// `(1 − ε)/A`; absent when `A = 0`.
    pub kernel_min_n: Option<f64>,
    pub ngd_fail_prob: f64,
    pub ngd_raw: f64,
    pub csq_fail_prob: f64,
    pub csq_raw: f64,
}

pub fn learning_bounds(a: f64, params: &BoundParams) -> Result<LearningBounds> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::arg("alignment must be a finite nonnegative number"));
    }
    if !(params.eps > 0.0) || !(params.tau > 0.0) {
        return Err(Error::arg("eps and tau must be positive"));
    }
    if !(params.r >= 0.0) {
        return Err(Error::arg("R must be nonnegative"));
    }
    let ngd_raw = params.r / (2.0 * params.tau) * (params.t as f64 * a).sqrt() + a / params.eps;
    let csq_raw = (params.q as f64 + 1.0) / (params.tau * params.tau) * a;
    Ok(LearningBounds {
        kernel_min_n: (a > 0.0).then(|| (1.0 - params.eps) / a),
        ngd_fail_prob: ngd_raw.clamp(0.0, 1.0),
        ngd_raw,
        csq_fail_prob: csq_raw.clamp(0.0, 1.0),
        csq_raw,
    })
}
