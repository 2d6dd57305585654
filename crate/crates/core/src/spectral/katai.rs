//! Transfer from a large digital-character coefficient `f̂(a)` to a large
//! additive coefficient `f̂(θ) = (1/X) Σ_{x<X} f(x) e(−θx)` at a sparse
//! `p`-adic rational `θ = Σ s_{i,j} / p_i^{j+1}`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{CharacterIndex, GroupShape};
use crate::spectral::transform::{correlation, Sample};
use crate::sum::blocked_sum;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// One nonzero numerator `s / p_block^{position + 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseTerm {
    pub block: usize,
    pub position: u32,
    pub numerator: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KataiWitness {
    pub terms: Vec<SparseTerm>,
    /// `θ = theta_num / X` reduced into `[0, 1)`.
    pub theta_num: u64,
    /// `|f̂(θ)|`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KataiOutcome {
    /// First candidate meeting the lower bound, if any.
    pub witness: Option<KataiWitness>,
    /// Largest `|f̂(θ)|` seen.
    pub best: KataiWitness,
    /// `(δ / (10 |a| √p_r))^{4|a|}`.
    pub bound: f64,
    /// Numerator cap `(40 p_r)² |a|³ / δ³`, saturated.
    pub numerator_cap: i64,
    pub evaluations: u64,
    pub exhausted: bool,
}

/// `θ · X mod X` for a list of sparse terms.
pub fn theta_numerator(terms: &[SparseTerm], shape: &GroupShape) -> Result<u64> {
    let x = shape.order() as i128;
    let mut n: i128 = 0;
    for t in terms {
        if t.block >= shape.num_blocks() || t.position >= shape.exponents()[t.block] {
            return Err(Error::arg(format!("term position ({}, {}) outside shape", t.block, t.position)));
        }
        let den = (shape.primes()[t.block] as i128).pow(t.position + 1);
        n = (n + (t.numerator as i128).rem_euclid(x) * (x / den)).rem_euclid(x);
    }
    Ok(n as u64)
}

/// `f̂(θ)` for `θ = num / X`, with phases reduced exactly mod `X`.
pub fn additive_coefficient<T: Sample>(values: &[T], num: u64, x: u64) -> Complex64 {
    let total = blocked_sum(values.len(), |s, e| {
        let mut r = ((s as u128 * num as u128) % x as u128) as u64;
        let mut acc = Complex64::new(0.0, 0.0);
        for v in &values[s..e] {
            let v = v.to_c();
            if v != Complex64::new(0.0, 0.0) {
                acc += v * Complex64::from_polar(1.0, -TAU * r as f64 / x as f64);
            }
            r = (r + num) % x;
        }
        acc
    });
    total / x as f64
}

/// `t`-th numerator in the order 0, 1, −1, 2, −2, …
fn zigzag(t: u64) -> i64 {
    if t % 2 == 1 {
        t.div_ceil(2) as i64
    } else {
        -((t / 2) as i64)
    }
}

pub fn katai_bound(delta: f64, weight: usize, largest_prime: u64) -> f64 {
    (delta / (10.0 * weight as f64 * (largest_prime as f64).sqrt())).powi(4 * weight as i32)
}

pub fn numerator_cap(delta: f64, weight: usize, largest_prime: u64) -> i64 {
    let c = (40.0 * largest_prime as f64).powi(2) * (weight as f64).powi(3) / delta.powi(3);
    if c >= (i64::MAX / 4) as f64 {
        i64::MAX / 4
    } else {
        c.floor() as i64
    }
}

/// Searches sparse rationals supported on the support of `a`, in lexicographic
/// order over support positions (first position slowest) with numerators
/// ordered 0, 1, −1, 2, −2, … up to the cap.
pub fn katai_witness<T: Sample>(
    values: &[T],
    a: &CharacterIndex,
    shape: &GroupShape,
    delta: f64,
    budget: u64,
) -> Result<KataiOutcome> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::arg("δ must lie in (0, 1/2)"));
    }
    if budget == 0 {
        return Err(Error::arg("search budget must be at least 1"));
    }
    let coeff = correlation(values, a, shape)?.norm();
    if coeff <= delta {
        return Err(Error::arg(format!("|f̂(a)| = {coeff} does not exceed δ = {delta}")));
    }
    let support: Vec<(usize, u32)> = (0..shape.num_blocks())
        .flat_map(|i| {
            a.block(shape, i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(move |(j, _)| (i, j as u32))
                .collect::<Vec<_>>()
        })
        .collect();
    let w = a.weight();
    let p_r = shape.largest_prime();
    let bound = katai_bound(delta, w, p_r);
    let cap = numerator_cap(delta, w, p_r);
    let per_pos = (2 * cap as u64).saturating_add(1);

    let mut counters = vec![0u64; support.len()];
    let mut evaluations = 0u64;
    let mut best: Option<KataiWitness> = None;
    let mut witness = None;
    let mut done = false;
    while evaluations < budget && !done {
        let terms: Vec<SparseTerm> = support
            .iter()
            .zip(&counters)
            .filter(|(_, &c)| c != 0)
            .map(|(&(block, position), &c)| SparseTerm { block, position, numerator: zigzag(c) })
            .collect();
        let num = theta_numerator(&terms, shape)?;
        let value = additive_coefficient(values, num, shape.order()).norm();
        evaluations += 1;
        let cand = KataiWitness { terms, theta_num: num, value };
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(cand.clone());
        }
        if value >= bound {
            witness = Some(cand);
            break;
        }
        // Odometer step: last support position fastest.
        done = true;
        for c in counters.iter_mut().rev() {
            *c += 1;
            if *c < per_pos {
                done = false;
                break;
            }
            *c = 0;
        }
    }
    Ok(KataiOutcome {
        exhausted: witness.is_none(),
        witness,
        best: best.expect("at least one candidate evaluated"),
        bound,
        numerator_cap: cap,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalCheck {
    /// `|θ − a/q| ≤ Q/(qX)` for the chosen approximation.
    pub near_rational: bool,
    pub q: u64,
    pub a: u64,
    pub q_is_p_power: bool,
    pub distance: f64,
    pub tolerance: f64,
    /// `p^{d/(2k)} > 8 p Q²`, with `k` the number of nonzero terms.
    pub hypothesis_holds: bool,
}

/// Best continued-fraction approximation `a/q` of `θ` with `q ≤ Q`, and whether `q` is a power of `p`.
pub fn p_power_rational_check(terms: &[SparseTerm], shape: &GroupShape, big_q: u64) -> Result<RationalCheck> {
    if shape.num_blocks() != 1 {
        return Err(Error::Unsupported("p-power detection needs a single-prime shape".into()));
    }
    if big_q == 0 {
        return Err(Error::arg("Q must be at least 1"));
    }
    let p = shape.primes()[0];
    let d = shape.exponents()[0];
    let x = shape.order() as i128;
    let n = theta_numerator(terms, shape)? as i128;

    // Convergents h/k of n/x.
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let (mut num, mut den) = (n, x);
    let (mut best_h, mut best_k) = (0i128, 1i128);
    while den != 0 {
        let q = num.div_euclid(den);
        let h2 = q * h1 + h0;
        let k2 = q * k1 + k0;
        if k2 > big_q as i128 {
            break;
        }
        (best_h, best_k) = (h2, k2);
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        (num, den) = (den, num - q * den);
    }
    let gap = (n * best_k - best_h * x).abs();
    let near = gap <= big_q as i128;
    let mut q = best_k as u64;
    while q > 1 && q % p == 0 {
        q /= p;
    }
    let k = terms.iter().filter(|t| t.numerator != 0).count();
    let hypothesis_holds = k == 0
        || (d as f64 / (2.0 * k as f64)) * (p as f64).ln() > (8.0 * p as f64 * (big_q as f64).powi(2)).ln();
    Ok(RationalCheck {
        near_rational: near,
        q: best_k as u64,
        a: best_h.rem_euclid(best_k.max(1)) as u64,
        q_is_p_power: q == 1,
        distance: gap as f64 / (x as f64 * best_k as f64),
        tolerance: big_q as f64 / (best_k as f64 * x as f64),
        hypothesis_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::char_eval;

    fn t(position: u32, numerator: i64) -> SparseTerm {
        SparseTerm { block: 0, position, numerator }
    }

    #[test]
    fn zigzag_order() {
        let v: Vec<i64> = (0..6).map(zigzag).collect();
        assert_eq!(v, vec![0, 1, -1, 2, -2, 3]);
    }

    #[test]
    fn character_with_one_digit_is_additive() {
        let s = GroupShape::prime_power(5, 1).unwrap();
        let a = CharacterIndex::new(vec![2], &s).unwrap();
        let f: Vec<Complex64> = (0..5).map(|x| char_eval(&a, x, &s).unwrap()).collect();
        assert!(katai_witness(&f, &a, &s, 0.9, 100).is_err());
        let out = katai_witness(&f, &a, &s, 0.45, 100).unwrap();
        let w = out.witness.unwrap();
        assert_eq!(w.theta_num, 2);
        assert!((w.value - 1.0).abs() < 1e-12);
        // The real part splits its mass between θ = 2/5 and θ = 3/5.
        let re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let out = katai_witness(&re, &a, &s, 0.4, 100).unwrap();
        assert!((out.witness.unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn precondition_failures() {
        let s = GroupShape::prime_power(3, 2).unwrap();
        let f = vec![0.0; 9];
        let a = CharacterIndex::zero(&s);
        assert!(katai_witness(&f, &a, &s, 0.1, 10).is_err());
        let ones = vec![1.0; 9];
        assert!(katai_witness(&ones, &a, &s, 0.6, 10).is_err());
        assert!(katai_witness(&ones, &a, &s, 0.2, 0).is_err());
    }

    #[test]
    fn rational_examples() {
        let s = GroupShape::prime_power(3, 10).unwrap();
        let r = p_power_rational_check(&[t(0, 1), t(2, 2)], &s, 30).unwrap();
        assert_eq!((r.q, r.a, r.q_is_p_power, r.near_rational), (27, 11, true, true));
        let r = p_power_rational_check(&[], &s, 30).unwrap();
        assert_eq!((r.q, r.a, r.q_is_p_power, r.near_rational), (1, 0, true, true));
        let r = p_power_rational_check(&[t(0, 1), t(8, 1)], &s, 10).unwrap();
        assert_eq!((r.q, r.a, r.q_is_p_power, r.near_rational), (3, 1, true, true));
        assert!((r.distance - 3f64.powi(-9)).abs() < 1e-15);
        assert!(!r.hypothesis_holds);
        let two = GroupShape::new(&[2, 3], &[1, 1]).unwrap();
        assert!(matches!(p_power_rational_check(&[], &two, 5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn non_p_power_denominator_detected() {
        // θ = 1/5 approximated within 3^{-d}: q = 5 is not a power of 3.
        let s = GroupShape::prime_power(3, 12).unwrap();
        let x = s.order() as i64;
        let n = (x as f64 / 5.0).round() as i64;
        // Expand n / 3^12 into base-3 digits as sparse terms.
        let mut terms = Vec::new();
        let mut rem = n;
        for pos in (0..12).rev() {
            let digit = rem % 3;
            rem /= 3;
            if digit != 0 {
                terms.push(t(pos, digit));
            }
        }
        let r = p_power_rational_check(&terms, &s, 6).unwrap();
        assert_eq!(r.q, 5);
        assert!(!r.q_is_p_power);
        assert!(r.near_rational);
    }
}
