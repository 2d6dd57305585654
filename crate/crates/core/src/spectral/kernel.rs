//! Closed-form DFT coefficients of digital characters over `Z/XZ`, built from
//! the Dirichlet-type kernel `G_q(y) = sin(π q y) / (q sin(π y))`, and the
//! norm checkers that sit on top of them.
//!
//! By CRT, `χ̂_a(k) = ∏_i χ̂^{(i)}_{a_i}(k_i')` with `k_i' = t_i (k mod p_i^{d_i})`,
//! and each local factor is a product over digits of
//! `e((p-1)/2 · β_j) G_p(β_j)` with `β_j = a_j/p − k' p^{j-d}`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{root_table, CharacterIndex, GroupShape};
use crate::limits::Limits;

/// `G_q(y)`, exact at integers where it equals `(-1)^{n(q-1)}`.
pub fn gq(q: u64, y: f64) -> f64 {
    let n = y.round();
    let r = y - n;
    let sign = if (n as i64).rem_euclid(2) == 1 && q % 2 == 0 { -1.0 } else { 1.0 };
    let s = (PI * r).sin();
    if s.abs() <= 1e-9 {
        return sign;
    }
    sign * (PI * q as f64 * r).sin() / (q as f64 * s)
}

/// `β_j` reduced to `(-1/2, 1/2]`, computed exactly in integers.
fn reduced_beta(p: u64, d: u32, j: u32, a_j: u32, kprime: u64) -> f64 {
    let den = (p as i128).pow(d - j);
    let num = a_j as i128 * (p as i128).pow(d - j - 1) - kprime as i128;
    let mut r = num.rem_euclid(den);
    if 2 * r > den {
        r -= den;
    }
    r as f64 / den as f64
}

/// One digit factor `(1/p) Σ_{u<p} e(β u) = e((p-1)/2 · β) G_p(β)`; 1-periodic in `β`.
fn digit_factor(p: u64, y: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (p as f64 - 1.0) / 2.0 * y) * gq(p, y)
}

/// Local coefficient `χ̂^{(i)}_{a_i}(k')` for one block.
pub fn local_coeff(p: u64, a_block: &[u32], kprime: u64) -> Complex64 {
    let d = a_block.len() as u32;
    a_block
        .iter()
        .enumerate()
        .map(|(j, &aj)| digit_factor(p, reduced_beta(p, d, j as u32, aj, kprime)))
        .product()
}

/// `|χ̂^{(i)}_{a_i}(k')|`.
pub fn local_magnitude(p: u64, a_block: &[u32], kprime: u64) -> f64 {
    let d = a_block.len() as u32;
    a_block
        .iter()
        .enumerate()
        .map(|(j, &aj)| gq(p, reduced_beta(p, d, j as u32, aj, kprime)).abs())
        .product()
}

fn local_kprime(shape: &GroupShape, i: usize, k: u64) -> u64 {
    let m = shape.block_modulus(i);
    ((k % m) as u128 * shape.crt_multiplier(i) as u128 % m as u128) as u64
}

/// `(|χ̂_a(k)|, χ̂_a(k))` where `χ̂_a(k) = (1/X) Σ_x χ_a(x) e(-kx/X)`.
pub fn char_dft_closed_form(a: &CharacterIndex, k: u64, shape: &GroupShape) -> Result<(f64, Complex64)> {
    if k >= shape.order() {
        return Err(Error::arg(format!("frequency {k} outside [0, {})", shape.order())));
    }
    let mut mag = 1.0;
    let mut val = Complex64::new(1.0, 0.0);
    for i in 0..shape.num_blocks() {
        let p = shape.primes()[i];
        let kp = local_kprime(shape, i, k);
        let block = a.block(shape, i);
        mag *= local_magnitude(p, block, kp);
        val *= local_coeff(p, block, kp);
    }
    Ok((mag, val))
}

fn check_block_sizes(shape: &GroupShape, limits: &Limits) -> Result<()> {
    for i in 0..shape.num_blocks() {
        if shape.block_modulus(i) > limits.max_spectrum_len {
            return Err(Error::Resource {
                what: "local character spectrum",
                requested: shape.block_modulus(i),
                cap: limits.max_spectrum_len,
            });
        }
    }
    Ok(())
}

/// Magnitudes `|χ̂^{(i)}_{a_i}(k')|` for all `k' < p_i^{d_i}`.
fn local_magnitudes(shape: &GroupShape, a: &CharacterIndex, i: usize) -> Vec<f64> {
    let p = shape.primes()[i];
    let block = a.block(shape, i);
    (0..shape.block_modulus(i))
        .map(|kp| local_magnitude(p, block, kp))
        .collect()
}

/// `‖χ̂_a‖₁`, assembled as the product of local ℓ¹ norms.
pub fn char_l1_norm(a: &CharacterIndex, shape: &GroupShape) -> Result<f64> {
    check_block_sizes(shape, &Limits::default())?;
    Ok((0..shape.num_blocks())
        .map(|i| local_magnitudes(shape, a, i).iter().sum::<f64>())
        .product())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinfCheck {
    pub measured: f64,
    /// `∏_i (1 − 4/(9 p_i²))^{⌊|a_i|/2⌋}`.
    pub bound: f64,
    pub ok: bool,
    /// `measured` equals `bound` within tolerance.
    pub equality: bool,
}

pub const LINF_TOL: f64 = 1e-12;

pub fn linf_bound(a: &CharacterIndex, shape: &GroupShape) -> f64 {
    (0..shape.num_blocks())
        .map(|i| {
            let p = shape.primes()[i] as f64;
            (1.0 - 4.0 / (9.0 * p * p)).powi((a.block_weight(shape, i) / 2) as i32)
        })
        .product()
}

/// Compares `max_k |χ̂_a(k)|` with the digit-compatibility bound in its `≤` form.
pub fn linf_bound_check(a: &CharacterIndex, shape: &GroupShape) -> Result<LinfCheck> {
    check_block_sizes(shape, &Limits::default())?;
    let measured: f64 = (0..shape.num_blocks())
        .map(|i| local_magnitudes(shape, a, i).into_iter().fold(0.0, f64::max))
        .product();
    let bound = linf_bound(a, shape);
    Ok(LinfCheck {
        measured,
        bound,
        ok: measured <= bound + LINF_TOL,
        equality: (measured - bound).abs() <= LINF_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgressionL1 {
    pub sum: f64,
    /// `∏_i p_i^{(d_i − γ_i)/2}`, the square-root scale the saving is measured against.
    pub sqrt_scale: f64,
    pub ratio: f64,
}

/// `Σ |χ̂_a(k)|` over `k ∈ [0, X)` with `k ≡ b_i mod p_i^{γ_i}` for every block.
pub fn ap_l1_sum(a: &CharacterIndex, shape: &GroupShape, gamma: &[u32], b: &[u64]) -> Result<ProgressionL1> {
    let r = shape.num_blocks();
    if gamma.len() != r || b.len() != r {
        return Err(Error::arg(format!("need {r} progression moduli and residues")));
    }
    check_block_sizes(shape, &Limits::default())?;
    let mut sum = 1.0;
    let mut scale = 1.0;
    for i in 0..r {
        let (p, d) = (shape.primes()[i], shape.exponents()[i]);
        let gmax = d.saturating_sub(2);
        if gamma[i] > gmax {
            return Err(Error::arg(format!("γ_{i} = {} exceeds {gmax}", gamma[i])));
        }
        let step = p.pow(gamma[i]);
        if b[i] >= step {
            return Err(Error::arg(format!("residue b_{i} = {} not below {step}", b[i])));
        }
        let mags = local_magnitudes(shape, a, i);
        let m = shape.block_modulus(i);
        let t = shape.crt_multiplier(i);
        let local: f64 = (b[i]..m)
            .step_by(step as usize)
            .map(|ki| mags[((ki as u128 * t as u128) % m as u128) as usize])
            .sum();
        sum *= local;
        scale *= (p as f64).powf((d - gamma[i]) as f64 / 2.0);
    }
    Ok(ProgressionL1 { sum, sqrt_scale: scale, ratio: sum / scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalL1 {
    pub sum: f64,
    /// `(p_r · |I|)^{1/2}`.
    pub sqrt_scale: f64,
    pub ratio: f64,
}

/// `Σ_{lo ≤ k < hi} |χ̂_a(k)|` from closed-form magnitudes.
pub fn interval_l1_sum(a: &CharacterIndex, shape: &GroupShape, lo: u64, hi: u64) -> Result<IntervalL1> {
    if lo >= hi || hi > shape.order() {
        return Err(Error::arg(format!("need 0 ≤ lo < hi ≤ {}", shape.order())));
    }
    let mut sum = 0.0;
    for k in lo..hi {
        sum += char_dft_closed_form(a, k, shape)?.0;
    }
    let sqrt_scale = (shape.largest_prime() as f64 * (hi - lo) as f64).sqrt();
    Ok(IntervalL1 { sum, sqrt_scale, ratio: sum / sqrt_scale })
}

/// Trapezoid `η(s)`: 1 for `|s| < K`, 0 for `|s| ≥ 2K`, linear between.
pub fn trapezoid(s: i64, cap: u64) -> f64 {
    let s = s.unsigned_abs();
    if cap == 0 {
        return 0.0;
    }
    if s < cap {
        1.0
    } else if s >= 2 * cap {
        0.0
    } else {
        (2 * cap - s) as f64 / cap as f64
    }
}

/// Representative of `k` mod `m` in `(-m/2, m/2]`.
pub fn signed_residue(k: u64, m: u64) -> i64 {
    let k = k % m;
    if 2 * k > m {
        k as i64 - m as i64
    } else {
        k as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSupport {
    pub cap: u64,
    /// Largest `|k'|` (signed residue) carrying a nonzero truncated coefficient.
    pub max_frequency: u64,
    pub nonzero: u64,
    /// The cap exceeds half the block, so no coefficient is damped.
    pub untouched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    /// `Ψ_a(x)` for `x ∈ [0, X)`.
    pub values: Vec<Complex64>,
    pub max_abs: f64,
    pub support: Vec<BlockSupport>,
    /// `(1/X) Σ_x |Ψ_a(x) − χ_a(x)|²`.
    pub l2_error: f64,
}

impl Truncation {
    /// Multiplier `η(k)` applied to `χ̂_a(k)` to obtain `Ψ̂_a(k)`.
    pub fn multiplier(&self, k: u64, shape: &GroupShape) -> f64 {
        (0..shape.num_blocks())
            .map(|i| {
                let m = shape.block_modulus(i);
                trapezoid(signed_residue(local_kprime(shape, i, k), m), self.support[i].cap)
            })
            .product()
    }
}

/// Largest block handled by the quadratic local synthesis in [`truncated_character`].
pub const TRUNCATION_BLOCK_CAP: u64 = 1 << 14;

/// Frequency-truncated character `Ψ_a`, with `Ψ̂_a(k) = ∏_i η_i(k_i') χ̂^{(i)}(k_i')`.
pub fn truncated_character(a: &CharacterIndex, shape: &GroupShape, caps: &[u64]) -> Result<Truncation> {
    let r = shape.num_blocks();
    if caps.len() != r {
        return Err(Error::arg(format!("need {r} frequency caps")));
    }
    let mut local_psi = Vec::with_capacity(r);
    let mut local_chi = Vec::with_capacity(r);
    let mut support = Vec::with_capacity(r);
    for i in 0..r {
        let p = shape.primes()[i];
        let m = shape.block_modulus(i);
        let block = a.block(shape, i);
        let chi: Vec<Complex64> = (0..m)
            .map(|xi| {
                let mut digits = vec![0u32; block.len()];
                let mut rem = xi;
                for dgt in digits.iter_mut() {
                    *dgt = (rem % p) as u32;
                    rem /= p;
                }
                let e = block.iter().zip(&digits).map(|(&aj, &xj)| aj as u64 * xj as u64).sum::<u64>() % p;
                shape.roots(i)[e as usize]
            })
            .collect();
        let untouched = 2 * caps[i] > m;
        if untouched {
            support.push(BlockSupport {
                cap: caps[i],
                max_frequency: (0..m).filter(|&k| local_magnitude(p, block, k) > 1e-12).map(|k| signed_residue(k, m).unsigned_abs()).max().unwrap_or(0),
                nonzero: (0..m).filter(|&k| local_magnitude(p, block, k) > 1e-12).count() as u64,
                untouched,
            });
            local_psi.push(chi.clone());
            local_chi.push(chi);
            continue;
        }
        if m > TRUNCATION_BLOCK_CAP {
            return Err(Error::Resource { what: "truncated local character", requested: m, cap: TRUNCATION_BLOCK_CAP });
        }
        let coeffs: Vec<Complex64> = (0..m)
            .map(|k| local_coeff(p, block, k) * trapezoid(signed_residue(k, m), caps[i]))
            .collect();
        let nz: Vec<u64> = (0..m).filter(|&k| coeffs[k as usize].norm() > 1e-12).collect();
        support.push(BlockSupport {
            cap: caps[i],
            max_frequency: nz.iter().map(|&k| signed_residue(k, m).unsigned_abs()).max().unwrap_or(0),
            nonzero: nz.len() as u64,
            untouched,
        });
        let roots = root_table(m);
        let psi: Vec<Complex64> = (0..m)
            .map(|xi| {
                nz.iter()
                    .map(|&k| coeffs[k as usize] * roots[((k * xi) % m) as usize])
                    .sum()
            })
            .collect();
        local_psi.push(psi);
        local_chi.push(chi);
    }
    let n = shape.order();
    let mut values = Vec::with_capacity(shape.len());
    let mut err = 0.0;
    let mut max_abs: f64 = 0.0;
    for x in 0..n {
        let mut psi = Complex64::new(1.0, 0.0);
        let mut chi = Complex64::new(1.0, 0.0);
        for i in 0..r {
            let xi = (x % shape.block_modulus(i)) as usize;
            psi *= local_psi[i][xi];
            chi *= local_chi[i][xi];
        }
        err += (psi - chi).norm_sqr();
        max_abs = max_abs.max(psi.norm());
        values.push(psi);
    }
    Ok(Truncation { values, max_abs, support, l2_error: err / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::char_eval;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(X²) DFT of a character over `Z/XZ`.
    fn direct_dft(a: &CharacterIndex, shape: &GroupShape) -> Vec<Complex64> {
        let n = shape.order();
        let chi: Vec<Complex64> = (0..n).map(|x| char_eval(a, x, shape).unwrap()).collect();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|x| chi[x as usize] * Complex64::from_polar(1.0, -TAU * ((k * x) % n) as f64 / n as f64))
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    fn ch(digits: &[u32], shape: &GroupShape) -> CharacterIndex {
        CharacterIndex::new(digits.to_vec(), shape).unwrap()
    }

    #[test]
    fn gq_examples() {
        assert_eq!(gq(5, 0.0), 1.0);
        assert!((gq(2, 0.25) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(gq(3, 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gq(2, 1.0), -1.0);
        assert_eq!(gq(2, -1.0), -1.0);
        assert_eq!(gq(3, 1.0), 1.0);
        assert_eq!(gq(4, 2.0), 1.0);
    }

    #[test]
    fn gq_is_bounded_and_matches_geometric_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let q = rng.random_range(2..9u64);
            let y: f64 = rng.random_range(-3.0..3.0);
            let g = gq(q, y);
            assert!(g.abs() <= 1.0 + 1e-15);
            let geo: Complex64 = (0..q).map(|u| Complex64::from_polar(1.0, TAU * y * u as f64)).sum::<Complex64>() / q as f64;
            assert!((geo.norm() - g.abs()).abs() < 1e-12);
            let phase = Complex64::from_polar(1.0, TAU * (q as f64 - 1.0) / 2.0 * y);
            assert!((phase * g - geo).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_examples() {
        let s = GroupShape::prime_power(2, 2).unwrap();
        let zero = CharacterIndex::zero(&s);
        assert_eq!(char_dft_closed_form(&zero, 0, &s).unwrap().0, 1.0);
        for k in 1..4 {
            assert!(char_dft_closed_form(&zero, k, &s).unwrap().0 < 1e-12);
        }
        let a = ch(&[1, 0], &s);
        assert!((char_dft_closed_form(&a, 2, &s).unwrap().0 - 1.0).abs() < 1e-12);
        assert!(char_dft_closed_form(&a, 4, &s).is_err());
    }

    #[test]
    fn closed_form_matches_direct_dft_on_mixed_shape() {
        let s = GroupShape::new(&[2, 3, 5], &[2, 2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..12 {
            let a = CharacterIndex::from_flat(rng.random_range(0..s.len()), &s).unwrap();
            let direct = direct_dft(&a, &s);
            for k in 0..s.order() {
                let (m, v) = char_dft_closed_form(&a, k, &s).unwrap();
                assert!((m - direct[k as usize].norm()).abs() < 1e-9);
                assert!((v - direct[k as usize]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn l1_norm_examples() {
        let s = GroupShape::prime_power(2, 2).unwrap();
        assert!((char_l1_norm(&CharacterIndex::zero(&s), &s).unwrap() - 1.0).abs() < 1e-12);
        assert!((char_l1_norm(&ch(&[0, 1], &s), &s).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((char_l1_norm(&ch(&[1, 0], &s), &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l1_norm_matches_direct() {
        let s = GroupShape::new(&[2, 3], &[3, 3]).unwrap();
        for fa in (0..s.len()).step_by(17) {
            let a = CharacterIndex::from_flat(fa, &s).unwrap();
            let direct: f64 = direct_dft(&a, &s).iter().map(|c| c.norm()).sum();
            let closed = char_l1_norm(&a, &s).unwrap();
            assert!((direct - closed).abs() <= 1e-8 * direct);
        }
    }

    #[test]
    fn linf_examples() {
        let s = GroupShape::prime_power(3, 4).unwrap();
        let c = linf_bound_check(&CharacterIndex::zero(&s), &s).unwrap();
        assert_eq!((c.measured, c.bound, c.ok, c.equality), (1.0, 1.0, true, true));
        let s1 = GroupShape::prime_power(2, 1).unwrap();
        let c = linf_bound_check(&ch(&[1], &s1), &s1).unwrap();
        assert!(c.ok && c.equality);
        assert!((c.measured - 1.0).abs() < 1e-12);
        let s6 = GroupShape::prime_power(3, 6).unwrap();
        let a = ch(&[1, 0, 2, 1, 0, 1], &s6);
        let c = linf_bound_check(&a, &s6).unwrap();
        let direct = direct_dft(&a, &s6).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((c.measured - direct).abs() < 1e-9);
        assert!((c.bound - (77.0f64 / 81.0).powi(2)).abs() < 1e-15);
        assert!(c.ok);
    }

    #[test]
    fn progression_sums() {
        let s = GroupShape::prime_power(2, 4).unwrap();
        let a = ch(&[0, 1, 0, 0], &s);
        let direct = direct_dft(&a, &s);
        let even: f64 = (0..16).step_by(2).map(|k| direct[k].norm()).sum();
        let got = ap_l1_sum(&a, &s, &[1], &[0]).unwrap();
        assert!((got.sum - even).abs() < 1e-12);
        let full = ap_l1_sum(&a, &s, &[0], &[0]).unwrap();
        assert!((full.sum - char_l1_norm(&a, &s).unwrap()).abs() < 1e-12);
        let zero = CharacterIndex::zero(&s);
        assert!((ap_l1_sum(&zero, &s, &[2], &[0]).unwrap().sum - 1.0).abs() < 1e-12);
        assert!(ap_l1_sum(&zero, &s, &[2], &[1]).unwrap().sum < 1e-12);
        assert!(ap_l1_sum(&zero, &s, &[3], &[0]).is_err());
        assert!(ap_l1_sum(&zero, &s, &[1], &[2]).is_err());
    }

    #[test]
    fn progression_sum_mixed_shape_matches_mask() {
        let s = GroupShape::new(&[2, 3], &[4, 3]).unwrap();
        let a = CharacterIndex::from_flat(301, &s).unwrap();
        let direct = direct_dft(&a, &s);
        let (g, b) = ([2u32, 1], [3u64, 2]);
        let masked: f64 = (0..s.order())
            .filter(|k| k % 4 == b[0] && k % 3 == b[1])
            .map(|k| direct[k as usize].norm())
            .sum();
        assert!((ap_l1_sum(&a, &s, &g, &b).unwrap().sum - masked).abs() < 1e-10);
    }

    #[test]
    fn interval_sums() {
        let s = GroupShape::prime_power(3, 3).unwrap();
        let zero = CharacterIndex::zero(&s);
        assert!((interval_l1_sum(&zero, &s, 0, 27).unwrap().sum - 1.0).abs() < 1e-12);
        assert!((interval_l1_sum(&zero, &s, 0, 1).unwrap().sum - 1.0).abs() < 1e-12);
        assert!(interval_l1_sum(&zero, &s, 3, 3).is_err());
        let s8 = GroupShape::prime_power(3, 8).unwrap();
        let a = ch(&[0, 1, 0, 0, 2, 0, 0, 1], &s8);
        let r = interval_l1_sum(&a, &s8, 0, 81).unwrap();
        assert!((r.sqrt_scale - (3.0f64 * 81.0).sqrt()).abs() < 1e-12);
        assert!(r.sum > 0.0 && r.sum < char_l1_norm(&a, &s8).unwrap() + 1e-12);
    }

    #[test]
    fn truncation_with_wide_caps_is_exact() {
        let s = GroupShape::new(&[2, 3], &[3, 2]).unwrap();
        let a = CharacterIndex::from_flat(55, &s).unwrap();
        let t = truncated_character(&a, &s, &[8, 9]).unwrap();
        assert!(t.l2_error < 1e-24);
        for x in 0..s.order() {
            assert!((t.values[x as usize] - char_eval(&a, x, &s).unwrap()).norm() < 1e-12);
        }
        let zero = CharacterIndex::zero(&s);
        let t = truncated_character(&zero, &s, &[1, 1]).unwrap();
        assert!(t.l2_error < 1e-24);
        assert!(t.values.iter().all(|v| (v - 1.0).norm() < 1e-12));
    }

    #[test]
    fn truncation_shrinks_coefficients() {
        let s = GroupShape::prime_power(3, 5).unwrap();
        let a = ch(&[0, 2, 0, 0, 1], &s);
        let t = truncated_character(&a, &s, &[3]).unwrap();
        let psi_hat: Vec<Complex64> = {
            let n = s.order();
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|x| t.values[x as usize] * Complex64::from_polar(1.0, -TAU * ((k * x) % n) as f64 / n as f64))
                        .sum::<Complex64>()
                        / n as f64
                })
                .collect()
        };
        for k in 0..s.order() {
            let chi = char_dft_closed_form(&a, k, &s).unwrap().0;
            assert!(psi_hat[k as usize].norm() <= chi + 1e-12);
            if signed_residue(k, 243).unsigned_abs() >= 6 {
                assert!(psi_hat[k as usize].norm() < 1e-12);
            }
        }
        assert!(t.max_abs <= 3.0 + 1e-9);
        assert!(t.l2_error > 0.0 && t.l2_error < 2.0);
        assert!(t.support[0].max_frequency < 6);
    }

    #[test]
    fn trapezoid_shape() {
        assert_eq!(trapezoid(0, 3), 1.0);
        assert_eq!(trapezoid(-2, 3), 1.0);
        assert_eq!(trapezoid(3, 3), 1.0);
        assert!((trapezoid(4, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(trapezoid(6, 3), 0.0);
        assert_eq!(signed_residue(5, 10), 5);
        assert_eq!(signed_residue(6, 10), -4);
    }
}
