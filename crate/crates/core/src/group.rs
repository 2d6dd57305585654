//! The space `X_d = ∏ μ_{p_i}^{d_i}`, its CRT digit codec and its characters.
//!
//! Integers `x ∈ [0, X)` are identified with digit vectors: block `i` holds
//! the base-`p_i` digits of `x mod p_i^{d_i}`, least significant first.
//! Digit vectors (and character indices) are addressed by a flat
//! little-endian mixed-radix index, blocks in input order.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::is_prime;
use crate::error::{Error, Result};

/// `q`-th roots of unity, `table[u] = e(u/q)`, with `table[q-u]` the exact conjugate of `table[u]`.
pub fn root_table(q: u64) -> Vec<Complex64> {
    let q = q as usize;
    let mut t = vec![Complex64::new(0.0, 0.0); q];
    t[0] = Complex64::new(1.0, 0.0);
    for u in 1..=q / 2 {
        let z = if 2 * u == q {
            Complex64::new(-1.0, 0.0)
        } else if 4 * u == q {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::from_polar(1.0, TAU * u as f64 / q as f64)
        };
        t[u] = z;
        t[q - u] = z.conj();
    }
    t
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShapeSpec", into = "ShapeSpec")]
pub struct GroupShape {
    primes: Vec<u64>,
    exponents: Vec<u32>,
    block_moduli: Vec<u64>,
    offsets: Vec<usize>,
    strides: Vec<u64>,
    crt_mult: Vec<u64>,
    modulus: u64,
    roots: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct ShapeSpec {
    primes: Vec<u64>,
    exponents: Vec<u32>,
}

impl TryFrom<ShapeSpec> for GroupShape {
    type Error = Error;
    fn try_from(s: ShapeSpec) -> Result<Self> {
        GroupShape::new(&s.primes, &s.exponents)
    }
}

impl From<GroupShape> for ShapeSpec {
    fn from(g: GroupShape) -> Self {
        ShapeSpec {
            primes: g.primes,
            exponents: g.exponents,
        }
    }
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

impl GroupShape {
    pub fn new(primes: &[u64], exponents: &[u32]) -> Result<Self> {
        if primes.is_empty() || primes.len() != exponents.len() {
            return Err(Error::arg("primes and exponents must be nonempty lists of equal length"));
        }
        for w in primes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::arg(format!("duplicate prime {}", w[0])));
            }
            if w[0] > w[1] {
                return Err(Error::arg("primes must be listed in ascending order"));
            }
        }
        let mut block_moduli = Vec::with_capacity(primes.len());
        for (&p, &e) in primes.iter().zip(exponents) {
            if !is_prime(p) || p > u32::MAX as u64 {
                return Err(Error::arg(format!("{p} is not a prime")));
            }
            if e == 0 {
                return Err(Error::arg("exponents must be at least 1"));
            }
            let m = p
                .checked_pow(e)
                .ok_or_else(|| Error::arg(format!("{p}^{e} overflows")))?;
            block_moduli.push(m);
        }
        let modulus = block_moduli
            .iter()
            .try_fold(1u64, |acc, &m| acc.checked_mul(m))
            .filter(|&x| usize::try_from(x).is_ok())
            .ok_or_else(|| Error::arg("group order overflows the word size"))?;
        let mut strides = Vec::with_capacity(primes.len());
        let mut offsets = Vec::with_capacity(primes.len());
        let (mut s, mut off) = (1u64, 0usize);
        for (i, &m) in block_moduli.iter().enumerate() {
            strides.push(s);
            offsets.push(off);
            s *= m;
            off += exponents[i] as usize;
        }
        let crt_mult = block_moduli
            .iter()
            .map(|&m| mod_inverse((modulus / m) % m, m).expect("coprime block moduli"))
            .collect();
        let roots = primes.iter().map(|&p| root_table(p)).collect();
        Ok(GroupShape {
            primes: primes.to_vec(),
            exponents: exponents.to_vec(),
            block_moduli,
            offsets,
            strides,
            crt_mult,
            modulus,
            roots,
        })
    }

    /// `p^d`.
    pub fn prime_power(p: u64, d: u32) -> Result<Self> {
        Self::new(&[p], &[d])
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn num_blocks(&self) -> usize {
        self.primes.len()
    }

    /// `X = ∏ p_i^{d_i}`.
    pub fn order(&self) -> u64 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.modulus as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total number of digits `d = Σ d_i`.
    pub fn dim(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    /// `p_i^{d_i}`.
    pub fn block_modulus(&self, i: usize) -> u64 {
        self.block_moduli[i]
    }

    /// Range of flat digit positions occupied by block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.exponents[i] as usize
    }

    /// `t_i ≡ (X / p_i^{d_i})^{-1} mod p_i^{d_i}`.
    pub fn crt_multiplier(&self, i: usize) -> u64 {
        self.crt_mult[i]
    }

    pub fn roots(&self, i: usize) -> &[Complex64] {
        &self.roots[i]
    }

    /// Radix of flat digit position `k`.
    pub fn radix_at(&self, k: usize) -> u64 {
        let i = self.offsets.partition_point(|&o| o <= k) - 1;
        self.primes[i]
    }

    /// Block index owning flat digit position `k`.
    pub fn block_of(&self, k: usize) -> usize {
        self.offsets.partition_point(|&o| o <= k) - 1
    }

    /// Largest prime `p_r`.
    pub fn largest_prime(&self) -> u64 {
        *self.primes.last().unwrap()
    }

    fn check_x(&self, x: u64) -> Result<()> {
        if x >= self.modulus {
            return Err(Error::arg(format!("{x} is outside [0, {})", self.modulus)));
        }
        Ok(())
    }

    pub fn encode(&self, x: u64) -> Result<Vec<u32>> {
        self.check_x(x)?;
        let mut out = vec![0u32; self.dim()];
        self.encode_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked encode into a preallocated buffer of length `dim()`.
    pub fn encode_into(&self, x: u64, out: &mut [u32]) {
        for (i, &p) in self.primes.iter().enumerate() {
            let mut r = x % self.block_moduli[i];
            for slot in &mut out[self.block_range(i)] {
                *slot = (r % p) as u32;
                r /= p;
            }
        }
    }

    fn check_digits(&self, digits: &[u32]) -> Result<()> {
        if digits.len() != self.dim() {
            return Err(Error::arg(format!(
                "expected {} digits, got {}",
                self.dim(),
                digits.len()
            )));
        }
        for (i, &p) in self.primes.iter().enumerate() {
            if let Some(&bad) = digits[self.block_range(i)].iter().find(|&&v| v as u64 >= p) {
                return Err(Error::arg(format!("digit {bad} out of range for base {p}")));
            }
        }
        Ok(())
    }

    /// CRT reconstruction of the unique `x ∈ [0, X)` with the given digits.
    pub fn decode(&self, digits: &[u32]) -> Result<u64> {
        self.check_digits(digits)?;
        let x = self
            .block_residues(digits)
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &r)| {
                let m = self.block_moduli[i] as u128;
                let cofactor = (self.modulus / self.block_moduli[i]) as u128;
                (acc + r as u128 * self.crt_mult[i] as u128 % m * cofactor) % self.modulus as u128
            });
        Ok(x as u64)
    }

    fn block_residues(&self, digits: &[u32]) -> Vec<u64> {
        (0..self.num_blocks())
            .map(|i| {
                let p = self.primes[i];
                digits[self.block_range(i)]
                    .iter()
                    .rev()
                    .fold(0u64, |acc, &v| acc * p + v as u64)
            })
            .collect()
    }

    /// Flat mixed-radix index of a digit vector.
    pub fn flat_index(&self, digits: &[u32]) -> usize {
        self.block_residues(digits)
            .iter()
            .zip(&self.strides)
            .map(|(&r, &s)| (r * s) as usize)
            .sum()
    }

    /// Flat index of the digit vector of `x`.
    pub fn flat_of_x(&self, x: u64) -> usize {
        self.block_moduli
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| ((x % m) * s) as usize)
            .sum()
    }

    pub fn digits_of_flat(&self, flat: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.dim()];
        let mut r = flat as u64;
        for k in 0..self.dim() {
            let p = self.radix_at(k);
            out[k] = (r % p) as u32;
            r /= p;
        }
        out
    }

    /// Componentwise group addition of digit vectors.
    pub fn add_digits(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        (0..self.dim())
            .map(|k| ((a[k] as u64 + b[k] as u64) % self.radix_at(k)) as u32)
            .collect()
    }

    pub fn neg_digits(&self, a: &[u32]) -> Vec<u32> {
        (0..self.dim())
            .map(|k| ((self.radix_at(k) - a[k] as u64) % self.radix_at(k)) as u32)
            .collect()
    }

    /// Digitwise action of the group element `g` on `x`, both given as integers.
    pub fn act(&self, g: u64, x: u64) -> u64 {
        let mut gd = vec![0u32; self.dim()];
        let mut xd = vec![0u32; self.dim()];
        self.encode_into(g, &mut gd);
        self.encode_into(x, &mut xd);
        self.decode(&self.add_digits(&gd, &xd)).unwrap()
    }
}

impl fmt::Debug for GroupShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupShape({self})")
    }
}

impl fmt::Display for GroupShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .primes
            .iter()
            .zip(&self.exponents)
            .map(|(p, e)| format!("{p}^{e}"))
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// Parses `"2^2*3^1"`; a bare prime means exponent 1.
impl FromStr for GroupShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut primes = Vec::new();
        let mut exps = Vec::new();
        for term in s.split('*') {
            let term = term.trim();
            let (p, e) = match term.split_once('^') {
                Some((p, e)) => (p.trim(), e.trim()),
                None => (term, "1"),
            };
            let p: u64 = p
                .parse()
                .map_err(|_| Error::arg(format!("bad prime {p:?} in shape {s:?}")))?;
            let e: u32 = e
                .parse()
                .map_err(|_| Error::arg(format!("bad exponent {e:?} in shape {s:?}")))?;
            primes.push(p);
            exps.push(e);
        }
        GroupShape::new(&primes, &exps)
    }
}

/// An exponent vector `a`, with cached Hamming weight and type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharacterIndex {
    digits: Vec<u32>,
    weight: usize,
    /// `ty[i][t]` counts positions in block `i` carrying exponent `t`.
    ty: Vec<Vec<u32>>,
}

impl CharacterIndex {
    pub fn new(digits: Vec<u32>, shape: &GroupShape) -> Result<Self> {
        shape.check_digits(&digits)?;
        let weight = digits.iter().filter(|&&v| v != 0).count();
        let ty = (0..shape.num_blocks())
            .map(|i| {
                let mut m = vec![0u32; shape.primes[i] as usize];
                for &v in &digits[shape.block_range(i)] {
                    m[v as usize] += 1;
                }
                m
            })
            .collect();
        Ok(CharacterIndex { digits, weight, ty })
    }

    pub fn zero(shape: &GroupShape) -> Self {
        Self::new(vec![0; shape.dim()], shape).unwrap()
    }

    pub fn from_flat(flat: usize, shape: &GroupShape) -> Result<Self> {
        if flat as u64 >= shape.order() {
            return Err(Error::arg(format!("flat index {flat} out of range")));
        }
        Self::new(shape.digits_of_flat(flat), shape)
    }

    pub fn flat(&self, shape: &GroupShape) -> usize {
        shape.flat_index(&self.digits)
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn block<'a>(&'a self, shape: &GroupShape, i: usize) -> &'a [u32] {
        &self.digits[shape.block_range(i)]
    }

    /// Hamming weight `|a|`.
    pub fn weight(&self) -> usize {
        self.weight
    }

    /// Weight of block `i`, `|a_i|`.
    pub fn block_weight(&self, shape: &GroupShape, i: usize) -> usize {
        self.block(shape, i).iter().filter(|&&v| v != 0).count()
    }

    pub fn type_counts(&self) -> &[Vec<u32>] {
        &self.ty
    }

    /// `-a`.
    pub fn neg(&self, shape: &GroupShape) -> Self {
        Self::new(shape.neg_digits(&self.digits), shape).unwrap()
    }
}

/// Per-block exponent sums `Σ_j a_{i,j} x_{i,j} mod p_i` for digit vectors.
fn exponent_sums(a: &[u32], xd: &[u32], shape: &GroupShape) -> Vec<usize> {
    (0..shape.num_blocks())
        .map(|i| {
            let p = shape.primes[i];
            shape
                .block_range(i)
                .map(|k| a[k] as u64 * xd[k] as u64)
                .sum::<u64>()
                .rem_euclid(p) as usize
        })
        .collect()
}

/// `χ_a(x) = ∏ e_{p_i}(a_{i,j} x_{i,j})`.
pub fn char_eval(a: &CharacterIndex, x: u64, shape: &GroupShape) -> Result<Complex64> {
    let xd = shape.encode(x)?;
    Ok(char_eval_digits(a.digits(), &xd, shape))
}

pub fn char_eval_digits(a: &[u32], xd: &[u32], shape: &GroupShape) -> Complex64 {
    exponent_sums(a, xd, shape)
        .into_iter()
        .enumerate()
        .map(|(i, e)| shape.roots[i][e])
        .product()
}

/// Weight, type and orbit size of a character under digit permutations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharStats {
    pub weight: usize,
    pub type_counts: Vec<Vec<u32>>,
    /// `∏_i multinomial(d_i; m_{i,0}, …, m_{i,p_i-1})`.
    pub class_size: BigUint,
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
}

pub fn multinomial(counts: &[u32]) -> BigUint {
    let n: u32 = counts.iter().sum();
    let denom = counts
        .iter()
        .fold(BigUint::from(1u32), |acc, &m| acc * factorial(m));
    factorial(n) / denom
}

pub fn char_stats(a: &CharacterIndex, shape: &GroupShape) -> Result<CharStats> {
    shape.check_digits(a.digits())?;
    let class_size = a
        .type_counts()
        .iter()
        .fold(BigUint::from(1u32), |acc, m| acc * multinomial(m));
    Ok(CharStats {
        weight: a.weight(),
        type_counts: a.type_counts().to_vec(),
        class_size,
    })
}
