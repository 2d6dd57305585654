//! Fourier analysis on `X_d` by axis-wise DFTs over the digit grid.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{CharacterIndex, GroupShape};
use crate::limits::Limits;
use crate::sum::blocked_sum;

/// Values that can be fed to a transform.
pub trait Sample: Copy + Send + Sync {
    fn to_c(self) -> Complex64;
}

impl Sample for f64 {
    fn to_c(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Sample for Complex64 {
    fn to_c(self) -> Complex64 {
        self
    }
}

/// Fourier coefficients `f̂(a) = (1/X) Σ_x f(x) conj(χ_a(x))`, indexed by flat character index.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    shape: GroupShape,
    coeffs: Vec<Complex64>,
}

const SPECTRUM_MAGIC: &[u8; 4] = b"MSPS";

impl Spectrum {
    pub fn from_coeffs(shape: GroupShape, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != shape.len() {
            return Err(Error::arg(format!(
                "spectrum needs {} coefficients, got {}",
                shape.len(),
                coeffs.len()
            )));
        }
        Ok(Spectrum { shape, coeffs })
    }

    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, a: &CharacterIndex) -> Complex64 {
        self.coeffs[a.flat(&self.shape)]
    }

    /// `Σ_a |f̂(a)|²`, which equals `‖f‖²` by Parseval.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// The `k` largest coefficients by magnitude; ties go to the smaller flat index.
    pub fn top(&self, k: usize) -> Vec<(usize, Complex64)> {
        let mut idx: Vec<usize> = (0..self.coeffs.len()).collect();
        idx.sort_by(|&a, &b| {
            self.coeffs[b]
                .norm_sqr()
                .total_cmp(&self.coeffs[a].norm_sqr())
                .then(a.cmp(&b))
        });
        idx.into_iter().take(k).map(|i| (i, self.coeffs[i])).collect()
    }

    /// Flat index and value of the largest `|f̂(a)|`, smallest index on ties.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, self.coeffs[0].norm_sqr());
        for (i, c) in self.coeffs.iter().enumerate().skip(1) {
            if c.norm_sqr() > best.1 {
                best = (i, c.norm_sqr());
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Synthesis `f(x) = Σ_a f̂(a) χ_a(x)`, returned in integer order.
    pub fn inverse(&self) -> Vec<Complex64> {
        let mut grid = self.coeffs.clone();
        axis_transforms(&self.shape, &mut grid, false);
        (0..self.shape.order())
            .map(|x| grid[self.shape.flat_of_x(x)])
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "flat_index,re,im,magnitude")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{i},{:e},{:e},{:e}", c.re, c.im, c.norm())?;
        }
        Ok(())
    }

    /// `MSPS`, `u64` order, then `(re, im)` pairs, little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SPECTRUM_MAGIC)?;
        w.write_all(&self.shape.order().to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.coeffs.len() * 16);
        for c in &self.coeffs {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, shape: GroupShape) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[..4] != SPECTRUM_MAGIC {
            return Err(Error::Format("bad magic, expected MSPS".into()));
        }
        let n = u64::from_le_bytes(head[4..].try_into().unwrap());
        if n != shape.order() {
            return Err(Error::Format(format!("spectrum of order {n} does not match shape {shape}")));
        }
        let mut buf = vec![0u8; n as usize * 16];
        r.read_exact(&mut buf)?;
        let coeffs = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Spectrum::from_coeffs(shape, coeffs)
    }
}

/// In-place length-`p` DFT along every digit axis of the grid.
/// `forward` uses `e(-a u / p)`; the inverse direction uses `e(+a u / p)`.
fn axis_transforms(shape: &GroupShape, grid: &mut [Complex64], forward: bool) {
    let mut stride = 1usize;
    for k in 0..shape.dim() {
        let block = shape.block_of(k);
        let p = shape.primes()[block] as usize;
        let roots = shape.roots(block);
        let span = p * stride;
        let line_dft = |chunk: &mut [Complex64]| {
            let mut line = vec![Complex64::new(0.0, 0.0); p];
            for o in 0..stride {
                for (u, slot) in line.iter_mut().enumerate() {
                    *slot = chunk[o + u * stride];
                }
                for a in 0..p {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (u, v) in line.iter().enumerate() {
                        let e = a * u % p;
                        let e = if forward { (p - e) % p } else { e };
                        acc += v * roots[e];
                    }
                    chunk[o + a * stride] = acc;
                }
            }
        };
        if grid.len() / span >= 4 {
            grid.par_chunks_mut(span).for_each(line_dft);
        } else {
            grid.chunks_mut(span).for_each(line_dft);
        }
        stride = span;
    }
}

/// Full spectrum of a real table on `[0, X)` with default limits.
pub fn group_spectrum(values: &[f64], shape: &GroupShape) -> Result<Spectrum> {
    group_spectrum_with(values, shape, &Limits::default())
}

pub fn group_spectrum_with<T: Sample>(values: &[T], shape: &GroupShape, limits: &Limits) -> Result<Spectrum> {
    if values.len() != shape.len() {
        return Err(Error::arg(format!(
            "table has length {}, shape {shape} has order {}",
            values.len(),
            shape.order()
        )));
    }
    if shape.order() > limits.max_spectrum_len {
        return Err(Error::Resource {
            what: "full spectrum (use correlation for single coefficients)",
            requested: shape.order(),
            cap: limits.max_spectrum_len,
        });
    }
    let mut grid = vec![Complex64::new(0.0, 0.0); shape.len()];
    for (x, v) in values.iter().enumerate() {
        grid[shape.flat_of_x(x as u64)] = v.to_c();
    }
    axis_transforms(shape, &mut grid, true);
    let scale = 1.0 / shape.order() as f64;
    for c in grid.iter_mut() {
        *c *= scale;
    }
    Spectrum::from_coeffs(shape.clone(), grid)
}

/// Complex input variant of [`group_spectrum`].
pub fn group_spectrum_complex(values: &[Complex64], shape: &GroupShape) -> Result<Spectrum> {
    group_spectrum_with(values, shape, &Limits::default())
}

/// Streams `x` through `[start, end)` keeping per-block exponent sums
/// `Σ_j a_{i,j} x_{i,j} mod p_i` up to date under `x ↦ x + 1`.
pub(crate) struct CharOdometer<'a> {
    shape: &'a GroupShape,
    a: &'a [u32],
    digits: Vec<u32>,
    exps: Vec<u64>,
}

impl<'a> CharOdometer<'a> {
    pub(crate) fn new(shape: &'a GroupShape, a: &'a [u32], start: u64) -> Self {
        let mut digits = vec![0u32; shape.dim()];
        shape.encode_into(start % shape.order(), &mut digits);
        let exps = (0..shape.num_blocks())
            .map(|i| {
                shape
                    .block_range(i)
                    .map(|k| a[k] as u64 * digits[k] as u64)
                    .sum::<u64>()
                    % shape.primes()[i]
            })
            .collect();
        CharOdometer { shape, a, digits, exps }
    }

    /// `χ_a(x)` at the current position.
    pub(crate) fn value(&self) -> Complex64 {
        self.exps
            .iter()
            .enumerate()
            .map(|(i, &e)| self.shape.roots(i)[e as usize])
            .product()
    }

    /// `conj(χ_a(x))`.
    pub(crate) fn conj_value(&self) -> Complex64 {
        self.exps
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let p = self.shape.primes()[i];
                self.shape.roots(i)[((p - e) % p) as usize]
            })
            .product()
    }

    pub(crate) fn advance(&mut self) {
        for i in 0..self.shape.num_blocks() {
            let p = self.shape.primes()[i];
            for k in self.shape.block_range(i) {
                // Any digit increment, wrapping or not, adds a_k mod p.
                self.exps[i] = (self.exps[i] + self.a[k] as u64) % p;
                self.digits[k] += 1;
                if (self.digits[k] as u64) < p {
                    break;
                }
                self.digits[k] = 0;
            }
        }
    }
}

/// Single coefficient `f̂(a)` by streaming over `[0, X)` with deterministic block summation.
pub fn correlation<T: Sample>(values: &[T], a: &CharacterIndex, shape: &GroupShape) -> Result<Complex64> {
    if values.len() != shape.len() {
        return Err(Error::arg(format!(
            "table has length {}, shape {shape} has order {}",
            values.len(),
            shape.order()
        )));
    }
    let total = blocked_sum(values.len(), |s, e| {
        let mut odo = CharOdometer::new(shape, a.digits(), s as u64);
        let mut acc = Complex64::new(0.0, 0.0);
        for v in &values[s..e] {
            acc += v.to_c() * odo.conj_value();
            odo.advance();
        }
        acc
    });
    Ok(total / shape.order() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve, FunctionKind};
    use crate::group::char_eval;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_spectrum(values: &[Complex64], shape: &GroupShape) -> Vec<Complex64> {
        let n = shape.order();
        (0..shape.len())
            .map(|fa| {
                let a = CharacterIndex::from_flat(fa, shape).unwrap();
                (0..n)
                    .map(|x| values[x as usize] * char_eval(&a, x, shape).unwrap().conj())
                    .sum::<Complex64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn delta_transforms_to_constant() {
        let s = GroupShape::new(&[2, 3], &[2, 1]).unwrap();
        let mut v = vec![0.0; 12];
        v[0] = 1.0;
        let sp = group_spectrum(&v, &s).unwrap();
        for c in sp.coeffs() {
            assert!((c - Complex64::new(1.0 / 12.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn character_transforms_to_delta() {
        let s = GroupShape::new(&[2, 3, 5], &[2, 1, 1]).unwrap();
        let b = CharacterIndex::from_flat(37, &s).unwrap();
        let v: Vec<Complex64> = (0..s.order()).map(|x| char_eval(&b, x, &s).unwrap()).collect();
        let sp = group_spectrum_complex(&v, &s).unwrap();
        for (i, c) in sp.coeffs().iter().enumerate() {
            let want = if i == 37 { 1.0 } else { 0.0 };
            assert!((c - want).norm() < 1e-12);
        }
    }

    #[test]
    fn mobius_on_cube_has_zero_top_coefficient() {
        let s = GroupShape::prime_power(2, 3).unwrap();
        let mu = sieve(FunctionKind::Mobius, 8).unwrap().to_f64();
        // Brute force: Σ_{n<8} μ(n)(-1)^{s_2(n)}.
        let brute: f64 = (0..8u32).map(|n| mu[n as usize] * if n.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).sum();
        assert_eq!(brute, 0.0);
        let a = CharacterIndex::new(vec![1, 1, 1], &s).unwrap();
        let sp = group_spectrum(&mu, &s).unwrap();
        assert_eq!(sp.get(&a).norm(), 0.0);
        assert_eq!(correlation(&mu, &a, &s).unwrap().norm(), 0.0);
    }

    #[test]
    fn correlation_of_constant() {
        let s = GroupShape::new(&[3, 5], &[3, 2]).unwrap();
        let ones = vec![1.0; s.len()];
        let zero = CharacterIndex::zero(&s);
        assert!((correlation(&ones, &zero, &s).unwrap() - 1.0).norm() < 1e-15);
        let a = CharacterIndex::from_flat(100, &s).unwrap();
        assert!(correlation(&ones, &a, &s).unwrap().norm() < 1e-12);
    }

    #[test]
    fn fast_matches_naive_and_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in [
            GroupShape::new(&[2, 3], &[3, 2]).unwrap(),
            GroupShape::new(&[5], &[3]).unwrap(),
            GroupShape::new(&[2, 3, 5, 7], &[1, 1, 1, 1]).unwrap(),
        ] {
            let v: Vec<Complex64> = (0..s.len())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let sp = group_spectrum_complex(&v, &s).unwrap();
            let naive = naive_spectrum(&v, &s);
            for fa in 0..s.len() {
                assert!((sp.coeffs()[fa] - naive[fa]).norm() < 1e-12);
                let a = CharacterIndex::from_flat(fa, &s).unwrap();
                assert!((correlation(&v, &a, &s).unwrap() - sp.coeffs()[fa]).norm() < 1e-10);
            }
            let back = sp.inverse();
            for (x, y) in back.iter().zip(&v) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn over_cap_is_resource_error() {
        let s = GroupShape::prime_power(2, 12).unwrap();
        let v = vec![0.0; s.len()];
        let err = group_spectrum_with(&v, &s, &Limits::from_mem_cap(32 * 1024)).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
        assert!(err.to_string().contains("correlation"));
        assert!(group_spectrum(&v[..10], &s).is_err());
    }

    #[test]
    fn binary_and_csv_dump() {
        let s = GroupShape::new(&[2, 3], &[2, 2]).unwrap();
        let v: Vec<f64> = (0..s.len()).map(|x| (x as f64).sin()).collect();
        let sp = group_spectrum(&v, &s).unwrap();
        let mut buf = Vec::new();
        sp.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 12 + 16 * 36);
        assert_eq!(Spectrum::read_binary(&buf[..], s.clone()).unwrap(), sp);
        let mut csv = Vec::new();
        sp.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some("flat_index,re,im,magnitude"));
        assert_eq!(text.lines().count(), 37);
    }

    #[test]
    fn top_breaks_ties_by_index() {
        let s = GroupShape::prime_power(2, 2).unwrap();
        let sp = Spectrum::from_coeffs(s, vec![Complex64::new(0.5, 0.0); 4]).unwrap();
        let t: Vec<usize> = sp.top(3).into_iter().map(|(i, _)| i).collect();
        assert_eq!(t, vec![0, 1, 2]);
        assert_eq!(sp.argmax().0, 0);
    }
}
