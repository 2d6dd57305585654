//! Primes whose base-`p` digit vector satisfies a linear condition `L(x) = b` over `F_p`.

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, sieve_with_limits, ArithmeticTable, FunctionKind};
use crate::error::{Error, Result};
use crate::fp::FpMatrix;
use crate::group::{CharacterIndex, GroupShape};
use crate::limits::Limits;
use crate::spectral::transform::CharOdometer;
use crate::sum::blocked_sum;

/// A surjective linear map `F_p^d → F_p^m` acting on digit vectors, least significant digit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearDigitMap {
    matrix: FpMatrix,
    rref: FpMatrix,
    rank: usize,
}

impl LinearDigitMap {
    pub fn new(p: u64, rows: &[Vec<i64>]) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::arg(format!("{p} is not prime")));
        }
        if rows.is_empty() {
            return Err(Error::arg("map needs at least one row"));
        }
        let d = rows[0].len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::arg("rows must be nonempty and of equal length"));
        }
        if rows.len() > d {
            return Err(Error::arg(format!("m = {} exceeds d = {d}", rows.len())));
        }
        let matrix = FpMatrix::from_rows(p, rows);
        let mut rref = matrix.clone();
        let rank = rref.rref().len();
        if rank < rows.len() {
            return Err(Error::NotSurjective { rank, rows: rows.len() });
        }
        Ok(LinearDigitMap { matrix, rref, rank })
    }

    /// Parses rows written as digit strings separated by `;`, e.g. `102;011`.
    /// Digits may be separated by commas when `p > 10`. Rows are padded with
    /// zeros to length `d`; trailing zeros beyond `d` are dropped.
    pub fn parse(p: u64, d: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        let text = text.strip_prefix("L=").unwrap_or(text);
        let rows = text
            .split(';')
            .map(|row| {
                let row = row.trim();
                let mut digits: Vec<i64> = if row.contains(',') {
                    row.split(',')
                        .map(|t| t.trim().parse::<i64>().map_err(|_| Error::arg(format!("bad entry {t:?}"))))
                        .collect::<Result<_>>()?
                } else {
                    row.chars()
                        .map(|c| {
                            c.to_digit(10)
                                .map(|v| v as i64)
                                .ok_or_else(|| Error::arg(format!("bad digit {c:?} in row {row:?}")))
                        })
                        .collect::<Result<_>>()?
                };
                if digits.len() > d {
                    if digits[d..].iter().any(|&v| v.rem_euclid(p as i64) != 0) {
                        return Err(Error::arg(format!("row {row:?} has nonzero entries beyond d = {d}")));
                    }
                    digits.truncate(d);
                }
                digits.resize(d, 0);
                Ok(digits)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p, &rows)
    }

    pub fn p(&self) -> u64 {
        self.matrix.p
    }

    pub fn d(&self) -> usize {
        self.matrix.cols
    }

    pub fn m(&self) -> usize {
        self.matrix.rows
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &FpMatrix {
        &self.matrix
    }

    pub fn rref(&self) -> &FpMatrix {
        &self.rref
    }

    pub fn apply(&self, digits: &[u64]) -> Vec<u64> {
        self.matrix.apply(digits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesCase {
    E0NotInImage,
    LambdaBNonzero,
    LambdaBZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularSeries {
    pub value: Ratio<u64>,
    pub case: SeriesCase,
}

impl SingularSeries {
    pub fn to_f64(&self) -> f64 {
        *self.value.numer() as f64 / *self.value.denom() as f64
    }
}

fn check_target(l: &LinearDigitMap, b: &[u64]) -> Result<()> {
    if b.len() != l.m() || b.iter().any(|&v| v >= l.p()) {
        return Err(Error::arg(format!("b must be a vector of {} residues mod {}", l.m(), l.p())));
    }
    Ok(())
}

/// `𝔖_p(L, b)`: 1 if `e_0 ∉ im Lᵀ`, else `p/(p−1)` or 0 as `λ(b) ≠ 0` or `= 0`,
/// where `Lᵀ λ = e_0`.
pub fn singular_series(l: &LinearDigitMap, b: &[u64]) -> Result<SingularSeries> {
    check_target(l, b)?;
    let p = l.p();
    let mut e0 = vec![0u64; l.d()];
    e0[0] = 1;
    let Some(lambda) = l.matrix.transpose().solve(&e0) else {
        return Ok(SingularSeries { value: Ratio::from_integer(1), case: SeriesCase::E0NotInImage });
    };
    let lb = lambda.iter().zip(b).map(|(&u, &v)| u * v).sum::<u64>() % p;
    Ok(if lb != 0 {
        SingularSeries { value: Ratio::new(p, p - 1), case: SeriesCase::LambdaBNonzero }
    } else {
        SingularSeries { value: Ratio::from_integer(0), case: SeriesCase::LambdaBZero }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountFlags {
    /// `𝔖 = 0`.
    pub degenerate: bool,
    /// `p = 2`.
    pub outside_proved_regime: bool,
    pub main_term_below_10: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitPrimeCount {
    pub count: u64,
    /// `(𝔖 / p^m) · X / ln X`.
    pub main_term: f64,
    /// `|count − main_term| / main_term`, absent when the main term vanishes.
    pub rel_error: Option<f64>,
    /// `Σ Λ(n)` over `n < X` meeting the condition.
    pub lambda_sum: f64,
    /// `𝔖 · p^{d−m}`.
    pub lambda_main: f64,
    pub series: SingularSeries,
    pub flags: CountFlags,
}

fn check_shape(l: &LinearDigitMap, shape: &GroupShape) -> Result<(u64, usize)> {
    if shape.num_blocks() != 1 {
        return Err(Error::Unsupported("digit conditions need a single-prime shape".into()));
    }
    let (p, d) = (shape.primes()[0], shape.exponents()[0] as usize);
    if p != l.p() || d != l.d() {
        return Err(Error::arg(format!("map is over F_{}^{}, shape is {shape}", l.p(), l.d())));
    }
    Ok((p, d))
}

fn base_p_digits(mut n: u64, p: u64, d: usize) -> Vec<u64> {
    (0..d)
        .map(|_| {
            let r = n % p;
            n /= p;
            r
        })
        .collect()
}

pub fn count_primes_digit_condition(l: &LinearDigitMap, b: &[u64], shape: &GroupShape) -> Result<DigitPrimeCount> {
    count_primes_digit_condition_with(l, b, shape, &Limits::default())
}

pub fn count_primes_digit_condition_with(
    l: &LinearDigitMap,
    b: &[u64],
    shape: &GroupShape,
    limits: &Limits,
) -> Result<DigitPrimeCount> {
    check_target(l, b)?;
    let (p, d) = check_shape(l, shape)?;
    let x = shape.len();
    let table = sieve_with_limits(FunctionKind::VonMangoldt, x, limits)?;
    let hits = |n: usize| l.apply(&base_p_digits(n as u64, p, d)) == b;
    let count = (0..x)
        .into_par_iter()
        .filter(|&n| table.prime_power(n).is_some_and(|pp| pp.exp == 1) && hits(n))
        .count() as u64;
    let lambda_sum = blocked_sum(x, |s, e| {
        let mut acc = 0.0;
        for n in s..e {
            let v = table.get(n);
            if v != 0.0 && hits(n) {
                acc += v;
            }
        }
        Complex64::new(acc, 0.0)
    })
    .re;
    let series = singular_series(l, b)?;
    let s = series.to_f64();
    let m = l.m() as i32;
    let xf = x as f64;
    let main_term = s / (p as f64).powi(m) * xf / xf.ln();
    let lambda_main = s * (p as f64).powi(d as i32 - m);
    Ok(DigitPrimeCount {
        count,
        main_term,
        rel_error: (main_term > 0.0).then(|| (count as f64 - main_term).abs() / main_term),
        lambda_sum,
        lambda_main,
        series,
        flags: CountFlags {
            degenerate: series.case == SeriesCase::LambdaBZero,
            outside_proved_regime: p == 2,
            main_term_below_10: main_term < 10.0,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBalance {
    /// `Σ_{n<X} (Λ(n) − ν_p(n)) χ_a(n)`.
    pub raw: Complex64,
    /// `raw / X`.
    pub normalized: Complex64,
}

pub fn lambda_balanced_correlation(a: &CharacterIndex, shape: &GroupShape) -> Result<LambdaBalance> {
    lambda_balanced_correlation_with(a, shape, &Limits::default())
}

pub fn lambda_balanced_correlation_with(a: &CharacterIndex, shape: &GroupShape, limits: &Limits) -> Result<LambdaBalance> {
    if shape.num_blocks() != 1 {
        return Err(Error::Unsupported("balanced Λ sums need a single-prime shape".into()));
    }
    let table = sieve_with_limits(FunctionKind::VonMangoldt, shape.len(), limits)?;
    Ok(balanced_sum(&table, a, shape))
}

fn balanced_sum(table: &ArithmeticTable, a: &CharacterIndex, shape: &GroupShape) -> LambdaBalance {
    let p = shape.primes()[0];
    let nu = p as f64 / (p - 1) as f64;
    let raw = blocked_sum(shape.len(), |s, e| {
        let mut odo = CharOdometer::new(shape, a.digits(), s as u64);
        let mut acc = Complex64::new(0.0, 0.0);
        for n in s..e {
            let w = if n as u64 % p == 0 { 0.0 } else { nu };
            acc += (table.get(n) - w) * odo.value();
            odo.advance();
        }
        acc
    });
    LambdaBalance { raw, normalized: raw / shape.order() as f64 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::nu_p_weight;
    use crate::group::char_eval;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn first_digit(p: u64, d: usize, j: usize) -> LinearDigitMap {
        let mut row = vec![0; d];
        row[j] = 1;
        LinearDigitMap::new(p, &[row]).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(LinearDigitMap::new(3, &[vec![1, 0], vec![0, 1]]).unwrap().rank(), 2);
        assert!(matches!(LinearDigitMap::new(3, &[vec![0, 0]]), Err(Error::NotSurjective { .. })));
        assert!(matches!(
            LinearDigitMap::new(2, &[vec![1, 1, 0], vec![1, 1, 0]]),
            Err(Error::NotSurjective { rank: 1, rows: 2 })
        ));
        assert!(matches!(LinearDigitMap::new(3, &[vec![1], vec![1]]), Err(Error::Argument(_))));
        assert!(LinearDigitMap::new(4, &[vec![1]]).is_err());
    }

    #[test]
    fn parse_rows() {
        let l = LinearDigitMap::parse(3, 11, "010000000000").unwrap();
        assert_eq!(l.d(), 11);
        assert_eq!(l.matrix().row(0)[1], 1);
        let l = LinearDigitMap::parse(3, 3, "L=102;011").unwrap();
        assert_eq!(l.matrix().row(0), &[1, 0, 2]);
        assert_eq!(l.matrix().row(1), &[0, 1, 1]);
        let l = LinearDigitMap::parse(13, 2, "1,12").unwrap();
        assert_eq!(l.matrix().row(0), &[1, 12]);
        assert!(LinearDigitMap::parse(3, 2, "101").is_err());
        assert!(LinearDigitMap::parse(3, 2, "1x").is_err());
    }

    #[test]
    fn series_examples() {
        let l = first_digit(3, 2, 0);
        assert_eq!(
            singular_series(&l, &[0]).unwrap(),
            SingularSeries { value: Ratio::from_integer(0), case: SeriesCase::LambdaBZero }
        );
        assert_eq!(singular_series(&l, &[2]).unwrap().value, Ratio::new(3, 2));
        let l1 = first_digit(3, 2, 1);
        for b in 0..3 {
            let s = singular_series(&l1, &[b]).unwrap();
            assert_eq!((s.value, s.case), (Ratio::from_integer(1), SeriesCase::E0NotInImage));
        }
        assert!(singular_series(&l, &[3]).is_err());
    }

    fn all_targets(p: u64, m: usize) -> Vec<Vec<u64>> {
        (0..p.pow(m as u32)).map(|v| base_p_digits(v, p, m)).collect()
    }

    #[test]
    fn series_sums_to_p_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tried = 0;
        while tried < 50 {
            let p = [3u64, 5][rng.random_range(0..2)];
            let m = rng.random_range(1..=3);
            let d = rng.random_range(m..=5);
            let rows: Vec<Vec<i64>> = (0..m)
                .map(|_| (0..d).map(|_| rng.random_range(0..p as i64)).collect())
                .collect();
            let Ok(l) = LinearDigitMap::new(p, &rows) else { continue };
            tried += 1;
            let series: Vec<SingularSeries> =
                all_targets(p, m).iter().map(|b| singular_series(&l, b).unwrap()).collect();
            let total = series.iter().fold(Ratio::from_integer(0u64), |acc, s| acc + s.value);
            assert_eq!(total, Ratio::from_integer(p.pow(m as u32)));
            let in_image = series[0].case != SeriesCase::E0NotInImage;
            assert!(series.iter().all(|s| (s.case != SeriesCase::E0NotInImage) == in_image));
            if in_image {
                let big = series.iter().filter(|s| s.case == SeriesCase::LambdaBNonzero).count() as u64;
                assert_eq!(big, (p - 1) * p.pow(m as u32 - 1));
            }
        }
    }

    #[test]
    fn count_examples() {
        let s = GroupShape::prime_power(3, 5).unwrap();
        let l = first_digit(3, 5, 0);
        let r = count_primes_digit_condition(&l, &[1], &s).unwrap();
        assert_eq!(r.count, 25);
        assert!((r.main_term - 22.12).abs() < 0.01, "{}", r.main_term);
        assert!((r.rel_error.unwrap() - 0.13).abs() < 0.01);
        let r0 = count_primes_digit_condition(&l, &[0], &s).unwrap();
        assert_eq!(r0.count, 1);
        assert_eq!(r0.main_term, 0.0);
        assert!(r0.flags.degenerate && r0.rel_error.is_none());
        // Λ sum over n ≡ 0 mod 3 picks up 3, 9, 27, 81: 4 ln 3.
        assert!((r0.lambda_sum - 4.0 * 3f64.ln()).abs() < 1e-12);

        let l1 = first_digit(3, 5, 1);
        let r = count_primes_digit_condition(&l1, &[0], &s).unwrap();
        assert_eq!(r.series.value, Ratio::from_integer(1));
        let brute = (2..243u64).filter(|&n| is_prime(n) && (n / 3) % 3 == 0).count() as u64;
        assert_eq!(r.count, brute);
        assert!((r.main_term - 243.0 / 3.0 / 243f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn partition_of_primes() {
        let s = GroupShape::prime_power(5, 4).unwrap();
        let l = LinearDigitMap::new(5, &[vec![1, 2, 0, 0], vec![0, 0, 1, 4]]).unwrap();
        let pi = (0..625u64).filter(|&n| is_prime(n)).count() as u64;
        let total: u64 = all_targets(5, 2)
            .iter()
            .map(|b| count_primes_digit_condition(&l, b, &s).unwrap().count)
            .sum();
        assert_eq!(total, pi);
        let two = GroupShape::prime_power(2, 6).unwrap();
        let l2 = first_digit(2, 6, 3);
        assert!(count_primes_digit_condition(&l2, &[1], &two).unwrap().flags.outside_proved_regime);
    }

    #[test]
    fn balanced_examples() {
        let s = GroupShape::prime_power(3, 2).unwrap();
        let r = lambda_balanced_correlation(&CharacterIndex::zero(&s), &s).unwrap();
        let want = 3.0 * 2f64.ln() + 3f64.ln() + 5f64.ln() + 7f64.ln() - 9.0;
        assert!((r.raw.re - want).abs() < 1e-12 && r.raw.im.abs() < 1e-12);
        assert!((want + 2.267).abs() < 1e-3);

        let a = CharacterIndex::new(vec![1, 0], &s).unwrap();
        let r = lambda_balanced_correlation(&a, &s).unwrap();
        let table = crate::arith::sieve(FunctionKind::VonMangoldt, 9).unwrap();
        let direct: Complex64 = (0..9u64)
            .map(|n| {
                let nu = nu_p_weight(n, 3).unwrap();
                let w = *nu.numer() as f64 / *nu.denom() as f64;
                (table.get(n as usize) - w) * char_eval(&a, n, &s).unwrap()
            })
            .sum();
        assert!((r.raw - direct).norm() < 1e-12);
        assert!((r.normalized * 9.0 - r.raw).norm() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let l = first_digit(3, 4, 0);
        assert!(count_primes_digit_condition(&l, &[1], &GroupShape::prime_power(3, 5).unwrap()).is_err());
        let mixed = GroupShape::new(&[2, 3], &[1, 1]).unwrap();
        assert!(matches!(
            lambda_balanced_correlation(&CharacterIndex::zero(&mixed), &mixed),
            Err(Error::Unsupported(_))
        ));
    }
}
