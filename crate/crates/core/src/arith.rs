//! Sieved tables of μ, λ, Λ and the square indicator on `[0, X)`.

use std::io::{Read, Write};
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;

/// Segment length used once a table is larger than [`SEGMENT_THRESHOLD`].
pub const SEGMENT_LEN: usize = 1 << 22;
pub const SEGMENT_THRESHOLD: usize = 1 << 24;

const MAGIC: &[u8; 4] = b"MSPC";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    Mobius,
    Liouville,
    VonMangoldt,
    SquareIndicator,
}

impl FunctionKind {
    fn tag(self) -> u8 {
        match self {
            FunctionKind::Mobius => 0,
            FunctionKind::Liouville => 1,
            FunctionKind::VonMangoldt => 2,
            FunctionKind::SquareIndicator => 3,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => FunctionKind::Mobius,
            1 => FunctionKind::Liouville,
            2 => FunctionKind::VonMangoldt,
            3 => FunctionKind::SquareIndicator,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Mobius => "mobius",
            FunctionKind::Liouville => "liouville",
            FunctionKind::VonMangoldt => "von-mangoldt",
            FunctionKind::SquareIndicator => "square-indicator",
        }
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mobius" | "mu" | "moebius" => Ok(FunctionKind::Mobius),
            "liouville" | "lambda" => Ok(FunctionKind::Liouville),
            "von-mangoldt" | "vonmangoldt" => Ok(FunctionKind::VonMangoldt),
            "square-indicator" | "square" | "squares" => Ok(FunctionKind::SquareIndicator),
            other => Err(Error::arg(format!("unknown function kind {other:?}"))),
        }
    }
}

/// `n = prime^exp`; `prime == 0` marks "not a prime power".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PrimePower {
    pub prime: u32,
    pub exp: u8,
}

#[derive(Debug, Clone, PartialEq)]
enum TableData {
    Signs(Vec<i8>),
    VonMangoldt {
        logs: Vec<f64>,
        powers: Vec<PrimePower>,
    },
}

/// A dense table of an arithmetic function on `[0, limit)`. Index 0 holds 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ArithmeticTable {
    kind: FunctionKind,
    data: TableData,
}

impl ArithmeticTable {
    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn limit(&self) -> usize {
        match &self.data {
            TableData::Signs(v) => v.len(),
            TableData::VonMangoldt { logs, .. } => logs.len(),
        }
    }

    pub fn get(&self, n: usize) -> f64 {
        match &self.data {
            TableData::Signs(v) => v[n] as f64,
            TableData::VonMangoldt { logs, .. } => logs[n],
        }
    }

    /// Integer values for μ, λ and the square indicator.
    pub fn signs(&self) -> Option<&[i8]> {
        match &self.data {
            TableData::Signs(v) => Some(v),
            TableData::VonMangoldt { .. } => None,
        }
    }

    /// Exact `(p, k)` with `n = p^k` when this is a Λ table and `n` is a prime power.
    pub fn prime_power(&self, n: usize) -> Option<PrimePower> {
        match &self.data {
            TableData::VonMangoldt { powers, .. } => {
                let pp = powers[n];
                (pp.prime != 0).then_some(pp)
            }
            TableData::Signs(_) => None,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match &self.data {
            TableData::Signs(v) => v.iter().map(|&s| s as f64).collect(),
            TableData::VonMangoldt { logs, .. } => logs.clone(),
        }
    }

    /// Binary dump: `MSPC`, kind byte, three zero bytes, `u64` limit, then
    /// packed little-endian values (`i8`, or `f64` for Λ).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; 16];
        header[..4].copy_from_slice(MAGIC);
        header[4] = self.kind.tag();
        header[8..].copy_from_slice(&(self.limit() as u64).to_le_bytes());
        w.write_all(&header)?;
        match &self.data {
            TableData::Signs(v) => {
                let bytes: Vec<u8> = v.iter().map(|&s| s as u8).collect();
                w.write_all(&bytes)?;
            }
            TableData::VonMangoldt { logs, .. } => {
                let mut bytes = Vec::with_capacity(logs.len() * 8);
                for x in logs {
                    bytes.extend_from_slice(&x.to_le_bytes());
                }
                w.write_all(&bytes)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic, expected MSPC".into()));
        }
        let kind = FunctionKind::from_tag(header[4])
            .ok_or_else(|| Error::Format(format!("unknown kind byte {}", header[4])))?;
        let limit = u64::from_le_bytes(header[8..].try_into().unwrap()) as usize;
        let data = match kind {
            FunctionKind::VonMangoldt => {
                let mut bytes = vec![0u8; limit * 8];
                r.read_exact(&mut bytes)?;
                let logs: Vec<f64> = bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                let powers = logs
                    .iter()
                    .enumerate()
                    .map(|(n, &l)| recover_prime_power(n as u64, l))
                    .collect::<Result<Vec<_>>>()?;
                TableData::VonMangoldt { logs, powers }
            }
            _ => {
                let mut bytes = vec![0u8; limit];
                r.read_exact(&mut bytes)?;
                TableData::Signs(bytes.into_iter().map(|b| b as i8).collect())
            }
        };
        Ok(ArithmeticTable { kind, data })
    }
}

fn recover_prime_power(n: u64, log: f64) -> Result<PrimePower> {
    if log == 0.0 {
        return Ok(PrimePower::default());
    }
    let p = log.exp().round() as u64;
    let mut m = n;
    let mut exp = 0u8;
    while p > 1 && m % p == 0 {
        m /= p;
        exp += 1;
    }
    if m != 1 || exp == 0 {
        return Err(Error::Format(format!("entry {n} is not a prime power but has value {log}")));
    }
    Ok(PrimePower { prime: p as u32, exp })
}

/// Primes below `bound` by the plain sieve of Eratosthenes.
pub fn primes_below(bound: usize) -> Vec<u64> {
    if bound < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; bound];
    let mut out = Vec::new();
    for i in 2..bound {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j < bound {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Factorization summary for one integer, filled in by the segment sieve.
#[derive(Clone, Copy)]
struct Factor {
    rem: u64,
    big_omega: u8,
    distinct: u8,
    squarefree: bool,
    first: PrimePower,
}

fn factor_segment(lo: usize, hi: usize, small_primes: &[u64]) -> Vec<Factor> {
    let mut f: Vec<Factor> = (lo..hi)
        .map(|n| Factor {
            rem: n as u64,
            big_omega: 0,
            distinct: 0,
            squarefree: true,
            first: PrimePower::default(),
        })
        .collect();
    for &p in small_primes {
        if p * p >= hi as u64 {
            break;
        }
        let start = (lo as u64).div_ceil(p).max(1) * p;
        let mut m = start;
        while m < hi as u64 {
            let e = &mut f[(m as usize) - lo];
            let mut k = 0u8;
            while e.rem % p == 0 {
                e.rem /= p;
                k += 1;
            }
            e.big_omega += k;
            e.distinct += 1;
            if k > 1 {
                e.squarefree = false;
            }
            if e.distinct == 1 {
                e.first = PrimePower { prime: p as u32, exp: k };
            }
            m += p;
        }
    }
    for e in f.iter_mut() {
        if e.rem > 1 {
            e.big_omega += 1;
            e.distinct += 1;
            if e.distinct == 1 {
                e.first = PrimePower { prime: e.rem as u32, exp: 1 };
            }
        }
    }
    f
}

fn sign_segment(kind: FunctionKind, lo: usize, hi: usize, small_primes: &[u64]) -> Vec<i8> {
    if kind == FunctionKind::SquareIndicator {
        return (lo..hi)
            .map(|n| (n >= 1 && is_square(n as u64)) as i8)
            .collect();
    }
    factor_segment(lo, hi, small_primes)
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            if lo + i == 0 {
                return 0;
            }
            let parity = if e.big_omega % 2 == 0 { 1 } else { -1 };
            match kind {
                FunctionKind::Mobius if !e.squarefree => 0,
                _ => parity,
            }
        })
        .collect()
}

fn mangoldt_segment(lo: usize, hi: usize, small_primes: &[u64]) -> Vec<PrimePower> {
    factor_segment(lo, hi, small_primes)
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            if lo + i >= 2 && e.distinct == 1 {
                e.first
            } else {
                PrimePower::default()
            }
        })
        .collect()
}

/// Sieve with default limits.
pub fn sieve(kind: FunctionKind, limit: usize) -> Result<ArithmeticTable> {
    sieve_with_limits(kind, limit, &Limits::default())
}

pub fn sieve_with_limits(kind: FunctionKind, limit: usize, limits: &Limits) -> Result<ArithmeticTable> {
    if limit == 0 {
        return Err(Error::arg("sieve limit must be at least 1"));
    }
    if limit as u64 > limits.max_sieve_len {
        return Err(Error::Resource {
            what: "sieve table",
            requested: limit as u64,
            cap: limits.max_sieve_len,
        });
    }
    let seg = if limit > SEGMENT_THRESHOLD { SEGMENT_LEN } else { limit };
    Ok(sieve_segmented(kind, limit, seg))
}

/// Sieve in explicit segments of `seg_len` entries. Output does not depend on `seg_len`.
pub fn sieve_segmented(kind: FunctionKind, limit: usize, seg_len: usize) -> ArithmeticTable {
    let seg_len = seg_len.max(1);
    let small = primes_below(isqrt(limit as u64) as usize + 2);
    let bounds: Vec<(usize, usize)> = (0..limit)
        .step_by(seg_len)
        .map(|lo| (lo, (lo + seg_len).min(limit)))
        .collect();
    let data = match kind {
        FunctionKind::VonMangoldt => {
            let powers: Vec<PrimePower> = bounds
                .par_iter()
                .map(|&(lo, hi)| mangoldt_segment(lo, hi, &small))
                .collect::<Vec<_>>()
                .concat();
            let logs = powers
                .iter()
                .map(|pp| if pp.prime == 0 { 0.0 } else { (pp.prime as f64).ln() })
                .collect();
            TableData::VonMangoldt { logs, powers }
        }
        _ => TableData::Signs(
            bounds
                .par_iter()
                .map(|&(lo, hi)| sign_segment(kind, lo, hi, &small))
                .collect::<Vec<_>>()
                .concat(),
        ),
    };
    ArithmeticTable { kind, data }
}

/// `ν_p(n) = p/(p-1)` when `p ∤ n` and `n ≥ 1`, else 0.
pub fn nu_p_weight(n: u64, p: u64) -> Result<Ratio<u64>> {
    if !is_prime(p) {
        return Err(Error::arg(format!("{p} is not prime")));
    }
    if n == 0 || n % p == 0 {
        Ok(Ratio::from_integer(0))
    } else {
        Ok(Ratio::new(p, p - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trial-division oracle: (Ω(n), squarefree).
    fn trial_factor(mut n: u64) -> (u32, bool, Vec<u64>) {
        let mut omega = 0;
        let mut sqf = true;
        let mut ps = Vec::new();
        let mut d = 2;
        while d * d <= n {
            let mut k = 0;
            while n % d == 0 {
                n /= d;
                k += 1;
            }
            if k > 0 {
                ps.push(d);
            }
            omega += k;
            if k > 1 {
                sqf = false;
            }
            d += 1;
        }
        if n > 1 {
            omega += 1;
            ps.push(n);
        }
        (omega, sqf, ps)
    }

    #[test]
    fn mobius_small_values() {
        let t = sieve(FunctionKind::Mobius, 8).unwrap();
        assert_eq!(&t.signs().unwrap()[1..], &[1, -1, -1, 0, -1, 1, -1]);
        assert_eq!(t.get(0), 0.0);
    }

    #[test]
    fn liouville_of_twelve() {
        let t = sieve(FunctionKind::Liouville, 13).unwrap();
        assert_eq!(t.get(12), -1.0);
    }

    #[test]
    fn mertens_values_match_oracle() {
        let t = sieve(FunctionKind::Mobius, 1001).unwrap();
        let s = t.signs().unwrap();
        let mertens = |x: usize| s[1..=x].iter().map(|&v| v as i64).sum::<i64>();
        // Oracle values from trial division.
        let oracle = |x: u64| {
            (1..=x)
                .map(|n| {
                    let (om, sqf, _) = trial_factor(n);
                    if sqf {
                        if om % 2 == 0 { 1i64 } else { -1 }
                    } else {
                        0
                    }
                })
                .sum::<i64>()
        };
        assert_eq!(mertens(10), oracle(10));
        assert_eq!(mertens(100), oracle(100));
        assert_eq!(mertens(1000), oracle(1000));
        assert_eq!(mertens(10), -1);
        assert_eq!(mertens(100), 1);
        assert_eq!(mertens(1000), 2);
    }

    #[test]
    fn tables_agree_with_trial_division() {
        let n = 10_001;
        let mu = sieve(FunctionKind::Mobius, n).unwrap();
        let li = sieve(FunctionKind::Liouville, n).unwrap();
        let vm = sieve(FunctionKind::VonMangoldt, n).unwrap();
        let sq = sieve(FunctionKind::SquareIndicator, n).unwrap();
        for k in 1..n {
            let (om, sqf, ps) = trial_factor(k as u64);
            let lam = if om % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(li.get(k), lam, "λ({k})");
            assert_eq!(mu.get(k), if sqf { lam } else { 0.0 }, "μ({k})");
            if ps.len() == 1 {
                let pp = vm.prime_power(k).unwrap();
                assert_eq!(pp.prime as u64, ps[0]);
                assert_eq!(pp.exp as u32, om);
                assert_eq!(vm.get(k), (ps[0] as f64).ln());
            } else {
                assert_eq!(vm.get(k), 0.0);
                assert!(vm.prime_power(k).is_none());
            }
            let r = (k as f64).sqrt().round() as usize;
            assert_eq!(sq.get(k), (r * r == k) as i8 as f64);
        }
        for t in [&mu, &li, &vm, &sq] {
            assert_eq!(t.get(0), 0.0);
        }
        assert_eq!(vm.get(1), 0.0);
    }

    #[test]
    fn segmented_matches_single_segment() {
        let limit = 1 << 20;
        for kind in [FunctionKind::Mobius, FunctionKind::Liouville, FunctionKind::VonMangoldt] {
            let whole = sieve_segmented(kind, limit, limit);
            let pieces = sieve_segmented(kind, limit, 65_537);
            assert_eq!(whole, pieces, "{kind:?}");
        }
    }

    #[test]
    fn chebyshev_sum_near_x() {
        let x = 1_000_000;
        let vm = sieve(FunctionKind::VonMangoldt, x + 1).unwrap();
        let psi: f64 = vm.to_f64().iter().sum();
        assert!((psi / x as f64 - 1.0).abs() < 0.1, "ψ(x)/x = {}", psi / x as f64);
    }

    #[test]
    fn limit_over_cap_is_resource_error() {
        let limits = Limits::from_mem_cap(1000);
        let err = sieve_with_limits(FunctionKind::Mobius, 1001, &limits).unwrap_err();
        assert!(matches!(err, Error::Resource { cap: 1000, .. }));
        assert!(err.to_string().contains("1000"));
        assert!(sieve(FunctionKind::Mobius, 0).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        for kind in [FunctionKind::Mobius, FunctionKind::VonMangoldt, FunctionKind::SquareIndicator] {
            let t = sieve(kind, 5000).unwrap();
            let mut buf = Vec::new();
            t.write_to(&mut buf).unwrap();
            assert_eq!(&buf[..4], b"MSPC");
            assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 5000);
            let back = ArithmeticTable::read_from(&buf[..]).unwrap();
            assert_eq!(back, t);
        }
        assert!(ArithmeticTable::read_from(&b"XXXX000000000000"[..]).is_err());
    }

    #[test]
    fn nu_weight_cases() {
        assert_eq!(nu_p_weight(7, 3).unwrap(), Ratio::new(3, 2));
        assert_eq!(nu_p_weight(9, 3).unwrap(), Ratio::from_integer(0));
        assert_eq!(nu_p_weight(0, 5).unwrap(), Ratio::from_integer(0));
        assert!(nu_p_weight(4, 6).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("von-mangoldt".parse::<FunctionKind>().unwrap(), FunctionKind::VonMangoldt);
        assert_eq!("von_mangoldt".parse::<FunctionKind>().unwrap(), FunctionKind::VonMangoldt);
        assert!("zeta".parse::<FunctionKind>().is_err());
    }
}
