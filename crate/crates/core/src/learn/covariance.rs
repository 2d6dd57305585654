//! The completely multiplicative ±1 class and its centered covariance operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{isqrt, primes_below};
use crate::error::{Error, Result};

pub const EXPLICIT_CAP: usize = 2000;

/// Seeded ±1 signs on primes, extended completely multiplicatively to `[1, X]`; entry 0 is 0.
pub fn sample_binary_multiplicative(x: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spf = vec![0usize; x + 1];
    for p in primes_below(x + 1) {
        let p = p as usize;
        for m in (p..=x).step_by(p) {
            if spf[m] == 0 {
                spf[m] = p;
            }
        }
    }
    let mut h = vec![0.0; x + 1];
    if x >= 1 {
        h[1] = 1.0;
    }
    for n in 2..=x {
        h[n] = if spf[n] == n {
            if rng.random::<bool>() { 1.0 } else { -1.0 }
        } else {
            h[spf[n]] * h[n / spf[n]]
        };
    }
    h
}

pub fn is_squarefree(n: u64) -> bool {
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % (p * p) == 0 {
            return false;
        }
        if m % p == 0 {
            m /= p;
        }
        p += 1;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    Formula,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    /// Squarefree kernel `a`; the eigenvector is the normalized indicator of `{a m²}`.
    pub a: u64,
    pub lambda: f64,
    /// `‖C u_a − λ_a u_a‖₂` in explicit mode.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpectrum {
    pub x: usize,
    pub mode: CovarianceMode,
    pub eigen: Vec<Eigenpair>,
    /// `⌊√(X/2)⌋ / X` in formula mode; power iteration in explicit mode.
    pub op_norm: f64,
    /// `|trace − Σ λ_a|`, explicit mode only.
    pub trace_gap: Option<f64>,
}

fn formula(x: usize) -> Vec<Eigenpair> {
    (1..=x as u64)
        .filter(|&a| is_squarefree(a))
        .map(|a| Eigenpair {
            a,
            lambda: if a == 1 { 0.0 } else { isqrt(x as u64 / a) as f64 / x as f64 },
            residual: None,
        })
        .collect()
}

/// Spectrum of `C/X` with `C_{mn} = 1_□(mn) − 1_□(m) 1_□(n)` on `1..=X`.
pub fn binary_mult_covariance(x: usize, mode: CovarianceMode) -> Result<CovarianceSpectrum> {
    if x == 0 {
        return Err(Error::arg("X must be at least 1"));
    }
    let mut eigen = formula(x);
    let formula_norm = if x >= 2 { isqrt(x as u64 / 2) as f64 / x as f64 } else { 0.0 };
    if mode == CovarianceMode::Formula {
        return Ok(CovarianceSpectrum { x, mode, eigen, op_norm: formula_norm, trace_gap: None });
    }
    if x > EXPLICIT_CAP {
        return Err(Error::Resource { what: "dense covariance side", requested: x as u64, cap: EXPLICIT_CAP as u64 });
    }
    let c = covariance_matrix(x);
    for e in &mut eigen {
        let members: Vec<usize> = (1..)
            .map(|m: u64| e.a * m * m)
            .take_while(|&n| n <= x as u64)
            .map(|n| n as usize - 1)
            .collect();
        let w = 1.0 / (members.len() as f64).sqrt();
        let mut u = vec![0.0; x];
        for &i in &members {
            u[i] = w;
        }
        let cu = matvec(&c, &u);
        let r = cu.iter().zip(&u).map(|(a, b)| (a - e.lambda * b).powi(2)).sum::<f64>().sqrt();
        e.residual = Some(r);
    }
    let trace: f64 = (0..x).map(|i| c[i * x + i]).sum();
    let total: f64 = eigen.iter().map(|e| e.lambda).sum();
    Ok(CovarianceSpectrum {
        x,
        mode,
        eigen,
        op_norm: power_norm(&c, x),
        trace_gap: Some((trace - total).abs()),
    })
}

/// Dense row-major `C/X`.
pub fn covariance_matrix(x: usize) -> Vec<f64> {
    let sq = |n: u64| {
        let r = isqrt(n);
        r * r == n
    };
    let mut c = vec![0.0; x * x];
    for m in 1..=x {
        for n in 1..=x {
            let v = sq((m * n) as u64) as i32 - (sq(m as u64) && sq(n as u64)) as i32;
            c[(m - 1) * x + n - 1] = v as f64 / x as f64;
        }
    }
    c
}

fn matvec(c: &[f64], v: &[f64]) -> Vec<f64> {
    c.chunks(v.len()).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn power_norm(c: &[f64], x: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x243f_6a88_85a3_08d3);
    let mut v: Vec<f64> = (0..x).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        let w = matvec(c, &v);
        lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let resid = w.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        v = w;
        if resid <= 1e-13 * lambda.abs().max(1e-300) {
            break;
        }
    }
    lambda
}
