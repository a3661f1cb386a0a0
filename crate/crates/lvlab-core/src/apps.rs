//! Least primes p(D, k) in arithmetic progressions, least Goldbach numbers
//! G(p, k) in progressions, and the corresponding exponent tables against
//! the target exponents 7/3 and 7/6.

use crate::error::{Error, Result};
use crate::util::{gcd, is_prime, primes_upto, sieve_segment};
use rayon::prelude::*;

pub const DEFAULT_CEILING: u64 = 1_000_000_000;

/// Least-prime table for one modulus D over all reduced residues.
#[derive(Debug, Clone)]
pub struct ApResult {
    pub modulus: u64,
    /// (k, p(D, k)) for every k coprime to D, ascending k.
    pub least_primes: Vec<(u64, u64)>,
    pub max_value: u64,
    /// log(max)/log D.
    pub exponent: f64,
}

/// Least-Goldbach table for an odd prime modulus p.
#[derive(Debug, Clone)]
pub struct GoldbachResult {
    pub modulus: u64,
    /// (k, G(p, k), p₁, p₂) with G = p₁ + p₂, ascending k.
    pub least_goldbach: Vec<(u64, u64, u64, u64)>,
    pub max_value: u64,
    pub exponent: f64,
}

/// Smallest prime ≡ k (mod D), found by a segmented sieve walk up to the
/// ceiling.
pub fn least_prime_ap(d: u64, k: u64, ceiling: u64) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidInput("least_prime_ap: D must be positive".into()));
    }
    let k = k % d.max(1);
    if gcd(k as i64, d as i64) != 1 {
        return Err(Error::InvalidInput(format!(
            "least_prime_ap: gcd({k}, {d}) > 1, progression contains at most one prime"
        )));
    }
    if ceiling > DEFAULT_CEILING {
        return Err(Error::BudgetExceeded(format!(
            "least_prime_ap: ceiling ≤ {DEFAULT_CEILING} required"
        )));
    }
    // d = 1: every residue; the least prime is 2.
    let first = if k == 0 { d } else { k };
    let base = primes_upto((ceiling as f64).sqrt() as usize + 2);
    let block = 1u64 << 20;
    let mut start = first.max(2);
    while start <= ceiling {
        let hi = (start + block).min(ceiling + 1); // half-open [start, hi)
        let flags = sieve_segment(start, hi, &base);
        // First n ≡ k (mod d) at or above start.
        let mut n = start + (k + d - start % d) % d;
        while n < hi {
            if flags[(n - start) as usize] {
                return Ok(n);
            }
            n += d;
        }
        start = hi;
    }
    Err(Error::BudgetExceeded(format!(
        "least_prime_ap: no prime ≡ {k} (mod {d}) below {ceiling}"
    )))
}

/// Smallest n ≡ k (mod p) expressible as a sum of two primes (not
/// necessarily distinct), with the witnessing decomposition.
pub fn least_goldbach(p: u64, k: u64, ceiling: u64) -> Result<(u64, u64, u64)> {
    if p < 3 || !is_prime(p) {
        return Err(Error::InvalidInput(format!(
            "least_goldbach: odd prime modulus required, got {p}"
        )));
    }
    if k == 0 || k >= p {
        return Err(Error::InvalidInput(format!(
            "least_goldbach: residue 1 ≤ k < p required, got {k}"
        )));
    }
    if ceiling > DEFAULT_CEILING {
        return Err(Error::BudgetExceeded(format!(
            "least_goldbach: ceiling ≤ {DEFAULT_CEILING} required"
        )));
    }
    let mut n = 4 + (k + p - 4 % p) % p;
    while n <= ceiling {
        if let Some((p1, p2)) = goldbach_decomposition(n) {
            return Ok((n, p1, p2));
        }
        n += p;
    }
    Err(Error::BudgetExceeded(format!(
        "least_goldbach: no Goldbach number ≡ {k} (mod {p}) below {ceiling}"
    )))
}

/// Smallest-first-summand decomposition n = p₁ + p₂, if one exists.
fn goldbach_decomposition(n: u64) -> Option<(u64, u64)> {
    if n < 4 {
        return None;
    }
    for p1 in primes_upto((n / 2) as usize) {
        if is_prime(n - p1) {
            return Some((p1, n - p1));
        }
    }
    None
}

pub fn ap_table_entry(d: u64, ceiling: u64) -> Result<ApResult> {
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "ap_table_entry: modulus ≥ 2 required, got {d}"
        )));
    }
    let residues: Vec<u64> = (1..d).filter(|&k| gcd(k as i64, d as i64) == 1).collect();
    let least: Vec<Result<u64>> = residues
        .par_iter()
        .map(|&k| least_prime_ap(d, k, ceiling))
        .collect();
    let mut least_primes = Vec::with_capacity(residues.len());
    for (&k, p) in residues.iter().zip(least) {
        least_primes.push((k, p?));
    }
    let max_value = least_primes.iter().map(|&(_, p)| p).max().unwrap();
    Ok(ApResult {
        modulus: d,
        exponent: (max_value as f64).ln() / (d as f64).ln(),
        least_primes,
        max_value,
    })
}

pub fn goldbach_table_entry(p: u64, ceiling: u64) -> Result<GoldbachResult> {
    let residues: Vec<u64> = (1..p).collect();
    let rows: Vec<Result<(u64, u64, u64)>> = residues
        .par_iter()
        .map(|&k| least_goldbach(p, k, ceiling))
        .collect();
    let mut least = Vec::with_capacity(residues.len());
    for (&k, r) in residues.iter().zip(rows) {
        let (g, p1, p2) = r?;
        least.push((k, g, p1, p2));
    }
    let max_value = least.iter().map(|&(_, g, _, _)| g).max().unwrap();
    Ok(GoldbachResult {
        modulus: p,
        exponent: (max_value as f64).ln() / (p as f64).ln(),
        least_goldbach: least,
        max_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Ap,
    Goldbach,
}

/// One exponent-table row.
#[derive(Debug, Clone)]
pub struct ExponentRow {
    pub modulus: u64,
    pub max_value: u64,
    pub exponent: f64,
    /// Target exponent (7/3 for AP, 7/6 for Goldbach) plus 0.2 slack.
    pub slack_bound: f64,
    pub exceeds_slack: bool,
    /// Moduli below 100 are desk-scale noise, not asymptotic evidence.
    pub below_asymptotic_regime: bool,
}

/// Exponent table over a modulus list against the corollary exponents.
pub fn exponent_table(kind: TableKind, moduli: &[u64], ceiling: u64) -> Result<Vec<ExponentRow>> {
    let target = match kind {
        TableKind::Ap => 7.0 / 3.0,
        TableKind::Goldbach => 7.0 / 6.0,
    };
    let mut rows = Vec::with_capacity(moduli.len());
    for &m in moduli {
        let (max_value, exponent) = match kind {
            TableKind::Ap => {
                let e = ap_table_entry(m, ceiling)?;
                (e.max_value, e.exponent)
            }
            TableKind::Goldbach => {
                let e = goldbach_table_entry(m, ceiling)?;
                (e.max_value, e.exponent)
            }
        };
        rows.push(ExponentRow {
            modulus: m,
            max_value,
            exponent,
            slack_bound: target + 0.2,
            exceeds_slack: exponent > target + 0.2,
            below_asymptotic_regime: m < 100,
        });
    }
    Ok(rows)
}
