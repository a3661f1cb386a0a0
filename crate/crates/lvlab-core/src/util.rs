//! Elementary integer arithmetic: gcd, modular arithmetic, factorization,
//! multiplicative functions, primality, and sieves.

use crate::error::{Error, Result};

/// Greatest common divisor (always nonnegative).
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `a^e mod m` with u128 intermediates (safe for m < 2^63).
pub fn mod_pow(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc: u128 = 1;
    let mut base: u128 = (a % m) as u128;
    let m128 = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m128;
        }
        base = base * base % m128;
        e >>= 1;
    }
    a = acc as u64;
    a
}

/// Modular inverse by extended Euclid; errors when gcd(a, m) ≠ 1.
pub fn mod_inv(a: i64, m: i64) -> Result<i64> {
    if m <= 0 {
        return Err(Error::InvalidInput(format!("mod_inv: modulus {m} must be positive")));
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::InvalidInput(format!(
            "mod_inv: {a} has no inverse mod {m} (gcd = {old_r})"
        )));
    }
    Ok(old_s.rem_euclid(m))
}

/// Prime factorization by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Euler totient φ(n).
pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Möbius function μ(n) ∈ {−1, 0, 1}.
pub fn mobius(n: u64) -> i64 {
    if n == 1 {
        return 1;
    }
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All divisors of n, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let prev = out.clone();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            out.extend(prev.iter().map(|d| d * pk));
        }
    }
    out.sort_unstable();
    out
}

/// Number of divisors d(n).
pub fn divisor_count(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| (e + 1) as u64).product()
}

/// Deterministic Miller–Rabin, valid for n < 3.3·10²⁴ with these bases.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mod_pow(x, 2, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Simple sieve of Eratosthenes: primality flags for 0..=limit.
pub fn sieve_flags(limit: usize) -> Vec<bool> {
    let mut f = vec![true; limit + 1];
    f[0] = false;
    if limit >= 1 {
        f[1] = false;
    }
    let mut p = 2usize;
    while p * p <= limit {
        if f[p] {
            let mut m = p * p;
            while m <= limit {
                f[m] = false;
                m += p;
            }
        }
        p += 1;
    }
    f
}

/// All primes up to `limit` inclusive.
pub fn primes_upto(limit: usize) -> Vec<u64> {
    sieve_flags(limit)
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i as u64) } else { None })
        .collect()
}

/// Segmented sieve block size (2²⁰).
pub const SIEVE_BLOCK: u64 = 1 << 20;

/// Primality flags for the window [lo, hi) by segmented sieve.
pub fn sieve_segment(lo: u64, hi: u64, base_primes: &[u64]) -> Vec<bool> {
    let len = (hi - lo) as usize;
    let mut f = vec![true; len];
    for i in 0..len {
        if lo + (i as u64) < 2 {
            f[i] = false;
        }
    }
    for &p in base_primes {
        if p * p >= hi {
            break;
        }
        let start = std::cmp::max(p * p, lo.div_ceil(p) * p);
        let mut m = start;
        while m < hi {
            f[(m - lo) as usize] = false;
            m += p;
        }
    }
    f
}
