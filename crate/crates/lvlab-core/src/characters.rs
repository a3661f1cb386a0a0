//! Exact arithmetic of the Dirichlet character group mod q.
//!
//! A character is stored as an exponent vector over unit-group generators:
//! (ℤ/qℤ)* ≅ ∏_p (ℤ/p^e)*, each odd prime-power factor cyclic with its
//! smallest primitive root as generator, and (ℤ/2^e)* for e ≥ 3 generated by
//! −1 and 5. Values are exact roots of unity e(num/L) (L = lcm of generator
//! orders), converted to doubles only at evaluation time.

use crate::error::{Error, Result};
use crate::util::{euler_phi, factorize, gcd, mobius, mod_inv, mod_pow};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Default cap on `Modulus::new`.
pub const MODULUS_CAP: u64 = 1_000_000;
/// Default cap on full-group enumeration (`build_group`).
pub const ENUMERATION_CAP: u64 = 10_000;

/// One prime-power factor of the unit group, with its generators and a dense
/// discrete-log table (residue mod p^e → exponent vector).
#[derive(Debug)]
pub struct Component {
    /// The prime power p^e.
    pub pk: u64,
    pub prime: u64,
    pub exponent: u32,
    /// Generators of (ℤ/p^e)*: one entry for odd p (and 2^1, 2^2), two for 2^e with e ≥ 3.
    pub generators: Vec<u64>,
    /// Orders of the generators; their product is φ(p^e).
    pub orders: Vec<u64>,
    /// dlog[r] = exponent vector of residue r, or None when gcd(r, p^e) > 1.
    dlog: Vec<Option<Vec<u64>>>,
}

impl Component {
    fn build(prime: u64, exponent: u32) -> Component {
        let pk = prime.pow(exponent);
        let (generators, orders): (Vec<u64>, Vec<u64>) = if prime == 2 {
            match exponent {
                1 => (vec![], vec![]),
                2 => (vec![3], vec![2]),
                _ => (vec![pk - 1, 5], vec![2, pk / 4]),
            }
        } else {
            let phi = euler_phi(pk);
            (vec![smallest_primitive_root(pk, phi)], vec![phi])
        };
        let mut dlog: Vec<Option<Vec<u64>>> = vec![None; pk as usize];
        match generators.len() {
            0 => {
                // (ℤ/2)* is trivial.
                if pk == 2 {
                    dlog[1] = Some(vec![]);
                } else {
                    dlog[1] = Some(vec![]);
                }
            }
            1 => {
                let g = generators[0];
                let mut r = 1u64;
                for k in 0..orders[0] {
                    dlog[r as usize] = Some(vec![k]);
                    r = r * g % pk;
                }
            }
            _ => {
                let (g0, g1) = (generators[0], generators[1]);
                let mut r0 = 1u64;
                for a in 0..orders[0] {
                    let mut r = r0;
                    for b in 0..orders[1] {
                        dlog[r as usize] = Some(vec![a, b]);
                        r = r * g1 % pk;
                    }
                    r0 = r0 * g0 % pk;
                }
            }
        }
        Component { pk, prime, exponent, generators, orders, dlog }
    }
}

/// Smallest primitive root modulo the odd prime power pk (φ = φ(pk)).
fn smallest_primitive_root(pk: u64, phi: u64) -> u64 {
    let prime_factors: Vec<u64> = factorize(phi).into_iter().map(|(p, _)| p).collect();
    'g: for g in 2..pk {
        if gcd(g as i64, pk as i64) != 1 {
            continue;
        }
        for &f in &prime_factors {
            if mod_pow(g, phi / f, pk) == 1 {
                continue 'g;
            }
        }
        return g;
    }
    unreachable!("odd prime powers always have a primitive root")
}

/// The modulus q with its unit-group decomposition and dlog tables.
#[derive(Debug)]
pub struct Modulus {
    pub q: u64,
    pub factorization: Vec<(u64, u32)>,
    pub components: Vec<Component>,
    /// Orders of all generators, flattened across components.
    pub orders: Vec<u64>,
    /// Mixed-radix strides for converting exponent vectors to character indices.
    strides: Vec<u64>,
    /// lcm of the generator orders (denominator of exact character angles).
    pub angle_denominator: u64,
    pub phi: u64,
}

impl Modulus {
    pub fn new(q: u64) -> Result<Arc<Modulus>> {
        if q == 0 {
            return Err(Error::InvalidInput("modulus q = 0".into()));
        }
        if q > MODULUS_CAP {
            return Err(Error::BudgetExceeded(format!(
                "modulus {q} exceeds construction cap {MODULUS_CAP}"
            )));
        }
        let factorization = factorize(q);
        let components: Vec<Component> = factorization
            .iter()
            .map(|&(p, e)| Component::build(p, e))
            .collect();
        let orders: Vec<u64> = components.iter().flat_map(|c| c.orders.clone()).collect();
        let mut strides = vec![1u64; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1];
        }
        let angle_denominator = orders.iter().fold(1u64, |l, &d| l / gcd(l as i64, d as i64) as u64 * d);
        let phi = orders.iter().product::<u64>().max(1);
        debug_assert_eq!(phi, euler_phi(q));
        Ok(Arc::new(Modulus { q, factorization, components, orders, strides, angle_denominator, phi }))
    }

    /// Exponent vector of n (flattened across components); None if gcd(n, q) > 1.
    pub fn dlog(&self, n: i64) -> Option<Vec<u64>> {
        let r = n.rem_euclid(self.q as i64) as u64;
        let mut out = Vec::with_capacity(self.orders.len());
        for c in &self.components {
            let rc = (r % c.pk) as usize;
            out.extend_from_slice(c.dlog[rc].as_ref()?);
        }
        Some(out)
    }

    /// Character index for an exponent vector (mixed-radix).
    pub fn index_of(&self, exponents: &[u64]) -> usize {
        exponents
            .iter()
            .zip(&self.strides)
            .map(|(&e, &s)| (e * s) as usize)
            .sum()
    }

    /// Exponent vector for a character index (inverse of `index_of`).
    pub fn exponents_of(&self, index: usize) -> Vec<u64> {
        let mut idx = index as u64;
        self.strides
            .iter()
            .map(|&s| {
                let e = idx / s;
                idx %= s;
                e
            })
            .collect()
    }
}

/// A Dirichlet character mod q as an exponent vector over the group generators.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    pub modulus: Arc<Modulus>,
    /// One entry per generator, reduced mod that generator's order.
    pub exponents: Vec<u64>,
    /// Index in the canonical (mixed-radix) enumeration; 0 is principal.
    pub index: usize,
    pub conductor: u64,
    pub is_primitive: bool,
    /// χ(−1) ∈ {+1, −1}.
    pub parity: i8,
}

impl DirichletCharacter {
    fn new(modulus: Arc<Modulus>, exponents: Vec<u64>) -> DirichletCharacter {
        let index = modulus.index_of(&exponents);
        let conductor = conductor_closed_form(&modulus, &exponents);
        let is_primitive = conductor == modulus.q;
        let mut chi = DirichletCharacter {
            modulus,
            exponents,
            index,
            conductor,
            is_primitive,
            parity: 1,
        };
        chi.parity = if (chi.eval(-1).re - 1.0).abs() < 0.5 { 1 } else { -1 };
        chi
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    /// Exact angle numerator of χ(n) over the denominator `angle_denominator`,
    /// or None when gcd(n, q) > 1 (χ(n) = 0).
    pub fn angle_numerator(&self, n: i64) -> Option<u64> {
        let dlog = self.modulus.dlog(n)?;
        let l = self.modulus.angle_denominator;
        let mut num: u128 = 0;
        for ((&e, &k), &d) in self.exponents.iter().zip(&dlog).zip(&self.modulus.orders) {
            // e·k/d = e·k·(L/d) / L, accumulated mod L.
            num += (e as u128) * (k as u128) % (l as u128) * ((l / d) as u128);
            num %= l as u128;
        }
        Some(num as u64)
    }

    /// χ(n): a unit-modulus complex value on coprime n, zero otherwise.
    pub fn eval(&self, n: i64) -> Complex64 {
        match self.angle_numerator(n) {
            None => Complex64::new(0.0, 0.0),
            Some(num) => {
                let l = self.modulus.angle_denominator;
                Complex64::from_polar(1.0, TAU * (num as f64) / (l as f64))
            }
        }
    }

    /// Index of the product character χ·ψ (exponent vectors add mod orders).
    pub fn product_index(&self, other: &DirichletCharacter) -> usize {
        let m = &self.modulus;
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&other.exponents)
            .zip(&m.orders)
            .map(|((&a, &b), &d)| (a + b) % d)
            .collect();
        m.index_of(&exps)
    }

    /// Index of the conjugate character χ̄ (exponents negate mod orders).
    pub fn conjugate_index(&self) -> usize {
        let m = &self.modulus;
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&m.orders)
            .map(|(&a, &d)| (d - a) % d)
            .collect();
        m.index_of(&exps)
    }

    /// The primitive character χ* mod q* inducing χ: χ(n) = χ*(n) on (n, q) = 1.
    pub fn primitive_character(&self) -> Result<(u64, DirichletCharacter)> {
        let qstar = self.conductor;
        let group = build_group(qstar)?;
        // χ* is the unique character mod q* agreeing with χ on residues coprime to q.
        'cand: for psi in group.characters {
            for a in 1..=self.modulus.q.max(1) {
                if gcd(a as i64, self.modulus.q as i64) != 1 {
                    continue;
                }
                let lhs = psi.angle_numerator(a as i64);
                let rhs = self.angle_numerator(a as i64);
                // Compare exact angles as fractions.
                let (ln, ld) = (lhs.expect("coprime to q* since coprime to q"), psi.modulus.angle_denominator);
                let (rn, rd) = (rhs.expect("coprime"), self.modulus.angle_denominator);
                if (ln as u128) * (rd as u128) % ((ld as u128) * (rd as u128))
                    != (rn as u128) * (ld as u128) % ((ld as u128) * (rd as u128))
                {
                    continue 'cand;
                }
            }
            return Ok((qstar, psi));
        }
        unreachable!("every character is induced by a primitive one")
    }
}

/// Conductor from the component-wise closed form (conductor is multiplicative).
fn conductor_closed_form(modulus: &Modulus, exponents: &[u64]) -> u64 {
    let mut cond = 1u64;
    let mut offset = 0usize;
    for c in &modulus.components {
        let exps = &exponents[offset..offset + c.orders.len()];
        offset += c.orders.len();
        if c.prime != 2 {
            let d = c.orders[0];
            let e = exps[0];
            let r = d / gcd(e as i64, d as i64) as u64; // order of the component character
            if r == 1 {
                continue;
            }
            // Smallest p^f with r | φ(p^f): f = v_p(r) + 1.
            let mut f = 1u32;
            let mut rr = r;
            while rr % c.prime == 0 {
                rr /= c.prime;
                f += 1;
            }
            cond *= c.prime.pow(f);
        } else {
            match c.orders.len() {
                0 => {}
                1 => {
                    // mod 4: nontrivial character has conductor 4.
                    if exps[0] % 2 != 0 {
                        cond *= 4;
                    }
                }
                _ => {
                    let eps = exps[0] % 2;
                    let d = c.orders[1];
                    let r = d / gcd(exps[1] as i64, d as i64) as u64; // order of the 5-part
                    if r > 1 {
                        cond *= 4 * r; // 2^{s+2} where r = 2^s
                    } else if eps == 1 {
                        cond *= 4;
                    }
                }
            }
        }
    }
    cond
}

/// The full character group mod q in canonical index order (index 0 principal).
#[derive(Debug)]
pub struct CharacterGroup {
    pub modulus: Arc<Modulus>,
    pub characters: Vec<DirichletCharacter>,
}

/// Construct (ℤ/qℤ)* and enumerate all φ(q) characters.
pub fn build_group(q: u64) -> Result<CharacterGroup> {
    if q > ENUMERATION_CAP {
        return Err(Error::BudgetExceeded(format!(
            "full-group enumeration cap is {ENUMERATION_CAP}, got q = {q}"
        )));
    }
    let modulus = Modulus::new(q)?;
    let characters = (0..modulus.phi as usize)
        .map(|idx| DirichletCharacter::new(Arc::clone(&modulus), modulus.exponents_of(idx)))
        .collect();
    Ok(CharacterGroup { modulus, characters })
}

/// Ramanujan sum C_q(m) by the closed formula μ(q/(m,q))·φ(q)/φ(q/(m,q)).
pub fn ramanujan_sum(q: u64, m: i64) -> i64 {
    assert!(q >= 1);
    let g = if m == 0 { q } else { gcd(m, q as i64) as u64 };
    let qg = q / g;
    mobius(qg) * (euler_phi(q) / euler_phi(qg)) as i64
}

/// Brute-force Ramanujan sum Σ_{(a,q)=1} e(am/q), rounded to the nearest integer.
pub fn ramanujan_sum_bruteforce(q: u64, m: i64) -> i64 {
    let mut sum = 0.0f64;
    for a in 1..=q {
        if gcd(a as i64, q as i64) == 1 {
            sum += (TAU * ((a as i64 * m).rem_euclid(q as i64) as f64) / q as f64).cos();
        }
    }
    sum.round() as i64
}

/// Gauss sum τ(χ) = Σ_{a=1}^{q} χ(a) e(a/q), with exact per-term angles.
pub fn gauss_sum(chi: &DirichletCharacter) -> Complex64 {
    let q = chi.modulus.q;
    let l = chi.modulus.angle_denominator;
    let mut sum = Complex64::new(0.0, 0.0);
    for a in 1..=q {
        if let Some(num) = chi.angle_numerator(a as i64) {
            // angle = num/L + a/q, kept as a fraction over lcm(L, q).
            let den = (l as u128) * (q as u128) / gcd(l as i64, q as i64) as u128;
            let ang = ((num as u128) * (den / l as u128) + (a as u128) * (den / q as u128)) % den;
            sum += Complex64::from_polar(1.0, TAU * (ang as f64) / (den as f64));
        }
    }
    sum
}

/// Modular inverse wrapper for residues mod q.
pub fn inverse_mod(a: i64, q: u64) -> Result<u64> {
    Ok(mod_inv(a, q as i64)? as u64)
}
