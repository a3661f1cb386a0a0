//! Truncated complex Taylor series ("jets") of fixed order.
//!
//! A `Jet` stores the coefficients c_k = f^{(k)}(x₀)/k! for k ≤ 8 and supports
//! the ring operations plus exp, ln, and powers with complex exponent via the
//! standard convolution recurrences. Jets give exact high-order derivatives of
//! composite expressions such as w(u)² uⁱᵗ, which the oscillatory-integral
//! code differentiates under integration by parts.

use num_complex::Complex64;

/// Highest derivative order carried by a jet.
pub const JET_ORDER: usize = 8;
const N: usize = JET_ORDER + 1;

/// Taylor coefficients c_k = f^{(k)}/k! at a fixed expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [Complex64; N]);

impl Jet {
    pub fn constant(c: Complex64) -> Jet {
        let mut a = [Complex64::new(0.0, 0.0); N];
        a[0] = c;
        Jet(a)
    }

    pub fn real_constant(c: f64) -> Jet {
        Jet::constant(Complex64::new(c, 0.0))
    }

    /// The identity function x ↦ x expanded at x₀.
    pub fn variable(x0: f64) -> Jet {
        let mut a = [Complex64::new(0.0, 0.0); N];
        a[0] = Complex64::new(x0, 0.0);
        a[1] = Complex64::new(1.0, 0.0);
        Jet(a)
    }

    pub fn value(&self) -> Complex64 {
        self.0[0]
    }

    /// k-th derivative f^{(k)}(x₀) = k!·c_k.
    pub fn derivative(&self, k: usize) -> Complex64 {
        let mut fact = 1.0f64;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.0[k] * fact
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut a = self.0;
        for (x, y) in a.iter_mut().zip(&o.0) {
            *x += y;
        }
        Jet(a)
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut a = self.0;
        for (x, y) in a.iter_mut().zip(&o.0) {
            *x -= y;
        }
        Jet(a)
    }

    pub fn neg(&self) -> Jet {
        let mut a = self.0;
        for x in a.iter_mut() {
            *x = -*x;
        }
        Jet(a)
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        let mut a = self.0;
        for x in a.iter_mut() {
            *x *= c;
        }
        Jet(a)
    }

    /// Cauchy product truncated at order 8.
    pub fn mul(&self, o: &Jet) -> Jet {
        let mut a = [Complex64::new(0.0, 0.0); N];
        for i in 0..N {
            for j in 0..N - i {
                a[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(a)
    }

    /// Reciprocal 1/f; requires f(x₀) ≠ 0.
    pub fn recip(&self) -> Jet {
        let mut a = [Complex64::new(0.0, 0.0); N];
        let inv0 = 1.0 / self.0[0];
        a[0] = inv0;
        for n in 1..N {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 1..=n {
                s += self.0[k] * a[n - k];
            }
            a[n] = -inv0 * s;
        }
        Jet(a)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    /// exp(f) via hₙ = (1/n) Σ_{k=1..n} k·f_k·h_{n−k}.
    pub fn exp(&self) -> Jet {
        let mut a = [Complex64::new(0.0, 0.0); N];
        a[0] = self.0[0].exp();
        for n in 1..N {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 1..=n {
                s += self.0[k] * a[n - k] * (k as f64);
            }
            a[n] = s / (n as f64);
        }
        Jet(a)
    }

    /// ln(f) via gₙ = (fₙ − (1/n) Σ_{k=1..n−1} k·g_k·f_{n−k}) / f₀;
    /// requires f(x₀) away from the branch cut.
    pub fn ln(&self) -> Jet {
        let mut a = [Complex64::new(0.0, 0.0); N];
        a[0] = self.0[0].ln();
        let inv0 = 1.0 / self.0[0];
        for n in 1..N {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 1..n {
                s += a[k] * self.0[n - k] * (k as f64);
            }
            a[n] = (self.0[n] - s / (n as f64)) * inv0;
        }
        Jet(a)
    }

    /// f^p for complex exponent p: exp(p·ln f); requires f(x₀) > 0 in practice.
    pub fn powc(&self, p: Complex64) -> Jet {
        self.ln().scale(p).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn polynomial_derivatives() {
        // f(x) = (x² + 1)·x at x₀ = 2: f = x³ + x, f' = 3x²+1, f'' = 6x, f''' = 6.
        let x = Jet::variable(2.0);
        let f = x.mul(&x).add(&Jet::real_constant(1.0)).mul(&x);
        assert!(close(f.derivative(0), Complex64::new(10.0, 0.0), 1e-14));
        assert!(close(f.derivative(1), Complex64::new(13.0, 0.0), 1e-14));
        assert!(close(f.derivative(2), Complex64::new(12.0, 0.0), 1e-14));
        assert!(close(f.derivative(3), Complex64::new(6.0, 0.0), 1e-14));
        assert!(f.derivative(4).norm() < 1e-14);
    }

    #[test]
    fn exp_ln_roundtrip() {
        let x = Jet::variable(1.5);
        let f = x.mul(&x).add(&Jet::real_constant(0.25));
        let g = f.ln().exp();
        for k in 0..=JET_ORDER {
            assert!(close(g.0[k], f.0[k], 1e-13), "k={k}");
        }
    }

    #[test]
    fn recip_matches_division() {
        let x = Jet::variable(0.7);
        let f = x.exp().add(&x);
        let one = Jet::real_constant(1.0);
        let r = f.mul(&f.recip());
        for k in 0..=JET_ORDER {
            assert!(close(r.0[k], one.0[k], 1e-13));
        }
    }

    #[test]
    fn complex_power_derivatives() {
        // f(u) = u^{it} at u₀: f^{(k)} = it(it−1)…(it−k+1) u^{it−k}.
        let t = 3.25f64;
        let it = Complex64::new(0.0, t);
        let u0 = 1.37f64;
        let f = Jet::variable(u0).powc(it);
        let mut falling = Complex64::new(1.0, 0.0);
        for k in 0..=JET_ORDER {
            let expect = falling * Complex64::from_polar(1.0, t * u0.ln()) * u0.powf(-(k as f64));
            assert!(close(f.derivative(k), expect, 1e-11), "k={k}");
            falling *= it - Complex64::new(k as f64, 0.0);
        }
    }

    #[test]
    fn chain_rule_on_gaussian() {
        // f(x) = exp(−x²) at x₀ = 0.6; check against finite differences.
        let x0 = 0.6f64;
        let f = Jet::variable(x0).mul(&Jet::variable(x0)).neg().exp();
        let h = 1e-5;
        let scalar = |x: f64| (-x * x).exp();
        let fd1 = (scalar(x0 + h) - scalar(x0 - h)) / (2.0 * h);
        let fd2 = (scalar(x0 + h) - 2.0 * scalar(x0) + scalar(x0 - h)) / (h * h);
        assert!((f.derivative(1).re - fd1).abs() < 1e-8);
        assert!((f.derivative(2).re - fd2).abs() < 1e-5);
    }
}
