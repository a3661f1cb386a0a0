//! The C∞ bump w: supported on [1,2], ≡ 1 on [6/5, 9/5], with smooth
//! monotone transitions glued by
//!
//!   s(x) = φ(x)/(φ(x) + φ(1−x)),   φ(x) = exp(−A/x^B),  A = 5/2, B = 3/4,
//!
//! so w(u) = s(5(u−1)) on [1, 6/5] and w(u) = s(5(2−u)) on [9/5, 2]. The
//! Gevrey-type exponent B = 3/4 (rather than the textbook exp(−1/x)) keeps
//! high derivatives of w small enough that |ĥ_t(0)| drops below 1e−6 by
//! |t| = 500; the parameters are recorded in every report.
//!
//! ψ̃₀ is the same construction rescaled to support [−2, 2] with plateau
//! [−1, 1] (the window profile used by R̃).

use crate::error::Result;
use crate::jets::Jet;
use crate::quad::integrate_adaptive;
use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Glue sharpness A in φ(x) = exp(−A/x^B).
pub const GLUE_A: f64 = 2.5;
/// Glue Gevrey exponent B in φ(x) = exp(−A/x^B).
pub const GLUE_B: f64 = 0.75;

/// Quadrature panels for w: the two transition intervals and the plateau.
pub const PANELS: [(f64, f64); 3] = [(1.0, 1.2), (1.2, 1.8), (1.8, 2.0)];

/// ‖w‖² = ∫ w(u)² du, cached at construction.
#[derive(Debug, Clone)]
pub struct BumpW {
    pub glue_a: f64,
    pub glue_b: f64,
    pub l2_norm_sq: f64,
}

/// The monotone C∞ step s: 0 on x ≤ 0, 1 on x ≥ 1.
fn glue_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // s = φ(x)/(φ(x)+φ(1−x)) = 1/(1+exp(g)), g = A·x^{−B} − A·(1−x)^{−B},
    // evaluated on the side that cannot overflow.
    let g = GLUE_A * x.powf(-GLUE_B) - GLUE_A * (1.0 - x).powf(-GLUE_B);
    if g >= 0.0 {
        let e = (-g).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + g.exp())
    }
}

/// Jet version of `glue_step` at x₀ ∈ (0, 1).
fn glue_step_jet(x0: f64) -> Jet {
    debug_assert!(x0 > 0.0 && x0 < 1.0);
    let x = Jet::variable(x0);
    let one_minus = Jet::real_constant(1.0).sub(&x);
    let mb = Complex64::new(-GLUE_B, 0.0);
    let g = x
        .powc(mb)
        .sub(&one_minus.powc(mb))
        .scale(Complex64::new(GLUE_A, 0.0));
    let one = Jet::real_constant(1.0);
    if g.value().re >= 0.0 {
        let e = g.neg().exp();
        e.div(&one.add(&e))
    } else {
        one.add(&g.exp()).recip()
    }
}

static STANDARD: Lazy<BumpW> = Lazy::new(|| {
    let mut f = |u: f64| {
        let w = bump_value(u);
        Complex64::new(w * w, 0.0)
    };
    let l2 = integrate_adaptive(&PANELS, 32, 1e-13, 1 << 14, &mut f)
        .expect("w² is smooth on each panel")
        .value
        .re;
    BumpW {
        glue_a: GLUE_A,
        glue_b: GLUE_B,
        l2_norm_sq: l2,
    }
});

fn bump_value(u: f64) -> f64 {
    if u <= 1.0 || u >= 2.0 {
        0.0
    } else if u < 1.2 {
        glue_step(5.0 * (u - 1.0))
    } else if u <= 1.8 {
        1.0
    } else {
        glue_step(5.0 * (2.0 - u))
    }
}

impl BumpW {
    /// The standard bump used throughout (parameters A = 5/2, B = 3/4).
    pub fn standard() -> &'static BumpW {
        &STANDARD
    }

    /// w(u) ∈ [0, 1].
    pub fn eval(&self, u: f64) -> f64 {
        bump_value(u)
    }

    /// Jet of w at u (derivatives through order 8).
    pub fn eval_jet(&self, u: f64) -> Jet {
        if u <= 1.0 || u >= 2.0 {
            Jet::real_constant(0.0)
        } else if u < 1.2 {
            // w(u) = s(x), x = 5(u−1): chain rule scales c_k by 5^k.
            rescale_inner(glue_step_jet(5.0 * (u - 1.0)), 5.0)
        } else if u <= 1.8 {
            Jet::real_constant(1.0)
        } else {
            rescale_inner(glue_step_jet(5.0 * (2.0 - u)), -5.0)
        }
    }

    /// Jet of h_t(u) = w(u)² u^{it} at u ∈ (1, 2).
    pub fn h_jet(&self, u: f64, t: f64) -> Jet {
        let w = self.eval_jet(u);
        let uit = Jet::variable(u).powc(Complex64::new(0.0, t));
        w.mul(&w).mul(&uit)
    }

    /// h_t(u) as a scalar (fast path).
    pub fn h_value(&self, u: f64, t: f64) -> Complex64 {
        let w = self.eval(u);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(w * w, t * u.ln())
    }

    /// ψ̃₀: supported on [−2, 2], ≡ 1 on [−1, 1], same glue.
    pub fn psi0(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= 2.0 {
            0.0
        } else if x <= 1.0 {
            1.0
        } else {
            glue_step(2.0 - x)
        }
    }
}

/// Convert a jet in the inner variable x to the outer variable u where
/// x = c·u + const: coefficient k picks up cᵏ.
fn rescale_inner(jet: Jet, c: f64) -> Jet {
    let mut a = jet.0;
    let mut ck = 1.0;
    for (k, x) in a.iter_mut().enumerate() {
        if k > 0 {
            ck *= c;
        }
        *x *= ck;
    }
    Jet(a)
}

/// The mollifier ψ̃ of §7: ψ̃(x) = ψ̃₀(x / (2(qT)^ε)).
pub fn psi_tilde(bump: &BumpW, x: f64, qt: f64, eps: f64) -> f64 {
    bump.psi0(x / (2.0 * qt.powf(eps)))
}

/// Validate the BumpW invariants on a sample grid; used by `selftest`.
pub fn check_invariants(bump: &BumpW) -> Result<()> {
    use crate::error::Error;
    for i in 0..=400 {
        let u = 0.5 + 2.0 * (i as f64) / 400.0;
        let w = bump.eval(u);
        let ok = (0.0..=1.0).contains(&w)
            && (!(0.5..=1.0).contains(&u) || w == 0.0)
            && (!(2.0..=2.5).contains(&u) || w == 0.0)
            && (!(1.2..=1.8).contains(&u) || w == 1.0);
        if !ok {
            return Err(Error::InvalidInput(format!("bump invariant violated at u = {u}")));
        }
    }
    if !(0.6..=1.0).contains(&bump.l2_norm_sq) {
        return Err(Error::InvalidInput("‖w‖² outside [3/5, 1]".into()));
    }
    Ok(())
}
