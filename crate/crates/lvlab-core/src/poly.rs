//! Dirichlet polynomial evaluation and the kernel transform
//!
//!   ĥ_t(ξ) = ∫ w(u)² u^{it} e(−ξu) du,   e(x) = e^{2πix},
//!
//! with oscillation-aware quadrature. A plain Gauss–Legendre evaluation of
//! the integral has an absolute accuracy floor near machine epsilon, which
//! swamps the true value once ξ is large (the integral decays faster than any
//! power of ξ). To certify the decay we integrate by parts j ∈ {4, 8} times:
//! all derivatives of w vanish at u = 1, 2, so
//!
//!   ĥ_t(ξ) = (2πiξ)^{−j} ∫ (d/du)^j [w(u)² u^{it}] e(−ξu) du,
//!
//! where the derivative is produced exactly by the jet arithmetic of
//! `crate::jets`. The cancellation floor of the level-j evaluation is
//! ε·‖D^j h_t‖_{L¹}·(2πξ)^{−j}, so higher levels resolve smaller values; the
//! reported error estimate combines the refinement gap with that floor.

use crate::bump::{BumpW, PANELS};
use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive, integrate_panel};
use crate::util::mobius;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// One evaluation of ĥ_t(ξ) with its a-posteriori error estimate.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub t: f64,
    pub xi: f64,
    pub value: Complex64,
    pub quadrature_error_estimate: f64,
}

const T_CAP: f64 = 1e6;
const XI_CAP: f64 = 1e8;

/// Per-panel initial node counts: max(32, 8⌈|t|+|ξ|⌉) nodes total, split
/// proportionally to panel length.
fn initial_nodes(t: f64, xi: f64) -> [usize; 3] {
    let total = (8.0 * (t.abs() + xi.abs()).ceil()).max(32.0) as usize;
    let mut out = [0usize; 3];
    for (i, (a, b)) in PANELS.iter().enumerate() {
        out[i] = ((total as f64) * (b - a)).ceil().max(16.0) as usize;
    }
    out
}

/// One integration-by-parts level: value, refinement gap, cancellation floor.
fn h_hat_level(bump: &BumpW, t: f64, xi: f64, j: usize) -> Result<(Complex64, f64)> {
    let nodes = initial_nodes(t, xi);
    let deriv = |u: f64| -> Complex64 {
        if j == 0 {
            bump.h_value(u, t)
        } else {
            bump.h_jet(u, t).derivative(j)
        }
    };
    // L¹ norm of the differentiated kernel (non-oscillatory; coarse nodes).
    let mut abs_f = |u: f64| Complex64::new(deriv(u).norm(), 0.0);
    let l1 = PANELS
        .iter()
        .map(|&(a, b)| integrate_panel(a, b, 64, &mut abs_f).re)
        .sum::<f64>()
        .max(1e-300);
    let scale = if j == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, TAU * xi).powu(j as u32)
    };
    let tol = f64::max(1e-10 * scale.norm(), 1e-13 * l1);
    let mut raw_total = Complex64::new(0.0, 0.0);
    let mut gap_total = 0.0f64;
    for (p, &(a, b)) in PANELS.iter().enumerate() {
        let mut f = |u: f64| deriv(u) * Complex64::from_polar(1.0, -TAU * xi * u);
        let n0 = nodes[p];
        let r = integrate_adaptive(&[(a, b)], n0, tol, n0 * 128, &mut f)?;
        raw_total += r.value;
        gap_total += r.error_estimate;
    }
    let floor = 5e-16 * l1 / scale.norm();
    let value = raw_total / scale;
    Ok((value, gap_total / scale.norm() + floor))
}

/// ĥ_t(ξ) with escalation through IBP levels 0 → 4 → 8 whenever the current
/// level cannot distinguish the value from zero.
pub fn h_hat(t: f64, xi: f64) -> Result<KernelEval> {
    if !t.is_finite() || !xi.is_finite() || t.abs() > T_CAP || xi.abs() > XI_CAP {
        return Err(Error::InvalidInput(format!(
            "h_hat: |t| ≤ {T_CAP:.0e} and |ξ| ≤ {XI_CAP:.0e} required, got t={t}, ξ={xi}"
        )));
    }
    let bump = BumpW::standard();
    let (mut value, mut err) = h_hat_level(bump, t, xi, 0)?;
    if xi != 0.0 {
        for j in [4usize, 8] {
            if value.norm() > 10.0 * err {
                break; // resolved away from zero at the current level
            }
            let (v, e) = h_hat_level(bump, t, xi, j)?;
            if e < err {
                value = v;
                err = e;
            }
        }
    }
    if err > 1e-8 {
        return Err(Error::QuadratureNonConvergence(format!(
            "h_hat(t={t}, ξ={xi}): error estimate {err:.2e} > 1e-8"
        )));
    }
    Ok(KernelEval {
        t,
        xi,
        value,
        quadrature_error_estimate: err,
    })
}

/// Coefficient source for a Dirichlet polynomial.
#[derive(Debug, Clone)]
pub enum CoeffSource {
    /// a_n listed in window order (index 0 ↔ smallest n in the window).
    Explicit(Vec<Complex64>),
    /// Unit-modulus coefficients with deterministic O(1) random access:
    /// the angle of a_n is drawn from word position n of a ChaCha8 stream.
    RandomUnimodular { seed: u64 },
    /// Mollifier coefficients c_n = Σ_{d|n, d≤X} μ(d) (so c_1 = 1, c_n = 0
    /// for 1 < n ≤ X).
    MollifierCn { x: u64 },
    ConstantOne,
}

/// A Dirichlet polynomial: raw D_N over (N, 2N] or smoothed S_N over the
/// support of w(n/N).
#[derive(Debug, Clone)]
pub struct PolySpec {
    pub n: u64,
    pub source: CoeffSource,
    pub smoothed: bool,
}

impl PolySpec {
    pub fn new(n: u64, source: CoeffSource, smoothed: bool) -> Result<PolySpec> {
        if n < 1 {
            return Err(Error::InvalidInput("PolySpec: N ≥ 1 required".into()));
        }
        if let CoeffSource::Explicit(ref v) = source {
            if v.iter().any(|c| c.norm() > 1.0 + 1e-12) {
                return Err(Error::InvalidInput(
                    "PolySpec: explicit coefficients must satisfy |a_n| ≤ 1".into(),
                ));
            }
        }
        Ok(PolySpec { n, source, smoothed })
    }

    /// Summation window [lo, hi]: (N, 2N] raw, [N, 2N] smoothed (support of w(n/N)).
    pub fn window(&self) -> (u64, u64) {
        if self.smoothed {
            (self.n, 2 * self.n)
        } else {
            (self.n + 1, 2 * self.n)
        }
    }

    /// Coefficient a_n (without the bump weight).
    pub fn coefficient(&self, n: u64) -> Complex64 {
        let (lo, _) = self.window();
        match &self.source {
            CoeffSource::Explicit(v) => v
                .get((n - lo) as usize)
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0)),
            CoeffSource::RandomUnimodular { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * n as u128);
                Complex64::from_polar(1.0, TAU * rng.gen::<f64>())
            }
            CoeffSource::MollifierCn { x } => Complex64::new(mollifier_cn(n, *x) as f64, 0.0),
            CoeffSource::ConstantOne => Complex64::new(1.0, 0.0),
        }
    }
}

/// c_n = Σ_{d|n, d≤X} μ(d); vanishes for 1 < n ≤ X, equals 1 at n = 1.
pub fn mollifier_cn(n: u64, x: u64) -> i64 {
    crate::util::divisors(n)
        .into_iter()
        .filter(|&d| d <= x)
        .map(mobius)
        .sum()
}

/// D_N(t, χ) or S_N(t, χ) as an exact finite sum.
pub fn eval_poly(spec: &PolySpec, chi: &DirichletCharacter, t: f64) -> Complex64 {
    let bump = BumpW::standard();
    let (lo, hi) = spec.window();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in lo..=hi {
        let c = chi.eval(n as i64);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut a = spec.coefficient(n);
        if spec.smoothed {
            a *= bump.eval(n as f64 / spec.n as f64);
        }
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        sum += a * c * Complex64::from_polar(1.0, t * (n as f64).ln());
    }
    sum
}

/// Memory/time budget for grids: (window length) × (grid size) term evaluations.
const GRID_BUDGET: u64 = 400_000_000;

/// Evaluate the polynomial over a character list and ascending t-grid.
/// Returns `values[chi_idx][t_idx]`; log n is computed once per n and reused.
pub fn eval_grid(
    spec: &PolySpec,
    characters: &[DirichletCharacter],
    t_grid: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    if t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("eval_grid: t-grid must be ascending".into()));
    }
    let (lo, hi) = spec.window();
    let cost = (hi - lo + 1) * (t_grid.len() as u64) * (characters.len() as u64).max(1);
    if cost > GRID_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "eval_grid: {cost} term evaluations exceed budget {GRID_BUDGET} \
             (≈ {} MB of intermediate work)",
            cost / 60_000
        )));
    }
    let bump = BumpW::standard();
    // Precompute per-n data shared by all characters and all t.
    let terms: Vec<(u64, f64, Complex64)> = (lo..=hi)
        .filter_map(|n| {
            let mut a = spec.coefficient(n);
            if spec.smoothed {
                a *= bump.eval(n as f64 / spec.n as f64);
            }
            if a == Complex64::new(0.0, 0.0) {
                None
            } else {
                Some((n, (n as f64).ln(), a))
            }
        })
        .collect();
    let rows: Vec<Vec<Complex64>> = characters
        .par_iter()
        .map(|chi| {
            let weighted: Vec<(f64, Complex64)> = terms
                .iter()
                .filter_map(|&(n, logn, a)| {
                    let c = chi.eval(n as i64);
                    if c == Complex64::new(0.0, 0.0) {
                        None
                    } else {
                        Some((logn, a * c))
                    }
                })
                .collect();
            t_grid
                .iter()
                .map(|&t| {
                    weighted
                        .iter()
                        .map(|&(logn, ac)| ac * Complex64::from_polar(1.0, t * logn))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(rows)
}
