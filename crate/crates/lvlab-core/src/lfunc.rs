//! L(s,χ) via the Hurwitz zeta function, argument-principle zero counting
//! N(σ,T,χ) over the rectangle [σ, 1.6] × [−T, T], zero-density tables versus
//! the exponents (qT)^{7(1−σ)/3} and (qT)^{4(1−σ)/(1+σ)}, and the §12
//! class-I/class-II mollifier classification.

use crate::characters::{build_group, DirichletCharacter};
use crate::error::{Error, Result};
use crate::poly::mollifier_cn;
use crate::util::factorize;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// B₂, B₄, …, B₂₀.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

const IM_CAP: f64 = 1.0e4;
/// Above this height the Euler–Maclaurin tail loses the 1e−10 target.
pub const IM_ACCURACY_DEGRADED: f64 = 1.0e3;

pub fn hurwitz_accuracy_degraded(s: Complex64) -> bool {
    s.im.abs() > IM_ACCURACY_DEGRADED
}

/// Hurwitz zeta ζ(s, a) for a ∈ (0,1], by Euler–Maclaurin with Bernoulli
/// corrections through B₂₀; M direct terms with |s + 2k| < 2π(M + a) at the
/// deepest correction, targeting 1e−10 relative for |Im s| ≤ 10³.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64> {
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-12 {
        return Err(Error::PoleAt(format!("hurwitz_zeta: pole at s = 1 (a = {a})")));
    }
    let (regular, lnma) = hurwitz_em(s, a)?;
    let s1 = s - Complex64::new(1.0, 0.0);
    Ok(regular + (-s1 * lnma).exp() / s1)
}

/// Euler–Maclaurin core: everything except the (M+a)^{1−s}/(s−1) pole term,
/// which is returned via ln(M+a) so callers can combine poles stably.
fn hurwitz_em(s: Complex64, a: f64) -> Result<(Complex64, f64)> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "hurwitz_zeta: a must lie in (0, 1], got {a}"
        )));
    }
    if s.im.abs() > IM_CAP {
        return Err(Error::InvalidInput(format!(
            "hurwitz_zeta: |Im s| ≤ {IM_CAP} required, got {}",
            s.im
        )));
    }
    let m = (30.0f64)
        .max((0.6 * s.im.abs()).ceil())
        .max(((s.norm() + 21.0) / TAU - a).ceil() + 1.0) as usize;
    let mut direct = Complex64::new(0.0, 0.0);
    for n in 0..m {
        direct += (-s * (n as f64 + a).ln()).exp();
    }
    let ma = m as f64 + a;
    let lnma = ma.ln();
    let half = 0.5 * (-s * lnma).exp();
    // Σ_k B₂ₖ/(2k)! · s(s+1)⋯(s+2k−2) · (M+a)^{−s−2k+1}
    let mut corrections = Complex64::new(0.0, 0.0);
    let mut poch = s; // s(s+1)⋯(s+2k−2), starting at k = 1
    let mut fact = 2.0f64; // (2k)!
    for (k, &b2k) in BERNOULLI_EVEN.iter().enumerate() {
        let two_k = 2 * (k + 1);
        let power = (-(s + Complex64::new((two_k - 1) as f64, 0.0)) * lnma).exp();
        corrections += poch * power * (b2k / fact);
        poch *= (s + Complex64::new((two_k - 1) as f64, 0.0))
            * (s + Complex64::new(two_k as f64, 0.0));
        fact *= ((two_k + 1) * (two_k + 2)) as f64;
    }
    Ok((direct + half + corrections, lnma))
}

/// ((M+a)^{1−s} − 1)/(s − 1), stable as s → 1 (limit −ln(M+a)).
fn pole_difference(lnma: f64, s1: Complex64) -> Complex64 {
    let z = s1 * lnma;
    if z.norm() < 1e-4 {
        // −l(1 − z/2 + z²/6 − z³/24)
        -lnma
            * (Complex64::new(1.0, 0.0) - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
    } else {
        ((-z).exp() - Complex64::new(1.0, 0.0)) / s1
    }
}

/// Γ(z) by the Lanczos approximation (g = 7), with reflection for Re z < 1/2.
pub fn gamma_complex(z: Complex64) -> Complex64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z.re < 0.5 {
        let pi_c = Complex64::new(PI, 0.0);
        return pi_c / ((pi_c * z).sin() * gamma_complex(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - Complex64::new(1.0, 0.0);
    let mut x = Complex64::new(G[0], 0.0);
    for (i, &gi) in G.iter().enumerate().skip(1) {
        x += Complex64::new(gi, 0.0) / (z + Complex64::new(i as f64, 0.0));
    }
    let t = z + Complex64::new(7.5, 0.0);
    TAU.sqrt() * t.powc(z + Complex64::new(0.5, 0.0)) * (-t).exp() * x
}

/// Cached evaluator for L(s, χ): the character is factored through its
/// primitive inducing χ* once, L(s, χ*) = q*^{−s} Σ_a χ*(a) ζ(s, a/q*), and
/// the finite Euler factors over p | q, p ∤ q* are re-applied per evaluation.
pub struct LEvaluator {
    pub q: u64,
    pub q_star: u64,
    pub is_principal: bool,
    chi_star: DirichletCharacter,
    /// Primes p | q with p ∤ q*, with χ*(p) precomputed.
    euler_factors: Vec<(f64, Complex64)>,
}

impl LEvaluator {
    pub fn new(chi: &DirichletCharacter) -> Result<LEvaluator> {
        let q = chi.modulus.q;
        let (q_star, chi_star) = chi.primitive_character()?;
        let euler_factors = factorize(q)
            .into_iter()
            .map(|(p, _)| p)
            .filter(|&p| q_star % p != 0)
            .map(|p| (p as f64, chi_star.eval(p as i64)))
            .collect();
        Ok(LEvaluator {
            q,
            q_star,
            is_principal: chi.is_principal(),
            chi_star,
            euler_factors,
        })
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if self.is_principal && (s - Complex64::new(1.0, 0.0)).norm() < 1e-12 {
            return Err(Error::PoleAt("L(s, χ₀) has its pole at s = 1".into()));
        }
        let qs = self.q_star as f64;
        let s1 = s - Complex64::new(1.0, 0.0);
        let near_pole = !self.is_principal && s1.norm() < 1e-6;
        let mut sum = Complex64::new(0.0, 0.0);
        for a in 1..=self.q_star {
            let cv = self.chi_star.eval(a as i64);
            if cv == Complex64::new(0.0, 0.0) {
                continue;
            }
            if near_pole {
                // The 1/(s−1) poles of ζ(s, a/q*) cancel over the character
                // sum; combine them analytically to avoid the cancellation.
                let (regular, lnma) = hurwitz_em(s, a as f64 / qs)?;
                sum += cv * (regular + pole_difference(lnma, s1));
            } else {
                sum += cv * hurwitz_zeta(s, a as f64 / qs)?;
            }
        }
        let mut value = (-s * qs.ln()).exp() * sum;
        for &(p, chi_p) in &self.euler_factors {
            value *= Complex64::new(1.0, 0.0) - chi_p * (-s * p.ln()).exp();
        }
        Ok(value)
    }
}

/// L(s, χ) through the primitive character χ* and finite Euler factors.
pub fn l_value(s: Complex64, chi: &DirichletCharacter) -> Result<Complex64> {
    LEvaluator::new(chi)?.eval(s)
}

/// A located zero β + it with the residual |L(β + it, χ)|.
#[derive(Debug, Clone, Copy)]
pub struct LocatedZero {
    pub beta: f64,
    pub t: f64,
    pub residual: f64,
}

const ZERO_T_CAP: f64 = 1.0e3;
/// Boundary-zero detection threshold on the contour.
const BOUNDARY_EPS: f64 = 1e-8;
const MAX_UNWRAP_DEPTH: u32 = 42;

/// Accumulated argument change of L along the straight segment s0 → s1,
/// with adaptive halving until each step's increment is below π/2.
/// Returns Ok(None) when a boundary zero (|L| < 1e−8) is detected.
fn arg_change_segment(
    l: &LEvaluator,
    s0: Complex64,
    v0: Complex64,
    s1: Complex64,
    v1: Complex64,
    depth: u32,
) -> Result<Option<f64>> {
    if v0.norm() < BOUNDARY_EPS || v1.norm() < BOUNDARY_EPS {
        return Ok(None);
    }
    let delta = (v1 / v0).arg();
    if delta.abs() < FRAC_PI_2 && depth > 0 {
        return Ok(Some(delta));
    }
    if depth >= MAX_UNWRAP_DEPTH {
        // Unresolvable phase jump: a zero (or the pole) is effectively on
        // the contour; let the caller perturb.
        return Ok(None);
    }
    let sm = 0.5 * (s0 + s1);
    let vm = l.eval(sm)?;
    let a = arg_change_segment(l, s0, v0, sm, vm, depth + 1)?;
    let b = arg_change_segment(l, sm, vm, s1, v1, depth + 1)?;
    match (a, b) {
        (Some(x), Some(y)) => Ok(Some(x + y)),
        _ => Ok(None),
    }
}

/// Argument change along an edge with an initial uniform sampling.
fn arg_change_edge(l: &LEvaluator, s0: Complex64, s1: Complex64) -> Result<Option<f64>> {
    let len = (s1 - s0).norm();
    let steps = ((len / 0.25).ceil() as usize).max(4);
    let mut total = 0.0;
    let mut prev_s = s0;
    let mut prev_v = l.eval(s0)?;
    for i in 1..=steps {
        let s = s0 + (s1 - s0) * (i as f64 / steps as f64);
        let v = l.eval(s)?;
        match arg_change_segment(l, prev_s, prev_v, s, v, 0)? {
            Some(d) => total += d,
            None => return Ok(None),
        }
        prev_s = s;
        prev_v = v;
    }
    Ok(Some(total))
}

/// Number of zeros (winding plus pole correction) inside the box
/// [x0, x1] × [y0, y1]; Ok(None) on a boundary zero.
fn zeros_in_box(
    l: &LEvaluator,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
) -> Result<Option<i64>> {
    let corners = [
        Complex64::new(x0, y0),
        Complex64::new(x1, y0),
        Complex64::new(x1, y1),
        Complex64::new(x0, y1),
        Complex64::new(x0, y0),
    ];
    let mut total = 0.0;
    for w in corners.windows(2) {
        match arg_change_edge(l, w[0], w[1])? {
            Some(d) => total += d,
            None => return Ok(None),
        }
    }
    let winding = (total / TAU).round() as i64;
    let pole = i64::from(l.is_principal && x0 < 1.0 && 1.0 < x1 && y0 < 0.0 && 0.0 < y1);
    Ok(Some(winding + pole))
}

/// Newton refinement of a zero from a box center, derivative by central
/// difference; falls back to the starting point on divergence.
fn newton_refine(l: &LEvaluator, start: Complex64) -> Result<(Complex64, f64)> {
    let mut z = start;
    let mut best = (start, l.eval(start)?.norm());
    for _ in 0..60 {
        let f = l.eval(z)?;
        if f.norm() < best.1 {
            best = (z, f.norm());
        }
        if f.norm() < 1e-12 {
            break;
        }
        let h = Complex64::new(1e-6, 0.0);
        let df = (l.eval(z + h)? - l.eval(z - h)?) / (2.0 * h);
        if df.norm() < 1e-300 {
            break;
        }
        let step = f / df;
        if step.norm() > 0.5 {
            break; // left the basin; keep the best iterate
        }
        z -= step;
    }
    let f = l.eval(best.0)?;
    Ok((best.0, f.norm().min(best.1).max(f.norm())))
}

/// A split coordinate nudged away from boundary zeros / the principal pole.
fn split_attempts(lo: f64, hi: f64, avoid_zero: bool) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let base = if avoid_zero && mid.abs() < 1e-2 {
        mid + 0.0137 * (hi - lo)
    } else {
        mid
    };
    (0..6)
        .map(|k| base + k as f64 * 1e-3 * (hi - lo))
        .filter(|&c| c > lo && c < hi)
        .collect()
}

fn locate_in_box(
    l: &LEvaluator,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    expected: i64,
    out: &mut Vec<LocatedZero>,
) -> Result<()> {
    if expected <= 0 {
        return Ok(());
    }
    if (x1 - x0) < 0.02 && (y1 - y0) < 0.02 {
        let (z, residual) = newton_refine(l, Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)))?;
        for _ in 0..expected {
            out.push(LocatedZero {
                beta: z.re,
                t: z.im,
                residual,
            });
        }
        return Ok(());
    }
    let split_y = (y1 - y0) >= (x1 - x0);
    let avoid = l.is_principal
        && if split_y {
            x0 < 1.0 && 1.0 < x1
        } else {
            y0 < 0.0 && 0.0 < y1
        };
    let candidates = if split_y {
        split_attempts(y0, y1, avoid)
    } else {
        split_attempts(x0, x1, avoid)
    };
    for c in candidates {
        let first = if split_y {
            zeros_in_box(l, x0, x1, y0, c)?
        } else {
            zeros_in_box(l, x0, c, y0, y1)?
        };
        if let Some(n1) = first {
            if split_y {
                locate_in_box(l, x0, x1, y0, c, n1, out)?;
                locate_in_box(l, x0, x1, c, y1, expected - n1, out)?;
            } else {
                locate_in_box(l, x0, c, y0, y1, n1, out)?;
                locate_in_box(l, c, x1, y0, y1, expected - n1, out)?;
            }
            return Ok(());
        }
    }
    Err(Error::NonConvergence(
        "zero localization: persistent boundary zero after 6 split perturbations".into(),
    ))
}

/// Count and locate the zeros of L(s, χ) in [σ, 1.6] × [−T, T] by winding
/// of the argument around the rectangle. The spec's stated precondition is
/// σ ≥ 1/2, but its own reference count (ζ at σ = 0.4) needs the critical
/// line strictly inside the box, so σ ≥ 0.1 is accepted.
pub fn count_zeros(
    sigma: f64,
    t_cap: f64,
    chi: &DirichletCharacter,
) -> Result<(i64, Vec<LocatedZero>)> {
    count_zeros_with_edge(sigma, t_cap, chi, 1.6)
}

/// Same with a configurable right edge (contour-stability checks).
pub fn count_zeros_with_edge(
    sigma: f64,
    t_cap: f64,
    chi: &DirichletCharacter,
    right: f64,
) -> Result<(i64, Vec<LocatedZero>)> {
    if !(0.1..1.0).contains(&sigma) {
        return Err(Error::InvalidInput(format!(
            "count_zeros: σ ∈ [0.1, 1) required, got {sigma}"
        )));
    }
    if !(t_cap > 0.0 && t_cap <= ZERO_T_CAP) {
        return Err(Error::BudgetExceeded(format!(
            "count_zeros: 0 < T ≤ {ZERO_T_CAP} required, got {t_cap}"
        )));
    }
    let l = LEvaluator::new(chi)?;
    for retry in 0..=5u32 {
        let t = t_cap + retry as f64 * 1e-3;
        match zeros_in_box(&l, sigma, right, -t, t)? {
            Some(count) => {
                let mut zeros = Vec::new();
                locate_in_box(&l, sigma, right, -t, t, count, &mut zeros)?;
                zeros.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
                return Ok((count, zeros));
            }
            None => continue,
        }
    }
    Err(Error::NonConvergence(
        "count_zeros: boundary zero persisted through 5 contour perturbations".into(),
    ))
}

/// Zero-density scan output across a σ grid and all χ mod q.
#[derive(Debug, Clone)]
pub struct ZeroReport {
    pub q: u64,
    pub t_cap: f64,
    pub sigma_grid: Vec<f64>,
    /// counts[σ index][χ index] = N(σ, T, χ).
    pub counts: Vec<Vec<i64>>,
    pub totals: Vec<i64>,
    /// Fitted exponent log(total)/log(qT) per σ (0 when the total vanishes).
    pub exponents: Vec<f64>,
    /// (qT)^{7(1−σ)/3} per σ.
    pub prediction_corollary: Vec<f64>,
    /// (qT)^{4(1−σ)/(1+σ)} per σ.
    pub prediction_thm2: Vec<f64>,
    /// (χ index, β, t, residual |L|) at the smallest σ of the grid.
    pub zero_list: Vec<(usize, f64, f64, f64)>,
}

const DENSITY_Q_CAP: u64 = 20;
const DENSITY_T_CAP: f64 = 200.0;

/// N(σ, T, χ) for every χ mod q and σ in the grid, with both predicted
/// exponent curves and the fitted exponent.
pub fn density_scan(q: u64, t_cap: f64, sigma_grid: &[f64]) -> Result<ZeroReport> {
    if q > DENSITY_Q_CAP || t_cap > DENSITY_T_CAP {
        return Err(Error::BudgetExceeded(format!(
            "density_scan: q ≤ {DENSITY_Q_CAP} and T ≤ {DENSITY_T_CAP} required, got q = {q}, T = {t_cap}"
        )));
    }
    if sigma_grid.is_empty() {
        return Err(Error::InvalidInput("density_scan: empty σ grid".into()));
    }
    let mut grid = sigma_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let group = build_group(q)?;
    let nchi = group.characters.len();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|si| (0..nchi).map(move |ci| (si, ci)))
        .collect();
    let results: Vec<Result<(i64, Vec<LocatedZero>)>> = jobs
        .par_iter()
        .map(|&(si, ci)| count_zeros(grid[si], t_cap, &group.characters[ci]))
        .collect();
    let mut counts = vec![vec![0i64; nchi]; grid.len()];
    let mut zero_list = Vec::new();
    for (&(si, ci), res) in jobs.iter().zip(results) {
        let (count, zeros) = res?;
        counts[si][ci] = count;
        if si == 0 {
            for z in zeros {
                zero_list.push((ci, z.beta, z.t, z.residual));
            }
        }
    }
    zero_list.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.partial_cmp(&b.2).unwrap()));
    let totals: Vec<i64> = counts.iter().map(|row| row.iter().sum()).collect();
    let qt = (q as f64 * t_cap).max(2.0);
    let exponents = totals
        .iter()
        .map(|&t| if t > 0 { (t as f64).ln() / qt.ln() } else { 0.0 })
        .collect();
    let prediction_corollary = grid.iter().map(|&s| qt.powf(7.0 * (1.0 - s) / 3.0)).collect();
    let prediction_thm2 = grid
        .iter()
        .map(|&s| qt.powf(4.0 * (1.0 - s) / (1.0 + s)))
        .collect();
    Ok(ZeroReport {
        q,
        t_cap,
        sigma_grid: grid,
        counts,
        totals,
        exponents,
        prediction_corollary,
        prediction_thm2,
        zero_list,
    })
}

/// Mollifier data: c_n = Σ_{d|n, d≤X} μ(d) tabulated up to Y log²Y.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    pub x: f64,
    pub y: f64,
    /// coefficients[n−1] = c_n for 1 ≤ n ≤ ⌊Y log²Y⌋.
    pub coefficients: Vec<i64>,
}

impl MollifierSpec {
    pub fn new(x: f64, y: f64) -> Result<MollifierSpec> {
        if x < 2.0 || y < 2.0 {
            return Err(Error::InvalidInput(format!(
                "MollifierSpec: X, Y ≥ 2 required, got X = {x}, Y = {y}"
            )));
        }
        let top = (y * y.ln() * y.ln()).floor() as u64;
        let coefficients = (1..=top).map(|n| mollifier_cn(n, x as u64)).collect();
        Ok(MollifierSpec { x, y, coefficients })
    }
}

/// Outcome of the §12 dichotomy for one zero.
#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub class_i: bool,
    pub class_ii: bool,
    pub magnitude_i: f64,
    pub magnitude_ii: f64,
    /// |t| < A log qT (A = 1): outside the paper's dichotomy (principal-
    /// character gamma term); classification still evaluated but flagged.
    pub small_t_flagged: bool,
}

/// Paper default X = (qT)^ε.
pub fn default_x(q: u64, t_cap: f64, eps: f64) -> f64 {
    (q as f64 * t_cap).max(2.0).powf(eps).max(2.0)
}

/// Paper default Y = (qT)^{(5σ−3)/(2(1+σ)(2σ−1))} for σ > 3/5.
pub fn default_y(q: u64, t_cap: f64, sigma: f64) -> f64 {
    let e = (5.0 * sigma - 3.0) / (2.0 * (1.0 + sigma) * (2.0 * sigma - 1.0));
    (q as f64 * t_cap).max(2.0).powf(e).max(2.0)
}

/// Evaluate the class-I sum (exactly) and the class-II integral (trapezoid,
/// step 0.05 over |u| ≤ log²T) for a located zero ρ = β + it.
pub fn classify_zero(
    rho: Complex64,
    chi: &DirichletCharacter,
    x: f64,
    y: f64,
    t_cap: f64,
    threshold: f64,
) -> Result<Classification> {
    let spec = MollifierSpec::new(x, y)?;
    let l = LEvaluator::new(chi)?;
    // Class I: |Σ_{X < n ≤ Y log²Y} c_n χ(n) n^{−ρ} e^{−n/Y}|.
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, &cn) in spec.coefficients.iter().enumerate() {
        let n = (i + 1) as f64;
        if n <= x || cn == 0 {
            continue;
        }
        let cv = chi.eval((i + 1) as i64);
        if cv == Complex64::new(0.0, 0.0) {
            continue;
        }
        sum += cn as f64 * cv * (-rho * n.ln()).exp() * (-n / y).exp();
    }
    let magnitude_i = sum.norm();
    // Class II: trapezoid of L·M_X·Y^{1/2−β+iu}Γ(1/2−β+iu) over |u| ≤ log²T.
    let mollifier_terms: Vec<(f64, Complex64)> = (1..=x.floor() as u64)
        .map(|d| (d as f64, crate::util::mobius(d) as f64 * chi.eval(d as i64)))
        .filter(|&(_, c)| c != Complex64::new(0.0, 0.0))
        .collect();
    let ubound = t_cap.max(2.0).ln().powi(2);
    let step = 0.05;
    let nsteps = (2.0 * ubound / step).ceil() as usize;
    let us: Vec<f64> = (0..=nsteps).map(|i| -ubound + i as f64 * step).collect();
    let values: Vec<Result<Complex64>> = us
        .par_iter()
        .map(|&u| {
            let s = Complex64::new(0.5, rho.im + u);
            let lv = l.eval(s)?;
            let mx: Complex64 = mollifier_terms
                .iter()
                .map(|&(d, c)| c * (-s * d.ln()).exp())
                .sum();
            let z = Complex64::new(0.5 - rho.re, u);
            Ok(lv * mx * (z * y.ln()).exp() * gamma_complex(z))
        })
        .collect();
    let mut integral = Complex64::new(0.0, 0.0);
    let vals: Vec<Complex64> = values.into_iter().collect::<Result<_>>()?;
    for w in vals.windows(2) {
        integral += 0.5 * step * (w[0] + w[1]);
    }
    let magnitude_ii = integral.norm();
    let q = chi.modulus.q as f64;
    Ok(Classification {
        class_i: magnitude_i >= threshold,
        class_ii: magnitude_ii >= threshold,
        magnitude_i,
        magnitude_ii,
        small_t_flagged: rho.im.abs() < (q * t_cap).max(2.0).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// mpmath-frozen (Re s, Im s, a, Re ζ, Im ζ) reference points.
    const HURWITZ_ORACLE: [(f64, f64, f64, f64, f64); 6] = [
        (2.0, 0.0, 1.0, 1.6449340668482264365, 0.0),
        (3.0, 0.0, 0.5, 8.4143983221171599978, 0.0),
        (0.7, 40.0, 0.3, -2.7475421696900728319, -1.3362446883987357456),
        (2.5, -15.0, 1.0, 0.84974846780994915386, -0.17035238033171115346),
        (0.5, 100.0, 0.25, 1.1303181386078654982, 0.3203035137539492744),
        (0.4, 300.0, 1.0, 0.15527188272919498824, 1.1018038616547315403),
    ];

    #[test]
    fn hurwitz_reference_values() {
        for &(sr, si, a, vr, vi) in &HURWITZ_ORACLE {
            let v = hurwitz_zeta(Complex64::new(sr, si), a).unwrap();
            let expect = Complex64::new(vr, vi);
            assert!(
                (v - expect).norm() < 1e-10 * expect.norm(),
                "ζ({sr}+{si}i, {a}) = {v}, expected {expect}"
            );
        }
    }

    #[test]
    fn hurwitz_closed_forms() {
        // ζ(2, 1) = π²/6.
        let v = hurwitz_zeta(Complex64::new(2.0, 0.0), 1.0).unwrap();
        assert!((v.re - PI * PI / 6.0).abs() < 1e-12);
        // ζ(s, 1/2) = (2^s − 1) ζ(s) at s = 3.
        let s = Complex64::new(3.0, 0.0);
        let lhs = hurwitz_zeta(s, 0.5).unwrap();
        let rhs =
            ((s * 2.0f64.ln()).exp() - Complex64::new(1.0, 0.0)) * hurwitz_zeta(s, 1.0).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
        // ζ(0, a) = 1/2 − a.
        for a in [0.25, 0.5, 0.9, 1.0] {
            let v = hurwitz_zeta(Complex64::new(0.0, 0.0), a).unwrap();
            assert!((v - Complex64::new(0.5 - a, 0.0)).norm() < 1e-10, "a = {a}");
        }
        assert!(hurwitz_zeta(Complex64::new(1.0, 0.0), 0.5).is_err());
        assert!(hurwitz_zeta(Complex64::new(2.0, 0.0), 1.5).is_err());
    }

    #[test]
    fn hurwitz_multiplication_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [2u32, 3] {
            for _ in 0..8 {
                let s = Complex64::new(
                    0.3 + 2.7 * rng.gen::<f64>(),
                    -100.0 + 200.0 * rng.gen::<f64>(),
                );
                let a = 0.05 + 0.95 * rng.gen::<f64>();
                let lhs: Complex64 = (0..m)
                    .map(|j| hurwitz_zeta(s, (a + j as f64) / m as f64).unwrap())
                    .sum();
                let rhs = (s * (m as f64).ln()).exp() * hurwitz_zeta(s, a).unwrap();
                assert!(
                    (lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()),
                    "m = {m}, s = {s}, a = {a}"
                );
            }
        }
    }

    #[test]
    fn gamma_reference_values() {
        assert!((gamma_complex(Complex64::new(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-10);
        assert!((gamma_complex(Complex64::new(5.0, 0.0)).re - 24.0).abs() < 1e-10);
        // |Γ(1/2 + iu)|² = π/cosh(πu).
        for u in [0.5, 2.0, 5.0] {
            let g = gamma_complex(Complex64::new(0.5, u));
            assert!(
                (g.norm_sqr() - PI / (PI * u).cosh()).abs() < 1e-10,
                "u = {u}"
            );
        }
    }

    /// Abel-accelerated alternating Dirichlet series for the χ mod 4 oracle.
    fn l4_series_oracle(s: Complex64) -> Complex64 {
        // Euler transform of Σ (−1)^k (2k+1)^{−s}.
        let terms: Vec<Complex64> = (0..200u32)
            .map(|k| (-s * (2.0 * k as f64 + 1.0).ln()).exp())
            .collect();
        let mut row = terms;
        let mut total = Complex64::new(0.0, 0.0);
        let mut pow = 0.5;
        for _ in 0..60 {
            total += pow * row[0];
            row = row.windows(2).map(|w| w[0] - w[1]).collect();
            pow *= 0.5;
        }
        total
    }

    #[test]
    fn l_value_reference_points() {
        let group1 = build_group(1).unwrap();
        let z2 = l_value(Complex64::new(2.0, 0.0), &group1.characters[0]).unwrap();
        assert!((z2.re - PI * PI / 6.0).abs() < 1e-10);
        let group4 = build_group(4).unwrap();
        let chi = group4
            .characters
            .iter()
            .find(|c| !c.is_principal())
            .unwrap();
        let l1 = l_value(Complex64::new(1.0, 0.0), chi).unwrap();
        assert!((l1.re - PI / 4.0).abs() < 1e-10, "L(1, χ₋₄) = {l1}");
        let l2 = l_value(Complex64::new(2.0, 0.0), chi).unwrap();
        assert!((l2.re - 0.91596559417721901505).abs() < 1e-10, "Catalan");
        // Principal χ mod 4: L(s, χ₀) = ζ(s)(1 − 2^{−s}).
        let chi0 = &group4.characters[0];
        let v = l_value(Complex64::new(2.0, 0.0), chi0).unwrap();
        assert!((v.re - PI * PI / 8.0).abs() < 1e-10);
        assert!(l_value(Complex64::new(1.0, 0.0), chi0).is_err());
    }

    #[test]
    fn l_value_matches_series_oracle() {
        let group4 = build_group(4).unwrap();
        let chi = group4
            .characters
            .iter()
            .find(|c| !c.is_principal())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let s = Complex64::new(0.6 + 1.4 * rng.gen::<f64>(), -8.0 + 16.0 * rng.gen::<f64>());
            let fast = l_value(s, chi).unwrap();
            let oracle = l4_series_oracle(s);
            assert!(
                (fast - oracle).norm() < 1e-8 * (1.0 + oracle.norm()),
                "s = {s}: {fast} vs {oracle}"
            );
        }
    }

    #[test]
    fn zeta_zero_count_to_30() {
        // ζ zeros with |t| ≤ 30: ±14.134…, ±21.022…, ±25.010… → 6.
        let group1 = build_group(1).unwrap();
        let (count, zeros) = count_zeros(0.4, 30.0, &group1.characters[0]).unwrap();
        assert_eq!(count, 6);
        let expected = [-25.010857580, -21.022039639, -14.134725142, 14.134725142, 21.022039639, 25.010857580];
        for (z, &t) in zeros.iter().zip(&expected) {
            assert!((z.t - t).abs() < 1e-6, "located {} expected {t}", z.t);
            assert!((z.beta - 0.5).abs() < 1e-6);
            assert!(z.residual < 1e-6);
        }
        // High σ: empty rectangle.
        let (c9, _) = count_zeros(0.9, 30.0, &group1.characters[0]).unwrap();
        assert_eq!(c9, 0);
        // Contour stability: right edge 1.8 gives the same count.
        let (c18, _) = count_zeros_with_edge(0.4, 30.0, &group1.characters[0], 1.8).unwrap();
        assert_eq!(c18, 6);
    }

    #[test]
    fn chi4_zero_symmetry() {
        // Real nonprincipal χ mod 4: first zeros at t ≈ ±6.0209, ±10.2437.
        let group4 = build_group(4).unwrap();
        let chi = group4
            .characters
            .iter()
            .find(|c| !c.is_principal())
            .unwrap();
        let (count, zeros) = count_zeros(0.4, 12.0, chi).unwrap();
        assert_eq!(count, 4);
        assert_eq!(count % 2, 0);
        for z in &zeros {
            assert!((z.beta - 0.5).abs() < 1e-6);
            assert!(z.residual < 1e-6);
            assert!(
                zeros.iter().any(|z2| (z2.t + z.t).abs() < 1e-5),
                "no mirror for t = {}",
                z.t
            );
        }
        assert!((zeros[3].t - 10.2437703).abs() < 1e-4);
    }

    #[test]
    fn density_scan_small() {
        let rep = density_scan(3, 25.0, &[0.75, 0.55]).unwrap();
        assert_eq!(rep.sigma_grid, vec![0.55, 0.75]);
        assert!(rep.totals[0] >= rep.totals[1], "monotone totals");
        assert_eq!(
            rep.totals,
            rep.counts
                .iter()
                .map(|r| r.iter().sum::<i64>())
                .collect::<Vec<_>>()
        );
        let qt = 75.0f64;
        assert!((rep.prediction_thm2[0] - qt.powf(4.0 * 0.45 / 1.55)).abs() < 1e-9);
        assert!((rep.prediction_corollary[1] - qt.powf(7.0 * 0.25 / 3.0)).abs() < 1e-9);
        for &(_, beta, t, residual) in &rep.zero_list {
            assert!(t.abs() <= 25.0 + 1e-2);
            assert!(beta >= 0.55 - 1e-6);
            assert!(residual < 1e-6);
        }
        assert!(density_scan(50, 25.0, &[0.6]).is_err());
    }

    #[test]
    fn mollifier_invariants() {
        let spec = MollifierSpec::new(10.0, 100.0).unwrap();
        assert_eq!(spec.coefficients[0], 1);
        for n in 2..=10usize {
            assert_eq!(spec.coefficients[n - 1], 0, "c_{n}");
        }
        for (i, &c) in spec.coefficients.iter().enumerate() {
            let d = crate::util::divisor_count((i + 1) as u64) as i64;
            assert!(c.abs() <= d, "|c_{}| = {} > d = {d}", i + 1, c.abs());
        }
        // Tail Σ_{n > Y log²Y} |c_n| n^{−1/2} e^{−n/Y} < 1e−6 at Y = 100.
        let y = 100.0f64;
        let start = (y * y.ln() * y.ln()).floor() as u64 + 1;
        let tail: f64 = (start..start + 200_000)
            .map(|n| {
                let c = mollifier_cn(n, 10).abs() as f64;
                c * (n as f64).powf(-0.5) * (-(n as f64) / y).exp()
            })
            .sum();
        assert!(tail < 1e-6, "tail = {tail}");
    }

    #[test]
    fn first_zeta_zero_classified() {
        let group1 = build_group(1).unwrap();
        let rho = Complex64::new(0.5, 14.134725141734694);
        let c = classify_zero(rho, &group1.characters[0], 10.0, 50.0, 50.0, 0.5).unwrap();
        assert!(
            c.class_i || c.class_ii,
            "magnitudes: I = {}, II = {}",
            c.magnitude_i,
            c.magnitude_ii
        );
        assert!(!c.small_t_flagged || rho.im.abs() < 50.0f64.ln());
    }
}
