//! Gauss–Legendre quadrature with adaptive node doubling.
//!
//! Nodes and weights on [−1, 1] are computed by Newton iteration on Pₙ
//! (starting from the Chebyshev approximation of the roots) and cached per
//! order. Integrals over a panel list are refined by doubling the node count
//! until successive estimates agree to a caller-supplied tolerance.

use crate::error::{Error, Result};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

/// Gauss–Legendre nodes and weights on [−1, 1] for order n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: Lazy<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    if let Some(hit) = CACHE.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev initial guess for the i-th root of Pₙ.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for Pₙ(x) and Pₙ'(x).
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    CACHE
        .lock()
        .unwrap()
        .insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre over [a, b].
pub fn integrate_panel<F: FnMut(f64) -> Complex64>(a: f64, b: f64, n: usize, f: &mut F) -> Complex64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(&weights) {
        sum += f(mid + half * x) * *w;
    }
    sum * half
}

/// Result of an adaptive integration: value and an a-posteriori error estimate
/// (the difference between the last two refinement levels).
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
}

/// Integrate f over the given panels, starting at `n0` nodes per panel and
/// doubling until two successive levels agree within `tol` (absolute).
///
/// Errors with `QuadratureNonConvergence` if agreement is not reached before
/// the per-panel node count exceeds `max_nodes`.
pub fn integrate_adaptive<F: FnMut(f64) -> Complex64>(
    panels: &[(f64, f64)],
    n0: usize,
    tol: f64,
    max_nodes: usize,
    f: &mut F,
) -> Result<QuadResult> {
    let mut n = n0.max(2);
    let mut prev = panels
        .iter()
        .map(|&(a, b)| integrate_panel(a, b, n, f))
        .sum::<Complex64>();
    loop {
        n *= 2;
        if n > max_nodes {
            return Err(Error::QuadratureNonConvergence(format!(
                "no agreement to {tol:.2e} at {} nodes/panel",
                n / 2
            )));
        }
        let cur = panels
            .iter()
            .map(|&(a, b)| integrate_panel(a, b, n, f))
            .sum::<Complex64>();
        let diff = (cur - prev).norm();
        if diff <= tol {
            return Ok(QuadResult {
                value: cur,
                error_estimate: diff,
            });
        }
        prev = cur;
    }
}
