//! Large-value sets W, the predicted bounds of the main large-value theorem
//! and its classical comparisons, the exponential sum
//!
//!   R(v, a) = Σ_{(t,χ)∈W} v^{it} χ(a)
//!
//! with its windowed variant R̃, continuous and discrete moments, the additive
//! energy E(W), and the Heath-Brown double-sum check.

use crate::bump::BumpW;
use crate::characters::CharacterGroup;
use crate::error::{Error, Result};
use crate::poly::{eval_grid, PolySpec};
use crate::quad::{integrate_adaptive, QuadResult};
use crate::util::{gcd, mod_inv};
use num_complex::Complex64;
use rayon::prelude::*;

/// Relative slack when comparing ordinate gaps against δ (grid arithmetic
/// can land exactly on the separation boundary).
const SEP_SLACK: f64 = 1.0 - 1e-9;

/// A well-spaced set of large values: (t, character-index) pairs.
#[derive(Debug, Clone)]
pub struct PointSet {
    /// Entries sorted by (character index, t).
    pub entries: Vec<(f64, usize)>,
    /// Per-character minimal ordinate gap δ.
    pub separation: f64,
    /// Ordinate cap T.
    pub t_cap: f64,
    /// Value threshold V used at extraction.
    pub v_threshold: f64,
    /// σ when V = N^σ was requested, if known.
    pub sigma: Option<f64>,
    pub q: u64,
}

impl PointSet {
    pub fn new(
        entries: Vec<(f64, usize)>,
        separation: f64,
        t_cap: f64,
        v_threshold: f64,
        sigma: Option<f64>,
        q: u64,
    ) -> Result<PointSet> {
        let set = PointSet {
            entries,
            separation,
            t_cap,
            v_threshold,
            sigma,
            q,
        };
        set.check_invariants()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// |t| ≤ T, V ≥ 0, and per-character δ-separation.
    pub fn check_invariants(&self) -> Result<()> {
        if self.v_threshold < 0.0 {
            return Err(Error::InvalidInput("PointSet: V ≥ 0 required".into()));
        }
        for &(t, _) in &self.entries {
            if t.abs() > self.t_cap + 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "PointSet: |t| = {} exceeds T = {}",
                    t.abs(),
                    self.t_cap
                )));
            }
        }
        for (i, &(t1, c1)) in self.entries.iter().enumerate() {
            for &(t2, c2) in &self.entries[i + 1..] {
                if c1 == c2 && (t1 - t2).abs() < self.separation * SEP_SLACK {
                    return Err(Error::InvalidInput(format!(
                        "PointSet: entries ({t1}, χ#{c1}) and ({t2}, χ#{c2}) violate δ = {}",
                        self.separation
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest |t| in the set (0 for the empty set).
    pub fn t_spread(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(t, _)| t.abs())
            .fold(0.0, f64::max)
    }
}

/// Extract a well-spaced large-value set: scan t ∈ [−T, T] in steps of δ/4,
/// keep grid points with |poly| ≥ V, then select greedily in decreasing |D|
/// order (ties: smaller t, then smaller character index) subject to the
/// per-character δ-separation.
pub fn extract_w(
    spec: &PolySpec,
    group: &CharacterGroup,
    t_cap: f64,
    v: f64,
    delta: f64,
) -> Result<PointSet> {
    if delta <= 0.0 || t_cap < 0.0 || v < 0.0 {
        return Err(Error::InvalidInput(
            "extract_w: δ > 0, T ≥ 0, V ≥ 0 required".into(),
        ));
    }
    let step = delta / 4.0;
    let npts = (2.0 * t_cap / step).floor() as usize + 1;
    let grid: Vec<f64> = (0..npts).map(|k| -t_cap + step * k as f64).collect();
    let values = eval_grid(spec, &group.characters, &grid)?;
    let mut candidates: Vec<(f64, f64, usize)> = Vec::new();
    for (ci, row) in values.iter().enumerate() {
        for (ti, val) in row.iter().enumerate() {
            let mag = val.norm();
            if mag >= v {
                // Quantize to 12 significant digits so analytically equal
                // magnitudes tie-break on t rather than on rounding noise.
                candidates.push((round_sig(mag, 12), grid[ti], ci));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then(a.2.cmp(&b.2))
    });
    let mut accepted: Vec<Vec<f64>> = vec![Vec::new(); group.characters.len()];
    let mut entries: Vec<(f64, usize)> = Vec::new();
    for (_, t, ci) in candidates {
        if accepted[ci]
            .iter()
            .all(|&t2| (t - t2).abs() >= delta * SEP_SLACK)
        {
            accepted[ci].push(t);
            entries.push((t, ci));
        }
    }
    entries.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.partial_cmp(&b.0).unwrap()));
    PointSet::new(entries, delta, t_cap, v, None, group.modulus.q)
}

/// The four predicted |W| bounds (no hidden constants; the (qT)^ε report
/// multiplier is carried separately).
#[derive(Debug, Clone, Copy)]
pub struct PredictedBounds {
    /// Mean value theorem: N²V⁻² + qTNV⁻².
    pub mvt: f64,
    /// Huxley–Montgomery shape: N²V⁻² + qTN⁴V⁻⁶.
    pub hmh: f64,
    /// Main theorem, (qT)^{3/4} ≤ N ≤ (qT)^{5/6}: N²V⁻² + (qT)^{4/3}N²V⁻⁴.
    pub thm1_low: f64,
    /// Main theorem, N ≥ (qT)^{5/6}:
    /// N²V⁻² + N⁵V⁻⁶ + (qT)^{1/2}N³V⁻⁴ + (qT)^{2/19}N^{80/19}V^{−96/19}.
    pub thm1_high: f64,
    pub low_regime: bool,
    pub high_regime: bool,
    /// (qT)^ε, the suppressed quasi-polynomial factor.
    pub eps_multiplier: f64,
}

pub fn predicted_bounds(n: f64, v: f64, q: f64, t: f64, eps: f64) -> Result<PredictedBounds> {
    if n <= 0.0 || v <= 0.0 || q <= 0.0 || t <= 0.0 {
        return Err(Error::InvalidInput(
            "predicted_bounds: N, V, q, T must be positive".into(),
        ));
    }
    let qt = q * t;
    Ok(PredictedBounds {
        mvt: n * n / (v * v) + qt * n / (v * v),
        hmh: n * n / (v * v) + qt * n.powi(4) / v.powi(6),
        thm1_low: n * n / (v * v) + qt.powf(4.0 / 3.0) * n * n / v.powi(4),
        thm1_high: n * n / (v * v)
            + n.powi(5) / v.powi(6)
            + qt.sqrt() * n.powi(3) / v.powi(4)
            + qt.powf(2.0 / 19.0) * n.powf(80.0 / 19.0) * v.powf(-96.0 / 19.0),
        low_regime: qt.powf(0.75) <= n && n <= qt.powf(5.0 / 6.0),
        high_regime: n >= qt.powf(5.0 / 6.0),
        eps_multiplier: qt.powf(eps),
    })
}

/// Round to `digits` significant digits (0 stays 0).
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let p = 10f64.powi(digits - 1 - e);
    (x * p).round() / p
}

fn r_eval_unchecked(w: &PointSet, group: &CharacterGroup, v: f64, a: i64) -> Complex64 {
    let lv = v.ln();
    w.entries
        .iter()
        .map(|&(t, ci)| Complex64::from_polar(1.0, t * lv) * group.characters[ci].eval(a))
        .sum()
}

/// R(v, a) = Σ_{(t,χ)∈W} v^{it} χ(a).
pub fn r_eval(w: &PointSet, group: &CharacterGroup, v: f64, a: i64) -> Result<Complex64> {
    if v <= 0.0 {
        return Err(Error::InvalidInput("r_eval: v > 0 required".into()));
    }
    Ok(r_eval_unchecked(w, group, v, a))
}

/// R̃_{M₂}(u, a): square root of the ψ̃-windowed average of |R|² over
/// u' ∈ [1/2, 2], with window (NM₂/q)·ψ̃((NM₂/q)(u − u')).
#[allow(clippy::too_many_arguments)]
pub fn r_tilde(
    w: &PointSet,
    group: &CharacterGroup,
    u: f64,
    a: i64,
    m2: f64,
    n: f64,
    t_cap: f64,
    eps: f64,
) -> Result<f64> {
    if m2 <= 0.0 {
        return Err(Error::InvalidInput("r_tilde: M₂ > 0 required".into()));
    }
    let bump = BumpW::standard();
    let q = w.q as f64;
    let scale = n * m2 / q;
    let qt = q * t_cap;
    let mut f = |up: f64| {
        let window = scale * crate::bump::psi_tilde(bump, scale * (u - up), qt, eps);
        let r = r_eval_unchecked(w, group, up, a).norm_sqr();
        Complex64::new(window * r, 0.0)
    };
    // Resolve both the R oscillation (scale ~ t-spread) and the window width.
    let window_res = (scale / (2.0 * qt.powf(eps))).ceil() as usize;
    let n0 = (32 + 3 * (w.t_spread().ceil() as usize)).max(16 * window_res.max(1));
    let tol = 1e-9 * scale * (w.len() as f64 + 1.0).powi(2);
    let r = integrate_adaptive(&[(0.5, 2.0)], n0, tol, n0 * 256, &mut f)?;
    Ok(r.value.re.max(0.0).sqrt())
}

/// One "≲" comparison: a measured quantity against its predicted normalizer.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub kind: String,
    pub raw: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub params: Vec<(String, f64)>,
}

impl MomentReport {
    fn new(kind: &str, raw: f64, normalizer: f64, params: Vec<(String, f64)>) -> MomentReport {
        MomentReport {
            kind: kind.to_string(),
            raw,
            normalizer,
            ratio: raw / normalizer,
            params,
        }
    }
}

fn coprime_residues(q: u64) -> Vec<i64> {
    (1..=q.max(1) as i64)
        .filter(|&a| gcd(a, q as i64) == 1)
        .collect()
}

fn integrate_r_power(w: &PointSet, group: &CharacterGroup, k: u32) -> Result<QuadResult> {
    let residues = coprime_residues(w.q);
    let phi = residues.len() as f64;
    let mut f = |v: f64| {
        let s: f64 = residues
            .iter()
            .map(|&a| r_eval_unchecked(w, group, v, a).norm().powi(k as i32))
            .sum();
        Complex64::new(s, 0.0)
    };
    let n0 = 32 + 4 * (w.t_spread().ceil() as usize);
    let tol = 1e-9 * phi * (w.len() as f64).powi(k as i32) * 1.5;
    integrate_adaptive(&[(0.5, 2.0)], n0, tol.max(1e-12), n0 * 256, &mut f)
}

/// Continuous moments ∫_{1/2}^{2} Σ_{(a,q)=1} |R(v,a)|^k dv for k = 2, 4,
/// with ratios against φ(q)|W| and φ(q)E(W).
pub fn continuous_moments(
    w: &PointSet,
    group: &CharacterGroup,
) -> Result<(MomentReport, MomentReport)> {
    if w.is_empty() {
        return Err(Error::InvalidInput("continuous_moments: W is empty".into()));
    }
    let phi = coprime_residues(w.q).len() as f64;
    let second = integrate_r_power(w, group, 2)?.value.re;
    let fourth = integrate_r_power(w, group, 4)?.value.re;
    let e = energy(w, group)? as f64;
    Ok((
        MomentReport::new(
            "continuous-second",
            second,
            phi * w.len() as f64,
            vec![("k".into(), 2.0)],
        ),
        MomentReport::new(
            "continuous-fourth",
            fourth,
            phi * e,
            vec![("k".into(), 4.0), ("energy".into(), e)],
        ),
    ))
}

/// Closed-form continuous moments from character orthogonality:
/// Σ_a χ(a)ψ̄(a) = φ(q)[χ=ψ] and ∫_{1/2}^{2} v^{iτ} dv in closed form.
/// O(|W|^k) — test oracle only.
pub fn continuous_moments_oracle(w: &PointSet, group: &CharacterGroup, k: u32) -> f64 {
    assert!(k == 2 || k == 4);
    let phi = coprime_residues(w.q).len() as f64;
    let iv = |tau: f64| -> Complex64 {
        // ∫_{1/2}^{2} v^{iτ} dv = (2^{1+iτ} − (1/2)^{1+iτ})/(1+iτ)
        let one_p = Complex64::new(1.0, tau);
        let two = Complex64::new(2.0f64.ln(), 0.0);
        ((two * one_p).exp() - (-two * one_p).exp()) / one_p
    };
    let mut total = Complex64::new(0.0, 0.0);
    let ents = &w.entries;
    if k == 2 {
        for &(t1, c1) in ents {
            for &(t2, c2) in ents {
                if c1 == c2 {
                    total += iv(t1 - t2);
                }
            }
        }
    } else {
        for &(t1, c1) in ents {
            for &(t2, c2) in ents {
                let p12 = group.characters[c1].product_index(&group.characters[c2]);
                for &(t3, c3) in ents {
                    for &(t4, c4) in ents {
                        let p34 = group.characters[c3].product_index(&group.characters[c4]);
                        if p12 == p34 {
                            total += iv(t1 + t2 - t3 - t4);
                        }
                    }
                }
            }
        }
    }
    phi * total.re
}

/// Additive energy: ordered quadruples in W⁴ with |t₁+t₂−t₃−t₄| ≤ 1 (closed)
/// and χ₁χ₂ = χ₃χ₄. Hashed algorithm: group ordered pairs by product
/// character, sort pair-sums, count windowed matches with two pointers.
pub fn energy(w: &PointSet, group: &CharacterGroup) -> Result<u64> {
    const ENERGY_CAP: usize = 10_000;
    if w.len() > ENERGY_CAP {
        return Err(Error::BudgetExceeded(format!(
            "energy: |W| = {} exceeds the hashed-method cap {ENERGY_CAP}",
            w.len()
        )));
    }
    let nchars = group.characters.len();
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); nchars];
    for &(t1, c1) in &w.entries {
        for &(t2, c2) in &w.entries {
            let p = group.characters[c1].product_index(&group.characters[c2]);
            buckets[p].push(t1 + t2);
        }
    }
    let mut count = 0u64;
    for sums in buckets.iter_mut() {
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = sums.len();
        let (mut lo, mut hi) = (0usize, 0usize);
        for i in 0..m {
            while sums[i] - sums[lo] > 1.0 {
                lo += 1;
            }
            if hi < i {
                hi = i;
            }
            while hi + 1 < m && sums[hi + 1] - sums[i] <= 1.0 {
                hi += 1;
            }
            count += (hi - lo + 1) as u64;
        }
    }
    Ok(count)
}

/// Quartic brute-force energy (test oracle).
pub fn energy_bruteforce(w: &PointSet, group: &CharacterGroup) -> u64 {
    let mut count = 0u64;
    for &(t1, c1) in &w.entries {
        for &(t2, c2) in &w.entries {
            let p12 = group.characters[c1].product_index(&group.characters[c2]);
            for &(t3, c3) in &w.entries {
                for &(t4, c4) in &w.entries {
                    let p34 = group.characters[c3].product_index(&group.characters[c4]);
                    if p12 == p34 && (t1 + t2 - t3 - t4).abs() <= 1.0 {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Discrete moments Σ_{n₁,n₂∼M, (nᵢ,q)=1} |R(n₁/n₂, n₁n₂⁻¹ mod q)|^k for
/// k ∈ {2,3,4}, with the gcd split at D for k = 3. The split parts sum to
/// the total bit-for-bit (total is literally small + large).
pub fn discrete_moments(
    w: &PointSet,
    group: &CharacterGroup,
    m: u64,
    k: u32,
    d: u64,
) -> Result<Vec<MomentReport>> {
    const M_CAP: u64 = 20_000;
    if m < 1 || m > M_CAP {
        return Err(Error::BudgetExceeded(format!(
            "discrete_moments: 1 ≤ M ≤ {M_CAP} required (M² pair loop), got {m}"
        )));
    }
    if !(2..=4).contains(&k) {
        return Err(Error::InvalidInput("discrete_moments: k ∈ {2,3,4}".into()));
    }
    let q = w.q as i64;
    let window: Vec<u64> = ((m + 1)..=(2 * m))
        .filter(|&n| gcd(n as i64, q) == 1)
        .collect();
    // Row-parallel over n₁, deterministic ordered reduction.
    let partials: Vec<(f64, f64)> = window
        .par_iter()
        .map(|&n1| {
            let mut small = 0.0f64;
            let mut large = 0.0f64;
            for &n2 in &window {
                let a = (n1 as i64 * mod_inv(n2 as i64, q.max(1)).unwrap_or(0)).rem_euclid(q.max(1));
                let v = n1 as f64 / n2 as f64;
                let mag = r_eval_unchecked(w, group, v, a).norm().powi(k as i32);
                if gcd(n1 as i64, n2 as i64) as u64 <= d {
                    small += mag;
                } else {
                    large += mag;
                }
            }
            (small, large)
        })
        .collect();
    let small: f64 = partials.iter().map(|p| p.0).sum();
    let large: f64 = partials.iter().map(|p| p.1).sum();
    let total = small + large;

    let wf = w.len() as f64;
    let mf = m as f64;
    let qt = w.q as f64 * w.t_cap;
    let e = energy(w, group)? as f64;
    let params = vec![
        ("M".into(), mf),
        ("k".into(), k as f64),
        ("D".into(), d as f64),
        ("energy".into(), e),
    ];
    let mut reports = Vec::new();
    match k {
        2 => {
            // Lemma secmR: |W|M² + |W|²M + |W|^{5/4}(qT)^{1/2}M.
            let norm = wf * mf * mf + wf * wf * mf + wf.powf(1.25) * qt.sqrt() * mf;
            reports.push(MomentReport::new("discrete-2-total", total, norm, params));
        }
        3 => {
            // Small gcd (Lemma sgcd): (DqT + M²)|W|^{1/2}E(W)^{1/2};
            // large gcd (Lemma lgcd): M|W|³ + M(qT)^{1/4}|W|^{21/8} + E^{1/2}|W|^{1/2}M².
            let norm_s = (d as f64 * qt + mf * mf) * wf.sqrt() * e.sqrt();
            let norm_l = mf * wf.powi(3)
                + mf * qt.powf(0.25) * wf.powf(21.0 / 8.0)
                + e.sqrt() * wf.sqrt() * mf * mf;
            reports.push(MomentReport::new(
                "discrete-3-total",
                total,
                norm_s + norm_l,
                params.clone(),
            ));
            reports.push(MomentReport::new(
                "discrete-3-small-gcd",
                small,
                norm_s,
                params.clone(),
            ));
            reports.push(MomentReport::new(
                "discrete-3-large-gcd",
                large,
                norm_l,
                params,
            ));
        }
        _ => {
            // Lemma fourmR: E(W)M² + |W|⁴M + E^{3/4}|W|(qT)^{1/2}M.
            let norm = e * mf * mf + wf.powi(4) * mf + e.powf(0.75) * wf * qt.sqrt() * mf;
            reports.push(MomentReport::new("discrete-4-total", total, norm, params));
        }
    }
    Ok(reports)
}

/// Heath-Brown double sum over all ordered pairs of W (diagonal included):
/// Σ |Σ_{n∼M} c_n (χ₁χ̄₂)(n) n^{−1/2 + i(t₁−t₂)}|², with the theorem's RHS
/// |W|M + |W|² + |W|^{5/4}(qT)^{1/2}.
#[derive(Debug, Clone)]
pub struct HeathBrownReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// True when some character in W is not primitive (the theorem assumes
    /// primitivity; flagged, not rejected).
    pub non_primitive_flagged: bool,
}

pub fn heath_brown_lhs(
    w: &PointSet,
    group: &CharacterGroup,
    m: u64,
    coeffs: &[Complex64],
) -> Result<HeathBrownReport> {
    if coeffs.len() != m as usize {
        return Err(Error::InvalidInput(format!(
            "heath_brown_lhs: need exactly M = {m} coefficients for the window (M, 2M]"
        )));
    }
    if coeffs.iter().any(|c| c.norm() > 1.0 + 1e-12) {
        return Err(Error::InvalidInput("heath_brown_lhs: |c_n| ≤ 1 required".into()));
    }
    let non_primitive_flagged = w
        .entries
        .iter()
        .any(|&(_, ci)| !group.characters[ci].is_primitive);
    let pairs: Vec<(f64, usize, f64, usize)> = w
        .entries
        .iter()
        .flat_map(|&(t1, c1)| w.entries.iter().map(move |&(t2, c2)| (t1, c1, t2, c2)))
        .collect();
    let lhs: f64 = pairs
        .par_iter()
        .map(|&(t1, c1, t2, c2)| {
            let prod = &group.characters[group.characters[c1]
                .product_index(&group.characters[group.characters[c2].conjugate_index()])];
            let tau = t1 - t2;
            let inner: Complex64 = (m + 1..=2 * m)
                .map(|n| {
                    let chi = prod.eval(n as i64);
                    if chi == Complex64::new(0.0, 0.0) {
                        return Complex64::new(0.0, 0.0);
                    }
                    let nf = n as f64;
                    coeffs[(n - m - 1) as usize]
                        * chi
                        * Complex64::from_polar(nf.powf(-0.5), tau * nf.ln())
                })
                .sum();
            inner.norm_sqr()
        })
        .sum();
    let wf = w.len() as f64;
    let qt = w.q as f64 * w.t_cap;
    let rhs = wf * m as f64 + wf * wf + wf.powf(1.25) * qt.sqrt();
    Ok(HeathBrownReport {
        lhs,
        rhs,
        ratio: lhs / rhs,
        non_primitive_flagged,
    })
}

/// Empirical local-constancy check: for probes v, the constant C needed so
/// that |R(v,a)| ≤ C·T·∫_{|v'−v|≤T^ε/T} |R(v',a)| dv' + 1. Returns the max C.
pub fn rbaver_check(
    w: &PointSet,
    group: &CharacterGroup,
    eps: f64,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let t = w.t_cap.max(2.0);
    let halfwidth = t.powf(eps) / t;
    let residues = coprime_residues(w.q);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let v = 0.5 + 1.5 * rng.gen::<f64>();
        let a = residues[rng.gen_range(0..residues.len())];
        let lhs = r_eval_unchecked(w, group, v, a).norm();
        let mut f = |vp: f64| Complex64::new(r_eval_unchecked(w, group, vp, a).norm(), 0.0);
        let n0 = 32 + 4 * ((w.t_spread() * halfwidth).ceil() as usize);
        let integral = integrate_adaptive(
            &[(v - halfwidth, v + halfwidth)],
            n0,
            1e-9 * w.len() as f64 * halfwidth,
            n0 * 256,
            &mut f,
        )?
        .value
        .re;
        if lhs > 1.0 {
            worst = worst.max((lhs - 1.0) / (t * integral));
        }
    }
    Ok(worst)
}
