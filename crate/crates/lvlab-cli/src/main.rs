//! `lvlab`: command-line entry point for the numerical laboratory.
//!
//! Exit codes: 0 success, 1 ratio alarm or invariant failure, 2 invalid
//! input, 3 budget exceeded. Wall time goes to stderr only, so identical
//! runs produce byte-identical stdout.

mod config;

use clap::{Parser, Subcommand};
use lvlab_core::characters::{build_group, gauss_sum, ramanujan_sum, ramanujan_sum_bruteforce};
use lvlab_core::error::{Error, Result};
use lvlab_core::large_values::{
    continuous_moments, discrete_moments, energy, extract_w, heath_brown_lhs, predicted_bounds,
    rbaver_check, PointSet,
};
use lvlab_core::lfunc::{classify_zero, count_zeros, density_scan};
use lvlab_core::poly::{eval_grid, h_hat, CoeffSource, PolySpec};
use lvlab_core::report::{complex, envelope, moment_report, num};
use lvlab_core::spectral::{build_gram, decompose_s, lsvt_check, trace_identities};
use lvlab_core::{apps, bump, Complex64};
use serde_json::{json, Value};
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use config::FileConfig;

#[derive(Parser)]
#[command(name = "lvlab", version, about = "Numerical laboratory for large values of Dirichlet polynomials and zeros of Dirichlet L-functions")]
struct Cli {
    /// key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Worker thread cap (also via LVLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump the character group table mod q as CSV.
    Characters {
        #[arg(long)]
        q: Option<u64>,
    },
    /// Evaluate a Dirichlet polynomial over a t-grid (CSV).
    Polyeval {
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        /// Coefficient source: ones | random | mollifier.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Mollifier cutoff X (source = mollifier).
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        t_start: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        t_step: Option<f64>,
    },
    /// Extract a large-value set and run the moment/energy suite (JSON).
    LargeValues {
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Comma list: continuous,discrete,energy,heathbrown,rbaver.
        #[arg(long)]
        moments: Option<String>,
        /// Discrete-moment dyadic size M.
        #[arg(long)]
        m: Option<u64>,
        /// Ratio alarm threshold.
        #[arg(long)]
        alarm: Option<f64>,
    },
    /// Gram matrix, traces, s1, and the S-decomposition (JSON).
    Spectral {
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Lattice cutoff override (default ⌈(qT)^ε·qT/N⌉).
        #[arg(long)]
        cutoff: Option<i64>,
        #[arg(long)]
        alarm: Option<f64>,
    },
    /// Count and locate zeros of one L(s, χ) (CSV row + JSON summary).
    Zeros {
        #[arg(long)]
        q: Option<u64>,
        /// Character index within the group mod q.
        #[arg(long)]
        chi: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Mollifier cutoffs for the class-I/II dichotomy.
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        y: Option<f64>,
    },
    /// Zero-density scan over all χ mod q and a σ grid.
    Density {
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        t: Option<f64>,
        /// Comma list of σ values.
        #[arg(long)]
        sigma: Option<String>,
    },
    /// Least primes in progressions / least Goldbach numbers (CSV).
    Apps {
        /// ap | goldbach.
        #[arg(long)]
        kind: Option<String>,
        /// Comma list of moduli.
        #[arg(long)]
        moduli: Option<String>,
        #[arg(long)]
        ceiling: Option<u64>,
    },
    /// Deterministic cross-module battery (JSON; byte-identical re-runs).
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(alarmed) => {
            if alarmed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    eprintln!("wall-time: {:.3}s", started.elapsed().as_secs_f64());
    ExitCode::from(code as u8)
}

fn init_threads(flag: Option<usize>, cfg: &FileConfig) -> Result<()> {
    let n = flag
        .or(cfg.get_parsed::<usize>("threads")?)
        .or_else(|| std::env::var("LVLAB_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        // Ignore "already initialized": only the first cap takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Emits the report and returns whether any alarm fired.
fn run(cli: &Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    init_threads(cli.threads, &cfg)?;
    match &cli.command {
        Cmd::Characters { q } => {
            let q = resolve(*q, &cfg, "q", 1)?;
            cmd_characters(q)
        }
        Cmd::Polyeval {
            q,
            n,
            source,
            seed,
            x,
            t_start,
            t_end,
            t_step,
        } => cmd_polyeval(
            resolve(*q, &cfg, "q", 1)?,
            resolve(*n, &cfg, "n", 100)?,
            &resolve_string(source.clone(), &cfg, "source", "ones"),
            resolve(*seed, &cfg, "seed", 0)?,
            resolve(*x, &cfg, "x", 10)?,
            resolve(*t_start, &cfg, "t_start", 0.0)?,
            resolve(*t_end, &cfg, "t_end", 10.0)?,
            resolve(*t_step, &cfg, "t_step", 1.0)?,
        ),
        Cmd::LargeValues {
            q,
            t,
            n,
            sigma,
            eps,
            seed,
            delta,
            moments,
            m,
            alarm,
        } => cmd_large_values(LargeValuesArgs {
            q: resolve(*q, &cfg, "q", 5)?,
            t: resolve(*t, &cfg, "t", 50.0)?,
            n: resolve(*n, &cfg, "n", 500)?,
            sigma: resolve(*sigma, &cfg, "sigma", 0.75)?,
            eps: resolve(*eps, &cfg, "eps", 0.05)?,
            seed: resolve(*seed, &cfg, "seed", 0)?,
            delta: resolve(*delta, &cfg, "delta", 1.0)?,
            moments: resolve_string(moments.clone(), &cfg, "moments", "continuous,energy"),
            m: resolve(*m, &cfg, "m", 64)?,
            alarm: resolve(*alarm, &cfg, "alarm", 50.0)?,
        }),
        Cmd::Spectral {
            q,
            t,
            n,
            sigma,
            eps,
            seed,
            delta,
            cutoff,
            alarm,
        } => cmd_spectral(SpectralArgs {
            q: resolve(*q, &cfg, "q", 5)?,
            t: resolve(*t, &cfg, "t", 50.0)?,
            n: resolve(*n, &cfg, "n", 500)?,
            sigma: resolve(*sigma, &cfg, "sigma", 0.75)?,
            eps: resolve(*eps, &cfg, "eps", 0.05)?,
            seed: resolve(*seed, &cfg, "seed", 0)?,
            delta: resolve(*delta, &cfg, "delta", 1.0)?,
            cutoff: cutoff.or(cfg.get_parsed::<i64>("cutoff")?),
            alarm: resolve(*alarm, &cfg, "alarm", 50.0)?,
        }),
        Cmd::Zeros { q, chi, sigma, t, x, y } => cmd_zeros(
            resolve(*q, &cfg, "q", 1)?,
            resolve(*chi, &cfg, "chi", 0)?,
            resolve(*sigma, &cfg, "sigma", 0.4)?,
            resolve(*t, &cfg, "t", 50.0)?,
            resolve(*x, &cfg, "x", 10.0)?,
            resolve(*y, &cfg, "y", 50.0)?,
        ),
        Cmd::Density { q, t, sigma } => {
            let grid_raw = resolve_string(sigma.clone(), &cfg, "sigma_grid", "0.6,0.75");
            let grid: Vec<f64> = grid_raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad σ value {s:?}")))
                })
                .collect::<Result<_>>()?;
            cmd_density(
                resolve(*q, &cfg, "q", 5)?,
                resolve(*t, &cfg, "t", 100.0)?,
                &grid,
            )
        }
        Cmd::Apps { kind, moduli, ceiling } => {
            let moduli_raw = resolve_string(moduli.clone(), &cfg, "moduli", "3,9,27");
            let list: Vec<u64> = moduli_raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::InvalidInput(format!("bad modulus {s:?}")))
                })
                .collect::<Result<_>>()?;
            cmd_apps(
                &resolve_string(kind.clone(), &cfg, "kind", "ap"),
                &list,
                resolve(*ceiling, &cfg, "ceiling", apps::DEFAULT_CEILING)?,
            )
        }
        Cmd::Selftest { seed } => cmd_selftest(resolve(*seed, &cfg, "seed", 0)?),
    }
}

fn resolve<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    cfg: &FileConfig,
    key: &str,
    default: T,
) -> Result<T> {
    Ok(flag.or(cfg.get_parsed::<T>(key)?).unwrap_or(default))
}

fn resolve_string(flag: Option<String>, cfg: &FileConfig, key: &str, default: &str) -> String {
    flag.or_else(|| cfg.get_raw(key).map(str::to_string))
        .unwrap_or_else(|| default.to_string())
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value).unwrap())
        .map_err(|e| Error::InvalidInput(format!("stdout write failed: {e}")))?;
    Ok(())
}

fn csv_writer() -> csv::Writer<std::io::Stdout> {
    csv::WriterBuilder::new().from_writer(std::io::stdout())
}

fn cmd_characters(q: u64) -> Result<bool> {
    let group = build_group(q)?;
    let mut w = csv_writer();
    w.write_record(["q", "index", "exponents", "conductor", "parity"])
        .map_err(csv_err)?;
    for chi in &group.characters {
        let exps = chi
            .exponents
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            q.to_string(),
            chi.index.to_string(),
            exps,
            chi.conductor.to_string(),
            if chi.parity == 1 { "even" } else { "odd" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(false)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv write failed: {e}"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_polyeval(
    q: u64,
    n: u64,
    source: &str,
    seed: u64,
    x: u64,
    t_start: f64,
    t_end: f64,
    t_step: f64,
) -> Result<bool> {
    if t_step <= 0.0 || t_end < t_start {
        return Err(Error::InvalidInput(
            "polyeval: need t_step > 0 and t_end ≥ t_start".into(),
        ));
    }
    let src = match source {
        "ones" => CoeffSource::ConstantOne,
        "random" => CoeffSource::RandomUnimodular { seed },
        "mollifier" => CoeffSource::MollifierCn { x },
        other => {
            return Err(Error::InvalidInput(format!(
                "polyeval: unknown source {other:?} (ones | random | mollifier)"
            )))
        }
    };
    let spec = PolySpec::new(n, src, true)?;
    let group = build_group(q)?;
    let steps = ((t_end - t_start) / t_step).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| t_start + i as f64 * t_step).collect();
    let values = eval_grid(&spec, &group.characters, &grid)?;
    let mut w = csv_writer();
    w.write_record(["t", "chi_index", "re", "im", "abs"])
        .map_err(csv_err)?;
    for (ci, row) in values.iter().enumerate() {
        for (ti, v) in row.iter().enumerate() {
            w.write_record([
                fmt12(grid[ti]),
                ci.to_string(),
                fmt12(v.re),
                fmt12(v.im),
                fmt12(v.norm()),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(false)
}

/// 12-significant-digit float formatting shared by all CSV output.
fn fmt12(x: f64) -> String {
    format!("{}", lvlab_core::large_values::round_sig(x, 12))
}

struct LargeValuesArgs {
    q: u64,
    t: f64,
    n: u64,
    sigma: f64,
    eps: f64,
    seed: u64,
    delta: f64,
    moments: String,
    m: u64,
    alarm: f64,
}

fn extract_set(
    q: u64,
    n: u64,
    t: f64,
    sigma: f64,
    seed: u64,
    delta: f64,
) -> Result<(PointSet, lvlab_core::characters::CharacterGroup, f64)> {
    let group_arc = build_group(q)?;
    let spec = PolySpec::new(n, CoeffSource::RandomUnimodular { seed }, true)?;
    let v = (n as f64).powf(sigma) / 6.0;
    let mut w = extract_w(&spec, &group_arc, t, v, delta)?;
    w.sigma = Some(sigma);
    Ok((w, group_arc, v))
}

fn cmd_large_values(a: LargeValuesArgs) -> Result<bool> {
    let (w, group, v) = extract_set(a.q, a.n, a.t, a.sigma, a.seed, a.delta)?;
    let wanted: Vec<&str> = a.moments.split(',').map(str::trim).collect();
    for kind in &wanted {
        if !["continuous", "discrete", "energy", "heathbrown", "rbaver"].contains(kind) {
            return Err(Error::InvalidInput(format!(
                "large-values: unknown moment kind {kind:?}"
            )));
        }
    }
    let bounds = predicted_bounds(a.n as f64, v, a.q as f64, a.t, a.eps)?;
    let mut results = serde_json::Map::new();
    results.insert("w_size".into(), json!(w.len()));
    results.insert("v_threshold".into(), num(v));
    results.insert(
        "predicted_bounds".into(),
        json!({
            "eps_multiplier": num(bounds.eps_multiplier),
            "high_regime": bounds.high_regime,
            "hmh": num(bounds.hmh),
            "low_regime": bounds.low_regime,
            "mvt": num(bounds.mvt),
            "thm1_high": num(bounds.thm1_high),
            "thm1_low": num(bounds.thm1_low),
        }),
    );
    let mut alarms: Vec<(String, bool)> = Vec::new();
    let check = |name: &str, ratio: f64, alarms: &mut Vec<(String, bool)>| {
        alarms.push((format!("ratio:{name}"), ratio > a.alarm));
    };
    if !w.is_empty() {
        if wanted.contains(&"continuous") {
            let (k2, k4) = continuous_moments(&w, &group)?;
            check(&k2.kind.clone(), k2.ratio, &mut alarms);
            check(&k4.kind.clone(), k4.ratio, &mut alarms);
            results.insert(
                "continuous_moments".into(),
                json!([moment_report(&k2), moment_report(&k4)]),
            );
        }
        if wanted.contains(&"energy") {
            let e = energy(&w, &group)?;
            results.insert("energy".into(), json!(e));
        }
        if wanted.contains(&"discrete") {
            let d = (a.n as f64 * a.n as f64 / (a.q as f64 * a.t)).max(1.0) as u64;
            let mut reports = Vec::new();
            for k in [2u32, 3, 4] {
                for rep in discrete_moments(&w, &group, a.m, k, d)? {
                    check(&rep.kind.clone(), rep.ratio, &mut alarms);
                    reports.push(moment_report(&rep));
                }
            }
            results.insert("discrete_moments".into(), json!(reports));
        }
        if wanted.contains(&"heathbrown") {
            let coeffs = vec![Complex64::new(1.0, 0.0); a.m as usize];
            let hb = heath_brown_lhs(&w, &group, a.m, &coeffs)?;
            check("heathbrown", hb.ratio, &mut alarms);
            results.insert(
                "heath_brown".into(),
                json!({
                    "lhs": num(hb.lhs),
                    "non_primitive_flagged": hb.non_primitive_flagged,
                    "ratio": num(hb.ratio),
                    "rhs": num(hb.rhs),
                }),
            );
        }
        if wanted.contains(&"rbaver") {
            let c = rbaver_check(&w, &group, a.eps, 10, a.seed)?;
            check("rbaver", c, &mut alarms);
            results.insert("rbaver_constant".into(), num(c));
        }
    }
    let params = json!({
        "delta": num(a.delta), "eps": num(a.eps), "m": a.m, "n": a.n,
        "q": a.q, "seed": a.seed, "sigma": num(a.sigma), "t": num(a.t),
    });
    let fired = alarms.iter().any(|(_, f)| *f);
    print_json(&envelope("large-values", params, Value::Object(results), &alarms))?;
    Ok(fired)
}

struct SpectralArgs {
    q: u64,
    t: f64,
    n: u64,
    sigma: f64,
    eps: f64,
    seed: u64,
    delta: f64,
    cutoff: Option<i64>,
    alarm: f64,
}

fn cmd_spectral(a: SpectralArgs) -> Result<bool> {
    let (w, group, v) = extract_set(a.q, a.n, a.t, a.sigma, a.seed, a.delta)?;
    if w.is_empty() {
        return Err(Error::InvalidInput(format!(
            "spectral: extracted W is empty at threshold V = {v:.3}; lower σ"
        )));
    }
    let gram = build_gram(&w, &group, a.n)?;
    let traces = trace_identities(&gram, &group, a.eps);
    let dec = decompose_s(&gram, &group, a.eps, a.cutoff)?;
    let lsvt = lsvt_check(&gram);
    let rel_residual = dec.residual.abs() / gram.tr_g3.abs().max(1e-300);
    let alarms = vec![
        (
            "est1-residual-budget".to_string(),
            traces.est1_residual.abs() > traces.est1_budget,
        ),
        ("jensen".to_string(), !traces.jensen_holds),
        ("s-decomposition-residual".to_string(), rel_residual > 1e-2),
        ("ratio:S1".to_string(), dec.ratio_s1.ratio > a.alarm),
        ("ratio:S2".to_string(), dec.ratio_s2.ratio > a.alarm),
        ("ratio:S3".to_string(), dec.ratio_s3.ratio > a.alarm),
        ("lsvt-plus".to_string(), !lsvt.plus_holds),
    ];
    let results = json!({
        "bucket_counts": [dec.bucket_counts.0, dec.bucket_counts.1, dec.bucket_counts.2],
        "cutoff": dec.cutoff,
        "est1_budget": num(traces.est1_budget),
        "est1_main": num(traces.est1_main),
        "est1_residual": num(traces.est1_residual),
        "est3_main": num(traces.est3_main),
        "est3_residual": num(traces.est3_residual),
        "i0": complex(dec.i0),
        "lsvt": {
            "minus_holds": lsvt.minus_holds,
            "plus_holds": lsvt.plus_holds,
            "rhs_minus_as_printed": num(lsvt.rhs_minus_as_printed),
            "rhs_plus": num(lsvt.rhs_plus),
        },
        "ratios": [moment_report(&dec.ratio_s1), moment_report(&dec.ratio_s2), moment_report(&dec.ratio_s3)],
        "s1_sum": complex(dec.s1),
        "s2_sum": complex(dec.s2),
        "s3_sum": complex(dec.s3),
        "s_residual_relative": num(rel_residual),
        "singular_value": num(gram.s1),
        "tr_g": num(gram.tr_g),
        "tr_g3": num(gram.tr_g3),
        "w_size": w.len(),
    });
    let params = json!({
        "delta": num(a.delta), "eps": num(a.eps), "n": a.n, "q": a.q,
        "seed": a.seed, "sigma": num(a.sigma), "t": num(a.t),
    });
    let fired = alarms.iter().any(|(_, f)| *f);
    print_json(&envelope("spectral", params, results, &alarms))?;
    Ok(fired)
}

fn cmd_zeros(q: u64, chi_idx: usize, sigma: f64, t: f64, x: f64, y: f64) -> Result<bool> {
    let group = build_group(q)?;
    if chi_idx >= group.characters.len() {
        return Err(Error::InvalidInput(format!(
            "zeros: character index {chi_idx} out of range (φ({q}) = {})",
            group.characters.len()
        )));
    }
    let chi = &group.characters[chi_idx];
    let (count, zeros) = count_zeros(sigma, t, chi)?;
    let mut w = csv_writer();
    w.write_record(["sigma", "chi_index", "count"]).map_err(csv_err)?;
    w.write_record([fmt12(sigma), chi_idx.to_string(), count.to_string()])
        .map_err(csv_err)?;
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut listed = Vec::new();
    for z in &zeros {
        let cls = classify_zero(Complex64::new(z.beta, z.t), chi, x, y, t, 0.5)?;
        listed.push(json!({
            "beta": num(z.beta),
            "class_i": cls.class_i,
            "class_ii": cls.class_ii,
            "residual": num(z.residual),
            "small_t_flagged": cls.small_t_flagged,
            "t": num(z.t),
        }));
    }
    let params = json!({
        "chi": chi_idx, "q": q, "sigma": num(sigma), "t": num(t), "x": num(x), "y": num(y),
    });
    let unclassified = listed
        .iter()
        .any(|z| !(z["class_i"].as_bool().unwrap() || z["class_ii"].as_bool().unwrap()));
    let alarms = vec![("unclassified-zero".to_string(), unclassified)];
    print_json(&envelope(
        "zeros",
        params,
        json!({ "count": count, "zeros": listed }),
        &alarms,
    ))?;
    Ok(unclassified)
}

fn cmd_density(q: u64, t: f64, grid: &[f64]) -> Result<bool> {
    let rep = density_scan(q, t, grid)?;
    let mut w = csv_writer();
    w.write_record(["sigma", "chi_index", "count"]).map_err(csv_err)?;
    for (si, s) in rep.sigma_grid.iter().enumerate() {
        for (ci, c) in rep.counts[si].iter().enumerate() {
            w.write_record([fmt12(*s), ci.to_string(), c.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let monotone = rep.totals.windows(2).all(|p| p[0] >= p[1]);
    let results = json!({
        "exponents": rep.exponents.iter().map(|&e| num(e)).collect::<Vec<_>>(),
        "prediction_corollary": rep.prediction_corollary.iter().map(|&p| num(p)).collect::<Vec<_>>(),
        "prediction_thm2": rep.prediction_thm2.iter().map(|&p| num(p)).collect::<Vec<_>>(),
        "sigma_grid": rep.sigma_grid.iter().map(|&s| num(s)).collect::<Vec<_>>(),
        "totals": rep.totals,
        "zeros_located": rep.zero_list.len(),
    });
    let alarms = vec![("totals-monotone".to_string(), !monotone)];
    print_json(&envelope(
        "density",
        json!({ "q": q, "t": num(t) }),
        results,
        &alarms,
    ))?;
    Ok(!monotone)
}

fn cmd_apps(kind: &str, moduli: &[u64], ceiling: u64) -> Result<bool> {
    let mut w = csv_writer();
    w.write_record(["modulus", "k", "value"]).map_err(csv_err)?;
    match kind {
        "ap" => {
            for &d in moduli {
                let entry = apps::ap_table_entry(d, ceiling)?;
                for (k, p) in entry.least_primes {
                    w.write_record([d.to_string(), k.to_string(), p.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        "goldbach" => {
            for &p in moduli {
                let entry = apps::goldbach_table_entry(p, ceiling)?;
                for (k, g, _, _) in entry.least_goldbach {
                    w.write_record([p.to_string(), k.to_string(), g.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "apps: unknown kind {other:?} (ap | goldbach)"
            )))
        }
    }
    w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(false)
}

/// A compact deterministic battery across every module. No wall-clock or
/// environment data reaches stdout, so identical configs are byte-identical.
fn cmd_selftest(seed: u64) -> Result<bool> {
    let mut results = serde_json::Map::new();
    // Characters: closed forms vs brute force.
    let group13 = build_group(13)?;
    let gauss_ok = group13.characters.iter().all(|chi| {
        !chi.is_primitive
            || (gauss_sum(chi).norm() - (chi.conductor as f64).sqrt()).abs() < 1e-8
    });
    let ramanujan_ok =
        (-30i64..=30).all(|m| ramanujan_sum(12, m) == ramanujan_sum_bruteforce(12, m));
    results.insert(
        "characters".into(),
        json!({ "gauss_modulus_ok": gauss_ok, "ramanujan_ok": ramanujan_ok }),
    );
    // Kernel: frozen sample points.
    let h0 = h_hat(0.0, 0.0)?;
    let h1 = h_hat(10.0, 2.0)?;
    results.insert(
        "kernel".into(),
        json!({
            "h00": complex(h0.value),
            "h10_2": complex(h1.value),
            "l2_norm_sq": num(bump::BumpW::standard().l2_norm_sq),
        }),
    );
    // Large values + spectral on a small deterministic instance. The
    // extracted set is truncated so the Gram budget can never bind.
    let (mut w, group, v) = extract_set(5, 400, 40.0, 0.85, seed, 1.0)?;
    if w.len() > 24 {
        w.entries.truncate(24);
    }
    if w.is_empty() {
        return Err(Error::NonConvergence(
            "selftest: extracted W unexpectedly empty".into(),
        ));
    }
    let (k2, k4) = continuous_moments(&w, &group)?;
    let e = energy(&w, &group)?;
    let gram = build_gram(&w, &group, 400)?;
    let traces = trace_identities(&gram, &group, 0.05);
    results.insert(
        "large_values".into(),
        json!({
            "energy": e,
            "k2_ratio": num(k2.ratio),
            "k4_ratio": num(k4.ratio),
            "v": num(v),
            "w_size": w.len(),
        }),
    );
    results.insert(
        "spectral".into(),
        json!({
            "jensen_holds": traces.jensen_holds,
            "s1": num(gram.s1),
            "tr_g": num(gram.tr_g),
            "tr_g3": num(gram.tr_g3),
        }),
    );
    // Zeros: ζ in |t| ≤ 30.
    let group1 = build_group(1)?;
    let (count, zeros) = count_zeros(0.4, 30.0, &group1.characters[0])?;
    results.insert(
        "zeros".into(),
        json!({
            "count": count,
            "first_positive_t": num(zeros.iter().map(|z| z.t).find(|&t| t > 0.0).unwrap_or(0.0)),
        }),
    );
    // Apps.
    let p43 = apps::least_prime_ap(4, 3, apps::DEFAULT_CEILING)?;
    let p91 = apps::least_prime_ap(9, 1, apps::DEFAULT_CEILING)?;
    let (g31, _, _) = apps::least_goldbach(3, 1, apps::DEFAULT_CEILING)?;
    let (g32, _, _) = apps::least_goldbach(3, 2, apps::DEFAULT_CEILING)?;
    results.insert(
        "apps".into(),
        json!({ "g31": g31, "g32": g32, "p43": p43, "p91": p91 }),
    );
    let expected = gauss_ok
        && ramanujan_ok
        && traces.jensen_holds
        && count == 6
        && (p43, p91, g31, g32) == (3, 19, 4, 5);
    let alarms = vec![("selftest-consistency".to_string(), !expected)];
    print_json(&envelope(
        "selftest",
        json!({ "seed": seed }),
        Value::Object(results),
        &alarms,
    ))?;
    Ok(!expected)
}
