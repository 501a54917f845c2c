//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string (or throws a string on bad input).

use kaczmarz::analysis::{beta_upper, gamma_leaveout, grk_bounds, momentum_factors, rate_report};
use kaczmarz::{gen_random_problem, run, Problem, RandomProblemSpec, SolverConfig, SvdOracle, Trace};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest problem the page may request; keeps the tab responsive.
const MAX_ENTRIES: usize = 400_000;
const MAX_POINTS: usize = 400;

#[derive(Serialize)]
struct Curve {
    label: String,
    iters: usize,
    /// `(k, ‖x⁽ᵏ⁾ − x*‖²/‖x*‖²)`, thinned to at most `MAX_POINTS`.
    points: Vec<(usize, f64)>,
}

#[derive(Serialize)]
struct Convergence {
    sigma_min_sq: f64,
    frob_sq: f64,
    curves: Vec<Curve>,
    /// Guaranteed relative error after `k` exact-Γ steps.
    bound: Vec<(usize, f64)>,
}

fn problem(m: usize, n: usize, rank: usize, kappa: f64, seed: u64) -> Result<Problem, String> {
    if m.saturating_mul(n) > MAX_ENTRIES {
        return Err(format!("m·n must stay below {MAX_ENTRIES}"));
    }
    gen_random_problem(&RandomProblemSpec::new(m, n, rank, kappa, seed)).map_err(|e| e.to_string())
}

fn thin(trace: &Trace) -> Vec<(usize, f64)> {
    let ref_sq = trace.x_star_norm_sq.unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let stride = trace.records.len().div_ceil(MAX_POINTS).max(1);
    let last = trace.records.len().saturating_sub(1);
    trace
        .records
        .iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k == last)
        .filter_map(|(_, r)| r.err_sq.map(|e| (r.k, e / ref_sq)))
        .collect()
}

pub fn convergence_data(
    m: usize,
    n: usize,
    rank: usize,
    kappa: f64,
    beta: f64,
    seed: u64,
) -> Result<String, String> {
    let p = problem(m, n, rank, kappa, seed)?;
    let s = SvdOracle::new(&p.a).map_err(|e| e.to_string())?.sigma_min().powi(2);
    let methods = [
        ("GRK".to_string(), SolverConfig::grk()),
        ("iGRK".to_string(), SolverConfig::igrk()),
        (format!("mGRK β={beta}"), SolverConfig::mgrk(beta)),
    ];
    let mut curves = Vec::new();
    let mut longest = 0;
    for (label, cfg) in methods {
        let cfg = SolverConfig {
            max_iters: 200_000,
            ..cfg.with_seed(seed)
        };
        let t = run(&p, &cfg).map_err(|e| e.to_string())?;
        longest = longest.max(t.iterations());
        curves.push(Curve {
            label,
            iters: t.iterations(),
            points: thin(&t),
        });
    }
    let frob = p.a.frobenius_sq();
    let gamma = gamma_leaveout(&p.a).map_err(|e| e.to_string())?;
    let stride = longest.div_ceil(MAX_POINTS).max(1);
    let bound = (1..=longest)
        .step_by(stride)
        .map(|k| grk_bounds(s, frob, gamma, k).map(|(_, improved)| (k, improved)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let out = Convergence {
        sigma_min_sq: s,
        frob_sq: frob,
        curves,
        bound,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SweepPoint {
    beta: f64,
    gamma_sum: f64,
    q: f64,
    feasible: bool,
}

#[derive(Serialize)]
struct Sweep {
    beta_upper: f64,
    points: Vec<SweepPoint>,
}

/// `γ₁ + γ₂` and `q` against `β` for a given `σ²/‖A‖²_F` ratio.
pub fn momentum_sweep_data(alpha: f64, ratio: f64, points: usize) -> Result<String, String> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err("ratio σ²/‖A‖²_F must lie in (0, 1]".into());
    }
    let upper = beta_upper(alpha, ratio, 1.0).map_err(|e| e.to_string())?;
    let points = points.clamp(2, 1000);
    let pts = (0..points)
        .map(|j| {
            let beta = 1.5 * upper * j as f64 / (points - 1) as f64;
            momentum_factors(alpha, beta, ratio, 1.0).map(|r| SweepPoint {
                beta,
                gamma_sum: r.gamma1 + r.gamma2,
                q: r.q,
                feasible: r.feasible,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&Sweep {
        beta_upper: upper,
        points: pts,
    })
    .map_err(|e| e.to_string())
}

/// Classical and improved k-step bound curves of a random matrix.
pub fn bound_curves_data(m: usize, n: usize, rank: usize, kappa: f64, seed: u64, k_max: usize) -> Result<String, String> {
    let p = problem(m, n, rank, kappa, seed)?;
    let s = SvdOracle::new(&p.a).map_err(|e| e.to_string())?.sigma_min().powi(2);
    let report = rate_report(&p.a, s, k_max.min(100_000)).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn convergence(m: usize, n: usize, rank: usize, kappa: f64, beta: f64, seed: u32) -> Result<String, JsValue> {
    convergence_data(m, n, rank, kappa, beta, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn momentum_sweep(alpha: f64, ratio: f64, points: usize) -> Result<String, JsValue> {
    momentum_sweep_data(alpha, ratio, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bound_curves(m: usize, n: usize, rank: usize, kappa: f64, seed: u32, k_max: usize) -> Result<String, JsValue> {
    bound_curves_data(m, n, rank, kappa, seed as u64, k_max).map_err(|e| JsValue::from_str(&e))
}
