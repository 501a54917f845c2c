//! Kaczmarz-type iterative drivers.
//!
//! All variants share one loop: pick a row `i_k`, then
//!
//! ```text
//! x⁽ᵏ⁺¹⁾ = x⁽ᵏ⁾ − α·(⟨a_i, x⁽ᵏ⁾⟩ − b_i)/‖a_i‖²·a_i + β·(x⁽ᵏ⁾ − x⁽ᵏ⁻¹⁾)
//! ```
//!
//! The variants differ only in how `i_k` is chosen: cyclically, with
//! probability `‖a_i‖²/‖A‖²_F`, or from the greedy set of
//! [`crate::selection`]. The residual `r = Ax − b` is kept up to date with
//! rank-one corrections and recomputed from scratch every
//! [`SolverConfig::refresh_interval`] steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm_inf, norm_sq, residual, Problem, Row, RowAccessMatrix};
use crate::selection::{
    active_set_gamma, greedy_scan, sample_index, sampling_distribution_into, GammaMode,
    GammaOutcome, ProbabilityRule,
};

/// Row selection strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `i_k = k mod m`
    Cyclic,
    /// `P(i_k = i) = ‖a_i‖²/‖A‖²_F`
    Rk,
    /// Greedy randomized Kaczmarz, no momentum.
    Grk,
    /// Greedy randomized Kaczmarz with heavy-ball momentum.
    Mgrk,
}

impl Variant {
    pub fn is_greedy(self) -> bool {
        matches!(self, Variant::Grk | Variant::Mgrk)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cyclic" => Ok(Self::Cyclic),
            "rk" => Ok(Self::Rk),
            "grk" | "igrk" => Ok(Self::Grk),
            "mgrk" => Ok(Self::Mgrk),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cyclic => "cyclic",
            Self::Rk => "rk",
            Self::Grk => "grk",
            Self::Mgrk => "mgrk",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Step size, `α > 0`.
    pub alpha: f64,
    /// Momentum, `β ≥ 0`. Must be zero for [`Variant::Grk`].
    pub beta: f64,
    /// Greedy relaxation in `[0, 1]`; `½` is the classical criterion.
    pub theta: f64,
    pub gamma_mode: GammaMode,
    pub prob_rule: ProbabilityRule,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once `‖x − x*‖²/‖x*‖² ≤ rse_tol` (needs `x*`).
    pub rse_tol: Option<f64>,
    /// Stop once `‖Ax − b‖²/‖b‖² ≤ residual_tol`.
    pub residual_tol: Option<f64>,
    /// Residual entries with `|r_i| ≤ zero_residual_tol·max(1, ‖b‖_∞)` count
    /// as zero when computing the exact `Γ_k`.
    pub zero_residual_tol: f64,
    /// Recompute `r = Ax − b` from scratch every this many steps.
    pub refresh_interval: usize,
    /// Keep a copy of every iterate in the trace.
    pub record_iterates: bool,
    /// Memory budget for caching the columns `A a_i` of `AAᵀ`.
    pub gram_cache_bytes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Grk,
            alpha: 1.0,
            beta: 0.0,
            theta: 0.5,
            gamma_mode: GammaMode::Frobenius,
            prob_rule: ProbabilityRule::ResidualProportional,
            seed: 0,
            max_iters: 1_000_000,
            rse_tol: Some(1e-12),
            residual_tol: None,
            zero_residual_tol: 1e-14,
            refresh_interval: 1000,
            record_iterates: false,
            gram_cache_bytes: 256 << 20,
        }
    }
}

impl SolverConfig {
    /// Original GRK: `θ = ½`, `Γ_k = ‖A‖²_F`.
    pub fn grk() -> Self {
        Self::default()
    }

    /// Improved GRK with the exact `Γ_k`.
    pub fn igrk() -> Self {
        Self {
            gamma_mode: GammaMode::Exact,
            ..Self::default()
        }
    }

    /// GRK with heavy-ball momentum `β`, `α = 1`, `Γ_k = ‖A‖²_F`.
    pub fn mgrk(beta: f64) -> Self {
        Self {
            variant: Variant::Mgrk,
            beta,
            ..Self::default()
        }
    }

    pub fn rk() -> Self {
        Self {
            variant: Variant::Rk,
            ..Self::default()
        }
    }

    pub fn cyclic() -> Self {
        Self {
            variant: Variant::Cyclic,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0,1], got {}", self.theta));
        }
        if self.variant == Variant::Grk && self.beta != 0.0 {
            return bad("grk takes no momentum; use mgrk for beta > 0".into());
        }
        if self.refresh_interval == 0 {
            return bad("refresh interval must be positive".into());
        }
        for (name, tol) in [("rse_tol", self.rse_tol), ("residual_tol", self.residual_tol)] {
            if let Some(t) = tol {
                if !(t >= 0.0) {
                    return bad(format!("{name} must be nonnegative, got {t}"));
                }
            }
        }
        Ok(())
    }
}

/// Iterate state carried between steps.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub k: usize,
    /// `Ax − b`, maintained incrementally.
    pub r: Vec<f64>,
    pub last_index: Option<usize>,
}

impl SolverState {
    /// `x⁽⁰⁾ = x⁽⁻¹⁾ = 0`
    pub fn zero(problem: &Problem) -> Self {
        let n = problem.a.ncols();
        Self {
            x: vec![0.0; n],
            x_prev: vec![0.0; n],
            k: 0,
            r: problem.b.iter().map(|v| -v).collect(),
            last_index: None,
        }
    }
}

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    RseReached,
    ResidualReached,
    /// The residual vanished (to the zero tolerance).
    ExactSolution,
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RseReached => "rse_reached",
            Self::ResidualReached => "residual_reached",
            Self::ExactSolution => "exact_solution",
            Self::MaxIters => "max_iters",
        })
    }
}

/// State of iterate `k` plus the selection made from it (absent on the last
/// record).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub selected: Option<usize>,
    pub set_size: Option<usize>,
    pub gamma_k: Option<f64>,
    /// `‖x⁽ᵏ⁾ − x*‖²`
    pub err_sq: Option<f64>,
    /// `‖Ax⁽ᵏ⁾ − b‖²`
    pub res_sq: f64,
    pub elapsed_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SolverConfig,
    pub frob_sq: f64,
    pub x_star_norm_sq: Option<f64>,
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
    pub final_x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl Trace {
    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Selected rows, in order.
    pub fn selections(&self) -> Vec<usize> {
        self.records.iter().filter_map(|r| r.selected).collect()
    }

    /// Relative solution error of the last iterate.
    pub fn final_rse(&self) -> Option<f64> {
        let err = self.records.last()?.err_sq?;
        let ref_sq = self.x_star_norm_sq?;
        Some(if ref_sq > 0.0 { err / ref_sq } else { err })
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.elapsed_ns as f64 * 1e-9)
    }
}

/// `x − α·(⟨a_i, x⟩ − b_i)/‖a_i‖²·a_i`
pub fn kaczmarz_project(x: &[f64], row: Row<'_>, row_norm_sq: f64, b_i: f64, alpha: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    let coef = alpha * (row.dot(x) - b_i) / row_norm_sq;
    row.axpy(-coef, &mut out);
    out
}

/// Projection step plus the heavy-ball term `β·(x − x_prev)`.
pub fn momentum_step(
    state: &SolverState,
    row: Row<'_>,
    row_norm_sq: f64,
    b_i: f64,
    alpha: f64,
    beta: f64,
) -> Vec<f64> {
    let mut out = kaczmarz_project(&state.x, row, row_norm_sq, b_i, alpha);
    if beta != 0.0 {
        for ((o, x), xp) in out.iter_mut().zip(&state.x).zip(&state.x_prev) {
            *o += beta * (x - xp);
        }
    }
    out
}

/// Rank-one residual correction after `x ← x − coef·a_i + β·(x − x_prev)`:
/// `r ← r − coef·(A a_i) + β·(r − r_prev)`. When `r_prev` is given it
/// receives the old `r`.
pub fn residual_update(
    r: &mut [f64],
    r_prev: Option<&mut [f64]>,
    gram_column: &[f64],
    coef: f64,
    beta: f64,
) {
    match r_prev {
        Some(rp) => {
            for ((ri, rpi), g) in r.iter_mut().zip(rp.iter_mut()).zip(gram_column) {
                let old = *ri;
                *ri = old - coef * g + beta * (old - *rpi);
                *rpi = old;
            }
        }
        None => {
            for (ri, g) in r.iter_mut().zip(gram_column) {
                *ri -= coef * g;
            }
        }
    }
}

/// Lazily filled columns of `AAᵀ`, bounded by a byte budget.
struct GramCache {
    columns: Vec<Option<Box<[f64]>>>,
    enabled: bool,
    scratch: Vec<f64>,
}

impl GramCache {
    fn new(m: usize, budget_bytes: usize) -> Self {
        let enabled = m.saturating_mul(m).saturating_mul(8) <= budget_bytes;
        Self {
            columns: if enabled { vec![None; m] } else { Vec::new() },
            enabled,
            scratch: vec![0.0; m],
        }
    }

    fn column(&mut self, a: &RowAccessMatrix, i: usize) -> &[f64] {
        if !self.enabled {
            a.gram_column_into(i, &mut self.scratch);
            return &self.scratch;
        }
        self.columns[i].get_or_insert_with(|| {
            let mut col = vec![0.0; a.nrows()];
            a.gram_column_into(i, &mut col);
            col.into_boxed_slice()
        })
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Self {
        Self(std::time::Instant::now())
    }

    fn elapsed_ns(&self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}

// No monotonic clock on bare wasm32; timings read as zero there.
#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Self {
        Self
    }

    fn elapsed_ns(&self) -> u64 {
        0
    }
}

/// Runs one solve from `x⁽⁰⁾ = 0` and returns the full trace.
///
/// Identical `(problem, config)` pairs produce identical traces apart from
/// wall-clock fields.
pub fn run(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    config.validate()?;
    let a = &problem.a;
    let b = &problem.b;
    let m = a.nrows();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: m,
            got: b.len(),
        });
    }
    let x_star = problem.x_star.as_deref();
    let rse_rule = config.rse_tol.filter(|_| x_star.is_some());
    if rse_rule.is_none() && config.residual_tol.is_none() {
        return Err(Error::NoStoppingRule);
    }

    let x_star_norm_sq = x_star.map(norm_sq);
    let b_norm_sq = norm_sq(b);
    let tau_res = config.zero_residual_tol * norm_inf(b).max(1.0);
    let momentum = config.beta != 0.0;

    let mut state = SolverState::zero(problem);
    let mut r_prev = if momentum { state.r.clone() } else { Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rk_probs: Vec<f64> = if config.variant == Variant::Rk {
        a.row_norms_sq().iter().map(|s| s / a.frobenius_sq()).collect()
    } else {
        Vec::new()
    };
    let mut cache = GramCache::new(m, config.gram_cache_bytes);
    let mut set = Vec::with_capacity(m);
    let mut probs = Vec::with_capacity(m);
    let mut records = Vec::new();
    let mut iterates = config.record_iterates.then(Vec::new);
    let clock = Clock::start();

    let termination = loop {
        let k = state.k;
        let err_sq = x_star.map(|xs| dist_sq(&state.x, xs));
        let res_sq = norm_sq(&state.r);
        let mut record = TraceRecord {
            k,
            selected: None,
            set_size: None,
            gamma_k: None,
            err_sq,
            res_sq,
            elapsed_ns: clock.elapsed_ns(),
        };
        if let Some(it) = iterates.as_mut() {
            it.push(state.x.clone());
        }

        let stop = if let (Some(tol), Some(e), Some(ref_sq)) = (rse_rule, err_sq, x_star_norm_sq) {
            let rse = if ref_sq > 0.0 { e / ref_sq } else { e };
            (rse <= tol).then_some(Termination::RseReached)
        } else {
            None
        }
        .or_else(|| {
            let tol = config.residual_tol?;
            let rel = if b_norm_sq > 0.0 { res_sq / b_norm_sq } else { res_sq };
            (rel <= tol).then_some(Termination::ResidualReached)
        })
        .or_else(|| (res_sq == 0.0).then_some(Termination::ExactSolution))
        .or_else(|| (k >= config.max_iters).then_some(Termination::MaxIters));
        if let Some(t) = stop {
            records.push(record);
            break t;
        }

        let i = match config.variant {
            Variant::Cyclic => {
                record.set_size = Some(1);
                k % m
            }
            Variant::Rk => {
                record.set_size = Some(m);
                sample_index(&rk_probs, &mut rng)?
            }
            Variant::Grk | Variant::Mgrk => {
                let gamma = match active_set_gamma(
                    a,
                    &state.r,
                    config.gamma_mode,
                    state.last_index,
                    tau_res,
                )? {
                    GammaOutcome::Gamma { gamma, .. } => gamma,
                    GammaOutcome::Converged => {
                        records.push(record);
                        break Termination::ExactSolution;
                    }
                };
                greedy_scan(a, &state.r, gamma, config.theta, &mut set)?;
                sampling_distribution_into(&state.r, &set, config.prob_rule, &mut probs);
                record.set_size = Some(set.len());
                record.gamma_k = Some(gamma);
                set[sample_index(&probs, &mut rng)?]
            }
        };
        record.selected = Some(i);
        records.push(record);

        let row = a.row(i);
        let coef = config.alpha * (row.dot(&state.x) - b[i]) / a.row_norm_sq(i);
        if momentum {
            for (x, xp) in state.x.iter_mut().zip(state.x_prev.iter_mut()) {
                let old = *x;
                *x = old + config.beta * (old - *xp);
                *xp = old;
            }
        }
        row.axpy(-coef, &mut state.x);

        state.k += 1;
        if state.k % config.refresh_interval == 0 {
            state.r = residual(a, &state.x, b)?;
            if momentum {
                r_prev = residual(a, &state.x_prev, b)?;
            }
        } else {
            let g = cache.column(a, i);
            let rp = momentum.then_some(r_prev.as_mut_slice());
            residual_update(&mut state.r, rp, g, coef, config.beta);
            // The selected entry is cheap to get exactly; keep it free of drift.
            state.r[i] = row.dot(&state.x) - b[i];
        }
        state.last_index = Some(i);
    };

    Ok(Trace {
        config: config.clone(),
        frob_sq: a.frobenius_sq(),
        x_star_norm_sq,
        records,
        termination,
        final_x: state.x,
        iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_norm_solution;
    use approx::assert_relative_eq;

    fn hand_problem() -> Problem {
        let a = RowAccessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        Problem::new(a, vec![1.0, 4.0], Some(vec![1.0, 2.0])).unwrap()
    }

    fn small_random(m: usize, n: usize, seed: u64) -> Problem {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let a = RowAccessMatrix::from_rows(&rows).unwrap();
        let xt: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = a.mul_vec(&xt);
        let xs = min_norm_solution(&a, &b).unwrap();
        Problem::new(a, b, Some(xs)).unwrap()
    }

    #[test]
    fn project_examples() {
        let a = RowAccessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(kaczmarz_project(&[0.0, 0.0], a.row(1), 4.0, 4.0, 1.0), vec![0.0, 2.0]);
        assert_eq!(kaczmarz_project(&[3.0, 2.0], a.row(1), 4.0, 4.0, 1.0), vec![3.0, 2.0]);
        assert_eq!(kaczmarz_project(&[0.0, 0.0], a.row(0), 1.0, 1.0, 0.5), vec![0.5, 0.0]);
    }

    #[test]
    fn momentum_examples() {
        let a = RowAccessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let st = SolverState {
            x: vec![0.0, 2.0],
            x_prev: vec![0.0, 0.0],
            k: 1,
            r: vec![],
            last_index: None,
        };
        let out = momentum_step(&st, a.row(0), 1.0, 1.0, 1.0, 0.3);
        assert_relative_eq!(out[0], 1.0);
        assert_relative_eq!(out[1], 2.6, epsilon = 1e-15);
        assert_eq!(
            momentum_step(&st, a.row(0), 1.0, 1.0, 1.0, 0.0),
            kaczmarz_project(&st.x, a.row(0), 1.0, 1.0, 1.0)
        );
        let first = SolverState {
            x_prev: st.x.clone(),
            ..st.clone()
        };
        assert_eq!(
            momentum_step(&first, a.row(0), 1.0, 1.0, 1.0, 0.7),
            kaczmarz_project(&st.x, a.row(0), 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn hand_trace() {
        let p = hand_problem();
        let cfg = SolverConfig::igrk();
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.iterations(), 2);
        assert_eq!(t.selections(), vec![1, 0]);
        assert_eq!(t.final_x, vec![1.0, 2.0]);
        assert_eq!(t.records[0].gamma_k, Some(5.0));
        assert_eq!(t.records[1].gamma_k, Some(1.0));
        assert_eq!(t.records[0].set_size, Some(1));
        assert_eq!(t.records[1].set_size, Some(1));
        assert_eq!(t.records[0].err_sq, Some(5.0));
        assert_eq!(t.records[1].err_sq, Some(1.0));
        assert_eq!(t.records[2].err_sq, Some(0.0));
    }

    #[test]
    fn zero_rhs_stops_immediately() {
        let a = RowAccessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let p = Problem::new(a, vec![0.0, 0.0], Some(vec![0.0, 0.0])).unwrap();
        for cfg in [SolverConfig::cyclic(), SolverConfig::rk(), SolverConfig::grk(), SolverConfig::mgrk(0.3)] {
            let t = run(&p, &cfg).unwrap();
            assert_eq!(t.iterations(), 0);
            assert_eq!(t.records.len(), 1);
        }
    }

    #[test]
    fn mgrk_without_momentum_matches_grk() {
        let p = small_random(40, 8, 3);
        let grk = run(&p, &SolverConfig::grk().with_seed(11)).unwrap();
        let mgrk = run(&p, &SolverConfig::mgrk(0.0).with_seed(11)).unwrap();
        assert_eq!(grk.selections(), mgrk.selections());
        assert_eq!(grk.final_x, mgrk.final_x);
        let strip = |t: &Trace| {
            t.records
                .iter()
                .map(|r| (r.k, r.selected, r.set_size, r.gamma_k, r.err_sq, r.res_sq))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&grk), strip(&mgrk));
    }

    #[test]
    fn seeds_are_deterministic() {
        let p = small_random(30, 6, 5);
        for cfg in [SolverConfig::rk(), SolverConfig::grk(), SolverConfig::mgrk(0.2)] {
            let a = run(&p, &cfg.clone().with_seed(7)).unwrap();
            let b = run(&p, &cfg.with_seed(7)).unwrap();
            assert_eq!(a.selections(), b.selections());
            assert_eq!(a.final_x, b.final_x);
        }
    }

    #[test]
    fn all_variants_converge() {
        let p = small_random(30, 6, 8);
        for cfg in [
            SolverConfig::cyclic(),
            SolverConfig::rk(),
            SolverConfig::grk(),
            SolverConfig::igrk(),
            SolverConfig::mgrk(0.3),
        ] {
            let t = run(&p, &cfg).unwrap();
            assert_eq!(t.termination, Termination::RseReached, "{:?}", cfg.variant);
            assert!(t.final_rse().unwrap() <= 1e-12);
        }
    }

    #[test]
    fn projection_zeroes_selected_residual() {
        let p = small_random(25, 5, 21);
        let mut cfg = SolverConfig::grk();
        cfg.max_iters = 1;
        let t = run(&p, &cfg).unwrap();
        let i = t.records[0].selected.unwrap();
        let r = residual(&p.a, &t.final_x, &p.b).unwrap();
        assert!(r[i].abs() <= 1e-12 * norm_inf(&p.b));
    }

    #[test]
    fn incremental_residual_tracks_direct_recomputation() {
        for beta in [0.0, 0.3] {
            let p = small_random(60, 10, 33);
            let mut cfg = if beta == 0.0 { SolverConfig::grk() } else { SolverConfig::mgrk(beta) };
            cfg.max_iters = 500;
            cfg.rse_tol = Some(0.0);
            cfg.refresh_interval = usize::MAX;
            let t = run(&p, &cfg).unwrap();
            assert_eq!(t.iterations(), 500);
            let last = t.records.last().unwrap();
            let direct = norm_sq(&residual(&p.a, &t.final_x, &p.b).unwrap());
            let incremental = last.res_sq;
            let scale = norm_sq(&p.b);
            assert!(
                (direct - incremental).abs() <= 1e-10 * scale,
                "beta {beta}: {direct} vs {incremental}"
            );
        }
    }

    #[test]
    fn rank_one_update_matches_dense_recomputation() {
        let p = small_random(3, 3, 4);
        let x = vec![0.3, -0.2, 0.9];
        let mut r = residual(&p.a, &x, &p.b).unwrap();
        let i = 1;
        let coef = r[i] / p.a.row_norm_sq(i);
        let mut g = vec![0.0; 3];
        p.a.gram_column_into(i, &mut g);
        residual_update(&mut r, None, &g, coef, 0.0);
        let x_new = kaczmarz_project(&x, p.a.row(i), p.a.row_norm_sq(i), p.b[i], 1.0);
        let direct = residual(&p.a, &x_new, &p.b).unwrap();
        for (a, b) in r.iter().zip(&direct) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        assert!(r[i].abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        let p = hand_problem();
        let mut cfg = SolverConfig::grk();
        cfg.beta = 0.1;
        assert!(matches!(run(&p, &cfg), Err(Error::InvalidParameter(_))));
        let mut cfg = SolverConfig::mgrk(0.1);
        cfg.alpha = 0.0;
        assert!(run(&p, &cfg).is_err());
        let mut cfg = SolverConfig::mgrk(0.1);
        cfg.theta = 1.5;
        assert!(run(&p, &cfg).is_err());
        let mut cfg = SolverConfig::mgrk(-0.1);
        cfg.theta = 0.5;
        assert!(run(&p, &cfg).is_err());
    }

    #[test]
    fn missing_solution_needs_residual_rule() {
        let a = RowAccessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let p = Problem::new(a, vec![1.0, 4.0], None).unwrap();
        assert!(matches!(run(&p, &SolverConfig::grk()), Err(Error::NoStoppingRule)));
        let cfg = SolverConfig {
            residual_tol: Some(1e-20),
            ..SolverConfig::grk()
        };
        let t = run(&p, &cfg).unwrap();
        assert!(matches!(
            t.termination,
            Termination::ResidualReached | Termination::ExactSolution
        ));
        assert_eq!(t.records[0].err_sq, None);
    }

    #[test]
    fn max_iters_is_reported() {
        let p = small_random(50, 10, 2);
        let cfg = SolverConfig {
            max_iters: 5,
            ..SolverConfig::grk()
        };
        let t = run(&p, &cfg).unwrap();
        assert_eq!(t.termination, Termination::MaxIters);
        assert_eq!(t.records.len(), 6);
    }
}
