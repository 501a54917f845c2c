//! Closed-form convergence constants and pathwise certification.
//!
//! Notation used below: `s = σ_min²(A)`, `F = ‖A‖²_F`, and
//! `γ = max_i (F − ‖a_i‖²)` (the largest leave-one-row-out norm).
//!
//! * Greedy step, no momentum: `‖e⁽ᵏ⁺¹⁾‖² ≤ (1 − s/Γ_k)·‖e⁽ᵏ⁾‖²` on every
//!   step, hence `‖e⁽ᵏ⁾‖² ≤ (1 − s/γ)^{k−1}(1 − s/F)·‖e⁽⁰⁾‖²`.
//! * Heavy-ball momentum: `‖e⁽ᵏ⁺¹⁾‖² ≤ q^k(1 + δ)·‖e⁽⁰⁾‖²` whenever
//!   `γ₁ + γ₂ < 1`.
//!
//! Both hold for every realization of the random row choices, so they are
//! checked against traces directly rather than in expectation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RowAccessMatrix;
use crate::selection::GammaMode;
use crate::solvers::{Trace, Variant};

/// Relative slack (to `‖e⁽⁰⁾‖²`) allowed when certifying traces.
pub const CERTIFY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub sigma_min_sq: f64,
    pub frob_sq: f64,
    /// `γ`
    pub gamma_leaveout: f64,
    /// `1 − ½(F/γ + 1)·s/F`
    pub grk_expectation_factor: f64,
    /// `1 − s/γ`
    pub igrk_factor: f64,
    /// `1 − s/F`
    pub first_step_factor: f64,
    /// Bound on `‖e⁽ᵏ⁾‖²/‖e⁽⁰⁾‖²` for the improved variant, `k = 0..=k_max`.
    pub bound_curve: Vec<f64>,
    /// Same with the classical factor.
    pub grk_curve: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumReport {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub q: f64,
    pub delta: f64,
    /// `γ₁ + γ₂ < 1`
    pub feasible: bool,
    /// Largest admissible momentum for this `α` (only defined for `α ∈ (0,1]`).
    pub beta_upper: Option<f64>,
    pub tau1: f64,
    pub tau2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// Iterations guaranteeing `P(‖e‖² ≤ ε) ≥ 1 − ρ` from the expected decay.
    pub k1: f64,
    /// Iterations guaranteeing `‖e‖² ≤ ε` on every path.
    pub k2: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub err0_sq: f64,
}

/// `γ = max_i (‖A‖²_F − ‖a_i‖²)`
pub fn gamma_leaveout(a: &RowAccessMatrix) -> Result<f64> {
    if a.nrows() < 2 {
        return Err(Error::InvalidParameter(
            "leave-one-out norm needs at least two rows".into(),
        ));
    }
    let min_row = a.row_norms_sq().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(a.frobenius_sq() - min_row)
}

fn check_rate_params(sigma_min_sq: f64, frob_sq: f64, gamma: f64) -> Result<()> {
    if !(sigma_min_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_min^2 must be positive, got {sigma_min_sq}"
        )));
    }
    if !(sigma_min_sq <= gamma) {
        return Err(Error::InvalidParameter(format!(
            "need sigma_min^2 <= gamma, got {sigma_min_sq} > {gamma}"
        )));
    }
    if !(gamma < frob_sq) {
        return Err(Error::InvalidParameter(format!(
            "need gamma < |A|_F^2, got {gamma} >= {frob_sq}"
        )));
    }
    Ok(())
}

/// Returns `(classical, improved)` k-step bounds on `‖e⁽ᵏ⁾‖²/‖e⁽⁰⁾‖²`, `k ≥ 1`:
///
/// * classical: `(1 − ½(F/γ + 1)·s/F)^{k−1}·(1 − s/F)`
/// * improved: `(1 − s/γ)^{k−1}·(1 − s/F)`
pub fn grk_bounds(sigma_min_sq: f64, frob_sq: f64, gamma: f64, k: usize) -> Result<(f64, f64)> {
    check_rate_params(sigma_min_sq, frob_sq, gamma)?;
    if k == 0 {
        return Err(Error::InvalidParameter("bounds start at k = 1".into()));
    }
    let first = 1.0 - sigma_min_sq / frob_sq;
    let classical = 1.0 - 0.5 * (frob_sq / gamma + 1.0) * sigma_min_sq / frob_sq;
    let improved = 1.0 - sigma_min_sq / gamma;
    let p = (k - 1) as i32;
    Ok((classical.powi(p) * first, improved.powi(p) * first))
}

/// Rate constants and bound curves for `A`.
pub fn rate_report(a: &RowAccessMatrix, sigma_min_sq: f64, k_max: usize) -> Result<RateReport> {
    let frob_sq = a.frobenius_sq();
    let gamma = gamma_leaveout(a)?;
    check_rate_params(sigma_min_sq, frob_sq, gamma)?;
    let mut bound_curve = vec![1.0];
    let mut grk_curve = vec![1.0];
    for k in 1..=k_max {
        let (c, i) = grk_bounds(sigma_min_sq, frob_sq, gamma, k)?;
        grk_curve.push(c);
        bound_curve.push(i);
    }
    Ok(RateReport {
        sigma_min_sq,
        frob_sq,
        gamma_leaveout: gamma,
        grk_expectation_factor: 1.0 - 0.5 * (frob_sq / gamma + 1.0) * sigma_min_sq / frob_sq,
        igrk_factor: 1.0 - sigma_min_sq / gamma,
        first_step_factor: 1.0 - sigma_min_sq / frob_sq,
        bound_curve,
        grk_curve,
    })
}

/// Two-term recursion constants for heavy-ball momentum:
///
/// ```text
/// γ₁ = 2β² + 3β + 1 − (3αβ + 2α − α²)·s/F
/// γ₂ = 2β² + β
/// q  = (γ₁ + √(γ₁² + 4γ₂))/2   (q = γ₁ when γ₂ = 0)
/// δ  = q − γ₁
/// ```
///
/// Requires `α ∈ (0,2)` when `β = 0` and `α ∈ (0, 1+β)` when `β > 0`.
pub fn momentum_factors(alpha: f64, beta: f64, sigma_min_sq: f64, frob_sq: f64) -> Result<MomentumReport> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
    }
    let alpha_max = if beta == 0.0 { 2.0 } else { 1.0 + beta };
    if !(alpha > 0.0 && alpha < alpha_max) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, {alpha_max}) for beta = {beta}, got {alpha}"
        )));
    }
    if !(sigma_min_sq > 0.0 && sigma_min_sq <= frob_sq) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < sigma_min^2 <= |A|_F^2, got {sigma_min_sq}, {frob_sq}"
        )));
    }
    let s = sigma_min_sq / frob_sq;
    let gamma1 = 2.0 * beta * beta + 3.0 * beta + 1.0 - (3.0 * alpha * beta + 2.0 * alpha - alpha * alpha) * s;
    let gamma2 = 2.0 * beta * beta + beta;
    let q = if gamma2 > 0.0 {
        0.5 * (gamma1 + (gamma1 * gamma1 + 4.0 * gamma2).sqrt())
    } else {
        gamma1
    };
    let (tau1, tau2) = taus(alpha, s);
    Ok(MomentumReport {
        alpha,
        beta,
        gamma1,
        gamma2,
        q,
        delta: q - gamma1,
        feasible: gamma1 + gamma2 < 1.0,
        beta_upper: (alpha <= 1.0).then(|| beta_bound(tau1, tau2)),
        tau1,
        tau2,
    })
}

fn taus(alpha: f64, s: f64) -> (f64, f64) {
    (4.0 - 3.0 * alpha * s, (2.0 * alpha - alpha * alpha) * s)
}

fn beta_bound(tau1: f64, tau2: f64) -> f64 {
    ((tau1 * tau1 + 16.0 * tau2).sqrt() - tau1) / 8.0
}

/// Supremum of momentum values `β` keeping `γ₁ + γ₂ < 1`, for `α ∈ (0,1]`:
/// `⅛(√(τ₁² + 16τ₂) − τ₁)` with `τ₁ = 4 − 3α·s/F`, `τ₂ = (2α − α²)·s/F`.
pub fn beta_upper(alpha: f64, sigma_min_sq: f64, frob_sq: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1], got {alpha}")));
    }
    if !(sigma_min_sq >= 0.0 && frob_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need sigma_min^2 >= 0 and |A|_F^2 > 0, got {sigma_min_sq}, {frob_sq}"
        )));
    }
    let (tau1, tau2) = taus(alpha, sigma_min_sq / frob_sq);
    Ok(beta_bound(tau1, tau2))
}

/// `K₁ = (F/s)·ln(e₀/(ερ))` and `K₂ = (F/s)·ln(e₀/ε)`.
pub fn iteration_complexity(
    sigma_min_sq: f64,
    frob_sq: f64,
    err0_sq: f64,
    epsilon: f64,
    rho: f64,
) -> Result<ComplexityReport> {
    if !(epsilon > 0.0 && epsilon < err0_sq) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < epsilon < err0, got {epsilon}, {err0_sq}"
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0,1), got {rho}")));
    }
    if !(sigma_min_sq > 0.0 && frob_sq > 0.0) {
        return Err(Error::InvalidParameter("need positive sigma_min^2 and |A|_F^2".into()));
    }
    let c = frob_sq / sigma_min_sq;
    Ok(ComplexityReport {
        k1: c * (err0_sq / (epsilon * rho)).ln(),
        k2: c * (err0_sq / epsilon).ln(),
        epsilon,
        rho,
        err0_sq,
    })
}

/// Result of checking a trace against a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Certification {
    Passed { checked: usize },
    /// First step `k` where `‖e⁽ᵏ⁾‖²` exceeded `bound` (slack included).
    Violated { k: usize, observed: f64, bound: f64 },
}

impl Certification {
    pub fn passed(&self) -> bool {
        matches!(self, Certification::Passed { .. })
    }
}

fn errors(trace: &Trace) -> Result<Vec<f64>> {
    trace
        .records
        .iter()
        .map(|r| {
            r.err_sq
                .ok_or_else(|| Error::NotCertifiable("trace has no error metric (x* unknown)".into()))
        })
        .collect()
}

/// Checks the per-step bound of the trace's method on every step.
///
/// * `β = 0` (greedy): `‖e⁽ᵏ⁺¹⁾‖² ≤ (1 − (2α − α²)·s/Γ_k)·‖e⁽ᵏ⁾‖²`, which is
///   `1 − s/Γ_k` for `α = 1`.
/// * `β > 0`: `‖e⁽ᵏ⁺¹⁾‖² ≤ q^k(1 + δ)·‖e⁽⁰⁾‖²`; the parameters must be
///   feasible.
///
/// Slack is `CERTIFY_SLACK·‖e⁽⁰⁾‖²`.
pub fn certify_trace(trace: &Trace, sigma_min_sq: f64) -> Result<Certification> {
    let cfg = &trace.config;
    if !cfg.variant.is_greedy() {
        return Err(Error::NotCertifiable(format!(
            "{} has no pathwise bound",
            cfg.variant
        )));
    }
    let err = errors(trace)?;
    let Some(&e0) = err.first() else {
        return Ok(Certification::Passed { checked: 0 });
    };
    let slack = CERTIFY_SLACK * e0;

    if cfg.beta == 0.0 {
        if !(cfg.alpha > 0.0 && cfg.alpha < 2.0) {
            return Err(Error::NotCertifiable(format!(
                "step size {} outside (0, 2)",
                cfg.alpha
            )));
        }
        let shrink = 2.0 * cfg.alpha - cfg.alpha * cfg.alpha;
        for (k, rec) in trace.records.iter().enumerate().take(err.len() - 1) {
            let gamma = rec.gamma_k.ok_or_else(|| {
                Error::NotCertifiable(format!("record {k} carries no gamma"))
            })?;
            let bound = (1.0 - shrink * sigma_min_sq / gamma) * err[k] + slack;
            if err[k + 1] > bound {
                return Ok(Certification::Violated {
                    k: k + 1,
                    observed: err[k + 1],
                    bound,
                });
            }
        }
        return Ok(Certification::Passed {
            checked: err.len() - 1,
        });
    }

    let rep = momentum_factors(cfg.alpha, cfg.beta, sigma_min_sq, trace.frob_sq)?;
    if !rep.feasible {
        return Err(Error::NotCertifiable(format!(
            "momentum parameters infeasible (gamma1 + gamma2 = {:.6})",
            rep.gamma1 + rep.gamma2
        )));
    }
    let mut qk = 1.0;
    for k in 0..err.len() - 1 {
        let bound = qk * (1.0 + rep.delta) * e0 + slack;
        if err[k + 1] > bound {
            return Ok(Certification::Violated {
                k: k + 1,
                observed: err[k + 1],
                bound,
            });
        }
        qk *= rep.q;
    }
    Ok(Certification::Passed {
        checked: err.len() - 1,
    })
}

/// Checks the global k-step bound (`k ≥ 1`) of a greedy run with `α = 1`,
/// `β = 0`, `θ = ½`: the improved factor `1 − s/γ` for exact or last-row
/// `Γ_k`, the classical factor for `Γ_k = ‖A‖²_F`.
pub fn certify_global(trace: &Trace, sigma_min_sq: f64, gamma: f64) -> Result<Certification> {
    let cfg = &trace.config;
    if cfg.variant != Variant::Grk && !(cfg.variant == Variant::Mgrk && cfg.beta == 0.0) {
        return Err(Error::NotCertifiable("global bound needs a greedy run without momentum".into()));
    }
    if cfg.alpha != 1.0 || cfg.theta != 0.5 {
        return Err(Error::NotCertifiable("global bound needs alpha = 1 and theta = 1/2".into()));
    }
    let err = errors(trace)?;
    let Some(&e0) = err.first() else {
        return Ok(Certification::Passed { checked: 0 });
    };
    let slack = CERTIFY_SLACK * e0;
    for (k, &ek) in err.iter().enumerate().skip(1) {
        let (classical, improved) = grk_bounds(sigma_min_sq, trace.frob_sq, gamma, k)?;
        let factor = match cfg.gamma_mode {
            GammaMode::Exact | GammaMode::LastRow => improved,
            GammaMode::Frobenius => classical,
        };
        let bound = factor * e0 + slack;
        if ek > bound {
            return Ok(Certification::Violated {
                k,
                observed: ek,
                bound,
            });
        }
    }
    Ok(Certification::Passed {
        checked: err.len() - 1,
    })
}
