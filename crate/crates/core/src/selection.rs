//! Greedy row selection.
//!
//! Given the current residual `r = Ax − b`, a step of the greedy family
//!
//! 1. computes a threshold parameter `Γ_k` ([`active_set_gamma`]),
//! 2. keeps the rows whose normalized squared residual `r_i²/‖a_i‖²` clears
//!    `θ·max_j(r_j²/‖a_j‖²) + (1−θ)·‖r‖²/Γ_k` ([`greedy_set`]),
//! 3. samples one of them ([`sampling_distribution`], [`sample_index`]).
//!
//! With `θ = ½` and `Γ_k = ‖A‖²_F` this is the original GRK criterion. The
//! tighter `Γ_k = Σ_{i: r_i ≠ 0} ‖a_i‖²` gives the improved variant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RowAccessMatrix;

/// How `Γ_k` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    /// Sum of `‖a_i‖²` over rows with nonzero residual.
    Exact,
    /// `‖A‖²_F` at the first step, `‖A‖²_F − ‖a_{i_{k−1}}‖²` afterwards.
    LastRow,
    /// `‖A‖²_F` at every step.
    #[default]
    Frobenius,
}

impl std::str::FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "lastrow" | "last-row" | "last_row" => Ok(Self::LastRow),
            "frobenius" | "frob" => Ok(Self::Frobenius),
            other => Err(Error::InvalidParameter(format!("unknown gamma mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for GammaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::LastRow => "lastrow",
            Self::Frobenius => "frobenius",
        })
    }
}

/// Distribution over the greedy set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbabilityRule {
    /// `p_i ∝ r_i²` restricted to the greedy set.
    #[default]
    ResidualProportional,
    Uniform,
}

impl std::str::FromStr for ProbabilityRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "residual" => Ok(Self::ResidualProportional),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidParameter(format!(
                "unknown probability rule `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for ProbabilityRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ResidualProportional => "residual",
            Self::Uniform => "uniform",
        })
    }
}

/// Outcome of the `Γ_k` computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaOutcome {
    Gamma { gamma: f64, active_count: usize },
    /// Exact mode found no residual above the zero tolerance.
    Converged,
}

/// The greedy index set of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkingSet {
    /// Sorted row indices.
    pub indices: Vec<usize>,
    pub gamma_k: f64,
    /// `|N_k|` when known (exact mode), otherwise the row count.
    pub active_count: usize,
    /// Right-hand side of the greedy inequality.
    pub threshold: f64,
    /// `‖r‖²/Γ_k`, the lower bound every member clears.
    pub mean_bound: f64,
}

/// Computes `Γ_k` and `|N_k|`.
///
/// `tau_res` is the zero test for residual entries in [`GammaMode::Exact`];
/// `last_index` is the row selected at the previous step, if any.
pub fn active_set_gamma(
    a: &RowAccessMatrix,
    r: &[f64],
    mode: GammaMode,
    last_index: Option<usize>,
    tau_res: f64,
) -> Result<GammaOutcome> {
    if r.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "residual length",
            expected: a.nrows(),
            got: r.len(),
        });
    }
    let frob = a.frobenius_sq();
    let out = match mode {
        GammaMode::Exact => {
            let (gamma, count) = r
                .iter()
                .zip(a.row_norms_sq())
                .filter(|(ri, _)| ri.abs() > tau_res)
                .fold((0.0, 0usize), |(g, c), (_, s)| (g + s, c + 1));
            if count == 0 {
                return Ok(GammaOutcome::Converged);
            }
            GammaOutcome::Gamma {
                gamma,
                active_count: count,
            }
        }
        GammaMode::LastRow => GammaOutcome::Gamma {
            gamma: match last_index {
                Some(i) => frob - a.row_norm_sq(i),
                None => frob,
            },
            active_count: a.nrows(),
        },
        GammaMode::Frobenius => GammaOutcome::Gamma {
            gamma: frob,
            active_count: a.nrows(),
        },
    };
    Ok(out)
}

/// Returns `{ i : r_i²/‖a_i‖² ≥ θ·max_j(r_j²/‖a_j‖²) + (1−θ)·‖r‖²/Γ }`.
///
/// Ties are kept. The threshold is clamped to the maximum so an argmax row is
/// always a member even when rounding pushes `‖r‖²/Γ` past the maximum.
pub fn greedy_set(a: &RowAccessMatrix, r: &[f64], gamma: f64, theta: f64) -> Result<WorkingSet> {
    let mut indices = Vec::new();
    let (threshold, mean_bound) = greedy_scan(a, r, gamma, theta, &mut indices)?;
    Ok(WorkingSet {
        indices,
        gamma_k: gamma,
        active_count: a.nrows(),
        threshold,
        mean_bound,
    })
}

/// Fills `indices` with the greedy set and returns `(threshold, ‖r‖²/Γ)`.
pub(crate) fn greedy_scan(
    a: &RowAccessMatrix,
    r: &[f64],
    gamma: f64,
    theta: f64,
    indices: &mut Vec<usize>,
) -> Result<(f64, f64)> {
    if r.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "residual length",
            expected: a.nrows(),
            got: r.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta must lie in [0,1], got {theta}")));
    }
    let norms = a.row_norms_sq();
    let mut max_w = 0.0f64;
    let mut res_sq = 0.0;
    for (ri, s) in r.iter().zip(norms) {
        let r2 = ri * ri;
        res_sq += r2;
        max_w = max_w.max(r2 / s);
    }
    if res_sq == 0.0 {
        return Err(Error::AlreadySolved);
    }
    let mean_bound = res_sq / gamma;
    let threshold = (theta * max_w + (1.0 - theta) * mean_bound).min(max_w);
    indices.clear();
    indices.extend(
        r.iter()
            .zip(norms)
            .enumerate()
            .filter(|(_, (ri, s))| *ri * *ri / *s >= threshold)
            .map(|(i, _)| i),
    );
    Ok((threshold, mean_bound))
}

/// Probabilities over `indices` (in the same order).
pub fn sampling_distribution(r: &[f64], indices: &[usize], rule: ProbabilityRule) -> Vec<f64> {
    let mut probs = Vec::with_capacity(indices.len());
    sampling_distribution_into(r, indices, rule, &mut probs);
    probs
}

pub(crate) fn sampling_distribution_into(
    r: &[f64],
    indices: &[usize],
    rule: ProbabilityRule,
    probs: &mut Vec<f64>,
) {
    probs.clear();
    match rule {
        ProbabilityRule::Uniform => {
            let p = 1.0 / indices.len() as f64;
            probs.resize(indices.len(), p);
        }
        ProbabilityRule::ResidualProportional => {
            let total: f64 = indices.iter().map(|&i| r[i] * r[i]).sum();
            if total > 0.0 {
                probs.extend(indices.iter().map(|&i| r[i] * r[i] / total));
            } else {
                // Every member has a zero residual; fall back to uniform.
                let p = 1.0 / indices.len() as f64;
                probs.resize(indices.len(), p);
            }
        }
    }
}

/// Draws a position in `probs` by inverse-CDF sampling.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if probs.len() == 1 {
        return Ok(0);
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left the total just below u; take the last positive entry.
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1))
}
