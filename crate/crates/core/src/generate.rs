//! Random consistent test problems `A = U·D·Vᵀ`.
//!
//! `U` (m×r) and `V` (n×r) are the thin-QR factors of standard Gaussian
//! matrices and `D = diag(1 + (κ−1)·u)` with `u ~ U(0,1)`, so `A` has rank `r`
//! and every nonzero singular value lies in `[1, κ]`. The right-hand side is
//! `b = A·x_true` for a standard Gaussian `x_true`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Problem, RowAccessMatrix, SvdOracle};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomProblemSpec {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    /// Upper bound on the condition number, `> 1`.
    pub kappa: f64,
    pub seed: u64,
}

impl RandomProblemSpec {
    pub fn new(m: usize, n: usize, rank: usize, kappa: f64, seed: u64) -> Self {
        Self {
            m,
            n,
            rank,
            kappa,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.rank > self.m.min(self.n) {
            return Err(Error::InvalidParameter(format!(
                "rank {} must lie in 1..={}",
                self.rank,
                self.m.min(self.n)
            )));
        }
        if !(self.kappa > 1.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa must exceed 1, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

fn gaussian_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Generates the problem and also returns `x_true` (`b = A·x_true`).
pub fn gen_random_problem_with_truth(spec: &RandomProblemSpec) -> Result<(Problem, Vec<f64>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = gaussian_orthonormal(&mut rng, spec.m, spec.rank);
    let v = gaussian_orthonormal(&mut rng, spec.n, spec.rank);
    let d = DVector::from_fn(spec.rank, |_, _| {
        1.0 + (spec.kappa - 1.0) * rng.random::<f64>()
    });
    let dense = &u * DMatrix::from_diagonal(&d) * v.transpose();
    let x_true: Vec<f64> = (0..spec.n).map(|_| rng.sample(StandardNormal)).collect();

    let values: Vec<f64> = (0..spec.m)
        .flat_map(|i| dense.row(i).iter().copied().collect::<Vec<_>>())
        .collect();
    let a = RowAccessMatrix::from_row_major(spec.m, spec.n, values)?;
    let b = a.mul_vec(&x_true);
    let x_star = SvdOracle::new(&a)?.pseudo_solve(&b);
    let problem = Problem::new(a, b, Some(x_star))?;
    Ok((problem, x_true))
}

/// Random consistent problem with `x*` set to the min-norm solution.
pub fn gen_random_problem(spec: &RandomProblemSpec) -> Result<Problem> {
    gen_random_problem_with_truth(spec).map(|(p, _)| p)
}
