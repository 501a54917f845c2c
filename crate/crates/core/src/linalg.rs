//! Row-access matrices, residuals and the dense SVD oracle.
//!
//! Every Kaczmarz-type step touches one row `a_i` and divides by `‖a_i‖²`, so
//! [`RowAccessMatrix`] caches the squared row norms at construction and hands
//! out cheap [`Row`] views. The SVD oracle is only used for analysis and
//! tests: it supplies `σ_min(A)`, the min-norm solution `A†b` and the
//! projector onto `Range(Aᵀ)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the `frobenius_sq == Σ row_norms_sq` invariant.
const FROBENIUS_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Row-major values, `m * n` entries.
    Dense(Vec<f64>),
    Csr(Csr),
}

#[derive(Clone, Debug, PartialEq)]
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    // Transposed copy, used to form `A a_i` without touching every row.
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_values: Vec<f64>,
}

/// Dense or CSR matrix with per-row access and cached squared row norms.
///
/// Construction rejects zero rows. The matrix is immutable afterwards and can
/// be shared freely between concurrent solver runs.
#[derive(Clone, Debug, PartialEq)]
pub struct RowAccessMatrix {
    nrows: usize,
    ncols: usize,
    storage: Storage,
    row_norms_sq: Vec<f64>,
    frobenius_sq: f64,
}

/// Borrowed view of a single row.
#[derive(Clone, Copy, Debug)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse {
        indices: &'a [usize],
        values: &'a [f64],
    },
}

impl<'a> Row<'a> {
    /// `⟨a_i, x⟩`
    pub fn dot(&self, x: &[f64]) -> f64 {
        match *self {
            Row::Dense(v) => dot(v, x),
            Row::Sparse { indices, values } => indices
                .iter()
                .zip(values)
                .map(|(&j, &v)| v * x[j])
                .sum(),
        }
    }

    /// `y += alpha * a_i`
    pub fn axpy(&self, alpha: f64, y: &mut [f64]) {
        match *self {
            Row::Dense(v) => {
                for (yj, &vj) in y.iter_mut().zip(v) {
                    *yj += alpha * vj;
                }
            }
            Row::Sparse { indices, values } => {
                for (&j, &v) in indices.iter().zip(values) {
                    y[j] += alpha * v;
                }
            }
        }
    }

    /// Iterates over stored `(column, value)` pairs.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + 'a> {
        match *self {
            Row::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Row::Sparse { indices, values } => {
                Box::new(indices.iter().copied().zip(values.iter().copied()))
            }
        }
    }
}

impl RowAccessMatrix {
    /// Builds a dense matrix from row-major values.
    pub fn from_row_major(nrows: usize, ncols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                what: "dense value count",
                expected: nrows * ncols,
                got: values.len(),
            });
        }
        let row_norms_sq = if ncols == 0 {
            vec![0.0; nrows]
        } else {
            values.chunks_exact(ncols).map(|r| dot(r, r)).collect()
        };
        Self::finish(nrows, ncols, Storage::Dense(values), row_norms_sq)
    }

    /// Builds a dense matrix from a list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: ncols,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_row_major(nrows, ncols, values)
    }

    /// Builds a CSR matrix. Column indices must be strictly increasing within
    /// each row and `indptr` must be nondecreasing.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 {
            return Err(Error::DimensionMismatch {
                what: "row pointer length",
                expected: nrows + 1,
                got: indptr.len(),
            });
        }
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "value count",
                expected: indices.len(),
                got: values.len(),
            });
        }
        if indptr[0] != 0 || indptr[nrows] != indices.len() {
            return Err(Error::MalformedSparse(
                "row pointers must start at 0 and end at nnz".into(),
            ));
        }
        let mut row_norms_sq = Vec::with_capacity(nrows);
        for i in 0..nrows {
            let (start, end) = (indptr[i], indptr[i + 1]);
            if start > end {
                return Err(Error::MalformedSparse(format!(
                    "row pointers decrease at row {i}"
                )));
            }
            let cols = &indices[start..end];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::MalformedSparse(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if let Some(&j) = cols.last() {
                if j >= ncols {
                    return Err(Error::MalformedSparse(format!(
                        "column index {j} out of range in row {i}"
                    )));
                }
            }
            row_norms_sq.push(values[start..end].iter().map(|v| v * v).sum());
        }

        let mut col_count = vec![0usize; ncols + 1];
        for &j in &indices {
            col_count[j + 1] += 1;
        }
        for j in 0..ncols {
            col_count[j + 1] += col_count[j];
        }
        let col_ptr = col_count.clone();
        let mut fill = col_count;
        let mut col_rows = vec![0usize; indices.len()];
        let mut col_values = vec![0.0; indices.len()];
        for i in 0..nrows {
            for p in indptr[i]..indptr[i + 1] {
                let j = indices[p];
                col_rows[fill[j]] = i;
                col_values[fill[j]] = values[p];
                fill[j] += 1;
            }
        }

        let csr = Csr {
            indptr,
            indices,
            values,
            col_ptr,
            col_rows,
            col_values,
        };
        Self::finish(nrows, ncols, Storage::Csr(csr), row_norms_sq)
    }

    /// Builds a CSR matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; entries may come in any order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, _) in &sorted {
            if i >= nrows || j >= ncols {
                return Err(Error::MalformedSparse(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self::from_csr(nrows, ncols, indptr, indices, values)
    }

    fn finish(
        nrows: usize,
        ncols: usize,
        storage: Storage,
        row_norms_sq: Vec<f64>,
    ) -> Result<Self> {
        if let Some(row) = row_norms_sq.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::ZeroRow { row });
        }
        let frobenius_sq: f64 = row_norms_sq.iter().sum();
        Ok(Self {
            nrows,
            ncols,
            storage,
            row_norms_sq,
            frobenius_sq,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr(_))
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Csr(c) => c.values.len(),
        }
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(v) => Row::Dense(&v[i * self.ncols..(i + 1) * self.ncols]),
            Storage::Csr(c) => {
                let (s, e) = (c.indptr[i], c.indptr[i + 1]);
                Row::Sparse {
                    indices: &c.indices[s..e],
                    values: &c.values[s..e],
                }
            }
        }
    }

    /// `‖a_i‖²`
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row_norms_sq[i]
    }

    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    /// `‖A‖²_F`
    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    /// Checks the cached Frobenius norm against a fresh sum of row norms.
    pub fn frobenius_consistent(&self) -> bool {
        let fresh: f64 = self.row_norms_sq.iter().sum();
        (fresh - self.frobenius_sq).abs() <= FROBENIUS_REL_TOL * self.frobenius_sq.max(1.0)
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row(i).dot(x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Writes `A a_i` (the `i`-th column of `A Aᵀ`) into `out`.
    pub fn gram_column_into(&self, i: usize, out: &mut [f64]) {
        match &self.storage {
            Storage::Dense(v) => {
                let n = self.ncols;
                let ai = &v[i * n..(i + 1) * n];
                for (o, aj) in out.iter_mut().zip(v.chunks_exact(n)) {
                    *o = dot(ai, aj);
                }
            }
            Storage::Csr(c) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for p in c.indptr[i]..c.indptr[i + 1] {
                    let (col, v) = (c.indices[p], c.values[p]);
                    for q in c.col_ptr[col]..c.col_ptr[col + 1] {
                        out[c.col_rows[q]] += v * c.col_values[q];
                    }
                }
            }
        }
    }

    /// Iterates over stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).entries().map(move |(j, v)| (i, j, v)))
    }

    /// Returns `c·A`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        match &self.storage {
            Storage::Dense(v) => {
                Self::from_row_major(self.nrows, self.ncols, v.iter().map(|x| c * x).collect())
            }
            Storage::Csr(s) => Self::from_csr(
                self.nrows,
                self.ncols,
                s.indptr.clone(),
                s.indices.clone(),
                s.values.iter().map(|x| c * x).collect(),
            ),
        }
    }

    /// Same logical matrix in CSR storage.
    pub fn to_csr(&self) -> Result<Self> {
        let trips: Vec<_> = self.triplets().filter(|t| t.2 != 0.0).collect();
        Self::from_triplets(self.nrows, self.ncols, &trips)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }
}

/// A consistent linear system `Ax = b` with an optional min-norm solution
/// `x* = A†b` (the limit point for `x⁽⁰⁾ = 0`).
#[derive(Clone, Debug)]
pub struct Problem {
    pub a: RowAccessMatrix,
    pub b: Vec<f64>,
    pub x_star: Option<Vec<f64>>,
}

impl Problem {
    /// Validates dimensions and, when `x_star` is given, consistency
    /// `‖A x* − b‖ ≤ 1e-8·max(1, ‖b‖)`.
    pub fn new(a: RowAccessMatrix, b: Vec<f64>, x_star: Option<Vec<f64>>) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                what: "right-hand side length",
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if let Some(xs) = &x_star {
            if xs.len() != a.ncols() {
                return Err(Error::DimensionMismatch {
                    what: "solution length",
                    expected: a.ncols(),
                    got: xs.len(),
                });
            }
            let r = residual(&a, xs, &b)?;
            let res = norm(&r);
            let tol = 1e-8 * norm(&b).max(1.0);
            if res > tol {
                return Err(Error::Inconsistent {
                    residual: res,
                    tolerance: tol,
                });
            }
        }
        Ok(Self { a, b, x_star })
    }

    /// Builds the problem and fills `x*` with the min-norm solution from the
    /// SVD oracle.
    pub fn with_min_norm_solution(a: RowAccessMatrix, b: Vec<f64>) -> Result<Self> {
        let xs = min_norm_solution(&a, &b)?;
        Self::new(a, b, Some(xs))
    }
}

/// `r_i = ⟨a_i, x⟩ − b_i`
pub fn residual(a: &RowAccessMatrix, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            what: "iterate length",
            expected: a.ncols(),
            got: x.len(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    Ok(r)
}

/// Thin SVD of a desk-scale matrix, truncated at the numerical rank
/// `τ = max(m, n)·σ_max·ε`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvdOracle {
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub rank_cutoff: f64,
    // Left singular vectors, m × rank.
    u: Vec<Vec<f64>>,
    // Right singular vectors, n × rank, stored as rank columns of length n.
    v: Vec<Vec<f64>>,
}

impl SvdOracle {
    pub fn new(a: &RowAccessMatrix) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        let dense = a.to_dense();
        // Work on the tall orientation; A = QR first so the Jacobi sweeps
        // run on a square factor.
        let tall = m >= n;
        let g = if tall { dense } else { dense.transpose() };
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let (sigma, ur, v_cols) = one_sided_jacobi(r);
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
        let singular_values: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
        let sigma_max = singular_values.first().copied().unwrap_or(0.0);
        if !(sigma_max > 0.0) {
            return Err(Error::ZeroMatrix);
        }
        let rank_cutoff = m.max(n) as f64 * sigma_max * f64::EPSILON;
        let rank = singular_values.iter().filter(|&&s| s > rank_cutoff).count();
        // Left vectors of the tall matrix are Q·u_R.
        let left: Vec<Vec<f64>> = order[..rank]
            .iter()
            .map(|&k| (&q * nalgebra::DVector::from_column_slice(&ur[k])).iter().copied().collect())
            .collect();
        let right: Vec<Vec<f64>> = order[..rank].iter().map(|&k| v_cols[k].clone()).collect();
        let (u, v) = if tall { (left, right) } else { (right, left) };
        Ok(Self {
            singular_values,
            rank,
            rank_cutoff,
            u,
            v,
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest singular value above the rank cutoff.
    pub fn sigma_min(&self) -> f64 {
        self.singular_values[self.rank - 1]
    }

    /// `A†b`
    pub fn pseudo_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.v.first().map_or(0, Vec::len);
        let mut x = vec![0.0; n];
        for k in 0..self.rank {
            let coef = dot(&self.u[k], b) / self.singular_values[k];
            for (xj, vj) in x.iter_mut().zip(&self.v[k]) {
                *xj += coef * vj;
            }
        }
        x
    }

    /// Orthogonal projection of `x` onto `Range(Aᵀ)`.
    pub fn project_row_space(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; x.len()];
        for vk in &self.v {
            let coef = dot(vk, x);
            for (pj, vj) in p.iter_mut().zip(vk) {
                *pj += coef * vj;
            }
        }
        p
    }

    /// `(I − A†A) x`, the component of `x` in the null space of `A`.
    pub fn null_component(&self, x: &[f64]) -> Vec<f64> {
        let p = self.project_row_space(x);
        x.iter().zip(&p).map(|(a, b)| a - b).collect()
    }
}

/// One-sided (Hestenes) Jacobi SVD of a square or tall matrix `G`.
///
/// Returns singular values, left vectors (columns, `σ = 0` entries left
/// unnormalized) and right vectors, all unsorted.
fn one_sided_jacobi(g: DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ncols = g.ncols();
    let mut cols: Vec<Vec<f64>> = (0..ncols).map(|j| g.column(j).iter().copied().collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..ncols)
        .map(|j| {
            let mut e = vec![0.0; ncols];
            e[j] = 1.0;
            e
        })
        .collect();
    let rotate = |x: &mut Vec<Vec<f64>>, i: usize, j: usize, c: f64, s: f64| {
        let (lo, hi) = x.split_at_mut(j);
        for (xi, xj) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
            let (a, b) = (*xi, *xj);
            *xi = c * a - s * b;
            *xj = s * a + c * b;
        }
    };
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..ncols {
            for j in i + 1..ncols {
                let alpha = norm_sq(&cols[i]);
                let beta = norm_sq(&cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    for (c, &s) in cols.iter_mut().zip(&sigma) {
        if s > 0.0 {
            c.iter_mut().for_each(|x| *x /= s);
        }
    }
    (sigma, cols, v)
}

/// Smallest nonzero singular value, by dense SVD.
pub fn smallest_nonzero_singular_value(a: &RowAccessMatrix) -> Result<f64> {
    Ok(SvdOracle::new(a)?.sigma_min())
}

/// Min-norm solution `A†b` of a consistent system.
pub fn min_norm_solution(a: &RowAccessMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let x = SvdOracle::new(a)?.pseudo_solve(b);
    let res = norm(&residual(a, &x, b)?);
    let tol = 1e-8 * norm(b).max(1.0);
    if res > tol {
        return Err(Error::Inconsistent {
            residual: res,
            tolerance: tol,
        });
    }
    Ok(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
