//! Dense real matrix kernel.
//!
//! Row-major dense matrices, a validated symmetric wrapper, Cholesky
//! factorization with a scaling-aware pivot test, a cyclic Jacobi symmetric
//! eigensolver and half-vectorization in column-stacked lower-triangle order.

use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use crate::error::{invalid, Error, Result};

/// Relative tolerance on `|a_ij - a_ji|` (relative to the largest entry).
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Jacobi stops once the off-diagonal Frobenius norm drops below this
/// fraction of the matrix Frobenius norm.
pub const JACOBI_OFF_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries. All entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite entry at ({}, {})", pos / cols.max(1), pos % cols.max(1)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return invalid("ragged rows");
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * oc..(k + 1) * oc];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other^t`.
    pub fn matmul_t(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_t dimension mismatch");
        DenseMatrix::from_fn(self.rows, other.rows, |i, j| dot(self.row(i), other.row(j)))
    }

    /// `self^t * other`.
    pub fn t_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "t_matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        let oc = other.cols;
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * oc..(i + 1) * oc];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "elementwise dimension mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Elementwise max norm `|A|_inf`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise `|A|_1`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Elementwise `|A|_1` deprived of the diagonal terms.
    pub fn l1_off_diag(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)].abs();
                }
            }
        }
        s
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Number of entries with magnitude above `tol`.
    pub fn count_nonzero(&self, tol: f64) -> usize {
        self.data.iter().filter(|v| v.abs() > tol).count()
    }

    /// Rows `idx` (in the given order) as a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Principal-style submatrix with the given row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A square matrix whose stored entries are exactly symmetric.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix(DenseMatrix);

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symmetric")?;
        self.0.fmt(f)
    }
}

impl SymmetricMatrix {
    /// Validates symmetry within [`SYMMETRY_TOL`] (relative to the largest
    /// entry) and stores the symmetrized average. Asymmetric input is rejected.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return invalid(format!("symmetric matrix must be square, got {}x{}", m.rows, m.cols));
        }
        if !m.is_finite() {
            return invalid("non-finite entry in symmetric matrix");
        }
        let tol = SYMMETRY_TOL * m.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..m.rows {
            for j in 0..i {
                let d = (m[(i, j)] - m[(j, i)]).abs();
                if d > tol {
                    return invalid(format!("matrix not symmetric at ({i}, {j}): |diff| = {d:e}"));
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// Forces symmetry by averaging with the transpose. Used for matrices that
    /// are symmetric analytically and only drift by rounding.
    pub fn symmetrize(mut m: DenseMatrix) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let n = m.rows;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DenseMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DenseMatrix::zeros(n, n))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(DenseMatrix::from_diag(diag))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix(self.0.scale(s))
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix(self.0.sub(&other.0))
    }

    /// `U^t A U`, symmetrized.
    pub fn congruence(&self, u: &DenseMatrix) -> SymmetricMatrix {
        SymmetricMatrix::symmetrize(u.t_matmul(&self.0.matmul(u)))
    }

    /// Principal submatrix on `idx`.
    pub fn principal(&self, idx: &[usize]) -> SymmetricMatrix {
        SymmetricMatrix(self.0.submatrix(idx, idx))
    }
}

impl Deref for SymmetricMatrix {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.0
    }
}

/// Lower-triangular Cholesky factor `A = G G^t`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    lower: DenseMatrix,
}

impl Cholesky {
    /// Factorizes `m`; fails with a numeric error when a pivot is not above
    /// `1e-12 * dim * max diagonal`.
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        match Self::try_factor(m)? {
            Some(c) => Ok(c),
            None => Err(Error::NumericFailure("matrix is not positive definite".into())),
        }
    }

    fn try_factor(m: &DenseMatrix) -> Result<Option<Self>> {
        if !m.is_square() {
            return invalid(format!("Cholesky needs a square matrix, got {}x{}", m.rows, m.cols));
        }
        if !m.is_finite() {
            return invalid("non-finite entry in Cholesky input");
        }
        let n = m.rows;
        let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0_f64, f64::max);
        if n > 0 && max_diag <= 0.0 {
            return Ok(None);
        }
        let tol = 1e-12 * n as f64 * max_diag;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= g[(j, k)] * g[(j, k)];
            }
            if !(d > tol) {
                return Ok(None);
            }
            let djj = d.sqrt();
            g[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= g[(i, k)] * g[(j, k)];
                }
                g[(i, j)] = s / djj;
            }
        }
        Ok(Some(Self { lower: g }))
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// `ln det A` as twice the sum of log pivots.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `G y = b` in place.
    fn forward(&self, b: &mut [f64]) {
        let g = &self.lower;
        for i in 0..b.len() {
            let s = b[i] - dot(&g.row(i)[..i], &b[..i]);
            b[i] = s / g[(i, i)];
        }
    }

    /// Solves `G^t x = y` in place.
    fn backward(&self, b: &mut [f64]) {
        let g = &self.lower;
        let n = b.len();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= g[(k, i)] * b[k];
            }
            b[i] = s / g[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// `A^{-1} B` column by column.
    /// `G^{-1} B` for the lower factor `G`.
    pub fn solve_lower(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows, self.dim(), "solve dimension mismatch");
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        let mut col = vec![0.0; b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b[(i, j)];
            }
            self.forward(&mut col);
            for i in 0..b.rows {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows, self.dim(), "solve dimension mismatch");
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        let mut col = vec![0.0; b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b[(i, j)];
            }
            self.forward(&mut col);
            self.backward(&mut col);
            for i in 0..b.rows {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> SymmetricMatrix {
        SymmetricMatrix::symmetrize(self.solve(&DenseMatrix::identity(self.dim())))
    }
}

/// True iff a Cholesky factorization succeeds with all pivots above the
/// scaled pivot tolerance.
pub fn is_spd(m: &DenseMatrix) -> Result<bool> {
    Ok(Cholesky::try_factor(m)?.is_some())
}

/// Inverse of an SPD matrix via Cholesky.
pub fn inv_spd(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(Cholesky::factor(m)?.inverse())
}

/// Full symmetric eigendecomposition: eigenvalues in decreasing order and the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn new(m: &SymmetricMatrix) -> Result<Self> {
        let (values, vectors) = jacobi(m.as_dense(), true)?;
        let vectors = vectors.expect("vectors requested");
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted = order.iter().map(|&i| values[i]).collect();
        let vecs = DenseMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
        Ok(Self { values: sorted, vectors: vecs })
    }

    /// Rebuilds `V f(D) V^t`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let n = self.values.len();
        let scaled = DenseMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * f(self.values[j]));
        SymmetricMatrix::symmetrize(scaled.matmul_t(&self.vectors))
    }
}

/// Cyclic Jacobi rotations on a copy of `m`.
fn jacobi(m: &DenseMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix>)> {
    if !m.is_square() {
        return invalid("eigendecomposition needs a square matrix");
    }
    if !m.is_finite() {
        return invalid("non-finite entry in eigen input");
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut v = want_vectors.then(|| DenseMatrix::identity(n));
    let scale = a.frob_norm();
    let threshold = JACOBI_OFF_TOL * scale;
    let off_norm = |a: &DenseMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = off_norm(&a) <= threshold;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        sweep += 1;
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::NumericFailure(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    Ok((a.diag(), v))
}

/// All eigenvalues in decreasing order.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    let (mut vals, _) = jacobi(m.as_dense(), false)?;
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// `(lambda_min, lambda_max)`.
pub fn eig_extremes(m: &SymmetricMatrix) -> Result<(f64, f64)> {
    if m.dim() == 0 {
        return invalid("eigenvalues of an empty matrix");
    }
    let (vals, _) = jacobi(m.as_dense(), false)?;
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

pub fn lambda_min(m: &SymmetricMatrix) -> Result<f64> {
    eig_extremes(m).map(|e| e.0)
}

pub fn lambda_max(m: &SymmetricMatrix) -> Result<f64> {
    eig_extremes(m).map(|e| e.1)
}

/// Spectral norm, from the smaller Gram matrix of `a`.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    if a.rows == 0 || a.cols == 0 {
        return Ok(0.0);
    }
    let gram = if a.rows <= a.cols { a.matmul_t(a) } else { a.t_matmul(a) };
    let (_, hi) = eig_extremes(&SymmetricMatrix::symmetrize(gram))?;
    Ok(hi.max(0.0).sqrt())
}

/// `<<A, B>> = tr(A^t B)`.
pub fn frob_inner(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return invalid(format!(
            "Frobenius inner product of {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        ));
    }
    Ok(dot(&a.data, &b.data))
}

/// Half-vectorization: lower triangle stacked column by column.
pub fn vech(m: &SymmetricMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vech`].
pub fn unvech(v: &[f64], dim: usize) -> Result<SymmetricMatrix> {
    if v.len() != dim * (dim + 1) / 2 {
        return invalid(format!(
            "vech length {} does not match dimension {dim} (expected {})",
            v.len(),
            dim * (dim + 1) / 2
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return invalid("non-finite entry in vech vector");
    }
    let mut m = DenseMatrix::zeros(dim, dim);
    let mut k = 0;
    for j in 0..dim {
        for i in j..dim {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    Ok(SymmetricMatrix(m))
}

/// Position of entry `(i, j)` (any order) inside a vech vector of dimension `dim`.
pub fn vech_index(i: usize, j: usize, dim: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    // columns 0..c hold dim + (dim-1) + ... + (dim-c+1) entries
    c * dim - c * c.saturating_sub(1) / 2 + (r - c)
}
