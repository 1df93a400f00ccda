//! Dense row-major `f64` matrices and the kernels the solver is built from.
//!
//! Storage is `data[i * cols + j] = A[i, j]`. Every constructor rejects
//! non-finite entries, so downstream kernels never see NaN or infinity
//! coming in through the public surface.

use std::fmt;

use crate::error::MatrixError;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::DataLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(MatrixError::RaggedRow {
                    row: i,
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut data = vec![0.0; r * c];
        for (j, col) in cols.iter().enumerate() {
            if col.len() != r {
                return Err(MatrixError::RaggedRow {
                    row: j,
                    expected: r,
                    got: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                data[i * c + j] = *v;
            }
        }
        Self::new(r, c, data)
    }

    /// Builds a matrix entry by entry. Panics if `f` yields a non-finite value
    /// or the shape is empty; intended for internal kernels and tests.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero-sized matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Crate-internal constructor for kernel outputs. Finiteness is the
    /// caller's responsibility; the solver checks objectives for divergence.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix::from_raw(self.cols, self.rows, out)
    }

    /// Leading `k` columns.
    pub fn first_columns(&self, k: usize) -> Matrix {
        assert!(k >= 1 && k <= self.cols);
        Matrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    /// Leading `k` rows.
    pub fn first_rows(&self, k: usize) -> Matrix {
        assert!(k >= 1 && k <= self.rows);
        Matrix::from_raw(k, self.cols, self.data[..k * self.cols].to_vec())
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "add_scaled", |a, b| a + c * b)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, MatrixError> {
        if self.shape() != other.shape() {
            return Err(MatrixError::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean norm of each column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, acc) in sq.iter_mut().enumerate() {
                let v = self.data[i * self.cols + j];
                *acc += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Flips the sign of column `j` in place.
    pub(crate) fn negate_column(&mut self, j: usize) {
        for i in 0..self.rows {
            let idx = i * self.cols + j;
            self.data[idx] = -self.data[idx];
        }
    }
}

/// Neumaier-compensated sum. Objective values are compared at 1e-9 absolute
/// across iterations, so plain accumulation over ~1e5 terms is not enough.
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// `a * b`. Each output entry accumulates `a[i, l] * b[l, j]` over ascending `l`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    if a.cols != b.rows {
        return Err(MatrixError::ShapeMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, p, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for l in 0..p {
            let ail = a.data[i * p + l];
            let brow = &b.data[l * n..(l + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += ail * bv;
            }
        }
    }
    Ok(Matrix::from_raw(m, n, out))
}

/// `aᵀ * b` without materializing the transpose.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    if a.rows != b.rows {
        return Err(MatrixError::ShapeMismatch {
            op: "matmul_tn",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (p, m, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; m * n];
    for l in 0..p {
        let arow = &a.data[l * m..(l + 1) * m];
        let brow = &b.data[l * n..(l + 1) * n];
        for (i, &ali) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += ali * bv;
            }
        }
    }
    Ok(Matrix::from_raw(m, n, out))
}

/// `a * bᵀ` without materializing the transpose.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    if a.cols != b.cols {
        return Err(MatrixError::ShapeMismatch {
            op: "matmul_nt",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, p, n) = (a.rows, a.cols, b.rows);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a.data[i * p..(i + 1) * p];
        for j in 0..n {
            let brow = &b.data[j * p..(j + 1) * p];
            let mut acc = 0.0;
            for (x, y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            out[i * n + j] = acc;
        }
    }
    Ok(Matrix::from_raw(m, n, out))
}

pub fn frobenius_norm_sq(a: &Matrix) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in &a.data {
        acc.add(v * v);
    }
    acc.value()
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    frobenius_norm_sq(a).sqrt()
}

/// `‖a − b‖²_F` without allocating the difference.
pub fn frobenius_dist_sq(a: &Matrix, b: &Matrix) -> Result<f64, MatrixError> {
    if a.shape() != b.shape() {
        return Err(MatrixError::ShapeMismatch {
            op: "frobenius_dist_sq",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut acc = CompensatedSum::default();
    for (x, y) in a.data.iter().zip(&b.data) {
        let d = x - y;
        acc.add(d * d);
    }
    Ok(acc.value())
}

/// `‖z − w p‖²_F`, accumulated row by row without forming `w p`.
pub fn residual_norm_sq(z: &Matrix, w: &Matrix, p: &Matrix) -> Result<f64, MatrixError> {
    if w.cols != p.rows || z.rows != w.rows || z.cols != p.cols {
        return Err(MatrixError::ShapeMismatch {
            op: "residual_norm_sq",
            left: z.shape(),
            right: (w.rows, p.cols),
        });
    }
    let (m, k, n) = (w.rows, w.cols, p.cols);
    let mut acc = CompensatedSum::default();
    let mut rowbuf = vec![0.0; n];
    for i in 0..m {
        rowbuf.copy_from_slice(z.row(i));
        for l in 0..k {
            let wil = w.data[i * k + l];
            let prow = &p.data[l * n..(l + 1) * n];
            for (r, &pv) in rowbuf.iter_mut().zip(prow) {
                *r -= wil * pv;
            }
        }
        for r in &rowbuf {
            acc.add(r * r);
        }
    }
    Ok(acc.value())
}

/// `trace(aᵀ b)`, the Frobenius inner product.
pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> Result<f64, MatrixError> {
    if a.shape() != b.shape() {
        return Err(MatrixError::ShapeMismatch {
            op: "frobenius_inner",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut acc = CompensatedSum::default();
    for (x, y) in a.data.iter().zip(&b.data) {
        acc.add(x * y);
    }
    Ok(acc.value())
}

/// `‖aᵀa − I‖_F`, the distance of `a` from having orthonormal columns.
pub fn orthonormality_residual(a: &Matrix) -> f64 {
    let g = matmul_tn(a, a).expect("aᵀa is always conformable");
    let k = g.rows;
    let mut acc = CompensatedSum::default();
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = g.get(i, j) - target;
            acc.add(d * d);
        }
    }
    acc.value().sqrt()
}

/// Solves `g x = b` for symmetric positive-definite `g` by Cholesky.
/// Returns `None` when a pivot is not positive relative to its diagonal entry
/// (`d_j <= 1e-12 * g_jj`), i.e. `g` is numerically singular.
pub(crate) fn cholesky_solve(g: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = g.rows;
    debug_assert_eq!(g.cols, n);
    debug_assert_eq!(b.rows, n);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = g.get(j, j);
        for t in 0..j {
            d -= l[j * n + t] * l[j * n + t];
        }
        if !(d > 1e-12 * g.get(j, j)) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = g.get(i, j);
            for t in 0..j {
                s -= l[i * n + t] * l[j * n + t];
            }
            l[i * n + j] = s / djj;
        }
    }
    let cols = b.cols;
    let mut x = b.data.clone();
    // forward: L y = b
    for c in 0..cols {
        for i in 0..n {
            let mut s = x[i * cols + c];
            for t in 0..i {
                s -= l[i * n + t] * x[t * cols + c];
            }
            x[i * cols + c] = s / l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i * cols + c];
            for t in (i + 1)..n {
                s -= l[t * n + i] * x[t * cols + c];
            }
            x[i * cols + c] = s / l[i * n + i];
        }
    }
    let out = Matrix::from_raw(n, cols, x);
    out.is_finite().then_some(out)
}
