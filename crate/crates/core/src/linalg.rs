//! Small dense linear algebra.
//!
//! The GLM normal equations are at most a few dozen columns wide, so they are
//! solved here with a plain Cholesky factorization that reports which column
//! broke positive definiteness. Large symmetric eigenproblems and the K × K
//! SVD used by the rotation search are delegated to `faer`.

use faer::{Mat, Side};

use crate::error::{RarError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Largest absolute elementwise difference; used by tests and invariants.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative pivot threshold below which a column is treated as dependent.
const PIVOT_TOL: f64 = 1e-11;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factorizes `a`. On failure returns the index of the first column whose
    /// pivot collapsed relative to its original diagonal entry.
    pub fn factor(a: &Matrix) -> std::result::Result<Self, usize> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "Cholesky needs a square matrix");
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let diag = a[(j, j)];
            let mut d = diag;
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !(d > PIVOT_TOL * diag) || !d.is_finite() {
                return Err(j);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // symmetrize away rounding asymmetry
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = m;
                inv[(j, i)] = m;
            }
        }
        inv
    }
}

/// Eigenpairs of a symmetric matrix in descending eigenvalue order.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude entry is
/// positive (first such entry on ties), making the output reproducible.
pub fn symmetric_eigen_desc(a: &Mat<f64>, count: usize) -> Result<(Vec<f64>, Matrix)> {
    let n = a.nrows();
    let count = count.min(n);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| RarError::Numerical(format!("symmetric eigensolver failed on {n}x{n} matrix: {e:?}")))?;
    let values = evd.S().column_vector();
    let vectors = evd.U();
    let mut out_vals = Vec::with_capacity(count);
    let mut out_vecs = Matrix::zeros(n, count);
    for c in 0..count {
        let src = n - 1 - c;
        out_vals.push(values[src]);
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..n {
            let v = vectors[(i, src)];
            if v.abs() > best {
                best = v.abs();
                sign = if v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for i in 0..n {
            out_vecs[(i, c)] = sign * vectors[(i, src)];
        }
    }
    if out_vals.iter().any(|v| !v.is_finite()) {
        return Err(RarError::Numerical(format!(
            "symmetric eigensolver returned non-finite eigenvalues on {n}x{n} matrix"
        )));
    }
    Ok((out_vals, out_vecs))
}

/// Full SVD `a = U diag(s) V'` of a small square matrix.
pub fn svd(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let m = a.to_faer();
    let dec = m
        .svd()
        .map_err(|e| RarError::Numerical(format!("SVD failed: {e:?}")))?;
    let s = dec.S().column_vector();
    let s: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((Matrix::from_faer(dec.U()), s, Matrix::from_faer(dec.V())))
}
