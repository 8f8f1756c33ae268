//! Dense linear algebra for the model fits.
//!
//! The systems here are small (at most a few hundred unknowns), so a plain
//! row-major matrix with Householder QR and Cholesky covers every solver
//! need in the crate without pulling in a linear-algebra dependency.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        let mut out = vec![T::zero(); self.rows];
        for r in 0..self.rows {
            let mut acc = T::zero();
            let row = self.row(r);
            for (a, b) in row.iter().zip(v) {
                acc = acc + *a * *b;
            }
            out[r] = acc;
        }
        out
    }

    /// Accumulates `self += scale * v vᵀ` for symmetric rank-1 updates.
    pub fn rank1_update(&mut self, v: &[T], scale: T) {
        assert_eq!(self.rows, self.cols, "rank1_update needs a square matrix");
        assert_eq!(v.len(), self.cols, "rank1_update dimension mismatch");
        for r in 0..self.rows {
            let vr = v[r] * scale;
            if vr == T::zero() {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (slot, vc) in row.iter_mut().zip(v) {
                *slot = *slot + vr * *vc;
            }
        }
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + *x * *y;
    }
    acc
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc
}

/// Solution of a least-squares problem together with a crude conditioning
/// indicator (ratio of the largest to the smallest |R| diagonal of the QR
/// factor).
#[derive(Debug)]
pub struct LstsqSolution<T> {
    pub coefficients: Vec<T>,
    pub diag_ratio: T,
}

/// Minimizes ‖A x − b‖₂ by Householder QR.
///
/// Requires at least as many rows as columns. Columns whose R diagonal
/// collapses below `eps`-scale are reported in `Error::RankDeficient` by
/// index (as decimal strings; callers map them to basis names).
pub fn lstsq<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<LstsqSolution<T>> {
    let m = a.nrows();
    let n = a.ncols();
    if b.len() != m {
        return Err(Error::LengthMismatch(b.len(), m));
    }
    if m < n {
        return Err(Error::NotEnoughRows { need: n, have: m });
    }

    let mut r = a.clone();
    let mut rhs = b.to_vec();

    // Scale reference for the rank test.
    let mut max_abs = T::zero();
    for v in &r.data {
        max_abs = max_abs.max(v.abs());
    }
    if max_abs == T::zero() {
        return Err(Error::RankDeficient {
            columns: (0..n).map(|c| c.to_string()).collect(),
        });
    }

    for k in 0..n {
        // Householder vector for column k, rows k..m.
        let mut norm = T::zero();
        for i in k..m {
            let v = r.at(i, k);
            norm = norm + v * v;
        }
        let norm = norm.sqrt();
        if norm > T::zero() {
            let head = r.at(k, k);
            let alpha = if head >= T::zero() { -norm } else { norm };
            let mut v = vec![T::zero(); m - k];
            v[0] = head - alpha;
            for i in k + 1..m {
                v[i - k] = r.at(i, k);
            }
            let vtv = dot(&v, &v);
            if vtv > T::zero() {
                let two = T::from_f(2.0);
                // Apply H = I − 2 v vᵀ / vᵀv to the trailing columns and rhs.
                for c in k..n {
                    let mut proj = T::zero();
                    for i in k..m {
                        proj = proj + v[i - k] * r.at(i, c);
                    }
                    let f = two * proj / vtv;
                    for i in k..m {
                        *r.at_mut(i, c) = r.at(i, c) - f * v[i - k];
                    }
                }
                let mut proj = T::zero();
                for i in k..m {
                    proj = proj + v[i - k] * rhs[i];
                }
                let f = two * proj / vtv;
                for i in k..m {
                    rhs[i] = rhs[i] - f * v[i - k];
                }
            }
        }
    }

    let tol = T::from_f(m as f64) * T::epsilon() * max_abs;
    let deficient: Vec<String> = (0..n)
        .filter(|&k| r.at(k, k).abs() <= tol)
        .map(|k| k.to_string())
        .collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient { columns: deficient });
    }

    let mut diag_min = T::infinity();
    let mut diag_max = T::zero();
    for k in 0..n {
        let d = r.at(k, k).abs();
        diag_min = diag_min.min(d);
        diag_max = diag_max.max(d);
    }

    // Back substitution on R x = Qᵀ b.
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for c in k + 1..n {
            acc = acc - r.at(k, c) * x[c];
        }
        x[k] = acc / r.at(k, k);
    }

    Ok(LstsqSolution {
        coefficients: x,
        diag_ratio: diag_max / diag_min,
    })
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factorizes `a` (assumed symmetric; only the lower triangle is read).
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = a.at(i, j);
                for k in 0..j {
                    acc = acc - l.at(i, k) * l.at(j, k);
                }
                if i == j {
                    if acc <= T::zero() || !acc.is_finite() {
                        return Err(Error::Numerical(format!(
                            "cholesky pivot {acc} at index {i} is not positive"
                        )));
                    }
                    *l.at_mut(i, j) = acc.sqrt();
                } else {
                    *l.at_mut(i, j) = acc / l.at(j, j);
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn size(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `A x = b` using the cached factor.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.size();
        assert_eq!(b.len(), n, "cholesky solve dimension mismatch");
        // Forward: L y = b.
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc = acc - self.l.at(i, k) * y[k];
            }
            y[i] = acc / self.l.at(i, i);
        }
        // Backward: Lᵀ x = y.
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in i + 1..n {
                acc = acc - self.l.at(k, i) * x[k];
            }
            x[i] = acc / self.l.at(i, i);
        }
        x
    }

    /// ln det A = 2 Σ ln L_ii.
    pub fn log_det(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.size() {
            acc = acc + self.l.at(i, i).ln();
        }
        acc + acc
    }

    /// tr(A⁻¹) = ‖L⁻¹‖², computed column by column.
    pub fn inverse_trace(&self) -> T {
        let n = self.size();
        let mut total = T::zero();
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            // Solve L c = e_j; entries above j are zero.
            for i in 0..j {
                col[i] = T::zero();
            }
            for i in j..n {
                let mut acc = if i == j { T::one() } else { T::zero() };
                for k in j..i {
                    acc = acc - self.l.at(i, k) * col[k];
                }
                col[i] = acc / self.l.at(i, i);
            }
            for i in j..n {
                total = total + col[i] * col[i];
            }
        }
        total
    }
}
