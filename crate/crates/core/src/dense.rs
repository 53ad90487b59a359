//! Small dense matrices over any [`Real`].
//!
//! Only what the charts and Toda routines need: products, a cyclic Jacobi
//! eigensolver for symmetric matrices, QR with a positive-diagonal `R`, and
//! LU without pivoting. Orders here are single digits, so everything is
//! straightforward `O(n^3)` code.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Mat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().cloned()).collect() }
    }

    pub fn diagonal(values: &[R]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() - other[(i, j)].clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() + other[(i, j)].clone())
    }

    pub fn scale(&self, s: &R) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() * s.clone())
    }

    pub fn frobenius_norm(&self) -> R {
        let mut acc = R::zero();
        for v in &self.data {
            acc += v.square();
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, v| R::max_of(m, v.abs()))
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Self {
        let half = R::ratio(1, 2);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)].clone() + self[(j, i)].clone()) * half.clone()
        })
    }

    pub fn trace(&self) -> R {
        let mut acc = R::zero();
        for i in 0..self.rows.min(self.cols) {
            acc += self[(i, i)].clone();
        }
        acc
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(Real::to_f64).collect() }
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl<R> Index<(usize, usize)> for Mat<R> {
    type Output = R;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &R {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Mat<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and a matrix whose columns are the
/// matching unit eigenvectors. Only the lower triangle's symmetric part is
/// trusted; the input is symmetrized first.
pub fn symmetric_eigen<R: Real>(a: &Mat<R>) -> (Vec<R>, Mat<R>) {
    assert!(a.is_square(), "symmetric_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v: Mat<R> = Mat::identity(n);
    let scale = R::max_of(m.frobenius_norm(), R::from_f64(f64::MIN_POSITIVE));
    let threshold = R::epsilon() * R::epsilon() * scale.square();

    for _sweep in 0..200 {
        let mut off = R::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)].square();
                }
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)].clone();
                if apq.is_zero() {
                    continue;
                }
                let app = m[(p, p)].clone();
                let aqq = m[(q, q)].clone();
                let theta = (aqq - app) / (R::from_i64(2) * apq.clone());
                let t = {
                    let denom = theta.abs() + (theta.square() + R::one()).sqrt();
                    let t = R::one() / denom;
                    if theta.is_sign_negative() {
                        -t
                    } else {
                        t
                    }
                };
                let c = R::one() / (t.square() + R::one()).sqrt();
                let s = t.clone() * c.clone();
                // A <- J^T A J with J the (p, q) rotation.
                for k in 0..n {
                    let akp = m[(k, p)].clone();
                    let akq = m[(k, q)].clone();
                    m[(k, p)] = c.clone() * akp.clone() - s.clone() * akq.clone();
                    m[(k, q)] = s.clone() * akp + c.clone() * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)].clone();
                    let aqk = m[(q, k)].clone();
                    m[(p, k)] = c.clone() * apk.clone() - s.clone() * aqk.clone();
                    m[(q, k)] = s.clone() * apk + c.clone() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)].clone();
                    let vkq = v[(k, q)].clone();
                    v[(k, p)] = c.clone() * vkp.clone() - s.clone() * vkq.clone();
                    v[(k, q)] = s.clone() * vkp + c.clone() * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| m[(i, i)].clone()).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])].clone());
    (values, vectors)
}

/// Householder QR of a square matrix with `R` normalized to a nonnegative
/// diagonal. Fails with [`Error::SingularShift`] when a diagonal entry of
/// `R` is not above `tol`.
pub fn qr_positive<R: Real>(a: &Mat<R>, tol: &R) -> Result<(Mat<R>, Mat<R>)> {
    assert!(a.is_square(), "qr_positive needs a square matrix");
    let n = a.rows();
    let mut r = a.clone();
    let mut q: Mat<R> = Mat::identity(n);
    for k in 0..n.saturating_sub(1) {
        let mut norm_sq = R::zero();
        for i in k..n {
            norm_sq += r[(i, k)].square();
        }
        let norm = norm_sq.sqrt();
        if norm.is_zero() {
            continue;
        }
        let alpha = if r[(k, k)].is_sign_negative() { norm.clone() } else { -norm.clone() };
        // v = x - alpha e_k, H = I - 2 v v^T / (v^T v)
        let mut v: Vec<R> = (k..n).map(|i| r[(i, k)].clone()).collect();
        v[0] -= alpha;
        let mut vtv = R::zero();
        for vi in &v {
            vtv += vi.square();
        }
        if vtv.is_zero() {
            continue;
        }
        let two_over = R::from_i64(2) / vtv;
        for j in 0..n {
            let mut dot = R::zero();
            for (idx, i) in (k..n).enumerate() {
                dot += v[idx].clone() * r[(i, j)].clone();
            }
            let f = dot * two_over.clone();
            for (idx, i) in (k..n).enumerate() {
                let delta = f.clone() * v[idx].clone();
                r[(i, j)] -= delta;
            }
        }
        // Q <- Q H (H symmetric)
        for i in 0..n {
            let mut dot = R::zero();
            for (idx, j) in (k..n).enumerate() {
                dot += q[(i, j)].clone() * v[idx].clone();
            }
            let f = dot * two_over.clone();
            for (idx, j) in (k..n).enumerate() {
                let delta = f.clone() * v[idx].clone();
                q[(i, j)] -= delta;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            r[(i, j)] = R::zero();
        }
    }
    for k in 0..n {
        if r[(k, k)].is_sign_negative() {
            for j in 0..n {
                r[(k, j)] = -r[(k, j)].clone();
                q[(j, k)] = -q[(j, k)].clone();
            }
        }
        if r[(k, k)] <= *tol {
            return Err(Error::SingularShift { pivot: k });
        }
    }
    Ok((q, r))
}

/// Doolittle LU without pivoting: `A = L U`, `L` unit lower triangular.
/// Returns [`Error::NotInChart`] naming the first leading minor whose pivot
/// magnitude is not above `tol`.
pub fn lu_nopivot<R: Real>(a: &Mat<R>, tol: &R) -> Result<(Mat<R>, Mat<R>)> {
    assert!(a.is_square(), "lu_nopivot needs a square matrix");
    let n = a.rows();
    let mut l: Mat<R> = Mat::identity(n);
    let mut u: Mat<R> = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = a[(i, j)].clone();
            for k in 0..i {
                acc -= l[(i, k)].clone() * u[(k, j)].clone();
            }
            u[(i, j)] = acc;
        }
        if u[(i, i)].abs() <= *tol {
            return Err(Error::NotInChart { minor: i + 1 });
        }
        for j in (i + 1)..n {
            let mut acc = a[(j, i)].clone();
            for k in 0..i {
                acc -= l[(j, k)].clone() * u[(k, i)].clone();
            }
            l[(j, i)] = acc / u[(i, i)].clone();
        }
    }
    Ok((l, u))
}

/// Inverse of a unit lower triangular matrix by forward substitution.
pub fn invert_unit_lower<R: Real>(l: &Mat<R>) -> Mat<R> {
    let n = l.rows();
    let mut inv: Mat<R> = Mat::identity(n);
    for col in 0..n {
        for i in (col + 1)..n {
            let mut acc = R::zero();
            for k in col..i {
                acc -= l[(i, k)].clone() * inv[(k, col)].clone();
            }
            inv[(i, col)] = acc;
        }
    }
    inv
}
