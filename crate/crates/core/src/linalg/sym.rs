use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default definiteness tolerance, scaled by `max(1, ‖m‖_F)`.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix. Every write is mirrored, so `m[(i,j)] == m[(j,i)]`
/// holds bit-for-bit.
#[derive(Clone, PartialEq, Debug)]
pub struct SymMatrix<T> {
    inner: Matrix<T>,
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { inner: Matrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: Matrix::identity(n) }
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self { inner: Matrix::diagonal(values) }
    }

    /// Accepts `m` only if it is square and exactly symmetric.
    pub fn from_matrix(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        for i in 0..m.rows() {
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::BadInput(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { inner: m })
    }

    /// Replaces `m` by its symmetric part `(m + mᵀ)/2`.
    pub fn symmetrize(m: &Matrix<T>) -> Self {
        Self { inner: m.symmetric_part() }
    }

    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::from_matrix(Matrix::from_f64_rows(rows))
    }

    /// `v vᵀ`.
    pub fn outer(v: &[T]) -> Self {
        let n = v.len();
        let mut s = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                s.set(i, j, v[i] * v[j]);
            }
        }
        s
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn scale(&self, s: T) -> Self {
        Self { inner: self.inner.scale(s) }
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner.frobenius_norm()
    }

    pub fn quadratic_form(&self, v: &[T]) -> T {
        self.inner.quadratic_form(v)
    }

    /// Adds `s` to every diagonal entry.
    pub fn shift_diagonal(&self, s: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.inner[(i, i)] += s;
        }
        out
    }

    /// Symmetric principal block `[start, start+len)`.
    pub fn principal_block(&self, start: usize, len: usize) -> Self {
        Self { inner: self.inner.block(start, start, len, len) }
    }

    /// Cyclic Jacobi eigendecomposition with ascending eigenvalues.
    pub fn eig(&self) -> SymEigen<T> {
        let n = self.dim();
        let mut a = self.inner.clone();
        let mut v = Matrix::identity(n);
        let scale = a.frobenius_norm();
        if scale.is_zero() || n == 1 {
            return SymEigen { values: (0..n).map(|i| a[(i, i)]).collect(), vectors: v };
        }
        let eps = T::epsilon();
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum::<T>()
                .sqrt();
            if off <= eps * scale * T::lit(1e-2) {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= T::min_positive_value() {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (T::two() * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
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
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for k in 0..n {
                vectors[(k, dst)] = v[(k, src)];
            }
        }
        SymEigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eig().values
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eig().values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eig().values.last().copied().unwrap_or_else(T::zero)
    }

    /// True iff the smallest eigenvalue is at least `-tol·max(1, ‖m‖_F)`.
    pub fn is_psd(&self, tol: T) -> bool {
        self.min_eigenvalue() >= -tol * T::one().max(self.frobenius_norm())
    }

    /// True iff the smallest eigenvalue exceeds `tol·max(1, ‖m‖_F)`.
    pub fn is_pd(&self, tol: T) -> bool {
        self.min_eigenvalue() > tol * T::one().max(self.frobenius_norm())
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// numerically positive definite.
    pub fn cholesky(&self) -> Option<Matrix<T>> {
        let n = self.dim();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    /// Inverse of a positive definite matrix via its Cholesky factor.
    pub fn inverse_pd(&self) -> Result<Self> {
        let l = self
            .cholesky()
            .ok_or_else(|| Error::SingularBlock("Cholesky factorization failed".into()))?;
        let n = self.dim();
        // columns of L⁻¹
        let mut linv = Matrix::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { T::one() } else { T::zero() };
                for k in c..i {
                    s -= l[(i, k)] * linv[(k, c)];
                }
                linv[(i, c)] = s / l[(i, i)];
            }
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = T::zero();
                for k in i..n {
                    s += linv[(k, i)] * linv[(k, j)];
                }
                out.set(i, j, s);
            }
        }
        Ok(out)
    }

    /// Schur complement of the lower-right block: `A − B·C⁻¹·Bᵀ` for
    /// `m = [[A, B], [Bᵀ, C]]` with `A` of size `split`.
    pub fn schur_complement(&self, split: usize) -> Result<Self> {
        let n = self.dim();
        if split == 0 || split >= n {
            return Err(Error::BadInput(format!("split {split} out of range for dimension {n}")));
        }
        let lower = self.principal_block(split, n - split);
        let tol = T::lit(DEFAULT_PSD_TOL);
        if !lower.is_pd(tol) {
            return Err(Error::SingularBlock(format!(
                "lower-right block has minimum eigenvalue {:e}",
                lower.min_eigenvalue()
            )));
        }
        let lower_inv = lower.inverse_pd()?;
        let off = self.inner.block(0, split, split, n - split);
        let correction = off.matmul(lower_inv.as_matrix()).matmul(&off.transpose());
        let upper = self.principal_block(0, split);
        Ok(Self::symmetrize(&(upper.as_matrix() - &correction)))
    }
}

impl<T: Real> Add for &SymMatrix<T> {
    type Output = SymMatrix<T>;
    fn add(self, rhs: Self) -> SymMatrix<T> {
        SymMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl<T: Real> Sub for &SymMatrix<T> {
    type Output = SymMatrix<T>;
    fn sub(self, rhs: Self) -> SymMatrix<T> {
        SymMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl<T: Serialize> Serialize for SymMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.inner.serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for SymMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Matrix::<T>::deserialize(d)?;
        SymMatrix::from_matrix(m).map_err(serde::de::Error::custom)
    }
}

/// Free-function form of [`SymMatrix::eig`].
pub fn eig_sym<T: Real>(m: &SymMatrix<T>) -> SymEigen<T> {
    m.eig()
}

/// Free-function form of [`SymMatrix::is_psd`].
pub fn is_psd<T: Real>(m: &SymMatrix<T>, tol: T) -> bool {
    m.is_psd(tol)
}

/// Free-function form of [`SymMatrix::schur_complement`].
pub fn schur_complement<T: Real>(m: &SymMatrix<T>, split: usize) -> Result<SymMatrix<T>> {
    m.schur_complement(split)
}
