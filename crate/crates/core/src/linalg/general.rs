//! Kernels for general (non-symmetric) square matrices.

use num_complex::Complex;

use super::{Matrix, SymMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// LU factorization with partial pivoting, `P·A = L·U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("LU needs a square matrix".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = a.max_abs().max(T::min_positive_value());
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= scale * T::epsilon() * T::from_usize_lossy(n) {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if !f.is_zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.col_vec(j));
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn determinant(&self) -> T {
        (0..self.lu.rows()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

pub fn solve<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::new(a)?.solve(b))
}

pub fn inverse<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::new(a)?.solve(&Matrix::identity(a.rows())))
}

pub fn determinant<T: Real>(a: &Matrix<T>) -> T {
    Lu::new(a).map_or_else(|_| T::zero(), |lu| lu.determinant())
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let mut u = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let (m, n) = u.shape();
    let eps = T::epsilon();
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    alpha += u[(i, p)] * u[(i, p)];
                    beta += u[(i, q)] * u[(i, q)];
                    gamma += u[(i, p)] * u[(i, q)];
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma.is_zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::two() * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..n).map(|j| (0..m).map(|i| u[(i, j)] * u[(i, j)]).sum::<T>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn rank<T: Real>(a: &Matrix<T>, rel_tol: T) -> usize {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else { return 0 };
    if smax.is_zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// All eigenvalues of a real square matrix (Hessenberg reduction followed by
/// the Francis double-shift QR iteration). Order is unspecified.
pub fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues need a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based working copy to keep the classic index arithmetic readable
    let mut h = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    hessenberg(&mut h, n);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            h[i][j] = T::zero();
        }
    }
    let (wr, wi) = hqr(&mut h, n)?;
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

fn hessenberg<T: Real>(a: &mut [Vec<T>], n: usize) {
    for m in 2..n {
        let mut x = T::zero();
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                let tmp = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = tmp;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if !x.is_zero() {
            for i in m + 1..=n {
                let mut y = a[i][m - 1];
                if !y.is_zero() {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        let amj = a[m][j];
                        a[i][j] -= y * amj;
                    }
                    for row in a.iter_mut().take(n + 1).skip(1) {
                        let rji = row[i];
                        row[m] += y * rji;
                    }
                }
            }
        }
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr<T: Real>(a: &mut [Vec<T>], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];
    let mut anorm = T::zero();
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = T::zero();
    let (mut p, mut q, mut r);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s.is_zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = T::zero();
                nn -= 1;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = T::half() * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= T::zero() {
                        z = p + z.abs() * if p >= T::zero() { T::one() } else { -T::one() };
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if !z.is_zero() {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = T::zero();
                        wi[nn] = T::zero();
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn = nn.saturating_sub(2);
                } else {
                    if its == 60 {
                        return Err(Error::SolverFailure("QR eigenvalue iteration did not converge".into()));
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s0;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = T::zero();
                        if i != m + 2 {
                            a[i][i - 3] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = T::zero();
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if !x.is_zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let norm = (p * p + q * q + r * r).sqrt();
                        let s = if p >= T::zero() { norm } else { -norm };
                        if !s.is_zero() {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for row in a.iter_mut().take(mmin + 1).skip(l) {
                                p = x * row[k] + y * row[k + 1];
                                if k != nn - 1 {
                                    p += z * row[k + 2];
                                    row[k + 2] -= p * r;
                                }
                                row[k + 1] -= p * q;
                                row[k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn == 0 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((wr, wi))
}

/// True iff every eigenvalue has strictly negative real part.
pub fn is_hurwitz<T: Real>(a: &Matrix<T>) -> bool {
    eigenvalues(a).is_ok_and(|ev| ev.iter().all(|e| e.re < T::zero()))
}

/// Matrix exponential by scaling and squaring with a diagonal Padé(6,6)
/// approximant.
pub fn expm<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("expm needs a square matrix".into()));
    }
    let n = a.rows();
    let norm = (0..n)
        .map(|i| a.row_slice(i).iter().map(|x| x.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > T::half() {
        scaled_norm = scaled_norm * T::half();
        squarings += 1;
    }
    let x = a.scale(T::one() / T::two().powi(squarings as i32));
    const ORDER: usize = 6;
    let mut c = T::one();
    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for k in 1..=ORDER {
        let kk = T::from_usize_lossy(k);
        let q = T::from_usize_lossy(ORDER);
        c = c * (q - kk + T::one()) / (kk * (T::two() * q - kk + T::one()));
        power = power.matmul(&x);
        let term = power.scale(c);
        num = &num + &term;
        den = if k % 2 == 0 { &den + &term } else { &den - &term };
    }
    let mut e = solve(&den, &num)?;
    for _ in 0..squarings {
        e = e.matmul(&e);
    }
    Ok(e)
}

/// Solves the continuous Lyapunov equation `Aᵀ·X + X·A + Q = 0` through its
/// Kronecker form. Meant for the small state dimensions used here.
pub fn solve_lyapunov<T: Real>(a: &Matrix<T>, q: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let n = a.rows();
    if !a.is_square() || q.dim() != n {
        return Err(Error::DimensionMismatch("Lyapunov operands".into()));
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut k = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = idx(i, j);
            for m in 0..n {
                // (AᵀX)_ij = Σ_m A_mi X_mj ; (XA)_ij = Σ_m X_im A_mj
                k[(row, idx(m, j))] += a[(m, i)];
                k[(row, idx(i, m))] += a[(m, j)];
            }
        }
    }
    let rhs: Vec<T> = (0..n * n).map(|r| -q.get(r / n, r % n)).collect();
    let x = Lu::new(&k)?.solve_vec(&rhs);
    Ok(SymMatrix::symmetrize(&Matrix::from_vec(n, n, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut ev: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        ev
    }

    #[test]
    fn eigenvalues_of_companion_matrix() {
        // roots 1, 2, 3, 4
        let a = Matrix::<f64>::from_f64_rows(&[
            [10.0, -35.0, 50.0, -24.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let ev = sorted(eigenvalues(&a).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((e.re - want).abs() < 1e-9, "{e:?}");
            assert!(e.im.abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvalues_complex_pair() {
        let a = Matrix::<f64>::from_f64_rows(&[[-0.3, 0.5], [-100.0, -5.0]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        // s² + 5.3 s + 51.5
        let disc = (51.5f64 - 5.3 * 5.3 / 4.0).sqrt();
        assert!((ev[0].re + 2.65).abs() < 1e-12);
        assert!((ev[0].im + disc).abs() < 1e-12);
        assert!((ev[1].im - disc).abs() < 1e-12);
        assert!(is_hurwitz(&a));
    }

    #[test]
    fn eigenvalues_triangular_and_scalar() {
        let a = Matrix::<f64>::from_f64_rows(&[[2.0, 7.0, 1.0], [0.0, -1.0, 3.0], [0.0, 0.0, 5.0]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!((ev[0].re + 1.0).abs() < 1e-12 && (ev[1].re - 2.0).abs() < 1e-12);
        assert!((ev[2].re - 5.0).abs() < 1e-12);
        let s = eigenvalues(&Matrix::<f64>::from_f64_rows(&[[-3.0]])).unwrap();
        assert_eq!(s, vec![Complex::new(-3.0, 0.0)]);
    }

    #[test]
    fn expm_rotation() {
        let t = 0.7f64;
        let a = Matrix::<f64>::from_f64_rows(&[[0.0, t], [-t, 0.0]]);
        let e = expm(&a).unwrap();
        let want = Matrix::<f64>::from_f64_rows(&[[t.cos(), t.sin()], [-t.sin(), t.cos()]]);
        assert!((&e - &want).max_abs() < 1e-14);
        let big: Matrix<f64> = expm(&Matrix::<f64>::from_f64_rows(&[[-30.0]])).unwrap();
        assert!(((big[(0, 0)] - (-30.0f64).exp()) / (-30.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn lu_and_rank() {
        let a = Matrix::<f64>::from_f64_rows(&[[4.0, 3.0], [6.0, 3.0]]);
        assert!((determinant::<f64>(&a) + 6.0).abs() < 1e-14);
        let inv = inverse(&a).unwrap();
        assert!((&a.matmul(&inv) - &Matrix::identity(2)).max_abs() < 1e-15);
        assert!(inverse(&Matrix::<f64>::from_f64_rows(&[[1.0, 2.0], [2.0, 4.0]])).is_err());
        assert_eq!(rank(&Matrix::<f64>::from_f64_rows(&[[1.0, 2.0], [2.0, 4.0]]), 1e-10), 1);
        assert_eq!(rank(&Matrix::<f64>::from_f64_rows(&[[1.0, 2.0], [2.0, 4.5]]), 1e-10), 2);
        assert_eq!(rank(&Matrix::<f64>::zeros(2, 3), 1e-10), 0);
    }

    #[test]
    fn singular_values_known() {
        let a = Matrix::<f64>::from_f64_rows(&[[3.0, 0.0], [0.0, -4.0], [0.0, 0.0]]);
        let sv: Vec<f64> = singular_values(&a);
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lyapunov_residual() {
        let a = Matrix::<f64>::from_f64_rows(&[[-1.0, 2.0], [0.0, -3.0]]);
        let q = SymMatrix::identity(2);
        let x = solve_lyapunov(&a, &q).unwrap();
        let res = &(&a.transpose().matmul(x.as_matrix()) + &x.as_matrix().matmul(&a)) + q.as_matrix();
        assert!(res.max_abs() < 1e-14);
    }
}
