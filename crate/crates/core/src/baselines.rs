//! Conventional comparison controllers: LQR, pole placement and fixed gains.
//!
//! All gains here act on the plant's `B_u` in model units. Literal gains are
//! quoted in physical units (p.u. power per state unit) and divided by the
//! plant's `input_scale` on conversion.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{determinant, inverse, is_hurwitz, rank, solve, solve_lyapunov, Matrix, SymMatrix};
use crate::model::{PlantModel, RANK_TOL};
use crate::scalar::Real;

const SIGN_MAX_ITER: usize = 100;
const KLEINMAN_MAX_ITER: usize = 30;

/// Comparison controller, in the form accepted by configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum BaselineSpec<T> {
    Lqr { q_weight: SymMatrix<T>, r_weight: SymMatrix<T> },
    /// Closed-loop poles as `[re, im]` pairs; must be closed under conjugation.
    PolePlace { poles: Vec<Complex<T>> },
    /// Row gain in physical units.
    LiteralGain { k: Vec<T> },
}

impl<T: Real> BaselineSpec<T> {
    pub fn validate(&self, m: &PlantModel<T>) -> Result<()> {
        let n = m.n();
        match self {
            Self::Lqr { q_weight, r_weight } => {
                if q_weight.dim() != n || r_weight.dim() != m.input_dim() {
                    return Err(Error::DimensionMismatch("LQR weight sizes".into()));
                }
                if !q_weight.is_psd(T::lit(crate::linalg::DEFAULT_PSD_TOL)) || r_weight.cholesky().is_none() {
                    return Err(Error::InvalidParams("LQR needs Q_weight ⪰ 0 and R_weight ≻ 0".into()));
                }
            }
            Self::PolePlace { poles } => {
                if poles.len() != n {
                    return Err(Error::DimensionMismatch(format!("{} poles for a {n}-state plant", poles.len())));
                }
            }
            Self::LiteralGain { k } => {
                if k.len() != n {
                    return Err(Error::DimensionMismatch(format!("gain has {} entries, plant has {n} states", k.len())));
                }
            }
        }
        Ok(())
    }

    /// The feedback gain `K` (model units) for `u = −K·x`.
    pub fn gain(&self, m: &PlantModel<T>) -> Result<Matrix<T>> {
        self.validate(m)?;
        match self {
            Self::Lqr { q_weight, r_weight } => Ok(lqr_gain(m, q_weight, r_weight)?.k),
            Self::PolePlace { poles } => pole_place_gain(m, poles),
            Self::LiteralGain { k } => Ok(Matrix::row(k).scale(T::one() / m.input_scale)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Lqr { .. } => "lqr",
            Self::PolePlace { .. } => "pole_place",
            Self::LiteralGain { .. } => "literal_gain",
        }
    }
}

/// LQR gain and the stabilizing Riccati solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Lqr<T> {
    pub k: Matrix<T>,
    pub p: SymMatrix<T>,
}

/// `AᵀP + PA − P·B·R⁻¹·Bᵀ·P + Q`.
pub fn riccati_residual<T: Real>(a: &Matrix<T>, g: &Matrix<T>, q: &SymMatrix<T>, p: &SymMatrix<T>) -> Matrix<T> {
    let pm = p.as_matrix();
    let lin = &a.transpose().matmul(pm) + &pm.matmul(a);
    &(&lin - &pm.matmul(g).matmul(pm)) + q.as_matrix()
}

fn hurwitz_or<T: Real>(a: &Matrix<T>) -> Result<()> {
    if is_hurwitz(a) {
        Ok(())
    } else {
        Err(Error::NotStabilizable)
    }
}

/// Matrix sign function by the determinant-scaled Newton iteration.
fn matrix_sign<T: Real>(h: &Matrix<T>) -> Result<Matrix<T>> {
    let dim = T::from_usize_lossy(h.rows());
    let mut z = h.clone();
    for _ in 0..SIGN_MAX_ITER {
        let zi = inverse(&z).map_err(|_| Error::NotStabilizable)?;
        let det = determinant(&z).abs();
        let c = if det > T::zero() && det.is_finite() { det.powf(-T::one() / dim) } else { T::one() };
        let next = (&z.scale(c) + &zi.scale(T::one() / c)).scale(T::half());
        let change = (&next - &z).frobenius_norm();
        z = next;
        if change <= T::lit(1e-13) * z.frobenius_norm() {
            return Ok(z);
        }
    }
    Err(Error::NotStabilizable)
}

/// Continuous-time LQR for `(A, B_u)` with state weight `qw` and input weight
/// `rw`. The Riccati equation is solved through the sign function of the
/// Hamiltonian matrix and then polished by Newton–Kleinman iterations.
pub fn lqr_gain<T: Real>(m: &PlantModel<T>, qw: &SymMatrix<T>, rw: &SymMatrix<T>) -> Result<Lqr<T>> {
    let n = m.n();
    if qw.dim() != n || rw.dim() != m.input_dim() {
        return Err(Error::DimensionMismatch("LQR weight sizes".into()));
    }
    let ri = rw.inverse_pd().map_err(|_| Error::InvalidParams("R_weight must be positive definite".into()))?;
    let b = &m.b_u;
    let g = b.matmul(ri.as_matrix()).matmul(&b.transpose());
    let a = &m.a;
    let h = Matrix::from_blocks(&[
        vec![Some(a), Some(&g.scale(-T::one()))],
        vec![Some(&qw.as_matrix().scale(-T::one())), Some(&a.transpose().scale(-T::one()))],
    ])?;
    let w = matrix_sign(&h)?;
    // stable subspace [I; P] is the null space of W + I
    let w11 = w.block(0, 0, n, n);
    let w12 = w.block(0, n, n, n);
    let w21 = w.block(n, 0, n, n);
    let w22 = w.block(n, n, n, n);
    let eye = Matrix::identity(n);
    let lhs = Matrix::from_blocks(&[vec![Some(&w12)], vec![Some(&(&w22 + &eye))]])?;
    let rhs = Matrix::from_blocks(&[vec![Some(&(&w11 + &eye))], vec![Some(&w21)]])?;
    let lt = lhs.transpose();
    let p0 = solve(&lt.matmul(&lhs), &lt.matmul(&rhs)).map_err(|_| Error::NotStabilizable)?;
    let mut p = SymMatrix::symmetrize(&p0.scale(-T::one()));

    let gain = |p: &SymMatrix<T>| ri.as_matrix().matmul(&b.transpose()).matmul(p.as_matrix());
    let res_norm = |p: &SymMatrix<T>| riccati_residual(a, &g, qw, p).frobenius_norm();
    let mut best = res_norm(&p);
    for _ in 0..KLEINMAN_MAX_ITER {
        let k = gain(&p);
        let ak = a - &b.matmul(&k);
        if !is_hurwitz(&ak) {
            break;
        }
        let rhs = SymMatrix::symmetrize(&(qw.as_matrix() + &k.transpose().matmul(rw.as_matrix()).matmul(&k)));
        let Ok(next) = solve_lyapunov(&ak, &rhs) else { break };
        let r = res_norm(&next);
        if !(r < best) {
            break;
        }
        let step = (next.as_matrix() - p.as_matrix()).frobenius_norm();
        p = next;
        best = r;
        if step <= T::lit(1e-15) * p.frobenius_norm() {
            break;
        }
    }
    let k = gain(&p);
    hurwitz_or(&(a - &b.matmul(&k)))?;
    Ok(Lqr { k, p })
}

/// Real coefficients `[c_0, …, c_{n−1}]` of the monic polynomial with the
/// given roots (`s^n + c_{n−1}s^{n−1} + … + c_0`).
fn monic_from_roots<T: Real>(roots: &[Complex<T>]) -> Result<Vec<T>> {
    let mut c = vec![Complex::new(T::one(), T::zero())];
    for &r in roots {
        let mut next = vec![Complex::new(T::zero(), T::zero()); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= ci * r;
        }
        c = next;
    }
    let scale = c.iter().map(|z| z.norm()).fold(T::one(), T::max);
    if c.iter().any(|z| z.im.abs() > T::lit(1e-9) * scale) {
        return Err(Error::BadInput("poles must be closed under complex conjugation".into()));
    }
    Ok(c[..roots.len()].iter().map(|z| z.re).collect())
}

/// Single-input pole placement by Ackermann's formula.
pub fn pole_place_gain<T: Real>(m: &PlantModel<T>, poles: &[Complex<T>]) -> Result<Matrix<T>> {
    let n = m.n();
    if m.input_dim() != 1 {
        return Err(Error::DimensionMismatch("pole placement needs a single input".into()));
    }
    if poles.len() != n {
        return Err(Error::DimensionMismatch(format!("{} poles for a {n}-state plant", poles.len())));
    }
    let ctrb = m.controllability_matrix(&m.b_u);
    if rank(&ctrb, T::lit(RANK_TOL)) < n {
        return Err(Error::NotControllable);
    }
    let coeffs = monic_from_roots(poles)?;
    // φ(A) = Aⁿ + Σ c_i Aⁱ by Horner's rule
    let mut phi = Matrix::identity(n);
    for i in (0..n).rev() {
        phi = &phi.matmul(&m.a) + &Matrix::identity(n).scale(coeffs[i]);
    }
    let mut en = Matrix::zeros(n, 1);
    en[(n - 1, 0)] = T::one();
    let y = solve(&ctrb.transpose(), &en).map_err(|_| Error::NotControllable)?;
    Ok(y.transpose().matmul(&phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;
    use crate::model::{build_frequency_model, BuConvention, FrequencyParams};

    fn plant(a: Matrix<f64>, b: Matrix<f64>) -> PlantModel<f64> {
        let n = a.rows();
        PlantModel::new(a, Matrix::zeros(n, 1).map(|_| 1.0), b, Matrix::identity(n)).unwrap()
    }

    #[test]
    fn scalar_lqr() {
        let m = plant(Matrix::from_rows(&[[1.0]]), Matrix::from_rows(&[[1.0]]));
        let r = lqr_gain(&m, &SymMatrix::identity(1), &SymMatrix::identity(1)).unwrap();
        let want = 1.0 + 2f64.sqrt();
        assert!((r.p.get(0, 0) - want).abs() < 1e-12, "{r:?}");
        assert!((r.k[(0, 0)] - want).abs() < 1e-12);
    }

    #[test]
    fn zero_state_weight_on_stable_plant() {
        let m = plant(Matrix::from_rows(&[[-1.0, 0.3], [0.0, -2.0]]), Matrix::column(&[0.0, 1.0]));
        let r = lqr_gain(&m, &SymMatrix::zeros(2), &SymMatrix::identity(1)).unwrap();
        assert!(r.p.frobenius_norm() < 1e-12 && r.k.max_abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn paper_model_lqr_residual() {
        let m = build_frequency_model(&FrequencyParams::<f64>::paper(), BuConvention::PaperLiteral).unwrap();
        let r = lqr_gain(&m, &SymMatrix::identity(2), &SymMatrix::identity(1)).unwrap();
        let g = m.b_u.matmul(&m.b_u.transpose());
        let res = riccati_residual(&m.a, &g, &SymMatrix::identity(2), &r.p).frobenius_norm();
        assert!(res <= 1e-8 * r.p.frobenius_norm(), "{res}");
        assert!(is_hurwitz(&(&m.a - &m.b_u.matmul(&r.k))));
    }

    #[test]
    fn unstabilizable_is_reported() {
        // mode at +1 untouched by the input
        let m = plant(Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]), Matrix::column(&[0.0, 1.0]));
        let err = lqr_gain(&m, &SymMatrix::identity(2), &SymMatrix::identity(1)).unwrap_err();
        assert!(matches!(err, Error::NotStabilizable), "{err:?}");
    }

    #[test]
    fn double_integrator_placement() {
        let m = plant(Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]), Matrix::column(&[0.0, 1.0]));
        let poles = [Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)];
        let k = pole_place_gain(&m, &poles).unwrap();
        assert!((k[(0, 0)] - 2.0).abs() < 1e-12 && (k[(0, 1)] - 3.0).abs() < 1e-12, "{k:?}");
    }

    #[test]
    fn open_loop_poles_give_zero_gain() {
        let a = Matrix::from_rows(&[[-0.3, 0.5], [-100.0, -5.0]]);
        let m = plant(a.clone(), Matrix::column(&[1.0, 0.0]));
        let k = pole_place_gain(&m, &eigenvalues(&a).unwrap()).unwrap();
        assert!(k.max_abs() < 1e-10, "{k:?}");
    }

    #[test]
    fn placement_errors() {
        let m = plant(Matrix::from_rows(&[[-1.0, 0.0], [0.0, -2.0]]), Matrix::column(&[1.0, 0.0]));
        let poles = [Complex::new(-1.0, 0.0), Complex::new(-3.0, 0.0)];
        assert!(matches!(pole_place_gain(&m, &poles), Err(Error::NotControllable)));
        let m2 = plant(Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]), Matrix::column(&[0.0, 1.0]));
        let lonely = [Complex::new(-1.0, 1.0), Complex::new(-2.0, 0.0)];
        assert!(matches!(pole_place_gain(&m2, &lonely), Err(Error::BadInput(_))));
    }

    #[test]
    fn literal_gains_stabilize_paper_model() {
        let m = build_frequency_model(&FrequencyParams::<f64>::paper(), BuConvention::PaperLiteral).unwrap();
        for k in [vec![0.138, 0.0045], vec![1.70, 0.480]] {
            let gain = BaselineSpec::LiteralGain { k }.gain(&m).unwrap();
            assert!(is_hurwitz(&(&m.a - &m.b_u.matmul(&gain))));
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let specs = vec![
            BaselineSpec::LiteralGain { k: vec![0.138, 0.0045] },
            BaselineSpec::PolePlace { poles: vec![Complex::new(-3.0, 1.0), Complex::new(-3.0, -1.0)] },
            BaselineSpec::Lqr { q_weight: SymMatrix::identity(2), r_weight: SymMatrix::identity(1) },
        ];
        let text = serde_json::to_string(&specs).unwrap();
        let back: Vec<BaselineSpec<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(specs, back);
        let bad = r#"{"kind": "literal_gain", "k": [1.0, 2.0], "extra": 1}"#;
        assert!(serde_json::from_str::<BaselineSpec<f64>>(bad).is_err());
    }
}
