//! LTI plant types and the single-area frequency-regulation model.
//!
//! State is `x = [Δω, ΔP_M]ᵀ` (frequency deviation and prime-mover power
//! deviation). The load step `ΔP_L` is the disturbance and the inverter power
//! injection is the control input:
//!
//! ```text
//! M·Δω̇  = −D·Δω + ΔP_M − ΔP_L + ΔP_I
//! ΔṖ_M  = −(k/ρ)·Δω − k·ΔP_M
//! ```
//!
//! The disturbance is always normalized to `|w| ≤ 1` by folding `w_max` into
//! `B_w`. How the control input is scaled depends on [`BuConvention`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rank, Matrix};
use crate::scalar::Real;

/// Rank tolerance relative to the largest singular value.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyParams<T> {
    /// Inertia constant `M` (s·p.u.).
    #[serde(rename = "M")]
    pub inertia: T,
    /// Damping `D` (p.u. power per p.u. frequency).
    #[serde(rename = "D")]
    pub damping: T,
    /// Speed-droop coefficient `ρ`.
    pub rho: T,
    /// Governor time-constant inverse `k` (1/s).
    pub k: T,
    /// Disturbance bound (p.u. power).
    pub w_max: T,
    /// Inverter power limit (p.u. power).
    pub u_max: T,
}

impl<T: Real> FrequencyParams<T> {
    /// `M = 2, D = 0.6, ρ = 0.05, k = 5, w_max = 0.1, u_max = 0.05`.
    pub fn paper() -> Self {
        Self {
            inertia: T::lit(2.0),
            damping: T::lit(0.6),
            rho: T::lit(0.05),
            k: T::lit(5.0),
            w_max: T::lit(0.1),
            u_max: T::lit(0.05),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.inertia > T::zero(), "M > 0"),
            (self.damping >= T::zero(), "D >= 0"),
            (self.rho > T::zero(), "rho > 0"),
            (self.k >= T::zero(), "k >= 0"),
            (self.w_max > T::zero(), "w_max > 0"),
            (self.u_max > T::zero(), "u_max > 0"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::InvalidParams(format!("{what} violated")));
            }
        }
        Ok(())
    }

    /// Open-loop steady-state frequency deviation for a sustained load step of
    /// `w_max`: `−w_max / (D + 1/ρ)`.
    pub fn static_frequency_drop(&self) -> T {
        -self.w_max / (self.damping + T::one() / self.rho)
    }
}

/// How the inverter input enters the state equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuConvention {
    /// `B_u = [1, 0]ᵀ` and `B_w = [−w_max, 0]ᵀ`: both inputs act on `Δω̇`
    /// without the `1/M` factor. The input is in p.u. power and bounded by
    /// `u_max` directly.
    PaperLiteral,
    /// `B_w = [−w_max/M, 0]ᵀ`, `B_u = [u_max/M, 0]ᵀ`: the physical swing
    /// equation with the input normalized to `|u| ≤ 1`.
    #[default]
    SwingDerived,
}

/// Continuous LTI plant `ẋ = A x + B_w w + B_u u`, `y = C x`.
///
/// `input_limit` is the actuator bound in model units and `input_scale`
/// converts a model-unit input into physical p.u. power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantModel<T> {
    pub a: Matrix<T>,
    pub b_w: Matrix<T>,
    pub b_u: Matrix<T>,
    pub c: Matrix<T>,
    pub state_labels: Vec<String>,
    pub input_limit: T,
    pub input_scale: T,
}

impl<T: Real> PlantModel<T> {
    pub fn new(a: Matrix<T>, b_w: Matrix<T>, b_u: Matrix<T>, c: Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n == 0 || !a.is_square() {
            return Err(Error::DimensionMismatch(format!("A must be square and non-empty, got {:?}", a.shape())));
        }
        if b_w.rows() != n || b_u.rows() != n || c.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but B_w is {:?}, B_u is {:?}, C is {:?}",
                b_w.shape(),
                b_u.shape(),
                c.shape()
            )));
        }
        if b_w.cols() == 0 || c.rows() == 0 {
            return Err(Error::DimensionMismatch("B_w and C need at least one column/row".into()));
        }
        Ok(Self {
            state_labels: (0..n).map(|i| format!("x{i}")).collect(),
            a,
            b_w,
            b_u,
            c,
            input_limit: T::one(),
            input_scale: T::one(),
        })
    }

    pub fn with_input_limit(mut self, limit: T) -> Self {
        self.input_limit = limit;
        self
    }

    pub fn with_output(mut self, c: Matrix<T>) -> Result<Self> {
        if c.cols() != self.n() || c.rows() == 0 {
            return Err(Error::DimensionMismatch("C must have n columns".into()));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_input_matrix(mut self, b_u: Matrix<T>) -> Result<Self> {
        if b_u.rows() != self.n() {
            return Err(Error::DimensionMismatch("B_u must have n rows".into()));
        }
        self.b_u = b_u;
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.b_w.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.b_u.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    /// `[B, AB, …, A^{n−1}B]`.
    pub fn controllability_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        controllability_matrix(&self.a, b)
    }

    /// `[C; CA; …; CA^{n−1}]`.
    pub fn observability_matrix(&self) -> Matrix<T> {
        let n = self.n();
        let p = self.output_dim();
        let mut out = Matrix::zeros(n * p, n);
        let mut block = self.c.clone();
        for k in 0..n {
            out.set_block(k * p, 0, &block);
            block = block.matmul(&self.a);
        }
        out
    }
}

/// Builds the frequency model for `params` under the chosen input convention.
/// `[B, AB, …, A^{n−1}B]` for an arbitrary square `A`.
pub fn controllability_matrix<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = a.rows();
    let mut out = Matrix::zeros(n, n * b.cols());
    let mut block = b.clone();
    for k in 0..n {
        out.set_block(0, k * b.cols(), &block);
        block = a.matmul(&block);
    }
    out
}

pub fn build_frequency_model<T: Real>(p: &FrequencyParams<T>, convention: BuConvention) -> Result<PlantModel<T>> {
    p.validate()?;
    let m = p.inertia;
    let a = Matrix::from_rows(&[
        [-p.damping / m, T::one() / m],
        [-p.k / p.rho, -p.k],
    ]);
    let c = Matrix::row(&[T::one(), T::zero()]);
    let (b_w, b_u, limit, scale) = match convention {
        BuConvention::SwingDerived => (
            Matrix::column(&[-p.w_max / m, T::zero()]),
            Matrix::column(&[p.u_max / m, T::zero()]),
            T::one(),
            p.u_max,
        ),
        BuConvention::PaperLiteral => (
            Matrix::column(&[-p.w_max, T::zero()]),
            Matrix::column(&[T::one(), T::zero()]),
            p.u_max,
            T::one(),
        ),
    };
    let mut model = PlantModel::new(a, b_w, b_u, c)?.with_input_limit(limit);
    model.input_scale = scale;
    model.state_labels = vec!["dw [p.u. freq]".into(), "dpm [p.u. power]".into()];
    Ok(model)
}

/// Rank tests of `(A, B_w)` controllability and `(A, C)` observability.
pub fn check_ctrb_obsv<T: Real>(m: &PlantModel<T>) -> (bool, bool) {
    let tol = T::lit(RANK_TOL);
    let n = m.n();
    let ctrb = rank(&m.controllability_matrix(&m.b_w), tol) == n;
    let obsv = rank(&m.observability_matrix(), tol) == n;
    (ctrb, obsv)
}

/// Controllability of `(A, B_u)`.
pub fn is_input_controllable<T: Real>(m: &PlantModel<T>) -> bool {
    m.input_dim() > 0 && rank(&m.controllability_matrix(&m.b_u), T::lit(RANK_TOL)) == m.n()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_hurwitz, solve};
    use proptest::prelude::*;

    fn unit_params() -> FrequencyParams<f64> {
        FrequencyParams { inertia: 1.0, damping: 1.0, rho: 1.0, k: 1.0, w_max: 1.0, u_max: 1.0 }
    }

    #[test]
    fn paper_params_swing_derived() {
        let m = build_frequency_model(&FrequencyParams::<f64>::paper(), BuConvention::SwingDerived).unwrap();
        let want = Matrix::<f64>::from_f64_rows(&[[-0.3, 0.5], [-100.0, -5.0]]);
        assert!((&m.a - &want).max_abs() < 1e-14);
        assert_eq!(m.b_w, Matrix::<f64>::from_f64_rows(&[[-0.05], [0.0]]));
        assert_eq!(m.b_u, Matrix::<f64>::from_f64_rows(&[[0.025], [0.0]]));
        assert_eq!(m.input_limit, 1.0);
        assert_eq!(m.input_scale, 0.05);
    }

    #[test]
    fn unit_params_swing_derived() {
        let m = build_frequency_model(&unit_params(), BuConvention::SwingDerived).unwrap();
        assert_eq!(m.a, Matrix::<f64>::from_f64_rows(&[[-1.0, 1.0], [-1.0, -1.0]]));
        assert_eq!(m.b_w, Matrix::<f64>::from_f64_rows(&[[-1.0], [0.0]]));
        assert_eq!(m.b_u, Matrix::<f64>::from_f64_rows(&[[1.0], [0.0]]));
    }

    #[test]
    fn paper_literal_input_matrix() {
        let mut p = unit_params();
        p.inertia = 7.5;
        p.u_max = 0.3;
        let m = build_frequency_model(&p, BuConvention::PaperLiteral).unwrap();
        assert_eq!(m.b_u, Matrix::<f64>::from_f64_rows(&[[1.0], [0.0]]));
        assert_eq!(m.input_limit, 0.3);
        assert_eq!(m.c, Matrix::<f64>::from_f64_rows(&[[1.0, 0.0]]));
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = unit_params();
        p.u_max = 0.0;
        assert!(matches!(build_frequency_model(&p, BuConvention::SwingDerived), Err(Error::InvalidParams(_))));
        let mut p = unit_params();
        p.damping = -0.1;
        assert!(build_frequency_model(&p, BuConvention::PaperLiteral).is_err());
    }

    #[test]
    fn ctrb_obsv_examples() {
        let m = build_frequency_model(&FrequencyParams::<f64>::paper(), BuConvention::SwingDerived).unwrap();
        assert_eq!(check_ctrb_obsv(&m), (true, true));

        let decoupled = PlantModel::new(
            Matrix::<f64>::from_f64_rows(&[[-1.0, 0.0], [0.0, -2.0]]),
            Matrix::<f64>::from_f64_rows(&[[1.0], [0.0]]),
            Matrix::<f64>::from_f64_rows(&[[1.0], [0.0]]),
            Matrix::<f64>::from_f64_rows(&[[1.0, 1.0]]),
        )
        .unwrap();
        assert!(!check_ctrb_obsv(&decoupled).0);

        let blind = m.clone().with_output(Matrix::<f64>::from_f64_rows(&[[0.0, 0.0]])).unwrap();
        assert!(!check_ctrb_obsv(&blind).1);
    }

    #[test]
    fn steady_state_frequency_drop() {
        let p = FrequencyParams::<f64>::paper();
        let m = build_frequency_model(&p, BuConvention::SwingDerived).unwrap();
        // A x + B_w = 0 for w ≡ 1
        let x = solve(&m.a, &m.b_w.scale(-1.0)).unwrap();
        assert!((x[(0, 0)] - p.static_frequency_drop()).abs() < 1e-15);
        assert!((x[(0, 0)] + 0.1 / 20.6).abs() < 1e-15);
    }

    #[test]
    fn dimension_checks() {
        let r = PlantModel::<f64>::new(
            Matrix::identity(2),
            Matrix::zeros(3, 1),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 2),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    proptest! {
        #[test]
        fn open_loop_is_hurwitz(
            inertia in 0.1f64..20.0,
            damping in 0.01f64..5.0,
            rho in 0.01f64..1.0,
            k in 0.05f64..20.0,
        ) {
            let p = FrequencyParams { inertia, damping, rho, k, w_max: 0.1, u_max: 0.05 };
            let m = build_frequency_model(&p, BuConvention::SwingDerived).unwrap();
            prop_assert!(is_hurwitz(&m.a));
        }
    }
}
