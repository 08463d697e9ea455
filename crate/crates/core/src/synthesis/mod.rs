//! Star-norm computation, state-feedback synthesis and observer design.
//!
//! Every design is the result of an `α` line search over fixed-`α` SDPs and
//! is re-audited against its LMIs with the eigenvalue checker before it is
//! returned.

mod search;

pub use search::{alpha_line_search, Probe, SearchSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix, SymMatrix};
use crate::lmi::{
    lmi_error_output_bound, lmi_fs_closed_loop, lmi_fs_input_bound, lmi_nonnegative, lmi_norm_bound, lmi_of_closed_loop,
    lmi_of_input_bound, lmi_open_loop, lmi_output_bound, lmi_psd_var, q_spec, s_spec, w_spec, Assignment,
    LmiExpr, VariableSpec, LAMBDA_ID, Q_ID, S_ID, THETA_ID, V_ID, W_ID,
};
use crate::model::PlantModel;
use crate::scalar::{saturate, Real};
use crate::sdp::{check_feasible, solve, SdpProblem, SdpStatus, SolverOptions};

/// Absolute eigenvalue slack accepted when re-auditing a returned design.
pub const AUDIT_TOL: f64 = 1e-7;

/// Invariant ellipsoid `{x : xᵀQ⁻¹x ≤ 1}` and the output bound it certifies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct StarNormCertificate<T> {
    #[serde(rename = "Q")]
    pub q: SymMatrix<T>,
    pub alpha: T,
    pub lambda: T,
    pub star_norm: T,
}

impl<T: Real> StarNormCertificate<T> {
    fn new(q: SymMatrix<T>, alpha: T, lambda: T) -> Self {
        let lambda = lambda.max(T::zero());
        Self { q, alpha, lambda, star_norm: lambda.sqrt() }
    }

    /// `Q⁻¹`, the shape matrix of the ellipsoid level function.
    pub fn q_inverse(&self) -> Result<SymMatrix<T>> {
        self.q.inverse_pd()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    LowGain,
    HighGain,
}

/// State-feedback law `u = −K·x` (low gain) or `u = −sat(δ·K·x)` (high gain).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ControllerDesign<T> {
    #[serde(rename = "K")]
    pub k: Matrix<T>,
    pub v: T,
    pub delta: T,
    pub u_max: T,
    pub certificate: StarNormCertificate<T>,
    pub mode: ControlMode,
    /// Whether the open-loop invariance LMI was imposed alongside the
    /// closed-loop one (needed before an observer can be designed).
    pub open_loop_augmented: bool,
}

impl<T: Real> ControllerDesign<T> {
    /// The same certified design with gain scaling `δ`; `δ = 1` is low gain.
    pub fn with_delta(&self, delta: T) -> Result<Self> {
        if !(delta >= T::one()) || !delta.is_finite() {
            return Err(Error::InvalidParams(format!("delta must be >= 1, got {delta}")));
        }
        let mode = if delta == T::one() { ControlMode::LowGain } else { ControlMode::HighGain };
        Ok(Self { delta, mode, ..self.clone() })
    }
}

/// Control input for state (or estimate) `x`.
pub fn control_law<T: Real>(d: &ControllerDesign<T>, x: &[T]) -> Vec<T> {
    let kx = d.k.mul_vec(x);
    match d.mode {
        ControlMode::LowGain => kx.into_iter().map(|z| -z).collect(),
        ControlMode::HighGain => kx.into_iter().map(|z| -saturate(d.delta * z, d.u_max)).collect(),
    }
}

/// Observer `x̂̇ = A·x̂ + B_u·u + L·(y − C·x̂)` with `L = S⁻¹·W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ObserverDesign<T> {
    #[serde(rename = "S")]
    pub s: SymMatrix<T>,
    #[serde(rename = "W")]
    pub w: Matrix<T>,
    #[serde(rename = "L")]
    pub l: Matrix<T>,
    pub theta: T,
    pub delta_used: T,
    pub alpha: T,
}

/// Knobs for [`synth_fs_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FsOptions<T> {
    /// Also impose the open-loop invariance LMI on `(Q, α)`.
    pub augment_open_loop: bool,
    pub solver: SolverOptions<T>,
}

impl<T: Real> Default for FsOptions<T> {
    fn default() -> Self {
        Self { augment_open_loop: false, solver: SolverOptions::default() }
    }
}

/// Default cap on `‖W‖₂` in observer synthesis.
pub const DEFAULT_W_BOUND: f64 = 1e6;

/// Knobs for [`synth_of_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverOptions<T> {
    /// Spectral-norm bound `‖W‖₂ ≤ w_bound`. The infimum of the error-output
    /// bound is approached only as `W` grows, so this effectively caps the
    /// observer bandwidth; `None` leaves only the solver's per-entry box.
    pub w_bound: Option<T>,
    pub solver: SolverOptions<T>,
}

impl<T: Real> Default for ObserverOptions<T> {
    fn default() -> Self {
        Self { w_bound: Some(T::lit(DEFAULT_W_BOUND)), solver: SolverOptions::default() }
    }
}

fn audit<T: Real>(what: &str, a: &Assignment<T>, constraints: &[LmiExpr<T>]) -> Result<()> {
    let worst = check_feasible(a, constraints)?;
    if worst <= T::lit(AUDIT_TOL) {
        Ok(())
    } else {
        Err(Error::SolverFailure(format!("{what} failed its certificate audit (violation {worst:e})")))
    }
}

fn probe<T: Real>(p: &SdpProblem<T>, objective_id: &str) -> Result<Probe<T, Assignment<T>>> {
    let sol = solve(p)?;
    match sol.status {
        SdpStatus::Optimal => {
            let obj = sol.assignment.scalar(objective_id)?;
            Ok(Some((obj, sol.assignment)))
        }
        status => {
            log::trace!("fixed-alpha solve: {status:?}");
            Ok(None)
        }
    }
}

fn star_norm_constraints<T: Real>(m: &PlantModel<T>, alpha: T) -> Result<Vec<LmiExpr<T>>> {
    Ok(vec![
        lmi_open_loop(m, alpha)?,
        lmi_output_bound(m, LAMBDA_ID, Q_ID)?,
        lmi_psd_var(Q_ID, m.n(), false)?,
    ])
}

/// Star-norm of the open-loop plant `(A, B_w, C)`.
pub fn star_norm<T: Real>(m: &PlantModel<T>, search: &SearchSpec<T>) -> Result<StarNormCertificate<T>> {
    star_norm_with(m, search, &SolverOptions::default())
}

pub fn star_norm_with<T: Real>(
    m: &PlantModel<T>,
    search: &SearchSpec<T>,
    opts: &SolverOptions<T>,
) -> Result<StarNormCertificate<T>> {
    let (alpha, a) = alpha_line_search(search, |alpha| {
        let mut p = SdpProblem::new()
            .variable(q_spec(m))
            .variable(VariableSpec::scalar(LAMBDA_ID))
            .minimize_scalar(LAMBDA_ID)
            .with_options(*opts);
        for c in star_norm_constraints(m, alpha)? {
            p = p.constraint(c);
        }
        probe(&p, LAMBDA_ID)
    })?;
    audit("star-norm certificate", &a, &star_norm_constraints(m, alpha)?)?;
    Ok(StarNormCertificate::new(a.sym(Q_ID)?, alpha, a.scalar(LAMBDA_ID)?))
}

fn fs_constraints<T: Real>(m: &PlantModel<T>, u_max: T, alpha: T, augment: bool) -> Result<Vec<LmiExpr<T>>> {
    let mut cs = vec![
        lmi_output_bound(m, LAMBDA_ID, Q_ID)?,
        lmi_fs_closed_loop(m, alpha)?,
        lmi_fs_input_bound(m, u_max)?,
        lmi_nonnegative(V_ID)?,
        lmi_psd_var(Q_ID, m.n(), false)?,
    ];
    if augment {
        cs.push(lmi_open_loop(m, alpha)?);
    }
    Ok(cs)
}

/// Low-gain state-feedback design minimizing the closed-loop star-norm under
/// the input limit `u_max`; `delta > 1` returns the saturating high-gain
/// variant of the same design.
pub fn synth_fs<T: Real>(
    m: &PlantModel<T>,
    u_max: T,
    delta: T,
    search: &SearchSpec<T>,
) -> Result<ControllerDesign<T>> {
    synth_fs_with(m, u_max, delta, search, &FsOptions::default())
}

pub fn synth_fs_with<T: Real>(
    m: &PlantModel<T>,
    u_max: T,
    delta: T,
    search: &SearchSpec<T>,
    opts: &FsOptions<T>,
) -> Result<ControllerDesign<T>> {
    if !(u_max > T::zero()) || !(delta >= T::one()) {
        return Err(Error::InvalidParams(format!("need u_max > 0 and delta >= 1, got {u_max}, {delta}")));
    }
    let aug = opts.augment_open_loop;
    let found = alpha_line_search(search, |alpha| {
        let mut p = SdpProblem::new()
            .variable(q_spec(m))
            .variable(VariableSpec::scalar(V_ID))
            .variable(VariableSpec::scalar(LAMBDA_ID))
            .minimize_scalar(LAMBDA_ID)
            .with_options(opts.solver);
        for c in fs_constraints(m, u_max, alpha, aug)? {
            p = p.constraint(c);
        }
        probe(&p, LAMBDA_ID)
    });
    let (alpha, a) = match found {
        Err(Error::InfeasibleAtAllAlpha { lo, hi }) => {
            return Err(Error::Infeasible(format!(
                "no alpha in [{lo}, {hi}] admits the state-feedback LMIs with u_max = {u_max}"
            )))
        }
        other => other?,
    };
    audit("state-feedback design", &a, &fs_constraints(m, u_max, alpha, aug)?)?;
    let q = a.sym(Q_ID)?;
    let v = a.scalar(V_ID)?;
    let k = m.b_u.transpose().matmul(q.inverse_pd()?.as_matrix()).scale(v * T::half());
    let design = ControllerDesign {
        k,
        v,
        delta: T::one(),
        u_max,
        certificate: StarNormCertificate::new(q, alpha, a.scalar(LAMBDA_ID)?),
        mode: ControlMode::LowGain,
        open_loop_augmented: aug,
    };
    design.with_delta(delta)
}

fn of_constraints<T: Real>(
    m: &PlantModel<T>,
    fs: &ControllerDesign<T>,
    p: &SymMatrix<T>,
    alpha: T,
    delta: T,
) -> Result<Vec<LmiExpr<T>>> {
    let mut cs = vec![lmi_of_input_bound(p, fs.v, &m.b_u, fs.u_max)?];
    cs.push(lmi_of_closed_loop(m, p, fs.v, alpha, T::one())?);
    if delta != T::one() {
        cs.push(lmi_of_closed_loop(m, p, fs.v, alpha, delta)?);
    }
    cs.push(lmi_error_output_bound(m, THETA_ID, S_ID)?);
    cs.push(lmi_psd_var(S_ID, m.n(), true)?);
    Ok(cs)
}

/// Observer for the output-feedback version of `fs`, valid for every gain
/// scaling in `[1, delta]`.
pub fn synth_of<T: Real>(
    m: &PlantModel<T>,
    fs: &ControllerDesign<T>,
    alpha: T,
    delta: T,
) -> Result<ObserverDesign<T>> {
    synth_of_with(m, fs, alpha, delta, &ObserverOptions::default())
}

pub fn synth_of_with<T: Real>(
    m: &PlantModel<T>,
    fs: &ControllerDesign<T>,
    alpha: T,
    delta: T,
    opts: &ObserverOptions<T>,
) -> Result<ObserverDesign<T>> {
    if !(delta >= T::one()) || !delta.is_finite() {
        return Err(Error::InvalidParams(format!("delta must be >= 1, got {delta}")));
    }
    let q = &fs.certificate.q;
    let open_loop = lmi_open_loop(m, alpha)?;
    let q_assign = Assignment::new().with_sym(Q_ID, q);
    if !open_loop.holds(&q_assign, T::lit(AUDIT_TOL))? {
        return Err(Error::Infeasible(
            "state-feedback certificate does not satisfy the open-loop invariance LMI; \
             synthesize it in output-feedback mode"
                .into(),
        ));
    }
    let p = q.inverse_pd()?;
    let mut prob = SdpProblem::new()
        .variable(s_spec(m))
        .variable(w_spec(m))
        .variable(VariableSpec::scalar(THETA_ID))
        .minimize_scalar(THETA_ID)
        .with_options(opts.solver);
    let mut cs = of_constraints(m, fs, &p, alpha, delta)?;
    if let Some(b) = opts.w_bound {
        cs.push(lmi_norm_bound(W_ID, m.n(), m.output_dim(), b)?);
    }
    for c in cs.iter().cloned() {
        prob = prob.constraint(c);
    }
    let sol = solve(&prob)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "observer LMIs infeasible (phase-I margin {:e})",
                sol.infeasibility_margin.map_or(f64::NAN, |x| x.as_f64())
            )))
        }
        status => return Err(Error::SolverFailure(format!("observer SDP ended with {status:?}"))),
    }
    audit("observer design", &sol.assignment, &cs)?;
    let s = sol.assignment.sym(S_ID)?;
    let w = sol.assignment.matrix(W_ID)?.clone();
    let l = inverse(s.as_matrix())?.matmul(&w);
    Ok(ObserverDesign { theta: sol.assignment.scalar(THETA_ID)?, s, w, l, delta_used: delta, alpha })
}
