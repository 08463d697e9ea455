//! Affine matrix expressions in named decision variables and the block LMIs
//! used for star-norm analysis and controller/observer synthesis.
//!
//! Every matrix variable is expanded over a basis: a symmetric `n×n` variable
//! has `n(n+1)/2` scalar components (upper triangle, row-major), a rectangular
//! `r×c` variable has `r·c` components (row-major), a scalar has one. An
//! [`LmiExpr`] stores one symmetric coefficient matrix per scalar component.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::model::PlantModel;
use crate::scalar::Real;

/// Strict inequalities are enforced as `M ⪰ ε·I` with
/// `ε = STRICT_MARGIN_REL · max(1e-300, max |constant entry|)`.
pub const STRICT_MARGIN_REL: f64 = 1e-8;

pub const Q_ID: &str = "Q";
pub const V_ID: &str = "v";
pub const LAMBDA_ID: &str = "lambda";
pub const S_ID: &str = "S";
pub const W_ID: &str = "W";
pub const THETA_ID: &str = "theta";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Scalar,
    Sym(usize),
    Rect(usize, usize),
}

impl VarKind {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            VarKind::Scalar => (1, 1),
            VarKind::Sym(n) => (n, n),
            VarKind::Rect(r, c) => (r, c),
        }
    }

    pub fn components(&self) -> usize {
        match *self {
            VarKind::Scalar => 1,
            VarKind::Sym(n) => n * (n + 1) / 2,
            VarKind::Rect(r, c) => r * c,
        }
    }

    /// Basis matrix of scalar component `k`.
    pub fn basis<T: Real>(&self, k: usize) -> Matrix<T> {
        let (r, c) = self.shape();
        let mut m = Matrix::zeros(r, c);
        match *self {
            VarKind::Scalar => m[(0, 0)] = T::one(),
            VarKind::Rect(_, cols) => m[(k / cols, k % cols)] = T::one(),
            VarKind::Sym(n) => {
                let (i, j) = sym_index(n, k);
                m[(i, j)] = T::one();
                m[(j, i)] = T::one();
            }
        }
        m
    }

    /// Packs a value of this kind into its scalar components.
    pub fn pack<T: Real>(&self, value: &Matrix<T>) -> Result<Vec<T>> {
        if value.shape() != self.shape() {
            return Err(Error::DimensionMismatch(format!(
                "value of shape {:?} for variable of shape {:?}",
                value.shape(),
                self.shape()
            )));
        }
        Ok(match *self {
            VarKind::Scalar | VarKind::Rect(..) => value.as_slice().to_vec(),
            VarKind::Sym(n) => (0..self.components())
                .map(|k| {
                    let (i, j) = sym_index(n, k);
                    value[(i, j)]
                })
                .collect(),
        })
    }

    pub fn unpack<T: Real>(&self, comps: &[T]) -> Matrix<T> {
        let (r, c) = self.shape();
        let mut m = Matrix::zeros(r, c);
        for (k, &x) in comps.iter().enumerate().take(self.components()) {
            match *self {
                VarKind::Scalar => m[(0, 0)] = x,
                VarKind::Rect(_, cols) => m[(k / cols, k % cols)] = x,
                VarKind::Sym(n) => {
                    let (i, j) = sym_index(n, k);
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
        }
        m
    }
}

fn sym_index(n: usize, mut k: usize) -> (usize, usize) {
    for i in 0..n {
        let row_len = n - i;
        if k < row_len {
            return (i, i + k);
        }
        k -= row_len;
    }
    panic!("symmetric component index out of range")
}

/// Decision variable declaration. Optional bounds apply to every scalar
/// component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec<T> {
    pub id: String,
    pub kind: VarKind,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: Real> VariableSpec<T> {
    pub fn new(id: &str, kind: VarKind) -> Self {
        Self { id: id.to_string(), kind, lower: None, upper: None }
    }

    pub fn scalar(id: &str) -> Self {
        Self::new(id, VarKind::Scalar)
    }

    pub fn sym(id: &str, n: usize) -> Self {
        Self::new(id, VarKind::Sym(n))
    }

    pub fn rect(id: &str, rows: usize, cols: usize) -> Self {
        Self::new(id, VarKind::Rect(rows, cols))
    }

    pub fn bounded(mut self, lower: Option<T>, upper: Option<T>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }
}

/// Values for decision variables, keyed by id. Scalars are stored as `1×1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment<T> {
    values: BTreeMap<String, Matrix<T>>,
}

impl<T: Real> Assignment<T> {
    pub fn new() -> Self {
        Self { values: BTreeMap::new() }
    }

    pub fn with(mut self, id: &str, value: Matrix<T>) -> Self {
        self.values.insert(id.to_string(), value);
        self
    }

    pub fn with_scalar(self, id: &str, value: T) -> Self {
        self.with(id, Matrix::from_rows(&[[value]]))
    }

    pub fn with_sym(self, id: &str, value: &SymMatrix<T>) -> Self {
        self.with(id, value.as_matrix().clone())
    }

    pub fn insert(&mut self, id: &str, value: Matrix<T>) {
        self.values.insert(id.to_string(), value);
    }

    pub fn get(&self, id: &str) -> Option<&Matrix<T>> {
        self.values.get(id)
    }

    pub fn matrix(&self, id: &str) -> Result<&Matrix<T>> {
        self.values.get(id).ok_or_else(|| Error::UnknownVariable(id.to_string()))
    }

    pub fn scalar(&self, id: &str) -> Result<T> {
        let m = self.matrix(id)?;
        if m.shape() != (1, 1) {
            return Err(Error::DimensionMismatch(format!("`{id}` is not a scalar")));
        }
        Ok(m[(0, 0)])
    }

    pub fn sym(&self, id: &str) -> Result<SymMatrix<T>> {
        Ok(SymMatrix::symmetrize(self.matrix(id)?))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Rectangular affine matrix function `C0 + Σ_k x_k C_k` used while
/// assembling block LMIs.
#[derive(Clone, Debug)]
pub struct Affine<T> {
    constant: Matrix<T>,
    terms: BTreeMap<String, Vec<Matrix<T>>>,
}

impl<T: Real> Affine<T> {
    pub fn constant(m: Matrix<T>) -> Self {
        Self { constant: m, terms: BTreeMap::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(Matrix::zeros(rows, cols))
    }

    pub fn var(spec: &VariableSpec<T>) -> Self {
        let (r, c) = spec.kind.shape();
        let coeffs = (0..spec.kind.components()).map(|k| spec.kind.basis(k)).collect();
        let mut terms = BTreeMap::new();
        terms.insert(spec.id.clone(), coeffs);
        Self { constant: Matrix::zeros(r, c), terms }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    fn map_all(&self, f: impl Fn(&Matrix<T>) -> Matrix<T>) -> Self {
        Self {
            constant: f(&self.constant),
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v.iter().map(&f).collect())).collect(),
        }
    }

    /// `lhs · self`.
    pub fn lmul(&self, lhs: &Matrix<T>) -> Self {
        self.map_all(|m| lhs.matmul(m))
    }

    /// `self · rhs`.
    pub fn rmul(&self, rhs: &Matrix<T>) -> Self {
        self.map_all(|m| m.matmul(rhs))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map_all(|m| m.scale(s))
    }

    pub fn transpose(&self) -> Self {
        self.map_all(Matrix::transpose)
    }

    /// `self ⊗ m` for a `1×1` expression: a scalar-valued affine function times
    /// a constant matrix.
    pub fn times_matrix(&self, m: &Matrix<T>) -> Self {
        assert_eq!(self.shape(), (1, 1), "times_matrix needs a scalar expression");
        self.map_all(|s| m.scale(s[(0, 0)]))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "affine add: shape mismatch");
        let mut out = self.clone();
        out.constant = &out.constant + &other.constant;
        for (id, coeffs) in &other.terms {
            match out.terms.get_mut(id) {
                Some(mine) => {
                    for (a, b) in mine.iter_mut().zip(coeffs) {
                        *a = &*a + b;
                    }
                }
                None => {
                    out.terms.insert(id.clone(), coeffs.clone());
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn add_const(&self, m: &Matrix<T>) -> Self {
        let mut out = self.clone();
        out.constant = &out.constant + m;
        out
    }

    /// Block assembly; `None` entries are zero blocks.
    pub fn blocks(blocks: &[Vec<Option<&Self>>]) -> Result<Self> {
        let consts: Vec<Vec<Option<&Matrix<T>>>> =
            blocks.iter().map(|row| row.iter().map(|b| b.map(|a| &a.constant)).collect()).collect();
        let constant = Matrix::from_blocks(&consts)?;
        let mut ids: Vec<(String, usize)> = Vec::new();
        for row in blocks {
            for b in row.iter().flatten() {
                for (id, coeffs) in &b.terms {
                    match ids.iter().find(|(i, _)| i == id) {
                        Some((_, count)) if *count != coeffs.len() => {
                            return Err(Error::DimensionMismatch(format!("variable `{id}` used with two different sizes")))
                        }
                        Some(_) => {}
                        None => ids.push((id.clone(), coeffs.len())),
                    }
                }
            }
        }
        let mut terms = BTreeMap::new();
        for (id, count) in ids {
            let mut coeffs = Vec::with_capacity(count);
            for k in 0..count {
                let zero_blocks: Vec<Vec<Option<Matrix<T>>>> = blocks
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|b| {
                                b.map(|a| match a.terms.get(&id) {
                                    Some(c) => c[k].clone(),
                                    None => Matrix::zeros(a.constant.rows(), a.constant.cols()),
                                })
                            })
                            .collect()
                    })
                    .collect();
                let refs: Vec<Vec<Option<&Matrix<T>>>> =
                    zero_blocks.iter().map(|row| row.iter().map(Option::as_ref).collect()).collect();
                coeffs.push(Matrix::from_blocks(&refs)?);
            }
            terms.insert(id, coeffs);
        }
        Ok(Self { constant, terms })
    }

    pub fn evaluate(&self, a: &Assignment<T>) -> Result<Matrix<T>> {
        let mut out = self.constant.clone();
        for (id, coeffs) in &self.terms {
            let value = a.matrix(id)?;
            let comps = kind_for(coeffs.len(), value).pack(value)?;
            for (c, x) in coeffs.iter().zip(comps) {
                out = &out + &c.scale(x);
            }
        }
        Ok(out)
    }
}

// Recovers a variable kind from the value shape and the coefficient count.
fn kind_for<T: Real>(count: usize, value: &Matrix<T>) -> VarKind {
    let (r, c) = value.shape();
    if (r, c) == (1, 1) {
        VarKind::Scalar
    } else if r == c && count == r * (r + 1) / 2 {
        VarKind::Sym(r)
    } else {
        VarKind::Rect(r, c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `M ⪰ 0`
    Psd,
    /// `M ⪯ 0`
    Nsd,
    /// `M ≻ 0`
    Pd,
    /// `M ≺ 0`
    Nd,
}

impl Sense {
    pub fn is_strict(self) -> bool {
        matches!(self, Sense::Pd | Sense::Nd)
    }

    fn sign<T: Real>(self) -> T {
        match self {
            Sense::Psd | Sense::Pd => T::one(),
            Sense::Nsd | Sense::Nd => -T::one(),
        }
    }
}

/// Linear matrix inequality `F0 + Σ x_k F_k  (sense)  0`.
#[derive(Clone, Debug)]
pub struct LmiExpr<T> {
    pub name: String,
    pub constant: SymMatrix<T>,
    /// Per variable: one symmetric coefficient per scalar component.
    pub terms: Vec<(String, Vec<SymMatrix<T>>)>,
    pub sense: Sense,
    pub margin: T,
}

impl<T: Real> LmiExpr<T> {
    /// Symmetrizes a square affine expression into an LMI. Strict senses get
    /// the default relative margin.
    pub fn from_affine(name: &str, expr: &Affine<T>, sense: Sense) -> Result<Self> {
        let (r, c) = expr.shape();
        if r != c {
            return Err(Error::DimensionMismatch(format!("LMI `{name}` is {r}x{c}")));
        }
        let constant = SymMatrix::symmetrize(&expr.constant);
        let terms = expr
            .terms
            .iter()
            .map(|(id, coeffs)| (id.clone(), coeffs.iter().map(SymMatrix::symmetrize).collect()))
            .collect();
        let margin = if sense.is_strict() {
            let scale = constant.as_matrix().max_abs();
            let scale = if scale > T::zero() { scale } else { T::one() };
            T::lit(STRICT_MARGIN_REL) * scale
        } else {
            T::zero()
        };
        Ok(Self { name: name.to_string(), constant, terms, sense, margin })
    }

    pub fn with_margin(mut self, margin: T) -> Self {
        self.margin = margin;
        self
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    pub fn variable_ids(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(id, _)| id.as_str())
    }

    /// The raw matrix `F(x)`.
    pub fn evaluate(&self, a: &Assignment<T>) -> Result<SymMatrix<T>> {
        let mut out = self.constant.clone();
        for (id, coeffs) in &self.terms {
            let value = a.matrix(id)?;
            let comps = kind_for(coeffs.len(), value).pack(value)?;
            for (c, x) in coeffs.iter().zip(comps) {
                if !x.is_zero() {
                    out = &out + &c.scale(x);
                }
            }
        }
        Ok(out)
    }

    /// `±F(x) − margin·I`, which must be PSD for the constraint to hold.
    pub fn canonical(&self, a: &Assignment<T>) -> Result<SymMatrix<T>> {
        Ok(self.evaluate(a)?.scale(self.sense.sign()).shift_diagonal(-self.margin))
    }

    /// `max(0, −λ_min(canonical))`; zero means satisfied.
    pub fn violation(&self, a: &Assignment<T>) -> Result<T> {
        Ok((-self.canonical(a)?.min_eigenvalue()).max(T::zero()))
    }

    /// Whether the constraint holds up to an absolute eigenvalue slack.
    pub fn holds(&self, a: &Assignment<T>, tol: T) -> Result<bool> {
        Ok(self.violation(a)? <= tol)
    }
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha.as_f64()))
    }
}

pub fn q_spec<T: Real>(m: &PlantModel<T>) -> VariableSpec<T> {
    VariableSpec::sym(Q_ID, m.n())
}

/// `A·Q + Q·Aᵀ + α·Q` with `Q` the named symmetric variable.
fn lyapunov_term<T: Real>(a: &Matrix<T>, q: &Affine<T>, alpha: T) -> Affine<T> {
    q.lmul(a).add(&q.rmul(&a.transpose())).add(&q.scale(alpha))
}

/// Invariant-ellipsoid condition for the open-loop plant:
/// `[[A·Q + Q·Aᵀ + α·Q, B_w], [B_wᵀ, −α·I]] ⪯ 0`.
pub fn lmi_open_loop<T: Real>(m: &PlantModel<T>, alpha: T) -> Result<LmiExpr<T>> {
    check_alpha(alpha)?;
    let q = Affine::var(&q_spec(m));
    let tl = lyapunov_term(&m.a, &q, alpha);
    let bw = Affine::constant(m.b_w.clone());
    let bwt = bw.transpose();
    let br = Affine::constant(Matrix::identity(m.disturbance_dim()).scale(-alpha));
    let blk = Affine::blocks(&[vec![Some(&tl), Some(&bw)], vec![Some(&bwt), Some(&br)]])?;
    LmiExpr::from_affine("open_loop_invariance", &blk, Sense::Nsd)
}

/// Output bound `[[λ·I, C·Q], [Q·Cᵀ, Q]] ⪰ 0`, equivalent to `λ ≥ λ_max(C·Q·Cᵀ)`
/// for `Q ≻ 0`.
pub fn lmi_output_bound<T: Real>(m: &PlantModel<T>, lambda_id: &str, q_id: &str) -> Result<LmiExpr<T>> {
    let p = m.output_dim();
    let lam = Affine::var(&VariableSpec::scalar(lambda_id)).times_matrix(&Matrix::identity(p));
    let q = Affine::var(&VariableSpec::sym(q_id, m.n()));
    let cq = q.lmul(&m.c);
    let qct = cq.transpose();
    let blk = Affine::blocks(&[vec![Some(&lam), Some(&cq)], vec![Some(&qct), Some(&q)]])?;
    LmiExpr::from_affine("output_bound", &blk, Sense::Psd)
}

/// Closed-loop invariance under `u = −(v/2)·B_uᵀ·Q⁻¹·x`:
/// `[[A·Q + Q·Aᵀ − v·B_u·B_uᵀ + α·Q, B_w], [B_wᵀ, −α·I]] ⪯ 0`.
pub fn lmi_fs_closed_loop<T: Real>(m: &PlantModel<T>, alpha: T) -> Result<LmiExpr<T>> {
    check_alpha(alpha)?;
    let q = Affine::var(&q_spec(m));
    let v = Affine::var(&VariableSpec::scalar(V_ID));
    let bbt = m.b_u.matmul(&m.b_u.transpose());
    let tl = lyapunov_term(&m.a, &q, alpha).sub(&v.times_matrix(&bbt));
    let bw = Affine::constant(m.b_w.clone());
    let bwt = bw.transpose();
    let br = Affine::constant(Matrix::identity(m.disturbance_dim()).scale(-alpha));
    let blk = Affine::blocks(&[vec![Some(&tl), Some(&bw)], vec![Some(&bwt), Some(&br)]])?;
    LmiExpr::from_affine("closed_loop_invariance", &blk, Sense::Nsd)
}

/// Input bound inside the ellipsoid: `[[4·Q, v·B_u], [v·B_uᵀ, u_max²·I]] ≻ 0`.
pub fn lmi_fs_input_bound<T: Real>(m: &PlantModel<T>, u_max: T) -> Result<LmiExpr<T>> {
    if !(u_max > T::zero()) {
        return Err(Error::InvalidParams("u_max must be positive".into()));
    }
    let q = Affine::var(&q_spec(m)).scale(T::lit(4.0));
    let vb = Affine::var(&VariableSpec::scalar(V_ID)).times_matrix(&m.b_u);
    let vbt = vb.transpose();
    let br = Affine::constant(Matrix::identity(m.input_dim()).scale(u_max * u_max));
    let blk = Affine::blocks(&[vec![Some(&q), Some(&vb)], vec![Some(&vbt), Some(&br)]])?;
    LmiExpr::from_affine("input_bound", &blk, Sense::Pd)
}

fn check_pd<T: Real>(p: &SymMatrix<T>, what: &str) -> Result<()> {
    if p.cholesky().is_none() {
        return Err(Error::BadInput(format!("{what} must be positive definite")));
    }
    Ok(())
}

pub fn s_spec<T: Real>(m: &PlantModel<T>) -> VariableSpec<T> {
    VariableSpec::sym(S_ID, m.n())
}

pub fn w_spec<T: Real>(m: &PlantModel<T>) -> VariableSpec<T> {
    VariableSpec::rect(W_ID, m.n(), m.output_dim())
}

/// Observer-error invariance with the control scaled by `r`, affine in
/// `(S, W)`; `P = Q⁻¹` from the state-feedback design. The observer gain is
/// `L = S⁻¹·W`.
pub fn lmi_of_closed_loop<T: Real>(
    m: &PlantModel<T>,
    p: &SymMatrix<T>,
    v: T,
    alpha: T,
    r: T,
) -> Result<LmiExpr<T>> {
    check_alpha(alpha)?;
    check_pd(p, "P")?;
    if !(r >= T::one()) {
        return Err(Error::BadInput(format!("scaling r must be >= 1, got {r}")));
    }
    let pm = p.as_matrix();
    let pb = pm.matmul(&m.b_u);
    let pbbp = pb.matmul(&pb.transpose());
    let tl = &(&(&pm.matmul(&m.a) + &m.a.transpose().matmul(pm)) - &pbbp.scale(r * v)) + &pm.scale(alpha);
    let tm = pbbp.scale(r * v * T::half());
    let tr = pm.matmul(&m.b_w);

    let s = Affine::var(&s_spec(m));
    let w = Affine::var(&w_spec(m));
    let wc = w.rmul(&m.c);
    let mid = s.rmul(&m.a).add(&s.lmul(&m.a.transpose())).sub(&wc).sub(&wc.transpose()).add(&s.scale(alpha));
    let sbw = s.rmul(&m.b_w);

    let tl = Affine::constant(tl);
    let tm = Affine::constant(tm);
    let tmt = tm.transpose();
    let tr = Affine::constant(tr);
    let trt = tr.transpose();
    let sbwt = sbw.transpose();
    let br = Affine::constant(Matrix::identity(m.disturbance_dim()).scale(-alpha));
    let blk = Affine::blocks(&[
        vec![Some(&tl), Some(&tm), Some(&tr)],
        vec![Some(&tmt), Some(&mid), Some(&sbw)],
        vec![Some(&trt), Some(&sbwt), Some(&br)],
    ])?;
    LmiExpr::from_affine("observer_invariance", &blk, Sense::Nsd)
}

/// Input bound on the augmented `(x, e)` ellipsoid, affine in `S`:
/// `[[P, 0, −(v/2)·P·B_u], [0, S, (v/2)·P·B_u], [·, ·, u_max²·I]] ≻ 0`.
pub fn lmi_of_input_bound<T: Real>(p: &SymMatrix<T>, v: T, b_u: &Matrix<T>, u_max: T) -> Result<LmiExpr<T>> {
    check_pd(p, "P")?;
    if !(u_max > T::zero()) {
        return Err(Error::InvalidParams("u_max must be positive".into()));
    }
    let n = p.dim();
    let pb = p.as_matrix().matmul(b_u).scale(v * T::half());
    let pa = Affine::constant(p.as_matrix().clone());
    let s = Affine::var(&VariableSpec::sym(S_ID, n));
    let neg = Affine::constant(pb.scale(-T::one()));
    let pos = Affine::constant(pb.clone());
    let negt = neg.transpose();
    let post = pos.transpose();
    let br = Affine::constant(Matrix::identity(b_u.cols()).scale(u_max * u_max));
    let blk = Affine::blocks(&[
        vec![Some(&pa), None, Some(&neg)],
        vec![None, Some(&s), Some(&pos)],
        vec![Some(&negt), Some(&post), Some(&br)],
    ])?;
    LmiExpr::from_affine("observer_input_bound", &blk, Sense::Pd)
}

/// Error-output bound `[[θ·I, C], [Cᵀ, S]] ⪰ 0`.
pub fn lmi_error_output_bound<T: Real>(m: &PlantModel<T>, theta_id: &str, s_id: &str) -> Result<LmiExpr<T>> {
    let th = Affine::var(&VariableSpec::scalar(theta_id)).times_matrix(&Matrix::identity(m.output_dim()));
    let c = Affine::constant(m.c.clone());
    let ct = c.transpose();
    let s = Affine::var(&VariableSpec::sym(s_id, m.n()));
    let blk = Affine::blocks(&[vec![Some(&th), Some(&c)], vec![Some(&ct), Some(&s)]])?;
    LmiExpr::from_affine("error_output_bound", &blk, Sense::Psd)
}

/// `x ≥ 0` for a scalar variable, as a `1×1` LMI.
pub fn lmi_nonnegative<T: Real>(id: &str) -> Result<LmiExpr<T>> {
    LmiExpr::from_affine(&format!("{id}_nonnegative"), &Affine::var(&VariableSpec::scalar(id)), Sense::Psd)
}

/// `X ⪰ 0` (or `≻ 0` when `strict`) for a symmetric variable.
pub fn lmi_psd_var<T: Real>(id: &str, n: usize, strict: bool) -> Result<LmiExpr<T>> {
    let sense = if strict { Sense::Pd } else { Sense::Psd };
    let expr = LmiExpr::from_affine(&format!("{id}_psd"), &Affine::var(&VariableSpec::sym(id, n)), sense)?;
    // a zero constant block gives no scale; use a fixed absolute margin
    Ok(if strict { expr.with_margin(T::lit(STRICT_MARGIN_REL)) } else { expr })
}

/// Spectral-norm bound `‖X‖₂ ≤ bound` on a rectangular variable:
/// `[[bound·I, X], [Xᵀ, bound·I]] ⪰ 0`.
pub fn lmi_norm_bound<T: Real>(id: &str, rows: usize, cols: usize, bound: T) -> Result<LmiExpr<T>> {
    if !(bound > T::zero()) {
        return Err(Error::InvalidParams(format!("norm bound must be positive, got {bound}")));
    }
    let x = Affine::var(&VariableSpec::rect(id, rows, cols));
    let xt = x.transpose();
    let tl = Affine::constant(Matrix::identity(rows).scale(bound));
    let br = Affine::constant(Matrix::identity(cols).scale(bound));
    let blk = Affine::blocks(&[vec![Some(&tl), Some(&x)], vec![Some(&xt), Some(&br)]])?;
    LmiExpr::from_affine(&format!("{id}_norm_bound"), &blk, Sense::Psd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_PSD_TOL;
    use proptest::prelude::*;

    fn scalar_plant(a: f64, bw: f64, bu: f64, c: f64) -> PlantModel<f64> {
        PlantModel::new(
            Matrix::<f64>::from_f64_rows(&[[a]]),
            Matrix::<f64>::from_f64_rows(&[[bw]]),
            Matrix::<f64>::from_f64_rows(&[[bu]]),
            Matrix::<f64>::from_f64_rows(&[[c]]),
        )
        .unwrap()
    }

    fn one(x: f64) -> Matrix<f64> {
        Matrix::<f64>::from_f64_rows(&[[x]])
    }

    fn eig(m: &SymMatrix<f64>) -> Vec<f64> {
        m.eigenvalues()
    }

    #[test]
    fn var_kind_pack_roundtrip() {
        let k = VarKind::Sym(3);
        let m = Matrix::<f64>::from_f64_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]);
        let comps = k.pack(&m).unwrap();
        assert_eq!(comps, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(k.unpack(&comps), m);
    }

    #[test]
    fn open_loop_scalar_example() {
        let m = scalar_plant(-1.0, 1.0, 0.0, 1.0);
        let lmi = lmi_open_loop(&m, 1.0).unwrap();
        let x = Assignment::new().with(Q_ID, one(1.0));
        let val = lmi.evaluate(&x).unwrap();
        assert_eq!(val, SymMatrix::from_f64_rows(&[[-1.0, 1.0], [1.0, -1.0]]).unwrap());
        let e = eig(&val);
        assert!((e[0] + 2.0).abs() < 1e-14 && e[1].abs() < 1e-14);
        assert!(lmi.holds(&x, 1e-12).unwrap());
    }

    #[test]
    fn open_loop_zero_q_fails() {
        let m = scalar_plant(-1.0, 1.0, 0.0, 1.0);
        let lmi = lmi_open_loop(&m, 1.0).unwrap();
        let x = Assignment::new().with(Q_ID, one(0.0));
        assert!(lmi.violation(&x).unwrap() > 0.1);
    }

    #[test]
    fn open_loop_decoupled_holds() {
        let m = PlantModel::new(
            Matrix::identity(2).scale(-1.0),
            Matrix::zeros(2, 1),
            Matrix::zeros(2, 1),
            Matrix::<f64>::from_f64_rows(&[[1.0, 0.0]]),
        )
        .unwrap();
        let lmi = lmi_open_loop(&m, 1.0).unwrap();
        let val = lmi.evaluate(&Assignment::new().with(Q_ID, Matrix::identity(2))).unwrap();
        assert_eq!(val, SymMatrix::diagonal(&[-1.0, -1.0, -1.0]));
    }

    #[test]
    fn bad_alpha_rejected() {
        let m = scalar_plant(-1.0, 1.0, 0.0, 1.0);
        assert!(matches!(lmi_open_loop(&m, 0.0), Err(Error::BadAlpha(_))));
        assert!(matches!(lmi_fs_closed_loop(&m, -1.0), Err(Error::BadAlpha(_))));
    }

    #[test]
    fn output_bound_examples() {
        let m = scalar_plant(-1.0, 1.0, 0.0, 1.0);
        let lmi = lmi_output_bound(&m, LAMBDA_ID, Q_ID).unwrap();
        let at = |lam: f64, q: f64| Assignment::new().with_scalar(LAMBDA_ID, lam).with(Q_ID, one(q));
        let v = lmi.evaluate(&at(4.0, 4.0)).unwrap();
        assert_eq!(v, SymMatrix::from_f64_rows(&[[4.0, 4.0], [4.0, 4.0]]).unwrap());
        assert!(lmi.holds(&at(4.0, 4.0), 1e-12).unwrap());
        assert!(lmi.holds(&at(1e6, 1.0), 0.0).unwrap());
        assert!(!lmi.holds(&at(0.0, 1.0), 1e-9).unwrap());
    }

    #[test]
    fn closed_loop_reduces_to_open_loop() {
        let m = build_paper();
        let alpha = 2.5;
        let ol = lmi_open_loop(&m, alpha).unwrap();
        let cl = lmi_fs_closed_loop(&m, alpha).unwrap();
        let q = Matrix::<f64>::from_f64_rows(&[[0.3, -0.1], [-0.1, 2.0]]);
        let x = Assignment::new().with(Q_ID, q).with_scalar(V_ID, 0.0);
        assert_eq!(ol.evaluate(&x).unwrap(), cl.evaluate(&x).unwrap());

        let no_input = m.clone().with_input_matrix(Matrix::zeros(2, 1)).unwrap();
        let cl0 = lmi_fs_closed_loop(&no_input, alpha).unwrap();
        let x = x.with_scalar(V_ID, 3.7);
        assert_eq!(ol.evaluate(&x).unwrap(), cl0.evaluate(&x).unwrap());
    }

    #[test]
    fn closed_loop_scalar_example() {
        let m = scalar_plant(0.0, 1.0, 1.0, 1.0);
        let lmi = lmi_fs_closed_loop(&m, 1.0).unwrap();
        let x = Assignment::new().with(Q_ID, one(1.0)).with_scalar(V_ID, 2.0);
        let val = lmi.evaluate(&x).unwrap();
        assert_eq!(val, SymMatrix::from_f64_rows(&[[-1.0, 1.0], [1.0, -1.0]]).unwrap());
        assert!(lmi.holds(&x, 1e-12).unwrap());
    }

    #[test]
    fn norm_bound_matches_singular_value() {
        let lmi = lmi_norm_bound::<f64>("X", 2, 1, 5.0).unwrap();
        let inside = Assignment::new().with("X", Matrix::column(&[3.0, 4.0]));
        assert!(lmi.holds(&inside, 1e-12).unwrap());
        let outside = Assignment::new().with("X", Matrix::column(&[3.0, 4.1]));
        assert!(!lmi.holds(&outside, 1e-6).unwrap());
        assert!(lmi_norm_bound::<f64>("X", 2, 1, 0.0).is_err());
    }

    #[test]
    fn input_bound_examples() {
        let m = scalar_plant(0.0, 1.0, 1.0, 1.0);
        let lmi = lmi_fs_input_bound(&m, 1.0).unwrap();
        assert!(lmi.margin > 0.0);
        let at = |q: f64, v: f64| Assignment::new().with(Q_ID, one(q)).with_scalar(V_ID, v);
        // det = 4 − v²
        let boundary = lmi.violation(&at(1.0, 2.0)).unwrap();
        assert!((boundary - lmi.margin).abs() < 1e-15, "boundary reported as the margin");
        assert!(lmi.holds(&at(1.0, 1.9), 0.0).unwrap());

        let m2 = build_paper();
        let lmi2 = lmi_fs_input_bound(&m2, 0.7).unwrap();
        let v = lmi2.evaluate(&Assignment::new().with(Q_ID, Matrix::identity(2)).with_scalar(V_ID, 0.0)).unwrap();
        assert!((v.as_matrix() - SymMatrix::diagonal(&[4.0, 4.0, 0.49]).as_matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn of_input_bound_examples() {
        let p = SymMatrix::identity(1);
        let bu = one(1.0);
        let lmi = lmi_of_input_bound(&p, 1.0, &bu, 1.0).unwrap();
        let x = Assignment::new().with(S_ID, one(1.0));
        let val = lmi.evaluate(&x).unwrap();
        let want = SymMatrix::from_f64_rows(&[[1.0, 0.0, -0.5], [0.0, 1.0, 0.5], [-0.5, 0.5, 1.0]]).unwrap();
        assert_eq!(val, want);
        // eigenvalues 1 − 1/√2, 1, 1 + 1/√2
        let e = eig(&val);
        assert!((e[0] - (1.0 - 0.5f64.sqrt())).abs() < 1e-14);
        assert!(lmi.holds(&x, 0.0).unwrap());

        let v0 = lmi_of_input_bound(&p, 0.0, &bu, 2.0).unwrap();
        assert!(v0.holds(&Assignment::new().with(S_ID, one(0.5)), 0.0).unwrap());
        assert!(!v0.holds(&Assignment::new().with(S_ID, one(-0.5)), 0.0).unwrap());

        let tiny = lmi_of_input_bound(&p, 1.0, &bu, 1e-6).unwrap();
        assert!(!tiny.holds(&Assignment::new().with(S_ID, one(1e3)), 0.0).unwrap());

        assert!(matches!(lmi_of_input_bound(&SymMatrix::zeros(1), 1.0, &bu, 1.0), Err(Error::BadInput(_))));
    }

    #[test]
    fn error_output_bound_examples() {
        let m = build_paper();
        let lmi = lmi_error_output_bound(&m, THETA_ID, S_ID).unwrap();
        let at = |th: f64, s: Matrix<f64>| Assignment::new().with_scalar(THETA_ID, th).with(S_ID, s);
        let x = at(1.0, Matrix::identity(2));
        assert!(lmi.violation(&x).unwrap() < 1e-15);
        let canon = lmi.canonical(&x).unwrap();
        assert!(canon.min_eigenvalue().abs() < 1e-15);
        assert!(!lmi.holds(&at(0.0, Matrix::identity(2)), 1e-9).unwrap());

        let blind = m.with_output(Matrix::zeros(1, 2)).unwrap();
        let lmi0 = lmi_error_output_bound(&blind, THETA_ID, S_ID).unwrap();
        assert!(lmi0.holds(&at(0.0, Matrix::zeros(2, 2)), 0.0).unwrap());
        assert!(lmi0.holds(&at(3.0, Matrix::identity(2)), 0.0).unwrap());
    }

    #[test]
    fn of_closed_loop_r1_decoupled() {
        let m = build_paper();
        let p = SymMatrix::from_f64_rows(&[[2.0, 0.1], [0.1, 0.5]]).unwrap();
        let lmi = lmi_of_closed_loop(&m, &p, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(lmi.dim(), 5);
        let s = Matrix::<f64>::from_f64_rows(&[[1.0, 0.2], [0.2, 3.0]]);
        let x = Assignment::new().with(S_ID, s.clone()).with(W_ID, Matrix::zeros(2, 1));
        let val = lmi.evaluate(&x).unwrap();
        let mid = val.principal_block(2, 2);
        let want = &(&s.matmul(&m.a) + &m.a.transpose().matmul(&s)) + &s;
        assert!((mid.as_matrix() - &want).max_abs() < 1e-14);
        assert!(lmi_of_closed_loop(&m, &p, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn exact_symmetry_of_evaluations() {
        let m = build_paper();
        let lmi = lmi_fs_closed_loop(&m, 1.3).unwrap();
        let q = Matrix::<f64>::from_f64_rows(&[[0.123456789, -0.98765], [-0.98765, 7.1]]);
        let val = lmi.evaluate(&Assignment::new().with(Q_ID, q).with_scalar(V_ID, 0.31)).unwrap();
        let raw = val.as_matrix();
        assert_eq!(raw, &raw.transpose());
    }

    fn build_paper() -> PlantModel<f64> {
        crate::model::build_frequency_model(
            &crate::model::FrequencyParams::paper(),
            crate::model::BuConvention::PaperLiteral,
        )
        .unwrap()
    }

    fn sym2(a: f64, b: f64, c: f64) -> Matrix<f64> {
        Matrix::<f64>::from_f64_rows(&[[a, b], [b, c]])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn lmis_are_affine(
            q1 in proptest::array::uniform3(-2.0f64..2.0),
            q2 in proptest::array::uniform3(-2.0f64..2.0),
            v1 in -1.0f64..1.0, v2 in -1.0f64..1.0,
            alpha in 0.01f64..10.0,
        ) {
            let m = build_paper();
            let lmi = lmi_fs_closed_loop(&m, alpha).unwrap();
            let x = Assignment::new().with(Q_ID, sym2(q1[0], q1[1], q1[2])).with_scalar(V_ID, v1);
            let y = Assignment::new().with(Q_ID, sym2(q2[0], q2[1], q2[2])).with_scalar(V_ID, v2);
            let mid = Assignment::new()
                .with(Q_ID, sym2((q1[0] + q2[0]) / 2.0, (q1[1] + q2[1]) / 2.0, (q1[2] + q2[2]) / 2.0))
                .with_scalar(V_ID, (v1 + v2) / 2.0);
            let fx = lmi.evaluate(&x).unwrap();
            let fy = lmi.evaluate(&y).unwrap();
            let fm = lmi.evaluate(&mid).unwrap();
            let avg = (fx.as_matrix() + fy.as_matrix()).scale(0.5);
            let scale = 1.0f64.max(fx.as_matrix().max_abs()).max(fy.as_matrix().max_abs());
            prop_assert!((fm.as_matrix() - &avg).max_abs() <= 1e-14 * scale);
        }

        #[test]
        fn input_bound_matches_schur_form(
            l in proptest::array::uniform3(-1.0f64..1.0),
            v in 0.0f64..0.2,
        ) {
            // Q = L Lᵀ + 0.05 I is well conditioned and PD
            let lm = Matrix::<f64>::from_f64_rows(&[[l[0], 0.0], [l[1], l[2]]]);
            let q = &lm.matmul(&lm.transpose()) + &Matrix::identity(2).scale(0.05);
            let m = build_paper();
            let u_max = 0.05;
            let lmi = lmi_fs_input_bound(&m, u_max).unwrap().with_margin(0.0);
            let full = lmi.evaluate(&Assignment::new().with(Q_ID, q.clone()).with_scalar(V_ID, v)).unwrap();
            let bbt = m.b_u.matmul(&m.b_u.transpose());
            let schur = SymMatrix::symmetrize(&(&q.scale(4.0) - &bbt.scale(v * v / (u_max * u_max))));
            let lhs = full.min_eigenvalue();
            let rhs = schur.min_eigenvalue();
            // skip samples sitting on the boundary within rounding
            prop_assume!(lhs.abs() > 1e-12 && rhs.abs() > 1e-12);
            prop_assert_eq!(lhs > 0.0, rhs > 0.0);
            // and the generic Schur routine agrees
            let via = full.schur_complement(2).unwrap();
            prop_assert_eq!(via.is_psd(DEFAULT_PSD_TOL * 1e-3), schur.is_psd(DEFAULT_PSD_TOL * 1e-3));
        }
    }
}
