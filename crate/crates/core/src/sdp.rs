//! Small dense semidefinite programs solved by a log-barrier interior-point
//! method.
//!
//! Every constraint is brought to the canonical form `G(x) = G0 + Σ x_i G_i ⪰ 0`
//! (NSD constraints are negated, strict ones shifted by their margin) and the
//! solver minimizes `t·cᵀx − Σ log det G_j(x)` by damped Newton steps for an
//! increasing sequence of `t`. A strictly feasible start is found by a
//! Phase-I problem `min s  s.t.  G_j(x) + s·I ⪰ 0`; if its optimum is
//! certified positive the problem is reported infeasible together with that
//! margin.

use std::collections::BTreeMap;

use log::{debug, trace};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::lmi::{Assignment, LmiExpr, VariableSpec};
use crate::scalar::Real;

const NEWTON_TOL: f64 = 1e-10;
const MAX_NEWTON_PER_CENTERING: usize = 80;
const ARMIJO: f64 = 0.01;
const BACKTRACK: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    /// Largest eigenvalue shortfall accepted on any constraint at the returned
    /// point.
    pub feasibility_tol: T,
    /// Target duality-gap bound `m/t`, relative to `max(1, |objective|)`.
    pub step_tol: T,
    /// Cap on outer (barrier-parameter) iterations per phase.
    pub max_iterations: usize,
    /// Factor applied to `1/t` after each centering step, in `(0, 1)`.
    pub barrier_shrink: T,
    /// Box `|x_i| ≤ variable_bound` for components without explicit bounds.
    pub variable_bound: Option<T>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            feasibility_tol: T::lit(1e-8),
            step_tol: T::lit(1e-10),
            max_iterations: 200,
            barrier_shrink: T::lit(0.2),
            variable_bound: Some(T::lit(1e6)),
        }
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.feasibility_tol > T::zero()
            && self.step_tol > T::zero()
            && self.max_iterations > 0
            && self.barrier_shrink > T::zero()
            && self.barrier_shrink < T::one()
            && self.variable_bound.is_none_or(|b| b > T::zero());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("solver options out of range".into()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution<T> {
    pub status: SdpStatus,
    pub assignment: Assignment<T>,
    pub objective_value: T,
    /// Largest violation over constraints, measured by [`check_feasible`].
    pub max_constraint_violation: T,
    /// Total Newton steps over both phases.
    pub iterations: usize,
    /// Bound `m/t` on the distance to the optimum at the returned point.
    pub duality_gap_bound: T,
    /// Phase-I optimum `s*` when the problem was found infeasible.
    pub infeasibility_margin: Option<T>,
}

impl<T: Real> SdpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// `minimize Σ c·x  subject to  LMIs`.
#[derive(Clone, Debug)]
pub struct SdpProblem<T> {
    pub variables: Vec<VariableSpec<T>>,
    /// One coefficient per scalar component of the named variable.
    pub objective: Vec<(String, Vec<T>)>,
    pub constraints: Vec<LmiExpr<T>>,
    pub options: SolverOptions<T>,
    /// Optional starting point for Phase I.
    pub start: Option<Assignment<T>>,
}

impl<T: Real> Default for SdpProblem<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> SdpProblem<T> {
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            options: SolverOptions::default(),
            start: None,
        }
    }

    pub fn variable(mut self, spec: VariableSpec<T>) -> Self {
        self.variables.push(spec);
        self
    }

    pub fn constraint(mut self, lmi: LmiExpr<T>) -> Self {
        self.constraints.push(lmi);
        self
    }

    /// Adds `coeffs · components(id)` to the objective.
    pub fn minimize(mut self, id: &str, coeffs: Vec<T>) -> Self {
        self.objective.push((id.to_string(), coeffs));
        self
    }

    /// Minimizes a scalar variable.
    pub fn minimize_scalar(self, id: &str) -> Self {
        self.minimize(id, vec![T::one()])
    }

    pub fn with_options(mut self, options: SolverOptions<T>) -> Self {
        self.options = options;
        self
    }

    pub fn with_start(mut self, start: Assignment<T>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn scalar_count(&self) -> usize {
        self.variables.iter().map(|v| v.kind.components()).sum()
    }

    /// Checks declared-variable references and coefficient counts.
    pub fn validate(&self) -> Result<()> {
        self.options.validate()?;
        let mut seen = BTreeMap::new();
        for v in &self.variables {
            if seen.insert(v.id.as_str(), v.kind.components()).is_some() {
                return Err(Error::DuplicateVariable(v.id.clone()));
            }
        }
        let check = |id: &str, count: usize| -> Result<()> {
            match seen.get(id) {
                None => Err(Error::UnknownVariable(id.to_string())),
                Some(&c) if c != count => Err(Error::DimensionMismatch(format!(
                    "`{id}` has {c} components but {count} coefficients were supplied"
                ))),
                Some(_) => Ok(()),
            }
        };
        for (id, coeffs) in &self.objective {
            check(id, coeffs.len())?;
        }
        for lmi in &self.constraints {
            for (id, coeffs) in &lmi.terms {
                check(id, coeffs.len())?;
            }
        }
        Ok(())
    }
}

/// Largest violation `max(0, −λ_min(canonical))` over `constraints`; zero
/// means feasible. Fails only if the assignment misses a referenced variable.
pub fn check_feasible<T: Real>(assignment: &Assignment<T>, constraints: &[LmiExpr<T>]) -> Result<T> {
    constraints.iter().try_fold(T::zero(), |acc, c| Ok(acc.max(c.violation(assignment)?)))
}

// Canonical block G0 + Σ x_i G_i with only the nonzero coefficients kept.
struct Block<T> {
    g0: Matrix<T>,
    coeffs: Vec<(usize, Matrix<T>)>,
}

impl<T: Real> Block<T> {
    fn dim(&self) -> usize {
        self.g0.rows()
    }

    fn value(&self, x: &[T], shift: T) -> Matrix<T> {
        let mut g = self.g0.clone();
        for (i, c) in &self.coeffs {
            let xi = x[*i];
            if !xi.is_zero() {
                g = &g + &c.scale(xi);
            }
        }
        if !shift.is_zero() {
            for k in 0..g.rows() {
                g[(k, k)] += shift;
            }
        }
        g
    }
}

struct Scalarized<T> {
    n: usize,
    c: Vec<T>,
    blocks: Vec<Block<T>>,
    offsets: Vec<(String, usize, VariableSpec<T>)>,
}

impl<T: Real> Scalarized<T> {
    fn build(p: &SdpProblem<T>) -> Self {
        let mut offsets = Vec::new();
        let mut n = 0;
        for v in &p.variables {
            offsets.push((v.id.clone(), n, v.clone()));
            n += v.kind.components();
        }
        let offset_of = |id: &str| offsets.iter().find(|(i, _, _)| i == id).map(|(_, o, _)| *o).unwrap();
        let mut c = vec![T::zero(); n];
        for (id, coeffs) in &p.objective {
            let o = offset_of(id);
            for (k, &ck) in coeffs.iter().enumerate() {
                c[o + k] += ck;
            }
        }
        let mut blocks = Vec::new();
        for lmi in &p.constraints {
            let sign = match lmi.sense {
                crate::lmi::Sense::Psd | crate::lmi::Sense::Pd => T::one(),
                _ => -T::one(),
            };
            let mut g0 = lmi.constant.as_matrix().scale(sign);
            for k in 0..g0.rows() {
                g0[(k, k)] -= lmi.margin;
            }
            let mut coeffs = Vec::new();
            for (id, cs) in &lmi.terms {
                let o = offset_of(id);
                for (k, ck) in cs.iter().enumerate() {
                    if !ck.as_matrix().is_zero() {
                        coeffs.push((o + k, ck.as_matrix().scale(sign)));
                    }
                }
            }
            blocks.push(Block { g0, coeffs });
        }
        for (_, o, spec) in &offsets {
            let default = p.options.variable_bound;
            let lower = spec.lower.or(default.map(|b| -b));
            let upper = spec.upper.or(default);
            for k in 0..spec.kind.components() {
                if let Some(lo) = lower {
                    blocks.push(Block {
                        g0: Matrix::from_rows(&[[-lo]]),
                        coeffs: vec![(o + k, Matrix::from_rows(&[[T::one()]]))],
                    });
                }
                if let Some(hi) = upper {
                    blocks.push(Block {
                        g0: Matrix::from_rows(&[[hi]]),
                        coeffs: vec![(o + k, Matrix::from_rows(&[[-T::one()]]))],
                    });
                }
            }
        }
        Self { n, c, blocks, offsets }
    }

    fn barrier_degree(&self) -> T {
        T::from_usize_lossy(self.blocks.iter().map(Block::dim).sum())
    }

    fn pack(&self, a: &Assignment<T>) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for (id, o, spec) in &self.offsets {
            if let Some(m) = a.get(id) {
                if let Ok(comps) = spec.kind.pack(m) {
                    x[*o..*o + comps.len()].copy_from_slice(&comps);
                }
            }
        }
        x
    }

    fn unpack(&self, x: &[T]) -> Assignment<T> {
        let mut a = Assignment::new();
        for (id, o, spec) in &self.offsets {
            let k = spec.kind.components();
            a.insert(id, spec.kind.unpack(&x[*o..*o + k]));
        }
        a
    }
}

// Decision vector is x (and the Phase-I slack s when `phase_one`).
struct BarrierProblem<'a, T> {
    sc: &'a Scalarized<T>,
    phase_one: bool,
}

impl<T: Real> BarrierProblem<'_, T> {
    fn dim(&self) -> usize {
        self.sc.n + usize::from(self.phase_one)
    }

    fn split<'b>(&self, z: &'b [T]) -> (&'b [T], T) {
        if self.phase_one {
            (&z[..self.sc.n], z[self.sc.n])
        } else {
            (z, T::zero())
        }
    }

    fn objective(&self, z: &[T]) -> T {
        if self.phase_one {
            z[self.sc.n]
        } else {
            self.sc.c.iter().zip(z).map(|(&c, &x)| c * x).sum()
        }
    }

    /// `−Σ log det G_j`, or `None` outside the cone.
    fn barrier(&self, z: &[T]) -> Option<T> {
        let (x, s) = self.split(z);
        let mut phi = T::zero();
        for b in &self.sc.blocks {
            let g = SymMatrix::symmetrize(&b.value(x, s));
            let l = g.cholesky()?;
            for k in 0..l.rows() {
                phi -= T::two() * l[(k, k)].ln();
            }
        }
        phi.is_finite().then_some(phi)
    }

    /// Gradient and Hessian of `t·obj + barrier`.
    fn derivatives(&self, z: &[T], t: T) -> Option<(Vec<T>, Matrix<T>)> {
        let nz = self.dim();
        let (x, s) = self.split(z);
        let mut grad = vec![T::zero(); nz];
        if self.phase_one {
            grad[self.sc.n] = t;
        } else {
            for (g, &c) in grad.iter_mut().zip(&self.sc.c) {
                *g = t * c;
            }
        }
        let mut hess = Matrix::zeros(nz, nz);
        for b in &self.sc.blocks {
            let g = SymMatrix::symmetrize(&b.value(x, s));
            let ginv = g.inverse_pd().ok()?;
            let gi = ginv.as_matrix();
            let mut prods: Vec<(usize, Matrix<T>)> =
                b.coeffs.iter().map(|(i, c)| (*i, gi.matmul(c))).collect();
            if self.phase_one {
                prods.push((self.sc.n, gi.clone()));
            }
            for (a, (ia, ma)) in prods.iter().enumerate() {
                grad[*ia] -= ma.trace();
                for (ib, mb) in prods.iter().skip(a) {
                    // tr(Ma·Mb)
                    let d = ma.rows();
                    let mut tr = T::zero();
                    for r in 0..d {
                        for c in 0..d {
                            tr += ma[(r, c)] * mb[(c, r)];
                        }
                    }
                    hess[(*ia, *ib)] += tr;
                    if ia != ib {
                        hess[(*ib, *ia)] += tr;
                    }
                }
            }
        }
        Some((grad, hess))
    }
}

// Solves H·d = −g with Jacobi scaling; None if H is not numerically PD.
fn newton_direction<T: Real>(hess: &Matrix<T>, grad: &[T]) -> Option<Vec<T>> {
    let n = grad.len();
    let mut d = vec![T::one(); n];
    for i in 0..n {
        let h = hess[(i, i)];
        if h > T::zero() {
            d[i] = T::one() / h.sqrt();
        }
    }
    let mut scaled = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            scaled.set(i, j, hess[(i, j)] * d[i] * d[j]);
        }
    }
    let l = scaled.cholesky().or_else(|| scaled.shift_diagonal(T::lit(1e-12)).cholesky())?;
    let rhs: Vec<T> = (0..n).map(|i| -grad[i] * d[i]).collect();
    // forward / back substitution
    let mut y = rhs;
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            y[i] = y[i] - lik * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l[(k, i)];
            y[i] = y[i] - lki * y[k];
        }
        y[i] /= l[(i, i)];
    }
    let out: Vec<T> = y.iter().zip(&d).map(|(&a, &b)| a * b).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

enum Centering {
    Converged,
    Stalled,
    Failed,
}

// Damped Newton on t·obj + barrier starting from the strictly feasible z.
fn center<T: Real>(bp: &BarrierProblem<'_, T>, z: &mut Vec<T>, t: T, steps: &mut usize, stop: impl Fn(&[T]) -> bool) -> Centering {
    let f = |z: &[T]| bp.barrier(z).map(|phi| t * bp.objective(z) + phi);
    let Some(mut fz) = f(z) else { return Centering::Failed };
    for _ in 0..MAX_NEWTON_PER_CENTERING {
        let Some((grad, hess)) = bp.derivatives(z, t) else { return Centering::Failed };
        let Some(dir) = newton_direction(&hess, &grad) else { return Centering::Failed };
        let dec2 = -grad.iter().zip(&dir).map(|(&g, &d)| g * d).sum::<T>();
        if !(dec2 >= T::zero()) {
            return Centering::Failed;
        }
        if dec2 * T::half() <= T::lit(NEWTON_TOL) {
            return Centering::Converged;
        }
        let mut step = T::one();
        let accepted = loop {
            let cand: Vec<T> = z.iter().zip(&dir).map(|(&a, &d)| a + step * d).collect();
            if let Some(fc) = f(&cand) {
                if fc <= fz - T::lit(ARMIJO) * step * dec2 {
                    break Some((cand, fc));
                }
            }
            step *= T::lit(BACKTRACK);
            if step < T::lit(MIN_STEP) {
                break None;
            }
        };
        *steps += 1;
        match accepted {
            Some((cand, fc)) => {
                *z = cand;
                fz = fc;
            }
            None => return Centering::Stalled,
        }
        if stop(z) {
            return Centering::Converged;
        }
    }
    Centering::Stalled
}

/// Solves `p`. Failures are reported through [`SdpSolution::status`]; only a
/// malformed problem yields `Err`.
pub fn solve<T: Real>(p: &SdpProblem<T>) -> Result<SdpSolution<T>> {
    p.validate()?;
    let sc = Scalarized::build(p);
    let opts = &p.options;
    let m = sc.barrier_degree();
    let mut steps = 0usize;
    let mut x = p.start.as_ref().map_or_else(|| vec![T::zero(); sc.n], |a| sc.pack(a));

    // Phase I
    let min_eig = sc
        .blocks
        .iter()
        .map(|b| SymMatrix::symmetrize(&b.value(&x, T::zero())).min_eigenvalue())
        .fold(T::infinity(), T::min);
    if !(min_eig > T::zero()) {
        let p1 = BarrierProblem { sc: &sc, phase_one: true };
        let scale = sc.blocks.iter().map(|b| b.g0.max_abs()).fold(T::zero(), T::max).max(T::lit(1e-12));
        let s0 = -min_eig + scale;
        let mut z: Vec<T> = x.iter().copied().chain(std::iter::once(s0)).collect();
        let mut t = T::one() / scale;
        let mut found = false;
        let mut certified = false;
        for outer in 0..opts.max_iterations {
            let n = sc.n;
            let res = center(&p1, &mut z, t, &mut steps, |z| z[n] < T::zero());
            let s = z[n];
            trace!("phase I outer {outer}: s = {s:e}, t = {t:e}");
            if s < T::zero() {
                found = true;
                break;
            }
            if matches!(res, Centering::Failed) {
                return Ok(failure(&sc, p, &z[..n], SdpStatus::NumericalFailure, steps, m / t));
            }
            let gap = m / t;
            if s - gap > T::zero() {
                certified = true;
            }
            // once certified, keep tightening so the reported margin is close to s*
            if (certified && gap <= T::lit(1e-4) * s) || gap <= opts.feasibility_tol {
                debug!("phase I certified infeasible: s* ≈ {s:e}");
                let mut sol = failure(&sc, p, &z[..n], SdpStatus::Infeasible, steps, gap);
                sol.infeasibility_margin = Some(s);
                return Ok(sol);
            }
            if matches!(res, Centering::Stalled) && outer > 0 && gap <= T::lit(1e-6) * scale {
                let mut sol = failure(&sc, p, &z[..n], SdpStatus::Infeasible, steps, gap);
                sol.infeasibility_margin = Some(s);
                return Ok(sol);
            }
            t /= opts.barrier_shrink;
        }
        if !found {
            return Ok(failure(&sc, p, &z[..sc.n], SdpStatus::MaxIterations, steps, m / t));
        }
        x = z[..sc.n].to_vec();
    }

    // Phase II
    let p2 = BarrierProblem { sc: &sc, phase_one: false };
    let mut t = match p2.derivatives(&x, T::zero()) {
        Some((g, _)) => {
            let cc: T = sc.c.iter().map(|&c| c * c).sum();
            let cg: T = sc.c.iter().zip(&g).map(|(&c, &g)| c * g).sum();
            let ls = if cc > T::zero() { -cg / cc } else { T::zero() };
            let floor = m / T::one().max(p2.objective(&x).abs());
            ls.max(floor)
        }
        None => return Ok(failure(&sc, p, &x, SdpStatus::NumericalFailure, steps, T::infinity())),
    };
    let mut last_good: Option<(Vec<T>, T)> = None;
    for outer in 0..opts.max_iterations {
        let res = center(&p2, &mut x, t, &mut steps, |_| false);
        let obj = p2.objective(&x);
        let gap = m / t;
        trace!("phase II outer {outer}: obj = {obj:e}, gap = {gap:e}");
        match res {
            Centering::Failed => {
                return Ok(match last_good {
                    Some((xg, gg)) => finish(&sc, p, &xg, steps, gg),
                    None => failure(&sc, p, &x, SdpStatus::NumericalFailure, steps, gap),
                })
            }
            Centering::Stalled if gap > T::lit(1e3) * opts.step_tol * T::one().max(obj.abs()) => {
                debug!("centering stalled at gap {gap:e}");
                let status = if x.iter().any(|v| !v.is_finite()) {
                    SdpStatus::NumericalFailure
                } else {
                    // gap is still a valid bound, just not a tight one
                    SdpStatus::MaxIterations
                };
                return Ok(failure(&sc, p, &x, status, steps, gap));
            }
            _ => {}
        }
        last_good = Some((x.clone(), gap));
        if gap <= opts.step_tol * T::one().max(obj.abs()) || matches!(res, Centering::Stalled) {
            debug!("barrier converged after {steps} Newton steps, objective {obj:e}");
            return Ok(finish(&sc, p, &x, steps, gap));
        }
        t /= opts.barrier_shrink;
    }
    Ok(failure(&sc, p, &x, SdpStatus::MaxIterations, steps, m / t))
}

fn finish<T: Real>(sc: &Scalarized<T>, p: &SdpProblem<T>, x: &[T], steps: usize, gap: T) -> SdpSolution<T> {
    let mut sol = failure(sc, p, x, SdpStatus::Optimal, steps, gap);
    if !(sol.max_constraint_violation <= p.options.feasibility_tol) {
        sol.status = SdpStatus::NumericalFailure;
    }
    sol
}

fn failure<T: Real>(
    sc: &Scalarized<T>,
    p: &SdpProblem<T>,
    x: &[T],
    status: SdpStatus,
    steps: usize,
    gap: T,
) -> SdpSolution<T> {
    let assignment = sc.unpack(x);
    let violation = check_feasible(&assignment, &p.constraints).unwrap_or(T::infinity());
    SdpSolution {
        status,
        objective_value: sc.c.iter().zip(x).map(|(&c, &v)| c * v).sum(),
        max_constraint_violation: violation,
        iterations: steps,
        duality_gap_bound: gap,
        infeasibility_margin: None,
        assignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmi::{Affine, Sense, VariableSpec};

    fn scalar_lmi(name: &str, id: &str, coef: f64, constant: f64) -> LmiExpr<f64> {
        let e = Affine::var(&VariableSpec::scalar(id))
            .scale(coef)
            .add_const(&Matrix::<f64>::from_f64_rows(&[[constant]]));
        LmiExpr::from_affine(name, &e, Sense::Psd).unwrap()
    }

    #[test]
    fn one_dimensional_boundary() {
        let p = SdpProblem::<f64>::new()
            .variable(VariableSpec::scalar("lambda"))
            .minimize_scalar("lambda")
            .constraint(scalar_lmi("c", "lambda", 1.0, -3.0));
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 3.0).abs() < 1e-8, "{}", sol.objective_value);
        assert!(sol.max_constraint_violation <= 1e-8);
    }

    #[test]
    fn interval_feasible_set() {
        // diag(x − 1, 2 − x) ⪰ 0
        let x = Affine::var(&VariableSpec::scalar("x"));
        let d = Affine::blocks(&[
            vec![Some(&x.add_const(&Matrix::<f64>::from_f64_rows(&[[-1.0]]))), None],
            vec![None, Some(&x.scale(-1.0).add_const(&Matrix::<f64>::from_f64_rows(&[[2.0]])))],
        ])
        .unwrap();
        let p = SdpProblem::<f64>::new()
            .variable(VariableSpec::scalar("x"))
            .minimize_scalar("x")
            .constraint(LmiExpr::from_affine("interval", &d, Sense::Psd).unwrap());
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_reports_margin() {
        // x ≥ 2 and x ≤ 1
        let p = SdpProblem::<f64>::new()
            .variable(VariableSpec::scalar("x"))
            .minimize_scalar("x")
            .constraint(scalar_lmi("lo", "x", 1.0, -2.0))
            .constraint(scalar_lmi("hi", "x", -1.0, 1.0));
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let margin = sol.infeasibility_margin.unwrap();
        // min s with x − 2 + s ≥ 0, 1 − x + s ≥ 0 (and a far box) gives s* = 0.5
        assert!((margin - 0.5).abs() < 1e-3, "{margin}");
    }

    #[test]
    fn undeclared_variable_is_an_error() {
        let p = SdpProblem::<f64>::new()
            .variable(VariableSpec::scalar("x"))
            .minimize_scalar("x")
            .constraint(scalar_lmi("c", "y", 1.0, 0.0));
        assert!(matches!(solve(&p), Err(Error::UnknownVariable(_))));
        let dup = SdpProblem::<f64>::new().variable(VariableSpec::scalar("x")).variable(VariableSpec::scalar("x"));
        assert!(matches!(dup.validate(), Err(Error::DuplicateVariable(_))));
    }

    #[test]
    fn check_feasible_empty_list() {
        let a = Assignment::new().with_scalar("x", 5.0);
        assert_eq!(check_feasible::<f64>(&a, &[]).unwrap(), 0.0);
    }

    #[test]
    fn matrix_variable_min_trace() {
        // min tr(X) s.t. X ⪰ [[2,1],[1,2]]  →  X = that matrix, trace 4
        let spec = VariableSpec::sym("X", 2);
        let c = Matrix::<f64>::from_f64_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = Affine::var(&spec).add_const(&c.scale(-1.0));
        let p = SdpProblem::<f64>::new()
            .variable(spec)
            .minimize("X", vec![1.0, 0.0, 1.0])
            .constraint(LmiExpr::from_affine("lb", &e, Sense::Psd).unwrap());
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 4.0).abs() < 1e-7);
        let x = sol.assignment.matrix("X").unwrap();
        assert!((x - &c).max_abs() < 1e-4);
    }

    #[test]
    fn bad_options_rejected() {
        let o = SolverOptions::<f64> { barrier_shrink: 1.0, ..Default::default() };
        assert!(o.validate().is_err());
    }
}
