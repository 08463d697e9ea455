//! One-dimensional search over the S-procedure multiplier `α`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Log-spaced grid scan followed by golden-section refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec<T> {
    pub alpha_lo: T,
    pub alpha_hi: T,
    pub grid_points: usize,
    /// Stop refining once the bracket width relative to its midpoint is below
    /// this.
    pub rel_tol: T,
}

impl<T: Real> Default for SearchSpec<T> {
    fn default() -> Self {
        Self { alpha_lo: T::lit(1e-3), alpha_hi: T::lit(1e3), grid_points: 60, rel_tol: T::lit(1e-4) }
    }
}

impl<T: Real> SearchSpec<T> {
    pub fn new(alpha_lo: T, alpha_hi: T) -> Self {
        Self { alpha_lo, alpha_hi, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_lo > T::zero()
            && self.alpha_hi > self.alpha_lo
            && self.alpha_hi.is_finite()
            && self.grid_points >= 2
            && self.rel_tol > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "bad alpha search: [{}, {}], {} points, rel_tol {}",
                self.alpha_lo, self.alpha_hi, self.grid_points, self.rel_tol
            )))
        }
    }

    /// The coarse grid, log-spaced and inclusive of both ends.
    pub fn grid(&self) -> Vec<T> {
        let (lo, hi) = (self.alpha_lo.ln(), self.alpha_hi.ln());
        let last = T::from_usize_lossy(self.grid_points - 1);
        (0..self.grid_points)
            .map(|i| (lo + (hi - lo) * T::from_usize_lossy(i) / last).exp())
            .collect()
    }
}

/// Outcome of a fixed-`α` solve: `None` for infeasible, otherwise the
/// objective and whatever the caller wants to keep.
pub type Probe<T, S> = Option<(T, S)>;

fn better<T: Real>(a: (T, T), b: (T, T)) -> bool {
    // (objective, alpha); smaller objective wins, ties go to smaller alpha
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Minimizes `f(α)` over the bracket. Infeasible points count as `+∞`. Grid
/// evaluations run in parallel; the merge is deterministic.
pub fn alpha_line_search<T, S, F>(spec: &SearchSpec<T>, f: F) -> Result<(T, S)>
where
    T: Real,
    S: Send,
    F: Fn(T) -> Result<Probe<T, S>> + Sync,
{
    spec.validate()?;
    let grid = spec.grid();
    let evals: Vec<Probe<T, S>> = grid.par_iter().map(|&a| f(a)).collect::<Result<_>>()?;

    let mut best: Option<(T, T, S, usize)> = None;
    for (i, (e, &a)) in evals.into_iter().zip(&grid).enumerate() {
        if let Some((obj, sol)) = e {
            if best.as_ref().is_none_or(|b| better((obj, a), (b.0, b.1))) {
                best = Some((obj, a, sol, i));
            }
        }
    }
    let Some((mut obj, mut alpha, mut sol, idx)) = best else {
        return Err(Error::InfeasibleAtAllAlpha { lo: spec.alpha_lo.as_f64(), hi: spec.alpha_hi.as_f64() });
    };
    log::debug!("alpha grid best: alpha = {alpha:e}, objective = {obj:e}");

    // golden section in log(α) over the neighbouring grid cells
    let mut lo = grid[idx.saturating_sub(1)].ln();
    let mut hi = grid[(idx + 1).min(grid.len() - 1)].ln();
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut eval = |la: T| -> Result<T> {
        let a = la.exp();
        Ok(match f(a)? {
            Some((o, s)) => {
                if better((o, a), (obj, alpha)) {
                    obj = o;
                    alpha = a;
                    sol = s;
                }
                o
            }
            None => T::infinity(),
        })
    };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while (hi.exp() - lo.exp()) / ((hi.exp() + lo.exp()) * T::half()) > spec.rel_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    log::debug!("alpha refined: alpha = {alpha:e}, objective = {obj:e}");
    Ok((alpha, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimizer() {
        let spec = SearchSpec::new(0.01, 100.0);
        let (a, v) = alpha_line_search(&spec, |a: f64| Ok(Some(((a - 1.0).powi(2) + 1.0, a)))).unwrap();
        assert!((a - 1.0).abs() < 1e-4, "{a}");
        assert_eq!(a, v);
    }

    #[test]
    fn infeasible_everywhere() {
        let spec = SearchSpec::<f64>::default();
        let r = alpha_line_search(&spec, |_| Ok(None::<(f64, ())>));
        assert!(matches!(r, Err(Error::InfeasibleAtAllAlpha { .. })));
    }

    #[test]
    fn infeasible_region_is_skipped() {
        let spec = SearchSpec::new(0.01, 100.0);
        let f = |a: f64| Ok(if a < 2.0 { None } else { Some((a, ())) });
        let (a, _) = alpha_line_search(&spec, f).unwrap();
        assert!((2.0..2.0 * (1.0 + 1e-3)).contains(&a), "{a}");
    }

    #[test]
    fn ties_go_to_smaller_alpha() {
        let spec = SearchSpec::new(0.1, 10.0);
        let (a, _) = alpha_line_search(&spec, |_| Ok(Some((1.0f64, ())))).unwrap();
        assert!((a - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_bracket() {
        let spec = SearchSpec::new(1.0, 0.5);
        assert!(alpha_line_search(&spec, |a: f64| Ok(Some((a, ())))).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g: Vec<f64> = SearchSpec::<f64>::default().grid();
        assert_eq!(g.len(), 60);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[59] - 1e3).abs() < 1e-9);
    }
}
