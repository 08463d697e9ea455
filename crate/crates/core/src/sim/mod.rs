//! Fixed-step closed-loop simulation with actuator saturation.
//!
//! The plant is integrated with classical RK4. The disturbance is held
//! constant over each step (its switch instants are snapped to the grid) and
//! the control law is evaluated at every RK4 stage state, so the loop behaves
//! like continuous feedback. Simulation supports a single disturbance channel
//! and a single input channel, which covers the frequency model.

mod disturbance;
mod export;

pub use disturbance::{gen_disturbance, DisturbanceKind, DisturbanceProfile};
pub use export::{export_csv, read_csv, CsvTable};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineSpec;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::model::PlantModel;
use crate::scalar::{saturate, Real};
use crate::synthesis::{control_law, ControllerDesign, ObserverDesign};

/// Default step `dt` (s).
pub const DEFAULT_DT: f64 = 1e-3;
/// Default horizon (s).
pub const DEFAULT_HORIZON_S: f64 = 60.0;
/// Default dwell between disturbance steps (s).
pub const DEFAULT_DWELL_S: f64 = 5.0;
/// Default seed count for reachable-set probing.
pub const DEFAULT_PROBE_SEEDS: usize = 20;

/// Feedback acting on the plant; the actuator always clamps at the plant's
/// input limit.
#[derive(Clone, Debug, PartialEq)]
pub enum Feedback<T> {
    OpenLoop,
    Design(ControllerDesign<T>),
    /// `u = −sat(K·x)` with `K` in model units.
    Gain(Matrix<T>),
}

impl<T: Real> Feedback<T> {
    pub fn from_baseline(spec: &BaselineSpec<T>, m: &PlantModel<T>) -> Result<Self> {
        Ok(Self::Gain(spec.gain(m)?))
    }

    /// Requested input before the actuator clamp, in model units.
    fn demand(&self, x: &[T]) -> T {
        match self {
            Self::OpenLoop => T::zero(),
            Self::Design(d) => control_law(d, x)[0],
            Self::Gain(k) => -k.mul_vec(x)[0],
        }
    }

    fn gain_cols(&self) -> Option<usize> {
        match self {
            Self::OpenLoop => None,
            Self::Design(d) => Some(d.k.cols()),
            Self::Gain(k) => Some(k.cols()),
        }
    }
}

/// Trajectory samples on the uniform grid `t_k = k·dt`, `k = 0..=N`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimResult<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    /// Observer states; empty without an observer.
    pub estimates: Vec<Vec<T>>,
    /// Applied input in physical units (after the clamp).
    pub inputs: Vec<T>,
    /// Requested input in physical units (before the clamp).
    pub demands: Vec<T>,
    pub disturbance: Vec<T>,
    /// Ellipsoid level per sample; empty when no level function was given.
    pub levels: Vec<T>,
    /// Largest `|C·x|` over the samples.
    pub peak_abs_freq: T,
    pub peak_abs_input: T,
    pub peak_abs_demand: T,
    pub max_ellipsoid_level: Option<T>,
    /// Physical input limit the clamp used.
    pub input_limit: T,
    pub seed: Option<u64>,
}

impl<T: Real> SimResult<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Fraction of samples with `|u| ≥ threshold · input_limit`.
    pub fn fraction_at_limit(&self, threshold: T) -> T {
        if self.inputs.is_empty() {
            return T::zero();
        }
        let bound = threshold * self.input_limit;
        let hits = self.inputs.iter().filter(|u| u.abs() >= bound).count();
        T::from_usize_lossy(hits) / T::from_usize_lossy(self.inputs.len())
    }

    pub fn summary(&self) -> SimSummary<T> {
        SimSummary {
            seed: self.seed,
            samples: self.len(),
            peak_abs_freq: self.peak_abs_freq,
            peak_abs_input: self.peak_abs_input,
            peak_abs_demand: self.peak_abs_demand,
            max_ellipsoid_level: self.max_ellipsoid_level,
            fraction_at_limit: self.fraction_at_limit(T::lit(0.99)),
        }
    }
}

/// Scalar metrics of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary<T> {
    pub seed: Option<u64>,
    pub samples: usize,
    pub peak_abs_freq: T,
    pub peak_abs_input: T,
    pub peak_abs_demand: T,
    pub max_ellipsoid_level: Option<T>,
    /// Share of samples with `|u| ≥ 0.99·u_max`.
    pub fraction_at_limit: T,
}

/// Builder for one simulation run.
pub struct Simulation<'a, T> {
    model: &'a PlantModel<T>,
    feedback: &'a Feedback<T>,
    observer: Option<&'a ObserverDesign<T>>,
    disturbance: &'a DisturbanceProfile<T>,
    dt: T,
    x0: Option<Vec<T>>,
    xhat0: Option<Vec<T>>,
    level_shape: Option<SymMatrix<T>>,
}

impl<'a, T: Real> Simulation<'a, T> {
    pub fn new(
        model: &'a PlantModel<T>,
        feedback: &'a Feedback<T>,
        disturbance: &'a DisturbanceProfile<T>,
        dt: T,
    ) -> Self {
        Self { model, feedback, observer: None, disturbance, dt, x0: None, xhat0: None, level_shape: None }
    }

    pub fn observer(mut self, o: Option<&'a ObserverDesign<T>>) -> Self {
        self.observer = o;
        self
    }

    pub fn x0(mut self, x0: &[T]) -> Self {
        self.x0 = Some(x0.to_vec());
        self
    }

    /// Initial estimate; defaults to `x0` (zero initial error).
    pub fn xhat0(mut self, xhat0: &[T]) -> Self {
        self.xhat0 = Some(xhat0.to_vec());
        self
    }

    /// Shape `E` of the level `xᵀ·E·x` recorded per sample. Defaults to `Q⁻¹`
    /// of the controller's certificate (augmented by `eᵀ·S·e` with an
    /// observer).
    pub fn level_shape(mut self, e: &SymMatrix<T>) -> Self {
        self.level_shape = Some(e.clone());
        self
    }

    fn check(&self) -> Result<()> {
        let m = self.model;
        let n = m.n();
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::BadTimestep(self.dt.as_f64()));
        }
        if let DisturbanceKind::StepSequence { dwell_s, .. } = &self.disturbance.kind {
            if self.dt > *dwell_s / T::lit(10.0) {
                return Err(Error::BadTimestep(self.dt.as_f64()));
            }
        }
        self.disturbance.validate()?;
        if m.disturbance_dim() != 1 || m.input_dim() != 1 {
            return Err(Error::DimensionMismatch("simulation needs one disturbance and one input channel".into()));
        }
        if self.feedback.gain_cols().is_some_and(|c| c != n) {
            return Err(Error::DimensionMismatch("feedback gain does not match the state dimension".into()));
        }
        for v in [&self.x0, &self.xhat0].into_iter().flatten() {
            if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::DimensionMismatch(format!("initial state must have {n} finite entries")));
            }
        }
        if let Some(o) = self.observer {
            if o.l.shape() != (n, m.output_dim()) || o.s.dim() != n {
                return Err(Error::DimensionMismatch("observer does not match the plant".into()));
            }
            if matches!(self.feedback, Feedback::OpenLoop) {
                return Err(Error::BadInput("an observer needs a feedback law".into()));
            }
        }
        if let Some(e) = &self.level_shape {
            if e.dim() != n {
                return Err(Error::DimensionMismatch("level shape must be n×n".into()));
            }
        }
        Ok(())
    }

    pub fn run(self) -> Result<SimResult<T>> {
        self.check()?;
        let m = self.model;
        let n = m.n();
        let with_obs = self.observer.is_some();
        let x0 = self.x0.clone().unwrap_or_else(|| vec![T::zero(); n]);
        let xhat0 = self.xhat0.clone().unwrap_or_else(|| x0.clone());
        let level_x = match (&self.level_shape, self.feedback) {
            (Some(e), _) => Some(e.clone()),
            (None, Feedback::Design(d)) => Some(d.certificate.q_inverse()?),
            _ => None,
        };
        let level_e = if self.level_shape.is_none() { self.observer.map(|o| o.s.clone()) } else { None };

        let steps = (self.disturbance.horizon_s / self.dt).round().to_usize().unwrap_or(0);
        let limit = m.input_limit;
        let scale = m.input_scale;
        let bw: Vec<T> = m.b_w.col_vec(0);
        let bu: Vec<T> = m.b_u.col_vec(0);

        let control = |z: &[T]| -> (T, T) {
            let x_meas = if with_obs { &z[n..] } else { &z[..n] };
            let demand = self.feedback.demand(x_meas);
            (saturate(demand, limit), demand)
        };
        let deriv = |z: &[T], w: T| -> Vec<T> {
            let (u, _) = control(z);
            let x = &z[..n];
            let mut dz = m.a.mul_vec(x);
            for i in 0..n {
                dz[i] += bw[i] * w + bu[i] * u;
            }
            if let Some(o) = self.observer {
                let xh = &z[n..];
                let mut dxh = m.a.mul_vec(xh);
                let innov: Vec<T> = m.c.mul_vec(x).iter().zip(m.c.mul_vec(xh)).map(|(&y, yh)| y - yh).collect();
                let corr = o.l.mul_vec(&innov);
                for i in 0..n {
                    dxh[i] += bu[i] * u + corr[i];
                }
                dz.extend(dxh);
            }
            dz
        };

        let mut z: Vec<T> = x0.iter().copied().chain(if with_obs { xhat0 } else { Vec::new() }).collect();
        let mut r = SimResult {
            input_limit: limit * scale,
            seed: self.disturbance.seed(),
            peak_abs_freq: T::zero(),
            peak_abs_input: T::zero(),
            peak_abs_demand: T::zero(),
            ..SimResult::default()
        };
        let cap = steps + 1;
        r.times.reserve(cap);
        r.states.reserve(cap);
        r.inputs.reserve(cap);
        let mut max_level: Option<T> = None;
        for k in 0..=steps {
            let t = T::from_usize_lossy(k) * self.dt;
            let w = self.disturbance.value_at(t);
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverFailure(format!("simulation diverged at t = {t}")));
            }
            let (u, demand) = control(&z);
            let x = &z[..n];
            let y = m.c.mul_vec(x).iter().map(|&v| v * v).sum::<T>().sqrt();
            r.peak_abs_freq = r.peak_abs_freq.max(y);
            r.peak_abs_input = r.peak_abs_input.max((u * scale).abs());
            r.peak_abs_demand = r.peak_abs_demand.max((demand * scale).abs());
            if let Some(e) = &level_x {
                let mut lvl = e.quadratic_form(x);
                if let Some(s) = &level_e {
                    let err: Vec<T> = x.iter().zip(&z[n..]).map(|(&a, &b)| a - b).collect();
                    lvl += s.quadratic_form(&err);
                }
                max_level = Some(max_level.map_or(lvl, |mx| mx.max(lvl)));
                r.levels.push(lvl);
            }
            r.times.push(t);
            r.states.push(x.to_vec());
            if with_obs {
                r.estimates.push(z[n..].to_vec());
            }
            r.inputs.push(u * scale);
            r.demands.push(demand * scale);
            r.disturbance.push(w);
            if k == steps {
                break;
            }
            z = rk4_step(&z, self.dt, |s| deriv(s, w));
        }
        r.max_ellipsoid_level = max_level;
        Ok(r)
    }
}

/// One classical Runge–Kutta step of `ż = f(z)`.
pub fn rk4_step<T: Real>(z: &[T], dt: T, f: impl Fn(&[T]) -> Vec<T>) -> Vec<T> {
    let axpy = |a: T, x: &[T]| -> Vec<T> { z.iter().zip(x).map(|(&zi, &xi)| zi + a * xi).collect() };
    let half = dt * T::half();
    let k1 = f(z);
    let k2 = f(&axpy(half, &k1));
    let k3 = f(&axpy(half, &k2));
    let k4 = f(&axpy(dt, &k3));
    let sixth = dt / T::lit(6.0);
    (0..z.len()).map(|i| z[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i])).collect()
}

/// Runs one simulation from `x0` (zero initial estimation error when an
/// observer is present).
pub fn simulate<T: Real>(
    m: &PlantModel<T>,
    controller: &Feedback<T>,
    observer: Option<&ObserverDesign<T>>,
    dist: &DisturbanceProfile<T>,
    dt: T,
    x0: &[T],
) -> Result<SimResult<T>> {
    Simulation::new(m, controller, dist, dt).observer(observer).x0(x0).run()
}

/// Settings for [`probe_reachable_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec<T> {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub horizon_s: T,
    pub dwell_s: T,
    pub dt: T,
    pub w_norm: T,
}

impl<T: Real> Default for ProbeSpec<T> {
    fn default() -> Self {
        Self {
            n_seeds: DEFAULT_PROBE_SEEDS,
            base_seed: 0,
            horizon_s: T::lit(DEFAULT_HORIZON_S),
            dwell_s: T::lit(DEFAULT_DWELL_S),
            dt: T::lit(DEFAULT_DT),
            w_norm: T::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport<T> {
    /// Largest `xᵀQ⁻¹x` seen over every run (0 for no runs).
    pub max_level: T,
    pub worst_seed: Option<u64>,
    /// `(seed, max level)` per run, in seed order.
    pub per_seed: Vec<(u64, T)>,
}

/// Simulates `n_seeds` random step profiles (seeds `0..n_seeds`) from the
/// origin and reports the largest ellipsoid level `xᵀQ⁻¹x`.
pub fn probe_reachable<T: Real>(
    m: &PlantModel<T>,
    controller: &Feedback<T>,
    n_seeds: usize,
    horizon_s: T,
    dt: T,
    q: &SymMatrix<T>,
) -> Result<ProbeReport<T>> {
    let spec = ProbeSpec { n_seeds, horizon_s, dt, ..ProbeSpec::default() };
    probe_reachable_with(m, controller, &spec, q)
}

pub fn probe_reachable_with<T: Real>(
    m: &PlantModel<T>,
    controller: &Feedback<T>,
    spec: &ProbeSpec<T>,
    q: &SymMatrix<T>,
) -> Result<ProbeReport<T>> {
    let shape = q.inverse_pd()?;
    let x0 = vec![T::zero(); m.n()];
    let per_seed: Vec<(u64, T)> = (0..spec.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = spec.base_seed.wrapping_add(i);
            let dist = gen_disturbance(seed, spec.horizon_s, spec.dwell_s, spec.w_norm)?;
            let r = Simulation::new(m, controller, &dist, spec.dt).x0(&x0).level_shape(&shape).run()?;
            Ok((seed, r.max_ellipsoid_level.unwrap_or(T::zero())))
        })
        .collect::<Result<_>>()?;
    let mut max_level = T::zero();
    let mut worst_seed = None;
    for &(seed, lvl) in &per_seed {
        if worst_seed.is_none() || lvl > max_level {
            max_level = lvl;
            worst_seed = Some(seed);
        }
    }
    Ok(ProbeReport { max_level, worst_seed, per_seed })
}

/// `n_points` samples of the 2-D ellipse boundary `{x : xᵀQ⁻¹x = 1}`, as
/// `x = L·[cos φ, sin φ]ᵀ` with `Q = L·Lᵀ`.
pub fn ellipse_polyline<T: Real>(q: &SymMatrix<T>, n_points: usize) -> Result<Vec<[T; 2]>> {
    if q.dim() != 2 {
        return Err(Error::DimensionMismatch("ellipse polyline needs a 2x2 shape".into()));
    }
    let l = q.cholesky().ok_or_else(|| Error::BadInput("ellipsoid shape must be positive definite".into()))?;
    let tau = T::lit(std::f64::consts::TAU);
    Ok((0..n_points)
        .map(|i| {
            let phi = tau * T::from_usize_lossy(i) / T::from_usize_lossy(n_points);
            let (s, c) = phi.sin_cos();
            [l[(0, 0)] * c, l[(1, 0)] * c + l[(1, 1)] * s]
        })
        .collect())
}
