use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Piecewise-constant scalar disturbance shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceKind<T> {
    /// Random steps every `dwell_s` seconds; `levels[i]` holds on
    /// `[i·dwell_s, (i+1)·dwell_s)`.
    StepSequence { seed: u64, dwell_s: T, levels: Vec<T> },
    ConstantStep { level: T },
    /// `(time_s, value)` breakpoints held until the next one; zero before the
    /// first.
    Custom { points: Vec<(T, T)> },
}

/// Normalized disturbance `w(t)` with `|w| ≤ w_norm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceProfile<T> {
    pub kind: DisturbanceKind<T>,
    pub horizon_s: T,
    pub w_norm: T,
}

impl<T: Real> DisturbanceProfile<T> {
    pub fn constant(level: T, horizon_s: T) -> Self {
        Self { kind: DisturbanceKind::ConstantStep { level }, horizon_s, w_norm: level.abs() }
    }

    pub fn zero(horizon_s: T) -> Self {
        Self::constant(T::zero(), horizon_s)
    }

    /// Zero-order hold through the given breakpoints (sorted on entry).
    pub fn custom(mut points: Vec<(T, T)>, horizon_s: T, w_norm: T) -> Result<Self> {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let p = Self { kind: DisturbanceKind::Custom { points }, horizon_s, w_norm };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_s >= T::zero()) || !self.horizon_s.is_finite() || !(self.w_norm >= T::zero()) {
            return Err(Error::InvalidParams("disturbance horizon and bound must be non-negative".into()));
        }
        let slack = T::lit(1e-12) * T::one().max(self.w_norm);
        let within = |v: T| v.is_finite() && v.abs() <= self.w_norm + slack;
        let ok = match &self.kind {
            DisturbanceKind::StepSequence { dwell_s, levels, .. } => {
                *dwell_s > T::zero() && levels.iter().all(|&v| within(v))
            }
            DisturbanceKind::ConstantStep { level } => within(*level),
            DisturbanceKind::Custom { points } => points.iter().all(|&(t, v)| t.is_finite() && within(v)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("disturbance exceeds its bound or is malformed".into()))
        }
    }

    /// `w(t)`. Switch instants are resolved with a small tolerance so that
    /// grid points landing on them pick the new level.
    pub fn value_at(&self, t: T) -> T {
        match &self.kind {
            DisturbanceKind::StepSequence { dwell_s, levels, .. } => {
                let idx = (t / *dwell_s + T::lit(1e-9)).floor();
                if idx < T::zero() {
                    return T::zero();
                }
                let idx = idx.to_usize().unwrap_or(usize::MAX);
                levels.get(idx).or(levels.last()).copied().unwrap_or(T::zero())
            }
            DisturbanceKind::ConstantStep { level } => *level,
            DisturbanceKind::Custom { points } => {
                let eps = T::lit(1e-12) * T::one().max(t.abs());
                points.iter().take_while(|(tp, _)| *tp <= t + eps).last().map_or(T::zero(), |&(_, v)| v)
            }
        }
    }

    /// The seed for step sequences.
    pub fn seed(&self) -> Option<u64> {
        match &self.kind {
            DisturbanceKind::StepSequence { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Random step sequence: one level per dwell interval covering the horizon,
/// drawn uniformly from `[−w_norm, w_norm]` with a ChaCha8 generator seeded by
/// `seed` (`ChaCha8Rng::seed_from_u64`), so profiles are reproducible across
/// platforms.
pub fn gen_disturbance<T: Real>(seed: u64, horizon_s: T, dwell_s: T, w_norm: T) -> Result<DisturbanceProfile<T>> {
    if !(horizon_s >= T::zero()) || !(dwell_s > T::zero()) || !(w_norm >= T::zero()) {
        return Err(Error::InvalidParams("disturbance arguments must be positive".into()));
    }
    let count = (horizon_s / dwell_s).ceil().to_usize().unwrap_or(0).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = w_norm.as_f64();
    let levels = (0..count)
        .map(|_| {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            // keep exactly within the bound after conversion
            T::lit(u * bound).max(-w_norm).min(w_norm)
        })
        .collect();
    Ok(DisturbanceProfile { kind: DisturbanceKind::StepSequence { seed, dwell_s, levels }, horizon_s, w_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_per_seed() {
        let a = gen_disturbance(7, 60.0, 5.0, 1.0).unwrap();
        let b = gen_disturbance(7, 60.0, 5.0, 1.0).unwrap();
        let c = gen_disturbance(8, 60.0, 5.0, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_bound_is_zero() {
        let p = gen_disturbance(3, 60.0, 5.0, 0.0).unwrap();
        for i in 0..600 {
            assert_eq!(p.value_at(i as f64 * 0.1), 0.0);
        }
    }

    #[test]
    fn level_statistics() {
        // 10⁴ levels: bounded, mean within 3σ of zero (σ of U[−1,1] is 1/√3)
        let p = gen_disturbance(11, 1e4, 1.0, 1.0).unwrap();
        let DisturbanceKind::StepSequence { levels, .. } = &p.kind else { unreachable!() };
        assert_eq!(levels.len(), 10_000);
        assert!(levels.iter().all(|v: &f64| v.abs() <= 1.0));
        let mean = levels.iter().sum::<f64>() / levels.len() as f64;
        let sigma = (1.0f64 / 3.0).sqrt() / (levels.len() as f64).sqrt();
        assert!(mean.abs() <= 3.0 * sigma, "{mean}");
    }

    #[test]
    fn switch_times_and_holds() {
        let p = gen_disturbance(1, 20.0, 5.0, 1.0).unwrap();
        let DisturbanceKind::StepSequence { levels, .. } = &p.kind else { unreachable!() };
        assert_eq!(levels.len(), 4);
        assert_eq!(p.value_at(0.0), levels[0]);
        assert_eq!(p.value_at(4.999), levels[0]);
        // 5000 steps of 1 ms lands on the switch up to rounding
        assert_eq!(p.value_at(5000.0 * 0.001), levels[1]);
        assert_eq!(p.value_at(25.0), levels[3]);

        let c = DisturbanceProfile::custom(vec![(2.0, -0.5), (1.0, 0.5)], 3.0, 1.0).unwrap();
        assert_eq!(c.value_at(0.5), 0.0);
        assert_eq!(c.value_at(1.0), 0.5);
        assert_eq!(c.value_at(2.5), -0.5);
        assert!(DisturbanceProfile::custom(vec![(0.0, 2.0)], 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn profile_respects_bound(seed in any::<u64>(), w in 0.0f64..10.0, t in 0.0f64..60.0) {
            let p = gen_disturbance(seed, 60.0, 5.0, w).unwrap();
            prop_assert!(p.value_at(t).abs() <= w);
        }
    }
}
