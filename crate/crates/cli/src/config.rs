//! JSON run configuration. Every section rejects unknown keys; units are in
//! the key names where they are not p.u.

use std::path::{Path, PathBuf};

use linf_core::model::{build_frequency_model, BuConvention};
use linf_core::synthesis::DEFAULT_W_BOUND;
use linf_core::{BaselineSpec, FrequencyParams, PlantModel, SearchSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub baselines: Vec<BaselineSpec>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// `M`, `D`, `rho`, `k`, `w_max`, `u_max`.
    pub params: FrequencyParams,
    #[serde(default)]
    pub bu_convention: BuConvention,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    FullState,
    Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    /// High-gain scalings; the first is the "proposed" controller in
    /// comparisons and the largest sizes the observer.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_bracket")]
    pub alpha_bracket: [f64; 2],
    #[serde(default)]
    pub feedback_mode: FeedbackMode,
    /// Impose open-loop invariance on the state-feedback certificate.
    /// Defaults to on in output mode, where the observer needs it.
    #[serde(default)]
    pub augment_open_loop: Option<bool>,
    /// Spectral-norm cap on the observer variable `W`; `null` leaves it free.
    #[serde(default = "default_w_bound")]
    pub observer_w_bound: Option<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![10.0, 100.0]
}

fn default_bracket() -> [f64; 2] {
    [1e-3, 1e3]
}

fn default_w_bound() -> Option<f64> {
    Some(DEFAULT_W_BOUND)
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            deltas: default_deltas(),
            alpha_bracket: default_bracket(),
            feedback_mode: FeedbackMode::default(),
            augment_open_loop: None,
            observer_w_bound: default_w_bound(),
        }
    }
}

impl SynthesisConfig {
    pub fn augment(&self) -> bool {
        self.augment_open_loop.unwrap_or(self.feedback_mode == FeedbackMode::Output)
    }

    pub fn search(&self) -> SearchSpec {
        SearchSpec::new(self.alpha_bracket[0], self.alpha_bracket[1])
    }

    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().copied().fold(1.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    #[serde(default = "default_dwell")]
    pub dwell_s: f64,
    /// Disturbance seeds for `simulate` and `compare`.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Number of seeds (starting at the first entry of `seeds`) for `probe`.
    #[serde(default = "default_probe_seeds")]
    pub probe_seeds: usize,
    /// Initial state; the origin when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

fn default_dt() -> f64 {
    linf_core::sim::DEFAULT_DT
}

fn default_horizon() -> f64 {
    linf_core::sim::DEFAULT_HORIZON_S
}

fn default_dwell() -> f64 {
    linf_core::sim::DEFAULT_DWELL_S
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_probe_seeds() -> usize {
    linf_core::sim::DEFAULT_PROBE_SEEDS
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt_s: default_dt(),
            horizon_s: default_horizon(),
            dwell_s: default_dwell(),
            seeds: default_seeds(),
            probe_seeds: default_probe_seeds(),
            x0: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

impl RunConfig {
    /// Parses and validates; every failure maps to [`CliError::Parse`].
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text)
    }

    pub fn model(&self) -> CliResult<PlantModel> {
        build_frequency_model(&self.plant.params, self.plant.bu_convention).map_err(|e| bad(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        let m = self.model()?;
        let s = &self.synthesis;
        if s.deltas.is_empty() || s.deltas.iter().any(|d| !(d.is_finite() && *d >= 1.0)) {
            return Err(bad("synthesis.deltas must be a non-empty list of values >= 1"));
        }
        s.search().validate().map_err(|e| bad(format!("synthesis.alpha_bracket: {e}")))?;
        if let Some(b) = s.observer_w_bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(bad("synthesis.observer_w_bound must be positive"));
            }
        }
        if s.feedback_mode == FeedbackMode::Output && s.augment_open_loop == Some(false) {
            log::warn!("output feedback without open-loop augmentation; observer synthesis will likely fail");
        }
        for b in &self.baselines {
            b.validate(&m).map_err(|e| bad(format!("baseline {}: {e}", b.label())))?;
        }
        let sim = &self.simulation;
        if !(sim.horizon_s.is_finite() && sim.horizon_s > 0.0) {
            return Err(bad("simulation.horizon_s must be positive"));
        }
        if !(sim.dwell_s.is_finite() && sim.dwell_s > 0.0) {
            return Err(bad("simulation.dwell_s must be positive"));
        }
        if !(sim.dt_s.is_finite() && sim.dt_s > 0.0 && sim.dt_s <= sim.dwell_s / 10.0) {
            return Err(bad("simulation.dt_s must satisfy 0 < dt_s <= dwell_s / 10"));
        }
        if sim.seeds.is_empty() {
            return Err(bad("simulation.seeds must not be empty"));
        }
        if let Some(x0) = &sim.x0 {
            if x0.len() != m.n() || x0.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("simulation.x0 must have {} finite entries", m.n())));
            }
        }
        if self.output.formats.is_empty() {
            return Err(bad("output.formats must not be empty"));
        }
        Ok(())
    }

    /// Replaces the seed list by `[seed]`.
    pub fn override_seed(&mut self, seed: u64) {
        self.simulation.seeds = vec![seed];
    }

    pub fn x0(&self) -> Vec<f64> {
        self.simulation.x0.clone().unwrap_or_else(|| vec![0.0; 2])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"plant": {"params": {"M": 2, "D": 0.6, "rho": 0.05, "k": 5, "w_max": 0.1, "u_max": 0.05}}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.plant.bu_convention, BuConvention::SwingDerived);
        assert_eq!(cfg.synthesis.deltas, [10.0, 100.0]);
        assert!(!cfg.synthesis.augment());
        assert_eq!(cfg.simulation.seeds.len(), 5);
        assert!(cfg.output.wants(Format::Csv) && cfg.output.wants(Format::Json));
    }

    #[test]
    fn output_mode_augments_by_default() {
        let text = MINIMAL.replace("}}}", "}}, \"synthesis\": {\"feedback_mode\": \"output\"}}");
        let cfg = RunConfig::parse(&text).unwrap();
        assert!(cfg.synthesis.augment());
    }

    #[test]
    fn rejects_bad_values() {
        let cases = [
            MINIMAL.replace("\"u_max\": 0.05", "\"u_max\": 0"),
            MINIMAL.replace("}}}", "}, \"extra\": 1}}"),
            MINIMAL.replace("}}}", "}}, \"synthesis\": {\"deltas\": [0.5]}}"),
            MINIMAL.replace("}}}", "}}, \"simulation\": {\"dt_s\": 1.0}}"),
            MINIMAL.replace("}}}", "}}, \"simulation\": {\"seeds\": []}}"),
            MINIMAL.replace("}}}", "}}, \"baselines\": [{\"kind\": \"pole_place\", \"poles\": [[-1, 0]]}]}"),
            "{".to_string(),
        ];
        for text in cases {
            let err = RunConfig::parse(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let again = RunConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_json(), again.to_json());
    }
}
