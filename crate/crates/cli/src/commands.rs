use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use linf_core::model::BuConvention;
use linf_core::sim::{
    ellipse_polyline, export_csv, gen_disturbance, probe_reachable_with, Feedback, ProbeSpec, Simulation,
};
use linf_core::synthesis::{synth_fs_with, synth_of_with, FsOptions, ObserverOptions};
use linf_core::{ControllerDesign, ObserverDesign, PlantModel, SimResult};
use serde::{Deserialize, Serialize};

use crate::config::{FeedbackMode, Format, RunConfig};
use crate::error::{CliError, CliResult};

pub const DESIGN_FILE: &str = "design.json";
pub const REPORT_FILE: &str = "report.txt";
pub const ELLIPSE_POINTS: usize = 360;

/// Everything `simulate` and `probe` need from a synthesis run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignArtifact {
    pub bu_convention: BuConvention,
    pub feedback_mode: FeedbackMode,
    /// Multiplies model-unit inputs and gains into p.u. power.
    pub input_scale: f64,
    /// Low-gain design; high-gain variants reuse its certificate.
    pub controller: ControllerDesign,
    pub deltas: Vec<f64>,
    /// `K` in p.u. power per state unit.
    pub gain_physical: Vec<f64>,
    pub observer: Option<ObserverDesign>,
}

impl DesignArtifact {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("design {}: {e}", path.display())))
    }

    fn check(&self, m: &PlantModel) -> CliResult<()> {
        if self.controller.k.shape() != (m.input_dim(), m.n()) {
            return Err(CliError::Parse("design gain does not match the configured plant".into()));
        }
        if self.observer.as_ref().is_some_and(|o| o.l.shape() != (m.n(), m.output_dim())) {
            return Err(CliError::Parse("design observer does not match the configured plant".into()));
        }
        Ok(())
    }

    /// Low gain followed by each high-gain scaling.
    fn variants(&self) -> CliResult<Vec<(String, ControllerDesign)>> {
        let mut out = vec![("low_gain".to_string(), self.controller.clone())];
        for &d in &self.deltas {
            out.push((delta_label(d), self.controller.with_delta(d)?));
        }
        Ok(out)
    }
}

fn delta_label(d: f64) -> String {
    format!("high_gain_d{d}")
}

fn out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(path, &(text + "\n"))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Designs the controller (and observer in output mode) and writes
/// `design.json` plus a text report.
pub fn synthesize(cfg: &RunConfig) -> CliResult<DesignArtifact> {
    let m = cfg.model()?;
    let art = design(cfg, &m)?;
    let dir = out_dir(cfg)?;
    write_json(&dir.join(DESIGN_FILE), &art)?;
    let report = report(&art);
    write(&dir.join(REPORT_FILE), &report)?;
    print!("{report}");
    Ok(art)
}

pub fn report(a: &DesignArtifact) -> String {
    let c = &a.controller.certificate;
    let mut r = String::new();
    let _ = writeln!(r, "peak-norm controller design");
    let _ = writeln!(r, "convention:        {:?}", a.bu_convention);
    let _ = writeln!(r, "feedback mode:     {:?}", a.feedback_mode);
    let _ = writeln!(r, "open-loop augment: {}", a.controller.open_loop_augmented);
    let _ = writeln!(r, "alpha:             {:.6}", c.alpha);
    let _ = writeln!(r, "lambda:            {:.6e}", c.lambda);
    let _ = writeln!(r, "star-norm:         {:.6}", c.star_norm);
    let _ = writeln!(r, "v:                 {:.6e}", a.controller.v);
    let _ = writeln!(r, "u_max (model):     {}", a.controller.u_max);
    let _ = writeln!(r, "K (p.u. power):    {}", fmt_vec(&a.gain_physical));
    let deltas: Vec<String> = a.deltas.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(r, "high-gain deltas:  {}", deltas.join(", "));
    if let Some(o) = &a.observer {
        let _ = writeln!(r, "observer delta:    {}", o.delta_used);
        let _ = writeln!(r, "L:                 {}", fmt_vec(&o.l.col_vec(0)));
        let _ = writeln!(r, "theta:             {:.6e} (|C e| <= {:.6})", o.theta, o.theta.sqrt());
    }
    r
}

/// Peak metrics of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub controller: String,
    pub seed: u64,
    pub peak_abs_freq: f64,
    pub peak_abs_input: f64,
    pub peak_abs_demand: f64,
    pub max_ellipsoid_level: Option<f64>,
    pub fraction_at_limit: f64,
}

impl RunSummary {
    fn new(controller: &str, seed: u64, r: &SimResult) -> Self {
        Self {
            controller: controller.to_string(),
            seed,
            peak_abs_freq: r.peak_abs_freq,
            peak_abs_input: r.peak_abs_input,
            peak_abs_demand: r.peak_abs_demand,
            max_ellipsoid_level: r.max_ellipsoid_level,
            fraction_at_limit: r.fraction_at_limit(0.99),
        }
    }
}

fn run_one(
    cfg: &RunConfig,
    m: &PlantModel,
    fb: &Feedback<f64>,
    observer: Option<&ObserverDesign>,
    seed: u64,
) -> CliResult<SimResult> {
    let sim = &cfg.simulation;
    let dist = gen_disturbance(seed, sim.horizon_s, sim.dwell_s, 1.0)?;
    let observer = observer.filter(|_| matches!(fb, Feedback::Design(_)));
    Ok(Simulation::new(m, fb, &dist, sim.dt_s).observer(observer).x0(&cfg.x0()).run()?)
}

/// Simulates open loop, low gain and every high gain on each seed.
pub fn simulate(cfg: &RunConfig, design: &Path) -> CliResult<Vec<RunSummary>> {
    let m = cfg.model()?;
    let art = DesignArtifact::load(design)?;
    art.check(&m)?;
    let dir = out_dir(cfg)?;
    let mut loops = vec![("open_loop".to_string(), Feedback::OpenLoop)];
    loops.extend(art.variants()?.into_iter().map(|(l, d)| (l, Feedback::Design(d))));
    let mut rows = Vec::new();
    for &seed in &cfg.simulation.seeds {
        for (label, fb) in &loops {
            let r = run_one(cfg, &m, fb, art.observer.as_ref(), seed)?;
            if cfg.output.wants(Format::Csv) {
                export_csv(&r, &dir.join(format!("sim_seed{seed}_{label}.csv")))?;
            }
            log::info!("seed {seed} {label}: peak |dw| {:.6}", r.peak_abs_freq);
            rows.push(RunSummary::new(label, seed, &r));
        }
    }
    if cfg.output.wants(Format::Json) {
        write_json(&dir.join("simulate.json"), &rows)?;
    }
    for r in &rows {
        println!("seed {:>4}  {:<22} peak |dw| {:.6}  peak |u| {:.6}", r.seed, r.controller, r.peak_abs_freq, r.peak_abs_input);
    }
    Ok(rows)
}

/// One controller's row in the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub controller: String,
    /// Worst case over seeds.
    pub peak_abs_freq: f64,
    pub peak_abs_input: f64,
    pub per_seed: Vec<RunSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub rows: Vec<CompareRow>,
    /// Per seed: whether the proposed controller has the smallest peak |Δω|.
    pub proposed_minimal: Vec<bool>,
}

fn unique_labels(base: &[&str]) -> Vec<String> {
    base.iter()
        .enumerate()
        .map(|(i, l)| {
            let n = base[..i].iter().filter(|p| *p == l).count();
            if n == 0 { l.to_string() } else { format!("{l}_{}", n + 1) }
        })
        .collect()
}

/// Runs the proposed high-gain controller (first δ) and every baseline on
/// the same seeds.
pub fn compare(cfg: &RunConfig) -> CliResult<Comparison> {
    let m = cfg.model()?;
    let art = design(cfg, &m)?;
    if cfg.baselines.is_empty() {
        log::warn!("no baselines configured; the table holds the proposed controller only");
    }
    let delta = cfg.synthesis.deltas[0];
    let mut loops = vec![(delta_label(delta), Feedback::Design(art.controller.with_delta(delta)?))];
    let names: Vec<&str> = cfg.baselines.iter().map(|b| b.label()).collect();
    for (name, b) in unique_labels(&names).into_iter().zip(&cfg.baselines) {
        loops.push((name, Feedback::from_baseline(b, &m)?));
    }
    let seeds = cfg.simulation.seeds.clone();
    let mut rows: Vec<CompareRow> = loops
        .iter()
        .map(|(l, _)| CompareRow { controller: l.clone(), peak_abs_freq: 0.0, peak_abs_input: 0.0, per_seed: vec![] })
        .collect();
    for &seed in &seeds {
        for ((_, fb), row) in loops.iter().zip(rows.iter_mut()) {
            let r = run_one(cfg, &m, fb, art.observer.as_ref(), seed)?;
            row.peak_abs_freq = row.peak_abs_freq.max(r.peak_abs_freq);
            row.peak_abs_input = row.peak_abs_input.max(r.peak_abs_input);
            row.per_seed.push(RunSummary::new(&row.controller, seed, &r));
        }
    }
    let proposed_minimal = (0..seeds.len())
        .map(|i| {
            let p = rows[0].per_seed[i].peak_abs_freq;
            rows[1..].iter().all(|r| p <= r.per_seed[i].peak_abs_freq)
        })
        .collect();
    let cmp = Comparison { seeds, rows, proposed_minimal };
    let dir = out_dir(cfg)?;
    if cfg.output.wants(Format::Json) {
        write_json(&dir.join("comparison.json"), &cmp)?;
    }
    if cfg.output.wants(Format::Csv) {
        let mut csv = String::from("controller,seed,peak_abs_freq,peak_abs_input\n");
        for row in &cmp.rows {
            for s in &row.per_seed {
                let _ = writeln!(csv, "{},{},{:.16e},{:.16e}", row.controller, s.seed, s.peak_abs_freq, s.peak_abs_input);
            }
        }
        write(&dir.join("comparison.csv"), &csv)?;
    }
    println!("{:<22} {:>14} {:>14}", "controller", "peak |dw|", "peak |u|");
    for row in &cmp.rows {
        println!("{:<22} {:>14.6} {:>14.6}", row.controller, row.peak_abs_freq, row.peak_abs_input);
    }
    Ok(cmp)
}

fn design(cfg: &RunConfig, m: &PlantModel) -> CliResult<DesignArtifact> {
    let s = &cfg.synthesis;
    let opts = FsOptions { augment_open_loop: s.augment(), ..FsOptions::default() };
    let controller = synth_fs_with(m, m.input_limit, 1.0, &s.search(), &opts)?;
    let observer = match s.feedback_mode {
        FeedbackMode::FullState => None,
        FeedbackMode::Output => {
            let oo = ObserverOptions { w_bound: s.observer_w_bound, ..ObserverOptions::default() };
            Some(synth_of_with(m, &controller, controller.certificate.alpha, s.max_delta(), &oo)?)
        }
    };
    Ok(DesignArtifact {
        bu_convention: cfg.plant.bu_convention,
        feedback_mode: s.feedback_mode,
        input_scale: m.input_scale,
        gain_physical: controller.k.scale(m.input_scale).row_slice(0).to_vec(),
        controller,
        deltas: s.deltas.clone(),
        observer,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub controller: String,
    pub max_level: f64,
    pub worst_seed: Option<u64>,
    pub per_seed: Vec<(u64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutput {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub runtime_s: f64,
    pub rows: Vec<ProbeRow>,
    /// Boundary of `{x : xᵀQ⁻¹x = 1}`.
    pub ellipse: Vec<[f64; 2]>,
}

/// Probes the certified ellipsoid with random step profiles under the
/// full-state low- and high-gain loops.
pub fn probe(cfg: &RunConfig, design: &Path, base_seed: u64) -> CliResult<ProbeOutput> {
    let start = Instant::now();
    let m = cfg.model()?;
    let art = DesignArtifact::load(design)?;
    art.check(&m)?;
    let sim = &cfg.simulation;
    let spec = ProbeSpec {
        n_seeds: sim.probe_seeds,
        base_seed,
        horizon_s: sim.horizon_s,
        dwell_s: sim.dwell_s,
        dt: sim.dt_s,
        w_norm: 1.0,
    };
    let q = &art.controller.certificate.q;
    let mut rows = Vec::new();
    for (label, d) in art.variants()? {
        let rep = probe_reachable_with(&m, &Feedback::Design(d), &spec, q)?;
        rows.push(ProbeRow { controller: label, max_level: rep.max_level, worst_seed: rep.worst_seed, per_seed: rep.per_seed });
    }
    let ellipse = ellipse_polyline(q, ELLIPSE_POINTS)?;
    let out = ProbeOutput { n_seeds: spec.n_seeds, base_seed, runtime_s: start.elapsed().as_secs_f64(), rows, ellipse };
    let dir = out_dir(cfg)?;
    if cfg.output.wants(Format::Json) {
        write_json(&dir.join("probe.json"), &out)?;
    }
    if cfg.output.wants(Format::Csv) {
        let mut csv = String::from("dw,dpm\n");
        for p in &out.ellipse {
            let _ = writeln!(csv, "{:.16e},{:.16e}", p[0], p[1]);
        }
        write(&dir.join("probe_ellipse.csv"), &csv)?;
    }
    for r in &out.rows {
        println!("{:<22} max level {:.6} over {} seeds", r.controller, r.max_level, out.n_seeds);
    }
    println!("runtime {:.2} s", out.runtime_s);
    Ok(out)
}
