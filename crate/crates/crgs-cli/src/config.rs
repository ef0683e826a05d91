//! Run configuration: one TOML document per invocation. Numeric fields carry
//! their units in the name (GHz, ns, µs are the only ones in play).

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub gate_set: GateSetSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    /// Seed for every stochastic stage; no wall-clock defaults anywhere.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 leaves the pool at its library default.
    #[serde(default)]
    pub workers: usize,

    /// Directory the config was loaded from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    /// Serialized device model; absent means "build from the layout with
    /// stock transmon parameters".
    pub model_path: Option<PathBuf>,
    #[serde(default = "default_layout")]
    pub layout: String,
}

fn default_layout() -> String {
    "chain:2".into()
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self { model_path: None, layout: default_layout() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSetSection {
    #[serde(default = "default_duration")]
    pub duration_ns: f64,
    #[serde(default = "default_knots")]
    pub knots: usize,
    #[serde(default = "default_f0")]
    pub required_fidelity: f64,
    /// rad/ns.
    #[serde(default = "default_amp")]
    pub amplitude_bound: f64,
    /// rad/ns³.
    #[serde(default = "default_curv")]
    pub curvature_bound: f64,
    /// "crgs" (crosstalk objective), "robust" (adds on-site detuning
    /// susceptibility), or "gaussian" (rollout only, no solve).
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Detuning magnitude for "robust" mode, GHz.
    #[serde(default = "default_detuning")]
    pub detuning_ghz: f64,
    /// Restrict susceptibility edges to equal-gate pairs.
    #[serde(default)]
    pub same_gate_only: bool,
}

fn default_duration() -> f64 {
    240.0
}
fn default_knots() -> usize {
    50
}
fn default_f0() -> f64 {
    0.9999
}
fn default_amp() -> f64 {
    0.2
}
fn default_curv() -> f64 {
    0.01
}
fn default_mode() -> String {
    "crgs".into()
}
fn default_detuning() -> f64 {
    1e-3
}

impl Default for GateSetSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// "pareto" (amplitude × curvature grid) or "codesign" (coupling factors).
    #[serde(default = "default_sweep_kind")]
    pub kind: String,
    #[serde(default = "default_amp_grid")]
    pub amplitude_grid: Vec<f64>,
    #[serde(default = "default_curv_grid")]
    pub curvature_grid: Vec<f64>,
    /// Coupling-scale factors for the co-design table.
    #[serde(default = "default_factors")]
    pub factors: Vec<f64>,
    /// (name, library path) pairs scored in the co-design table.
    #[serde(default)]
    pub libraries: Vec<LibraryRef>,
    #[serde(default = "default_tfim")]
    pub tfim: TfimSection,
}

fn default_sweep_kind() -> String {
    "pareto".into()
}
fn default_amp_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_curv_grid() -> Vec<f64> {
    vec![0.005, 0.01, 0.02]
}
fn default_factors() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_tfim() -> TfimSection {
    toml::from_str("").expect("defaults are total")
}

impl Default for SweepSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryRef {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimSection {
    #[serde(default = "default_tfim_n")]
    pub n_qubits: usize,
    /// XX bond strength, rad/ns.
    #[serde(default = "default_tfim_g")]
    pub g_rad_ns: f64,
    /// Longitudinal field, rad/ns.
    #[serde(default = "default_tfim_g")]
    pub h_rad_ns: f64,
    #[serde(default = "default_tfim_dt")]
    pub dt_ns: f64,
    #[serde(default = "default_tfim_reps")]
    pub max_reps: usize,
}

fn default_tfim_n() -> usize {
    2
}
fn default_tfim_g() -> f64 {
    2e-3
}
fn default_tfim_dt() -> f64 {
    10.0
}
fn default_tfim_reps() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    /// "xy4", "rc", "rb", or "tfim".
    #[serde(default = "default_protocol")]
    pub protocol: String,
    pub library_path: Option<PathBuf>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_bench_n")]
    pub n_qubits: usize,
    /// Decoupling cycle counts (xy4) or Clifford sequence lengths (rc/rb).
    #[serde(default)]
    pub repetitions: Vec<usize>,
    /// Random sequences averaged per length (rc/rb).
    #[serde(default = "default_sequences")]
    pub sequences: usize,
    #[serde(default)]
    pub noise: bool,
    #[serde(default = "default_tfim")]
    pub tfim: TfimSection,
}

fn default_protocol() -> String {
    "xy4".into()
}
fn default_shots() -> u64 {
    2048
}
fn default_bench_n() -> usize {
    2
}
fn default_sequences() -> usize {
    8
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub library_path: Option<PathBuf>,
    #[serde(default = "default_cal_tol")]
    pub tolerance_rad: f64,
    #[serde(default = "default_cal_iters")]
    pub max_iterations: usize,
    #[serde(default = "default_cal_points")]
    pub rough_points: usize,
    #[serde(default)]
    pub noise: bool,
    /// Fractional amplitude error injected before the fine loop (exercises
    /// convergence from a known miscalibration; 0 starts from the rough fit).
    #[serde(default)]
    pub initial_error: f64,
}

fn default_cal_tol() -> f64 {
    1e-3
}
fn default_cal_iters() -> usize {
    8
}
fn default_cal_points() -> usize {
    12
}

impl Default for CalibrateSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub circuit_path: Option<PathBuf>,
    pub library_path: Option<PathBuf>,
    /// "density" or "unitary".
    #[serde(default = "default_sim_mode")]
    pub mode: String,
    #[serde(default)]
    pub noise: bool,
    #[serde(default)]
    pub robust_ecr: bool,
    #[serde(default)]
    pub shots: u64,
}

fn default_sim_mode() -> String {
    "density".into()
}

impl Default for SimulateSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            // toml errors already carry line/column spans.
            format!("config {}: {e}", path.display())
        })?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    /// Resolve a configured path relative to the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
