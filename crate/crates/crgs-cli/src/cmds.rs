//! Subcommand bodies. Each returns a process exit code: 0 success, 1
//! usage/config error, 2 numerical non-convergence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crgs_core::crgs::{
    build_crgs_problem, color_layout, export_library, pareto_sweep, solve_crgs, BuildOptions,
    CrgsGraph, GateSetSpec, LayoutGraph, PulseLibrary,
};
use crgs_core::experiments::{
    build_random_clifford, build_tfim, build_xy4, codesign_sweep, fine_calibrate, fit_dd, fit_rb,
    kl_bootstrap, kl_from_counts, rough_calibrate, sample_shots,
    CalibrationSettings, TfimConfig,
};
use crgs_core::pulse::{simulate_circuit, Circuit, DeviceModel, NoiseRates, SimMode, SimOptions};
use crgs_core::trajectory::{gaussian_pulse, ControlTrajectory, SolverConfig};
use crgs_core::ControlSystem;

use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| format!("mkdir {}: {e}", dir.display()))?;
    }
    fs::write(path, contents).map_err(|e| format!("write {}: {e}", path.display()))
}

fn layout_edges(g: &LayoutGraph) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..g.n_qubits {
        for &b in &g.adjacency[a] {
            if a < b {
                edges.push((a, b));
            }
        }
    }
    edges.sort();
    edges
}

fn load_model(cfg: &RunConfig, layout: &LayoutGraph) -> Result<DeviceModel, String> {
    match &cfg.device.model_path {
        Some(p) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path)
                .map_err(|e| format!("cannot read device model {}: {e}", path.display()))?;
            DeviceModel::from_toml(&text).map_err(|e| e.to_string())
        }
        None => Ok(DeviceModel::standard(layout.n_qubits, &layout_edges(layout))),
    }
}

fn load_library(cfg: &RunConfig, p: &Option<PathBuf>) -> Result<PulseLibrary, String> {
    let p = p.as_ref().ok_or("no library_path configured")?;
    let path = cfg.resolve(p);
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("cannot read library {}: {e}", path.display()))?;
    PulseLibrary::from_toml(&text).map_err(|e| e.to_string())
}

/// Per-qubit color names for a library on a colored layout. Single-color
/// libraries (the Gaussian baseline) apply everywhere; multi-color ones take
/// the layout coloring.
fn color_assignment(library: &PulseLibrary, layout: &LayoutGraph) -> Result<Vec<String>, String> {
    let colors = library.colors();
    if colors.len() == 1 {
        return Ok(vec![colors[0].clone(); layout.n_qubits]);
    }
    let coloring = color_layout(layout);
    let names: Vec<String> = coloring.iter().map(|c| format!("c{c}")).collect();
    for name in &names {
        if !colors.contains(name) {
            return Err(format!(
                "layout needs color `{name}` but the library only has {colors:?}"
            ));
        }
    }
    Ok(names)
}

fn out_path(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

fn report_text(report: &crgs_core::SolveReport, susceptibility: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "converged: {}", report.converged);
    let _ = writeln!(s, "iterations: {}", report.iterations);
    let _ = writeln!(s, "objective: {:.12e}", report.objective);
    let _ = writeln!(s, "constraint_violation: {:.12e}", report.violation);
    let _ = writeln!(s, "edge_susceptibility: {:.12e}", susceptibility);
    for (i, f) in report.fidelities.iter().enumerate() {
        let _ = writeln!(s, "fidelity[{i}]: {:.12}", f);
    }
    s
}

pub fn cmd_optimize(cfg: &RunConfig, out: &Path) -> i32 {
    let gs = &cfg.gate_set;
    let layout = match LayoutGraph::preset(&cfg.device.layout) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let n_colors = color_layout(&layout).iter().max().map_or(1, |&c| c + 1);
    let spec = GateSetSpec::standard(gs.duration_ns);
    let graph = match CrgsGraph::complete(&spec, n_colors, gs.same_gate_only) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };

    let (library, report) = match gs.mode.as_str() {
        "gaussian" => {
            // Rollout only: the same area-normalized Gaussian on every color.
            let sys = ControlSystem::single_qubit_x();
            let dt = gs.duration_ns / (gs.knots - 1) as f64;
            let mut trajectories = Vec::new();
            for &(_, gi) in &graph.vertices {
                let gate = &spec.gates[gi];
                let z = if gate.fixed {
                    ControlTrajectory::idle(&sys, gs.knots, dt)
                } else {
                    match gaussian_pulse(&sys, &[gate.area], gs.knots, dt) {
                        Ok(z) => z,
                        Err(e) => return fail(e),
                    }
                };
                trajectories.push(z);
            }
            match export_library(&spec, &graph, &trajectories) {
                Ok(lib) => (lib, None),
                Err(e) => return fail(e),
            }
        }
        mode @ ("crgs" | "robust") => {
            let opts = BuildOptions {
                amplitude_bound: gs.amplitude_bound,
                curvature_bound: gs.curvature_bound,
                knots: gs.knots,
                detuning: (mode == "robust")
                    .then_some(std::f64::consts::PI * gs.detuning_ghz),
                seed: cfg.seed,
            };
            let built = match build_crgs_problem(&spec, &graph, &opts, gs.required_fidelity) {
                Ok(b) => b,
                Err(e) => return fail(e),
            };
            let solver = SolverConfig { seed: cfg.seed, ..SolverConfig::default() };
            let sol = match solve_crgs(&built, &graph, gs.required_fidelity, &solver) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let lib = match export_library(&spec, &graph, &sol.trajectories) {
                Ok(l) => l,
                Err(e) => return fail(e),
            };
            (lib, Some((sol.report, sol.edge_susceptibility)))
        }
        other => return fail(format!("unknown gate-set mode `{other}`")),
    };

    let lib_text = match library.to_toml() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    if let Err(e) = write_file(&out_path(out, "library.toml"), &lib_text) {
        return fail(e);
    }
    match report {
        Some((report, susc)) => {
            if let Err(e) = write_file(&out_path(out, "report.txt"), &report_text(&report, susc)) {
                return fail(e);
            }
            if report.converged {
                EXIT_OK
            } else {
                eprintln!("solver did not converge; library written anyway");
                EXIT_DIVERGED
            }
        }
        None => {
            let _ = write_file(&out_path(out, "report.txt"), "converged: true (rollout only)\n");
            EXIT_OK
        }
    }
}

fn csv_line(cols: &[String]) -> String {
    cols.join(",") + "\n"
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> i32 {
    match cfg.sweep.kind.as_str() {
        "pareto" => cmd_sweep_pareto(cfg, out),
        "codesign" => cmd_sweep_codesign(cfg, out),
        other => fail(format!("unknown sweep kind `{other}`")),
    }
}

fn cmd_sweep_pareto(cfg: &RunConfig, out: &Path) -> i32 {
    let gs = &cfg.gate_set;
    let layout = match LayoutGraph::preset(&cfg.device.layout) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let n_colors = color_layout(&layout).iter().max().map_or(1, |&c| c + 1);
    let spec = GateSetSpec::standard(gs.duration_ns);
    let graph = match CrgsGraph::complete(&spec, n_colors, gs.same_gate_only) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let opts = BuildOptions { knots: gs.knots, seed: cfg.seed, ..BuildOptions::default() };
    let solver = SolverConfig { seed: cfg.seed, ..SolverConfig::default() };
    let cells = match pareto_sweep(
        &spec,
        &graph,
        &cfg.sweep.amplitude_grid,
        &cfg.sweep.curvature_grid,
        gs.required_fidelity,
        &opts,
        &solver,
    ) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut csv = String::from("amplitude_bound,curvature_bound,susceptibility,min_fidelity,converged\n");
    for c in &cells {
        let min_f = c.fidelities.iter().cloned().fold(f64::NAN, f64::min);
        csv += &csv_line(&[
            format!("{}", c.amplitude_bound),
            format!("{}", c.curvature_bound),
            format!("{:.12e}", c.susceptibility),
            format!("{:.12}", min_f),
            format!("{}", c.converged),
        ]);
    }
    if let Err(e) = write_file(&out_path(out, "pareto.csv"), &csv) {
        return fail(e);
    }
    EXIT_OK
}

fn cmd_sweep_codesign(cfg: &RunConfig, out: &Path) -> i32 {
    let layout = match LayoutGraph::preset(&cfg.device.layout) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let model = match load_model(cfg, &layout) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let mut libraries = Vec::new();
    for r in &cfg.sweep.libraries {
        let path = cfg.resolve(&r.path);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => return fail(format!("cannot read library {}: {e}", path.display())),
        };
        let lib = match PulseLibrary::from_toml(&text) {
            Ok(l) => l,
            Err(e) => return fail(e),
        };
        let colors = match color_assignment(&lib, &layout) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        libraries.push((r.name.clone(), lib, colors));
    }
    if libraries.is_empty() {
        return fail("codesign sweep needs at least one [[sweep.libraries]] entry");
    }
    let t = &cfg.sweep.tfim;
    let tfim = TfimConfig {
        n_qubits: t.n_qubits,
        g: t.g_rad_ns,
        h: t.h_rad_ns,
        dt_ns: t.dt_ns,
        reps: 1,
    };
    let rows = match codesign_sweep(&model, &libraries, &cfg.sweep.factors, &tfim) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut csv = String::from("factor,library,robust_ecr,fidelity,decoherence_limited\n");
    for r in &rows {
        csv += &csv_line(&[
            format!("{}", r.factor),
            r.library.clone(),
            format!("{}", r.robust_ecr),
            format!("{:.12}", r.fidelity),
            format!("{:.12}", r.decoherence_limited),
        ]);
    }
    if let Err(e) = write_file(&out_path(out, "codesign.csv"), &csv) {
        return fail(e);
    }
    EXIT_OK
}

fn binomial_std(p: f64, shots: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / shots as f64).sqrt()
}

/// Survival probability of the all-zeros outcome after sampling.
fn sampled_survival(probs: &[f64], shots: u64, seed: u64) -> Result<f64, String> {
    let dist = sample_shots(probs, shots, seed).map_err(|e| e.to_string())?;
    Ok(dist.counts[0] as f64 / dist.total as f64)
}

pub fn cmd_benchmark(cfg: &RunConfig, out: &Path) -> i32 {
    let layout = match LayoutGraph::preset(&cfg.device.layout) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let model = match load_model(cfg, &layout) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let library = match load_library(cfg, &cfg.benchmark.library_path) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let colors = match color_assignment(&library, &layout) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let b = &cfg.benchmark;
    if b.n_qubits > model.n_qubits() {
        return fail("benchmark n_qubits exceeds the device");
    }
    let opts = SimOptions {
        mode: SimMode::Density,
        noise: b.noise,
        robust_ecr: false,
        initial: None,
    };
    match b.protocol.as_str() {
        "xy4" => cmd_benchmark_xy4(cfg, out, &model, &library, &colors, &opts),
        "rc" | "rb" => cmd_benchmark_rb(cfg, out, &model, &library, &colors, &opts),
        "tfim" => cmd_benchmark_tfim(cfg, out, &model, &library, &colors, &opts),
        other => fail(format!("unknown benchmark protocol `{other}`")),
    }
}

fn cmd_benchmark_xy4(
    cfg: &RunConfig,
    out: &Path,
    model: &DeviceModel,
    library: &PulseLibrary,
    colors: &[String],
    opts: &SimOptions,
) -> i32 {
    let b = &cfg.benchmark;
    let reps: Vec<usize> = if b.repetitions.is_empty() {
        (0..=10).map(|k| k * 20).collect()
    } else {
        b.repetitions.clone()
    };
    let mut csv = String::from("protocol,parameter,value,std\n");
    let mut times = Vec::new();
    let mut survival = Vec::new();
    for (i, &n) in reps.iter().enumerate() {
        let circuit = build_xy4(b.n_qubits, n);
        let outcome = match simulate_circuit(&circuit, model, library, colors, opts) {
            Ok(o) => o,
            Err(e) => return fail(e),
        };
        let p = match sampled_survival(&outcome.probabilities(), b.shots, cfg.seed + i as u64) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        times.push(outcome.duration_ns);
        survival.push(p);
        csv += &csv_line(&[
            "xy4".into(),
            format!("{n}"),
            format!("{:.12}", p),
            format!("{:.12}", binomial_std(p, b.shots)),
        ]);
    }
    if let Err(e) = write_file(&out_path(out, "xy4.csv"), &csv) {
        return fail(e);
    }
    let mut report = String::new();
    for fix in [false, true] {
        match fit_dd(&times, &survival, fix) {
            Ok(f) => {
                let label = if fix { "fixed_j" } else { "free_j" };
                let _ = writeln!(report, "[{label}]");
                let _ = writeln!(report, "gamma_per_ns: {:.6e} +- {:.2e}", f.gamma, f.gamma_err);
                let _ = writeln!(report, "j_rad_ns: {:.6e} +- {:.2e}", f.j, f.j_err);
                let _ = writeln!(report, "residual_norm: {:.6e}", f.residual_norm);
            }
            Err(e) => return fail(e),
        }
    }
    if let Err(e) = write_file(&out_path(out, "xy4_fit.txt"), &report) {
        return fail(e);
    }
    EXIT_OK
}

fn cmd_benchmark_rb(
    cfg: &RunConfig,
    out: &Path,
    model: &DeviceModel,
    library: &PulseLibrary,
    colors: &[String],
    opts: &SimOptions,
) -> i32 {
    let b = &cfg.benchmark;
    let lengths: Vec<usize> = if b.repetitions.is_empty() {
        vec![1, 5, 10, 20, 50, 100]
    } else {
        b.repetitions.clone()
    };
    let mut csv = String::from("protocol,parameter,value,std\n");
    let mut ms = Vec::new();
    let mut survival = Vec::new();
    for (i, &m) in lengths.iter().enumerate() {
        let mut acc = 0.0;
        for s in 0..b.sequences {
            let seed = cfg.seed
                .wrapping_mul(0x9e37_79b9)
                .wrapping_add((i * b.sequences + s) as u64);
            let (circuit, _) = build_random_clifford(0, m, seed);
            let outcome = match simulate_circuit(&circuit, model, library, colors, opts) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            let p = match sampled_survival(&outcome.probabilities(), b.shots, seed) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            acc += p;
        }
        let p = acc / b.sequences as f64;
        ms.push(m as f64);
        survival.push(p);
        csv += &csv_line(&[
            "rc".into(),
            format!("{m}"),
            format!("{:.12}", p),
            format!("{:.12}", binomial_std(p, b.shots * b.sequences as u64)),
        ]);
    }
    if let Err(e) = write_file(&out_path(out, "rc.csv"), &csv) {
        return fail(e);
    }
    let mut report = String::new();
    match fit_rb(&ms, &survival) {
        Ok(f) => {
            let _ = writeln!(report, "a: {:.6} +- {:.2e}", f.a, f.a_err);
            let _ = writeln!(report, "p: {:.8} +- {:.2e}", f.p, f.p_err);
            let _ = writeln!(report, "b: {:.6} +- {:.2e}", f.b, f.b_err);
            let _ = writeln!(report, "error_per_clifford: {:.6e}", f.epc());
            let _ = writeln!(report, "residual_norm: {:.6e}", f.residual_norm);
        }
        Err(e) => return fail(e),
    }
    if let Err(e) = write_file(&out_path(out, "rc_fit.txt"), &report) {
        return fail(e);
    }
    EXIT_OK
}

fn cmd_benchmark_tfim(
    cfg: &RunConfig,
    out: &Path,
    model: &DeviceModel,
    library: &PulseLibrary,
    colors: &[String],
    opts: &SimOptions,
) -> i32 {
    let b = &cfg.benchmark;
    let t = &b.tfim;
    let mut csv = String::from("protocol,parameter,value,std\n");
    for n in 1..=t.max_reps {
        let tfim = TfimConfig {
            n_qubits: t.n_qubits,
            g: t.g_rad_ns,
            h: t.h_rad_ns,
            dt_ns: t.dt_ns,
            reps: n,
        };
        let circuit = build_tfim(&tfim);
        let ideal = match circuit.unitary() {
            Ok(u) => u,
            Err(e) => return fail(e),
        };
        let ideal_probs: Vec<f64> = (0..ideal.nrows()).map(|i| ideal[(i, 0)].norm_sqr()).collect();
        let outcome = match simulate_circuit(&circuit, model, library, colors, opts) {
            Ok(o) => o,
            Err(e) => return fail(e),
        };
        let dist = match sample_shots(&outcome.probabilities(), b.shots, cfg.seed + n as u64) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let kl = kl_from_counts(&dist.counts, dist.total, &ideal_probs);
        let std = match kl_bootstrap(&dist, &ideal_probs, 200, cfg.seed ^ n as u64) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        csv += &csv_line(&[
            "tfim".into(),
            format!("{n}"),
            format!("{:.12}", kl),
            format!("{:.12}", std),
        ]);
    }
    if let Err(e) = write_file(&out_path(out, "tfim.csv"), &csv) {
        return fail(e);
    }
    EXIT_OK
}

pub fn cmd_calibrate(cfg: &RunConfig, out: &Path) -> i32 {
    let layout = match LayoutGraph::preset(&cfg.device.layout) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let model = match load_model(cfg, &layout) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let mut library = match load_library(cfg, &cfg.calibrate.library_path) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let c = &cfg.calibrate;
    let settings = CalibrationSettings {
        tolerance_rad: c.tolerance_rad,
        max_iterations: c.max_iterations,
        rough_points: c.rough_points,
    };
    let rates = NoiseRates::from_model(&model, &[0], c.noise);
    let mut all_converged = true;
    let entries: Vec<(String, String, f64)> = library
        .entries
        .iter()
        .filter(|e| !e.fixed)
        .map(|e| (e.color.clone(), e.gate.clone(), e.area))
        .collect();
    for (color, gate, theta) in entries {
        let z = match library.trajectory(&color, &gate) {
            Ok(z) => z,
            Err(e) => return fail(e),
        };
        let (a_rough, freq) = match rough_calibrate(&z, theta, &rates, &settings) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let a_start = a_rough * (1.0 + c.initial_error);
        let mut rec = match fine_calibrate(&z, theta, a_start, &rates, &settings) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        rec.rabi_frequency = freq;
        rec.a_rough = a_rough;
        all_converged &= rec.converged;
        let mut text = String::new();
        let _ = writeln!(text, "entry: {color}/{gate}");
        let _ = writeln!(text, "target_theta_rad: {:.12}", rec.target_theta);
        let _ = writeln!(text, "rabi_frequency: {:.12}", rec.rabi_frequency);
        let _ = writeln!(text, "amplitude_rough: {:.12}", rec.a_rough);
        let _ = writeln!(text, "amplitude_fine: {:.12}", rec.a_fine);
        let _ = writeln!(text, "odd_repetitions: {}", rec.odd_reps);
        let _ = writeln!(text, "converged: {}", rec.converged);
        for (k, (dtheta, a)) in rec.history.iter().enumerate() {
            let _ = writeln!(text, "loop[{k}]: dtheta={:.6e} amplitude={:.12}", dtheta, a);
        }
        let fname = format!("calibration_{color}_{gate}.txt");
        if let Err(e) = write_file(&out_path(out, &fname), &text) {
            return fail(e);
        }
        library
            .metadata
            .insert(format!("calibrated_amplitude/{color}/{gate}"), format!("{:.12}", rec.a_fine));
    }
    let lib_text = match library.to_toml() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    if let Err(e) = write_file(&out_path(out, "library_calibrated.toml"), &lib_text) {
        return fail(e);
    }
    if all_converged {
        EXIT_OK
    } else {
        eprintln!("calibration did not converge for every entry");
        EXIT_DIVERGED
    }
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> i32 {
    let s = &cfg.simulate;
    let layout = match LayoutGraph::preset(&cfg.device.layout) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let model = match load_model(cfg, &layout) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let library = match load_library(cfg, &s.library_path) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let colors = match color_assignment(&library, &layout) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let circuit_path = match &s.circuit_path {
        Some(p) => cfg.resolve(p),
        None => return fail("no circuit_path configured"),
    };
    let text = match fs::read_to_string(&circuit_path) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read circuit {}: {e}", circuit_path.display())),
    };
    let circuit = match Circuit::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mode = match s.mode.as_str() {
        "density" => SimMode::Density,
        "unitary" => SimMode::Unitary,
        other => return fail(format!("unknown simulation mode `{other}`")),
    };
    let opts = SimOptions { mode, noise: s.noise, robust_ecr: s.robust_ecr, initial: None };
    let outcome = match simulate_circuit(&circuit, &model, &library, &colors, &opts) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let probs = outcome.probabilities();
    let n = outcome.n_qubits;
    let mut csv = String::from("outcome,probability\n");
    for (i, p) in probs.iter().enumerate() {
        csv += &csv_line(&[format!("{:0width$b}", i, width = n), format!("{:.12}", p)]);
    }
    if let Err(e) = write_file(&out_path(out, "probabilities.csv"), &csv) {
        return fail(e);
    }
    if s.shots > 0 {
        let dist = match sample_shots(&probs, s.shots, cfg.seed) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let mut csv = String::from("outcome,count\n");
        for (i, c) in dist.counts.iter().enumerate() {
            csv += &csv_line(&[format!("{:0width$b}", i, width = n), format!("{c}")]);
        }
        if let Err(e) = write_file(&out_path(out, "counts.csv"), &csv) {
            return fail(e);
        }
    }
    EXIT_OK
}
