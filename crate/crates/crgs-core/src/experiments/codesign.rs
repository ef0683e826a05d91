//! Coupling co-design: sweep the static-coupling scale and score each pulse
//! library on a Trotterized Ising step, separating crosstalk loss from the
//! decoherence floor set by the shortened gates.

use num_complex::Complex64;

use crate::crgs::PulseLibrary;
use crate::error::{CoreError, Result};
use crate::experiments::protocols::{build_tfim, TfimConfig};
use crate::pulse::{simulate_circuit, DensityState, DeviceModel, SimMode, SimOptions};
use crate::quantum::CMatrix;

#[derive(Debug, Clone)]
pub struct CodesignRow {
    /// Coupling scale k: ζ grows as k², CR gate durations shrink as 1/k.
    pub factor: f64,
    pub library: String,
    pub robust_ecr: bool,
    /// State fidelity of one noisy Trotter step against the ideal circuit.
    pub fidelity: f64,
    /// Same run with every static ZZ forced to zero: what decoherence alone
    /// would allow at this gate speed.
    pub decoherence_limited: f64,
}

fn state_fidelity(rho: &DensityState, psi: &[Complex64]) -> f64 {
    let mut f = Complex64::new(0.0, 0.0);
    for (i, a) in psi.iter().enumerate() {
        for (j, b) in psi.iter().enumerate() {
            f += a.conj() * rho.matrix[(i, j)] * b;
        }
    }
    f.re
}

fn run_one(
    circuit: &crate::pulse::Circuit,
    model: &DeviceModel,
    library: &PulseLibrary,
    color_of: &[String],
    robust: bool,
    psi: &[Complex64],
) -> Result<f64> {
    let opts = SimOptions {
        mode: SimMode::Density,
        noise: true,
        robust_ecr: robust,
        initial: None,
    };
    let out = simulate_circuit(circuit, model, library, color_of, &opts)?;
    let rho = out
        .density
        .ok_or_else(|| CoreError::invalid("density run produced no state"))?;
    Ok(state_fidelity(&rho, psi))
}

/// One Trotter step of `cfg` on every (library, envelope) combination at each
/// coupling scale. Detunings are zeroed so the comparison isolates crosstalk
/// against decoherence.
pub fn codesign_sweep(
    model: &DeviceModel,
    libraries: &[(String, PulseLibrary, Vec<String>)],
    factors: &[f64],
    cfg: &TfimConfig,
) -> Result<Vec<CodesignRow>> {
    if cfg.n_qubits > model.n_qubits() {
        return Err(CoreError::invalid("Trotter chain wider than the device"));
    }
    let step = TfimConfig { reps: 1, ..*cfg };
    let circuit = build_tfim(&step);
    let ideal: CMatrix = circuit.unitary()?;
    let psi: Vec<Complex64> = (0..ideal.nrows()).map(|i| ideal[(i, 0)]).collect();

    let mut rows = Vec::new();
    for &factor in factors {
        if factor <= 0.0 {
            return Err(CoreError::invalid("coupling scale must be positive"));
        }
        let mut scaled = model.clone();
        scaled.coupling_scale = factor;
        for q in &mut scaled.qubits {
            q.detuning_ghz = 0.0;
        }
        let mut quiet = scaled.clone();
        for e in &mut quiet.edges {
            e.zeta_override_ghz = Some(0.0);
        }
        for (name, library, color_of) in libraries {
            for robust in [false, true] {
                let fidelity = run_one(&circuit, &scaled, library, color_of, robust, &psi)?;
                let floor = run_one(&circuit, &quiet, library, color_of, robust, &psi)?;
                rows.push(CodesignRow {
                    factor,
                    library: name.clone(),
                    robust_ecr: robust,
                    fidelity,
                    decoherence_limited: floor,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::protocols::gaussian_baseline_library;
    use std::f64::consts::PI;

    fn chain_model(n: usize) -> DeviceModel {
        let couplings: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        DeviceModel::standard(n, &couplings)
    }

    #[test]
    fn sweep_shape_and_sanity() {
        let model = chain_model(2);
        let lib = gaussian_baseline_library(40.0, 41).unwrap();
        let colors = vec!["g0".to_string(); 2];
        let cfg = TfimConfig { n_qubits: 2, g: 2.0 * PI * 1e-3, h: 2.0 * PI * 1e-3, dt_ns: 10.0, reps: 1 };
        let rows = codesign_sweep(
            &model,
            &[("gauss".into(), lib, colors)],
            &[1.0, 2.0],
            &cfg,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.fidelity > 0.5 && r.fidelity <= 1.0 + 1e-9, "{r:?}");
            // Removing crosstalk can only help.
            assert!(r.decoherence_limited >= r.fidelity - 1e-6, "{r:?}");
        }
        // Faster gates waste less coherence when crosstalk is off.
        let plain_floor =
            |f: f64| rows.iter().find(|r| r.factor == f && !r.robust_ecr).unwrap().decoherence_limited;
        assert!(plain_floor(2.0) >= plain_floor(1.0) - 1e-6);
    }

    #[test]
    fn rejects_oversized_chain() {
        let model = chain_model(2);
        let lib = gaussian_baseline_library(40.0, 41).unwrap();
        let cfg = TfimConfig { n_qubits: 3, g: 1e-3, h: 1e-3, dt_ns: 10.0, reps: 1 };
        assert!(codesign_sweep(&model, &[("g".into(), lib, vec!["g0".into(); 2])], &[1.0], &cfg).is_err());
    }
}
