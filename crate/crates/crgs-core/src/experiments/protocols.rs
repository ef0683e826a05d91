//! Benchmark circuit builders: XY4 dynamical decoupling, Trotterized
//! transverse-field Ising evolution, and the first-order prediction of the
//! residual decoupled precession rate for a given pulse library.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::crgs::{LibraryEntry, PulseLibrary};
use crate::error::{CoreError, Result};
use crate::pulse::{Circuit, Gate};
use crate::quantum::{embed, matexp_skew, CMatrix, Operator, Pauli, PauliString};
use crate::trajectory::{
    apply_virtual_z_phase, gaussian_pulse, ControlSystem, ControlTrajectory, TrajectoryDoc,
};

/// Hadamard-equivalent basis change |0⟩ → |+⟩: Rz(π/2)·√X·Rz(π/2).
fn push_prep(c: &mut Circuit, q: usize) {
    c.push(Gate::VirtualZ(q, FRAC_PI_2));
    c.push(Gate::Sx(q));
    c.push(Gate::VirtualZ(q, FRAC_PI_2));
}

/// Inverse of `push_prep`, with √X† rewritten as Rz(π)·√X·Rz(−π).
fn push_unprep(c: &mut Circuit, q: usize) {
    c.push(Gate::VirtualZ(q, -3.0 * FRAC_PI_2));
    c.push(Gate::Sx(q));
    c.push(Gate::VirtualZ(q, FRAC_PI_2));
}

/// Y pulse as a frame-shifted X: Rz(−π/2)·X·Rz(π/2).
fn push_y(c: &mut Circuit, q: usize) {
    c.push(Gate::VirtualZ(q, FRAC_PI_2));
    c.push(Gate::X(q));
    c.push(Gate::VirtualZ(q, -FRAC_PI_2));
}

/// XY4 decoupling run on every qubit simultaneously: prepare |+⟩^n, play
/// `reps` back-to-back X-Y-X-Y cycles, undo the preparation. Up to residual
/// coupling and decoherence the all-zeros outcome survives.
pub fn build_xy4(n_qubits: usize, reps: usize) -> Circuit {
    let mut c = Circuit::new(n_qubits);
    for q in 0..n_qubits {
        push_prep(&mut c, q);
    }
    for _ in 0..reps {
        for q in 0..n_qubits {
            c.push(Gate::X(q));
        }
        for q in 0..n_qubits {
            push_y(&mut c, q);
        }
        for q in 0..n_qubits {
            c.push(Gate::X(q));
        }
        for q in 0..n_qubits {
            push_y(&mut c, q);
        }
    }
    for q in 0..n_qubits {
        push_unprep(&mut c, q);
    }
    c
}

/// Physical (finite-duration) pulses per qubit in `build_xy4`: the two
/// basis changes plus four pulses per cycle.
pub fn xy4_pulse_count(reps: usize) -> usize {
    4 * reps + 2
}

/// First-order residual precession rate of an XY4-decoupled pair under a ZZ
/// coupling of strength `zeta_ghz`, for the given X pulse played in parallel
/// on both qubits.
///
/// The cycle-averaged coupling is Ā = Σ_kl M_kl σ_k⊗σ_l with
/// M_kl = (1/T) Σ_t v_tk v_tl, v_t the Bloch row of the toggled Z over one
/// X-Y-X-Y cycle (the Y pulse is the frame-shifted X). Probing with |++⟩ and
/// measuring the |−−⟩ revival picks out the matrix element
/// ⟨−−|Ā|++⟩ = (M_zz − M_yy) − i(M_yz + M_zy), and the observed oscillation
/// rate is J = 2·|⟨−−|Ā|++⟩|·2πζ in rad/ns. An idle pair gives M_zz = 1 and
/// recovers the bare rate 4πζ.
pub fn predicted_xy4_rate(x: &ControlTrajectory, zeta_ghz: f64) -> Result<f64> {
    if x.dim != 2 {
        return Err(CoreError::invalid("decoupling prediction needs a single-qubit pulse"));
    }
    let y = apply_virtual_z_phase(x, -FRAC_PI_2);
    let sz = Operator::sigma_z();
    let sig = [Operator::sigma_x(), Operator::sigma_y(), Operator::sigma_z()];

    let mut m = [[0.0; 3]; 3];
    let mut count = 0usize;
    let mut prefix = CMatrix::identity(2, 2);
    for seg in [x, &y, x, &y] {
        for u in &seg.unitaries {
            let cum = u * &prefix;
            let rot = cum.adjoint() * sz.matrix() * &cum;
            let mut v = [0.0; 3];
            for (k, s) in sig.iter().enumerate() {
                let tr: Complex64 = (s.matrix() * &rot).diagonal().sum();
                v[k] = 0.5 * tr.re;
            }
            for k in 0..3 {
                for l in 0..3 {
                    m[k][l] += v[k] * v[l];
                }
            }
            count += 1;
        }
        prefix = seg.unitaries.last().expect("nonempty trajectory") * &prefix;
    }
    let t = count as f64;
    let re = (m[2][2] - m[1][1]) / t;
    let im = (m[1][2] + m[2][1]) / t;
    Ok(2.0 * re.hypot(im) * 2.0 * PI * zeta_ghz)
}

#[derive(Debug, Clone, Copy)]
pub struct TfimConfig {
    pub n_qubits: usize,
    /// XX bond strength, rad/ns.
    pub g: f64,
    /// Longitudinal field, rad/ns.
    pub h: f64,
    /// Trotter step, ns.
    pub dt_ns: f64,
    pub reps: usize,
}

/// H = g Σ_i X_i X_{i+1} + h Σ_i Z_i on an open chain.
pub fn tfim_hamiltonian(cfg: &TfimConfig) -> Result<Operator> {
    let n = cfg.n_qubits;
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    for i in 0..n.saturating_sub(1) {
        let p = PauliString::new(n, &[(i, Pauli::X), (i + 1, Pauli::X)], cfg.g)?;
        h += embed(&p).matrix();
    }
    for i in 0..n {
        let p = PauliString::new(n, &[(i, Pauli::Z)], cfg.h)?;
        h += embed(&p).matrix();
    }
    Operator::new(h)
}

/// exp(−i H t) for the full evolution window of `cfg` (oracle for the
/// Trotterized circuit; ≤4 qubits).
pub fn tfim_exact_unitary(cfg: &TfimConfig) -> Result<Operator> {
    let h = tfim_hamiltonian(cfg)?;
    matexp_skew(&h, cfg.dt_ns * cfg.reps as f64)
}

/// Rx(θ) = Rz(−π/2)·√X·Rz(π−θ)·√X·Rz(−π/2) (exact as an SU(2) identity).
fn push_rx(c: &mut Circuit, q: usize, theta: f64) {
    c.push(Gate::VirtualZ(q, -FRAC_PI_2));
    c.push(Gate::Sx(q));
    c.push(Gate::VirtualZ(q, PI - theta));
    c.push(Gate::Sx(q));
    c.push(Gate::VirtualZ(q, -FRAC_PI_2));
}

/// exp(−i θ X_a X_b / 2) = CNOT·(Rx(θ)⊗I)·CNOT with the rotation on the
/// control (CNOT conjugation maps X_a to X_a X_b).
fn push_xx(c: &mut Circuit, a: usize, b: usize, theta: f64) {
    c.push_cnot(a, b);
    push_rx(c, a, theta);
    c.push_cnot(a, b);
}

/// Second-order Trotter circuit for `tfim_hamiltonian`: each step plays a
/// half-angle XX layer, the full Z layer (virtual, zero duration), and the
/// second half-angle XX layer. Bond terms commute, so layer order inside a
/// sweep is free.
pub fn build_tfim(cfg: &TfimConfig) -> Circuit {
    let mut c = Circuit::new(cfg.n_qubits);
    let n = cfg.n_qubits;
    for _ in 0..cfg.reps {
        for i in 0..n.saturating_sub(1) {
            push_xx(&mut c, i, i + 1, cfg.g * cfg.dt_ns);
        }
        for q in 0..n {
            c.push(Gate::VirtualZ(q, 2.0 * cfg.h * cfg.dt_ns));
        }
        for i in 0..n.saturating_sub(1) {
            push_xx(&mut c, i, i + 1, cfg.g * cfg.dt_ns);
        }
    }
    c
}

/// Single-color baseline library: area-normalized truncated-Gaussian id/√X/X
/// pulses on a shared grid, with no crosstalk shaping and an empty audit.
pub fn gaussian_baseline_library(duration_ns: f64, knots: usize) -> Result<PulseLibrary> {
    if knots < 2 {
        return Err(CoreError::invalid("need at least two knots"));
    }
    let sys = ControlSystem::single_qubit_x();
    let dt = duration_ns / (knots - 1) as f64;
    let mut entries = Vec::new();
    for (gate, area, fixed) in [("id", 0.0, true), ("sx", FRAC_PI_2, false), ("x", PI, false)] {
        let z = gaussian_pulse(&sys, &[area], knots, dt)?;
        entries.push(LibraryEntry {
            color: "g0".into(),
            gate: gate.into(),
            area,
            fixed,
            trajectory: TrajectoryDoc::from_trajectory(&z),
        });
    }
    Ok(PulseLibrary {
        duration_ns,
        entries,
        audit: Vec::new(),
        metadata: BTreeMap::new(),
    })
}
