//! Direct trajectory optimization of control pulses.
//!
//! The optimization variable is the full trajectory Z: per-knot unitaries,
//! control amplitudes, velocities, accelerations, and timesteps. Controls
//! are piecewise-constant accelerations, so pulse shapes are continuously
//! differentiable. Dynamics follow the double-integrator recursion for the
//! controls and the unitary recursion U_{t+1} = exp(−i Δt H(a_t)) U_t.

mod objectives;
mod serialize;
mod solver;

pub use objectives::{
    check_gradient, InfidelityTerm, ObjectiveTerm, RegularizationTerm, SusceptibilityTerm,
    TrajGrad,
};
pub use serialize::TrajectoryDoc;
pub use solver::{
    gaussian_pulse, initial_guess, solve, CouplingTerm, SolveReport, SolverConfig,
    TrajectoryProblem, VertexSpec,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::quantum::{embed, matexp_skew, CMatrix, Operator, PauliString};

/// The control system: a static drift Hamiltonian plus one Hermitian drive
/// generator per channel (all in rad/ns).
#[derive(Debug, Clone)]
pub struct ControlSystem {
    pub drift: Vec<PauliString>,
    pub drives: Vec<Operator>,
    pub dim: usize,
}

impl ControlSystem {
    pub fn new(drift: Vec<PauliString>, drives: Vec<Operator>, dim: usize) -> Result<Self> {
        for d in &drives {
            if d.dim() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: d.dim(),
                });
            }
            if !d.is_hermitian() {
                return Err(CoreError::NotHermitian(d.hermiticity_defect()));
            }
        }
        Ok(Self { drift, drives, dim })
    }

    /// Single qubit with an in-phase X drive, H(a) = a σX/2, no drift.
    pub fn single_qubit_x() -> Self {
        let half_x = Operator::new(Operator::sigma_x().matrix() * Complex64::new(0.5, 0.0)).unwrap();
        Self {
            drift: Vec::new(),
            drives: vec![half_x],
            dim: 2,
        }
    }

    pub fn channels(&self) -> usize {
        self.drives.len()
    }

    pub fn drift_matrix(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for p in &self.drift {
            h += embed(p).matrix();
        }
        h
    }

    /// H(a) = drift + Σ_ch a_ch · drive_ch.
    pub fn hamiltonian(&self, amplitudes: &[f64]) -> CMatrix {
        let mut h = self.drift_matrix();
        for (a, d) in amplitudes.iter().zip(&self.drives) {
            h += d.matrix() * Complex64::new(*a, 0.0);
        }
        h
    }
}

/// Per-kind bounds on trajectory components. `None` means unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Bounds {
    pub amplitude: Option<f64>,
    pub velocity: Option<f64>,
    pub acceleration: Option<f64>,
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for b in [self.amplitude, self.velocity, self.acceleration]
            .into_iter()
            .flatten()
        {
            if b < 0.0 {
                return Err(CoreError::invalid("bounds must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// A discrete control trajectory with `knots` snapshots.
///
/// Indexing: `unitaries[t]` is U_t with U_0 = I; `amplitude[ch][t]` etc. are
/// channel-major; `timesteps[t]` is the interval following knot t (the last
/// entry only weights the regularization integral).
#[derive(Debug, Clone)]
pub struct ControlTrajectory {
    pub knots: usize,
    pub channels: usize,
    pub dim: usize,
    pub unitaries: Vec<CMatrix>,
    pub amplitude: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    pub acceleration: Vec<Vec<f64>>,
    pub timesteps: Vec<f64>,
    pub bounds: Bounds,
}

impl ControlTrajectory {
    /// Total duration of the pulse, Σ_{t<T−1} Δt_t.
    pub fn duration(&self) -> f64 {
        self.timesteps[..self.knots - 1].iter().sum()
    }

    pub fn final_unitary(&self) -> Operator {
        Operator::new(self.unitaries[self.knots - 1].clone()).unwrap()
    }

    /// Integrated rotation angle per channel, Σ_{t<T−1} a_t Δt_t.
    pub fn integrated_angle(&self, channel: usize) -> f64 {
        (0..self.knots - 1)
            .map(|t| self.amplitude[channel][t] * self.timesteps[t])
            .sum()
    }

    /// Worst bound violation over all bounded components (0 when feasible).
    pub fn bound_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let check = |vals: &Vec<Vec<f64>>, bound: Option<f64>, worst: &mut f64| {
            if let Some(b) = bound {
                for ch in vals {
                    for &v in ch {
                        *worst = worst.max(v.abs() - b);
                    }
                }
            }
        };
        check(&self.amplitude, self.bounds.amplitude, &mut worst);
        check(&self.velocity, self.bounds.velocity, &mut worst);
        check(&self.acceleration, self.bounds.acceleration, &mut worst);
        worst
    }

    /// A zero-control trajectory (the fixed idle identity).
    pub fn idle(sys: &ControlSystem, knots: usize, dt: f64) -> Self {
        let channels = sys.channels();
        let zeros = vec![vec![0.0; knots]; channels];
        rollout(sys, &zeros, &vec![(0.0, 0.0); channels], &vec![dt; knots])
            .expect("idle rollout cannot fail")
    }
}

/// Integrate accelerations through the double-integrator control model and
/// the unitary recursion.
///
/// `accelerations` is channel-major with `knots` entries per channel (the
/// final entry does not influence the dynamics). `initial` gives (a, ȧ) at
/// the first knot per channel.
pub fn rollout(
    sys: &ControlSystem,
    accelerations: &[Vec<f64>],
    initial: &[(f64, f64)],
    timesteps: &[f64],
) -> Result<ControlTrajectory> {
    let channels = sys.channels();
    if accelerations.len() != channels || initial.len() != channels {
        return Err(CoreError::invalid("channel count mismatch"));
    }
    let knots = timesteps.len();
    if knots < 2 {
        return Err(CoreError::invalid("need at least two knots"));
    }
    for acc in accelerations {
        if acc.len() != knots {
            return Err(CoreError::invalid("acceleration length mismatch"));
        }
    }
    if timesteps.iter().any(|&dt| dt <= 0.0) {
        return Err(CoreError::invalid("timesteps must be positive"));
    }

    let mut amplitude = vec![vec![0.0; knots]; channels];
    let mut velocity = vec![vec![0.0; knots]; channels];
    for ch in 0..channels {
        amplitude[ch][0] = initial[ch].0;
        velocity[ch][0] = initial[ch].1;
        for t in 0..knots - 1 {
            let dt = timesteps[t];
            let acc = accelerations[ch][t];
            amplitude[ch][t + 1] = amplitude[ch][t] + velocity[ch][t] * dt + 0.5 * acc * dt * dt;
            velocity[ch][t + 1] = velocity[ch][t] + acc * dt;
        }
    }

    let mut unitaries = Vec::with_capacity(knots);
    unitaries.push(CMatrix::identity(sys.dim, sys.dim));
    let mut amps_t = vec![0.0; channels];
    for t in 0..knots - 1 {
        for ch in 0..channels {
            amps_t[ch] = amplitude[ch][t];
        }
        let h = Operator::new(sys.hamiltonian(&amps_t))?;
        let e = matexp_skew(&h, timesteps[t])?;
        unitaries.push(e.matrix() * &unitaries[t]);
    }

    Ok(ControlTrajectory {
        knots,
        channels,
        dim: sys.dim,
        unitaries,
        amplitude,
        velocity,
        acceleration: accelerations.to_vec(),
        timesteps: timesteps.to_vec(),
        bounds: Bounds::default(),
    })
}

/// Stacked dynamics residuals: for each interval, the entrywise deviation of
/// the unitary recursion followed by the amplitude and velocity recursions.
pub fn dynamics_residual(sys: &ControlSystem, z: &ControlTrajectory) -> Vec<f64> {
    let mut out = Vec::new();
    let mut amps_t = vec![0.0; z.channels];
    for t in 0..z.knots - 1 {
        let dt = z.timesteps[t];
        for ch in 0..z.channels {
            amps_t[ch] = z.amplitude[ch][t];
        }
        let h = Operator::new(sys.hamiltonian(&amps_t)).expect("square");
        let e = matexp_skew(&h, dt).expect("hermitian by construction");
        let pred = e.matrix() * &z.unitaries[t];
        let diff: DMatrix<Complex64> = &z.unitaries[t + 1] - pred;
        for entry in diff.iter() {
            out.push(entry.re);
            out.push(entry.im);
        }
        for ch in 0..z.channels {
            let a = z.amplitude[ch][t];
            let v = z.velocity[ch][t];
            let acc = z.acceleration[ch][t];
            out.push(z.amplitude[ch][t + 1] - (a + v * dt + 0.5 * acc * dt * dt));
            out.push(z.velocity[ch][t + 1] - (v + acc * dt));
        }
    }
    out
}

/// Max-abs of the dynamics residual vector.
pub fn dynamics_residual_max(sys: &ControlSystem, z: &ControlTrajectory) -> f64 {
    dynamics_residual(sys, z)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// r Σ_t Δt_t (a_tᵀa_t + ȧ_tᵀȧ_t + ä_tᵀä_t).
pub fn regularization(z: &ControlTrajectory, r: f64) -> f64 {
    let mut sum = 0.0;
    for t in 0..z.knots {
        let dt = z.timesteps[t];
        for ch in 0..z.channels {
            sum += dt
                * (z.amplitude[ch][t].powi(2)
                    + z.velocity[ch][t].powi(2)
                    + z.acceleration[ch][t].powi(2));
        }
    }
    r * sum
}

/// First-order error susceptibility (the Magnus-average objective):
/// (1/d) Re Tr{ M² } with M = (1/T) Σ_t U_t† H_err U_t.
pub fn error_susceptibility(z: &ControlTrajectory, h_err: &[PauliString]) -> Result<f64> {
    let h = sum_pauli_matrix(h_err, z.dim)?;
    Ok(error_susceptibility_matrix(z, &h))
}

pub fn sum_pauli_matrix(terms: &[PauliString], dim: usize) -> Result<CMatrix> {
    let mut h = CMatrix::zeros(dim, dim);
    for p in terms {
        let op = embed(p);
        if op.dim() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: op.dim(),
            });
        }
        h += op.matrix();
    }
    Ok(h)
}

pub(crate) fn error_susceptibility_matrix(z: &ControlTrajectory, h: &CMatrix) -> f64 {
    let d = z.dim;
    let t_count = z.knots as f64;
    let mut m = CMatrix::zeros(d, d);
    for u in &z.unitaries {
        m += u.adjoint() * h * u;
    }
    m /= Complex64::new(t_count, 0.0);
    let tr: Complex64 = (&m * &m).trace();
    tr.re / d as f64
}

/// Rotate a trajectory's drive axis within the XY plane by a virtual-Z phase
/// φ: every unitary is conjugated by Rz(φ).
pub fn apply_virtual_z_phase(z: &ControlTrajectory, phi: f64) -> ControlTrajectory {
    let rz = Operator::rz(phi);
    let mut out = z.clone();
    for u in &mut out.unitaries {
        *u = rz.matrix().adjoint() * u.clone() * rz.matrix();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{gate_fidelity, Pauli};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_trajectory(seed: u64, knots: usize) -> (ControlSystem, ControlTrajectory) {
        let sys = ControlSystem::single_qubit_x();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let acc: Vec<f64> = (0..knots).map(|_| rng.gen_range(-0.01..0.01)).collect();
        let z = rollout(&sys, &[acc], &[(0.0, 0.0)], &vec![4.0; knots]).unwrap();
        (sys, z)
    }

    #[test]
    fn rollout_zero_controls_is_identity() {
        let sys = ControlSystem::single_qubit_x();
        let z = ControlTrajectory::idle(&sys, 20, 1.0);
        for u in &z.unitaries {
            let defect = (u - CMatrix::identity(2, 2))
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(defect < 1e-14);
        }
    }

    #[test]
    fn rollout_constant_amplitude_x_gate() {
        // Constant a with ∫a dt = π over the pulse gives U_T = −i σX.
        let sys = ControlSystem::single_qubit_x();
        let knots = 51;
        let dt = 240.0 / (knots - 1) as f64;
        let a0 = PI / 240.0;
        let z = rollout(
            &sys,
            &[vec![0.0; knots]],
            &[(a0, 0.0)],
            &vec![dt; knots],
        )
        .unwrap();
        let x = Operator::sigma_x();
        let f = gate_fidelity(&z.final_unitary(), &x).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let expected = x.matrix() * Complex64::new(0.0, -1.0);
        let diff = (z.final_unitary().matrix() - expected)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn rollout_is_dynamically_feasible() {
        let (sys, z) = random_trajectory(7, 40);
        assert!(dynamics_residual_max(&sys, &z) <= 1e-12);
    }

    #[test]
    fn residual_localizes_perturbation() {
        let (sys, mut z) = random_trajectory(9, 30);
        let eps = 1e-3;
        z.unitaries[10][(0, 1)] += Complex64::new(eps, 0.0);
        let res = dynamics_residual(&sys, &z);
        let max = res.iter().cloned().map(f64::abs).fold(0.0, f64::max);
        assert!((max - eps).abs() < 1e-12);
    }

    #[test]
    fn residual_nonzero_for_inconsistent_controls() {
        let sys = ControlSystem::single_qubit_x();
        let mut z = ControlTrajectory::idle(&sys, 10, 1.0);
        for t in 0..10 {
            z.amplitude[0][t] = 0.5;
        }
        assert!(dynamics_residual_max(&sys, &z) > 1e-3);
    }

    #[test]
    fn regularization_zero_cases() {
        let sys = ControlSystem::single_qubit_x();
        let z = ControlTrajectory::idle(&sys, 10, 1.0);
        assert_eq!(regularization(&z, 0.01), 0.0);
        let (_, z2) = random_trajectory(4, 10);
        assert_eq!(regularization(&z2, 0.0), 0.0);
    }

    #[test]
    fn regularization_direct_sum() {
        let sys = ControlSystem::single_qubit_x();
        let knots = 17;
        let mut z = ControlTrajectory::idle(&sys, knots, 1.0);
        for t in 0..knots {
            z.amplitude[0][t] = 1.0;
            z.velocity[0][t] = 0.0;
            z.acceleration[0][t] = 0.0;
        }
        let r = 0.01;
        assert!((regularization(&z, r) - r * knots as f64).abs() < 1e-12);
    }

    #[test]
    fn susceptibility_idle_z_is_one() {
        let sys = ControlSystem::single_qubit_x();
        let z = ControlTrajectory::idle(&sys, 25, 1.0);
        let h = vec![PauliString::new(1, &[(0, Pauli::Z)], 1.0).unwrap()];
        let r = error_susceptibility(&z, &h).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn susceptibility_square_pi_pulse_converges() {
        // Square π X pulse against σZ: continuum value 4/π².
        let sys = ControlSystem::single_qubit_x();
        let h = vec![PauliString::new(1, &[(0, Pauli::Z)], 1.0).unwrap()];
        let exact = 4.0 / (PI * PI);
        let mut last_err = f64::INFINITY;
        for knots in [125, 500, 2000] {
            let dt = 1.0;
            let a0 = PI / ((knots - 1) as f64 * dt);
            let z = rollout(&sys, &[vec![0.0; knots]], &[(a0, 0.0)], &vec![dt; knots]).unwrap();
            let r = error_susceptibility(&z, &h).unwrap();
            let err = (r - exact).abs();
            assert!(err < last_err);
            last_err = err;
        }
        assert!(last_err < 1e-3);
    }

    #[test]
    fn susceptibility_zero_error() {
        let (_, z) = random_trajectory(12, 30);
        let r = error_susceptibility(&z, &[]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn susceptibility_nonnegative_random() {
        for seed in 0..20 {
            let (_, z) = random_trajectory(seed, 25);
            let h = vec![
                PauliString::new(1, &[(0, Pauli::Z)], 0.8).unwrap(),
                PauliString::new(1, &[(0, Pauli::Y)], -0.3).unwrap(),
            ];
            let r = error_susceptibility(&z, &h).unwrap();
            assert!(r >= -1e-12);
        }
    }

    #[test]
    fn susceptibility_dimension_mismatch() {
        let (_, z) = random_trajectory(3, 10);
        let h = vec![PauliString::new(2, &[(1, Pauli::Z)], 1.0).unwrap()];
        assert!(error_susceptibility(&z, &h).is_err());
    }
}
