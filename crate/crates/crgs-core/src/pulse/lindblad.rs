//! Fixed-step RK4 integration of the Lindblad master equation with
//! amplitude-damping and pure-dephasing channels on each qubit.

use nalgebra::Complex;

use crate::error::{CoreError, Result};
use crate::quantum::CMatrix;

use super::device::DeviceModel;

type C = Complex<f64>;

pub const MAX_DENSITY_QUBITS: usize = 4;
pub const BASE_STEP_NS: f64 = 0.1;

/// Damping and dephasing rates (per ns) for each qubit of a fragment.
#[derive(Debug, Clone)]
pub struct NoiseRates {
    pub gamma1: Vec<f64>,
    pub gamma_phi: Vec<f64>,
}

impl NoiseRates {
    /// Rates for the listed qubits of a device; empty if noise is disabled.
    pub fn from_model(model: &DeviceModel, qubits: &[usize], noise: bool) -> Self {
        let (gamma1, gamma_phi) = if noise {
            qubits
                .iter()
                .map(|&q| {
                    let g1 = 1e-3 / model.qubits[q].t1_us;
                    let tphi = model.tphi_us(q);
                    let gp = if tphi.is_finite() { 1e-3 / tphi } else { 0.0 };
                    (g1, gp)
                })
                .unzip()
        } else {
            (vec![0.0; qubits.len()], vec![0.0; qubits.len()])
        };
        Self { gamma1, gamma_phi }
    }

    pub fn none(n_qubits: usize) -> Self {
        Self {
            gamma1: vec![0.0; n_qubits],
            gamma_phi: vec![0.0; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.gamma1.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.gamma1.iter().chain(&self.gamma_phi).all(|&g| g == 0.0)
    }
}

/// A density matrix plus sanity checks.
#[derive(Debug, Clone)]
pub struct DensityState {
    pub matrix: CMatrix,
}

impl DensityState {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let state = Self { matrix };
        state.validate(1e-9, -1e-8)?;
        Ok(state)
    }

    /// |0…0⟩⟨0…0| on n qubits.
    pub fn ground(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        let mut m = CMatrix::zeros(d, d);
        m[(0, 0)] = C::new(1.0, 0.0);
        Self { matrix: m }
    }

    pub fn from_pure(psi: &[C]) -> Self {
        let d = psi.len();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// ⟨P⟩ for a Hermitian observable.
    pub fn expectation(&self, obs: &CMatrix) -> f64 {
        let mut tr = C::new(0.0, 0.0);
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                tr += obs[(i, k)] * self.matrix[(k, i)];
            }
        }
        tr.re
    }

    /// Probability of the computational basis state with the given index.
    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    pub fn validate(&self, trace_tol: f64, eig_floor: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > trace_tol {
            return Err(CoreError::invalid(format!("trace drifted to {tr}")));
        }
        let herm = (&self.matrix - self.matrix.adjoint()).norm();
        if herm > 1e-7 {
            return Err(CoreError::invalid(format!("density matrix not Hermitian ({herm:.3e})")));
        }
        let eigs = self.matrix.clone().symmetric_eigenvalues();
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < eig_floor {
                return Err(CoreError::invalid(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }
}

/// Right-hand side −i[H,ρ] + Σ_q γ₁ D[σ₋]ρ + (γ_φ/2) D[σZ]ρ with single-qubit
/// collapse operators applied index-wise (no Kronecker embeddings built).
fn lindblad_rhs(h: &CMatrix, rho: &CMatrix, rates: &NoiseRates) -> CMatrix {
    let d = rho.nrows();
    let i = C::new(0.0, 1.0);
    let comm = h * rho - rho * h;
    let mut out = comm * (-i);

    let n = rates.n_qubits();
    for q in 0..n {
        let bit = 1usize << (n - 1 - q);
        let g1 = rates.gamma1[q];
        if g1 != 0.0 {
            // σ₋ ρ σ₊ maps |…1…⟩⟨…1…| blocks down to |…0…⟩⟨…0…|.
            for r in 0..d {
                for c in 0..d {
                    let v = rho[(r, c)];
                    if v == C::new(0.0, 0.0) {
                        continue;
                    }
                    let nb = ((r & bit != 0) as u8 + (c & bit != 0) as u8) as f64;
                    out[(r, c)] -= v * C::new(g1 * nb / 2.0, 0.0);
                    if r & bit != 0 && c & bit != 0 {
                        out[(r & !bit, c & !bit)] += v * C::new(g1, 0.0);
                    }
                }
            }
        }
        let gp = rates.gamma_phi[q];
        if gp != 0.0 {
            // (γφ/2)(ZρZ − ρ): kills coherence between opposite bit values.
            for r in 0..d {
                for c in 0..d {
                    if (r & bit != 0) != (c & bit != 0) {
                        out[(r, c)] -= rho[(r, c)] * C::new(gp, 0.0);
                    }
                }
            }
        }
    }
    out
}

/// Evolve ρ under a (possibly time-dependent) Hamiltonian in rad/ns for
/// `duration` ns. `hamiltonian` receives the midpoint-respecting time of each
/// RK4 stage. The step is `min(BASE_STEP_NS, dt_hint)` where `dt_hint` is the
/// caller's sample spacing (pass `f64::INFINITY` for drive-free stretches
/// together with a larger `max_step`).
pub fn evolve_density(
    rho: &mut DensityState,
    hamiltonian: &dyn Fn(f64) -> CMatrix,
    rates: &NoiseRates,
    duration: f64,
    dt_hint: f64,
) -> Result<()> {
    evolve_density_with_step(rho, hamiltonian, rates, duration, dt_hint.min(BASE_STEP_NS))
}

pub fn evolve_density_with_step(
    rho: &mut DensityState,
    hamiltonian: &dyn Fn(f64) -> CMatrix,
    rates: &NoiseRates,
    duration: f64,
    step: f64,
) -> Result<()> {
    if rho.dim() > (1 << MAX_DENSITY_QUBITS) {
        return Err(CoreError::FragmentTooLarge {
            qubits: rho.dim().trailing_zeros() as usize,
            max: MAX_DENSITY_QUBITS,
        });
    }
    if duration < 0.0 || step <= 0.0 {
        return Err(CoreError::invalid("duration and step must be non-negative"));
    }
    let n_steps = (duration / step).ceil().max(1.0) as usize;
    let dt = duration / n_steps as f64;
    if duration == 0.0 {
        return Ok(());
    }
    let half = C::new(dt / 2.0, 0.0);
    let sixth = C::new(dt / 6.0, 0.0);
    let two = C::new(2.0, 0.0);
    for s in 0..n_steps {
        let t0 = s as f64 * dt;
        let h0 = hamiltonian(t0);
        let hm = hamiltonian(t0 + dt / 2.0);
        let h1 = hamiltonian(t0 + dt);
        let k1 = lindblad_rhs(&h0, &rho.matrix, rates);
        let k2 = lindblad_rhs(&hm, &(&rho.matrix + &k1 * half), rates);
        let k3 = lindblad_rhs(&hm, &(&rho.matrix + &k2 * half), rates);
        let k4 = lindblad_rhs(&h1, &(&rho.matrix + &k3 * C::new(dt, 0.0)), rates);
        rho.matrix += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(CoreError::invalid(format!("trace drifted to {tr} during evolution")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Operator;
    use approx::assert_abs_diff_eq;

    fn one(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn t1_decay_closed_form() {
        let model = DeviceModel::standard(1, &[]);
        let rates = NoiseRates::from_model(&model, &[0], true);
        let h = CMatrix::zeros(2, 2);
        let t1_ns = 216.0e3;
        for frac in [0.0, 0.3, 1.0, 2.0] {
            let mut rho = DensityState {
                matrix: CMatrix::from_row_slice(2, 2, &[one(0.0), one(0.0), one(0.0), one(1.0)]),
            };
            let t = frac * t1_ns;
            evolve_density_with_step(&mut rho, &|_| h.clone(), &rates, t, t / 400.0 + 1.0).unwrap();
            assert_abs_diff_eq!(rho.population(1), (-t / t1_ns).exp(), epsilon = 1e-3);
            assert!((rho.trace() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn t2_decay_closed_form() {
        let model = DeviceModel::standard(1, &[]);
        let rates = NoiseRates::from_model(&model, &[0], true);
        let h = CMatrix::zeros(2, 2);
        let t2_ns = 154.0e3;
        for frac in [0.1, 0.5, 1.5] {
            let mut rho = DensityState {
                matrix: CMatrix::from_row_slice(
                    2,
                    2,
                    &[one(0.5), one(0.5), one(0.5), one(0.5)],
                ),
            };
            let t = frac * t2_ns;
            evolve_density_with_step(&mut rho, &|_| h.clone(), &rates, t, t / 400.0 + 1.0).unwrap();
            let coh = rho.matrix[(0, 1)].re;
            assert_abs_diff_eq!(coh, 0.5 * (-t / t2_ns).exp(), epsilon = 1e-3);
        }
    }

    #[test]
    fn noiseless_matches_unitary() {
        // Rabi drive: H = Ω σX/2, compare against the exact propagator.
        let omega = 0.05;
        let h = Operator::sigma_x().matrix() * C::new(omega / 2.0, 0.0);
        let rates = NoiseRates::none(1);
        let mut rho = DensityState::ground(1);
        let t = 200.0;
        evolve_density(&mut rho, &|_| h.clone(), &rates, t, 0.1).unwrap();
        let u = matexp(&(h.clone() * C::new(0.0, -t)));
        let expect = &u * DensityState::ground(1).matrix * u.adjoint();
        assert!((rho.matrix - expect).norm() < 1e-8);
    }

    fn matexp(a: &CMatrix) -> CMatrix {
        // Scaling-and-squaring Taylor series; test helper only.
        let d = a.nrows();
        let norm = a.norm();
        let k = (norm.log2().ceil().max(0.0) as usize) + 4;
        let b = a * C::new(1.0 / (1u64 << k) as f64, 0.0);
        let mut term = CMatrix::identity(d, d);
        let mut out = CMatrix::identity(d, d);
        for i in 1..20 {
            term = &term * &b * C::new(1.0 / i as f64, 0.0);
            out += &term;
        }
        for _ in 0..k {
            out = &out * &out;
        }
        out
    }

    #[test]
    fn two_qubit_damping_keeps_trace_and_positivity() {
        let model = DeviceModel::standard(2, &[(0, 1)]);
        let rates = NoiseRates::from_model(&model, &[0, 1], true);
        let psi: Vec<C> = vec![one(0.5); 4];
        let mut rho = DensityState::from_pure(&psi);
        let zz = Operator::sigma_z().kron(&Operator::sigma_z());
        let h = zz.matrix() * C::new(0.01, 0.0);
        evolve_density_with_step(&mut rho, &|_| h.clone(), &rates, 5000.0, 5.0).unwrap();
        rho.validate(1e-9, -1e-8).unwrap();
    }

    #[test]
    fn oversized_state_rejected() {
        let mut rho = DensityState::ground(5);
        let h = CMatrix::zeros(32, 32);
        let err = evolve_density(&mut rho, &|_| h.clone(), &NoiseRates::none(5), 1.0, 0.1);
        assert!(matches!(err, Err(CoreError::FragmentTooLarge { .. })));
    }
}
