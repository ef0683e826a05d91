//! Objective terms with analytic trajectory-space gradients.
//!
//! Every term differentiates with respect to the raw trajectory variables:
//! unitary entries (as complex matrices), amplitudes, velocities, and
//! accelerations. The gradient convention for the unitary part is
//! dO = Σ_t 2 Re Tr{G_t† dU_t}.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::quantum::CMatrix;

use super::{ControlTrajectory, regularization};

/// Trajectory-space gradient (same layout as the trajectory variables).
#[derive(Debug, Clone)]
pub struct TrajGrad {
    pub unit: Vec<CMatrix>,
    pub amplitude: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    pub acceleration: Vec<Vec<f64>>,
}

impl TrajGrad {
    pub fn zeros(z: &ControlTrajectory) -> Self {
        Self {
            unit: vec![CMatrix::zeros(z.dim, z.dim); z.knots],
            amplitude: vec![vec![0.0; z.knots]; z.channels],
            velocity: vec![vec![0.0; z.knots]; z.channels],
            acceleration: vec![vec![0.0; z.knots]; z.channels],
        }
    }

    pub fn add_scaled(&mut self, other: &TrajGrad, scale: f64) {
        let s = Complex64::new(scale, 0.0);
        for (a, b) in self.unit.iter_mut().zip(&other.unit) {
            *a += b * s;
        }
        for field in [
            (&mut self.amplitude, &other.amplitude),
            (&mut self.velocity, &other.velocity),
            (&mut self.acceleration, &other.acceleration),
        ] {
            for (a, b) in field.0.iter_mut().zip(field.1) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += scale * y;
                }
            }
        }
    }

    /// Directional derivative along a trajectory-space direction.
    pub fn dot(&self, dir: &TrajGrad) -> f64 {
        let mut sum = 0.0;
        for (g, d) in self.unit.iter().zip(&dir.unit) {
            let inner: Complex64 = g.iter().zip(d.iter()).map(|(a, b)| a.conj() * b).sum();
            sum += 2.0 * inner.re;
        }
        for field in [
            (&self.amplitude, &dir.amplitude),
            (&self.velocity, &dir.velocity),
            (&self.acceleration, &dir.acceleration),
        ] {
            for (a, b) in field.0.iter().zip(field.1) {
                sum += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        sum
    }
}

/// An objective term evaluated on a single trajectory.
pub trait ObjectiveTerm: Sync {
    fn name(&self) -> &str;
    fn value(&self, z: &ControlTrajectory) -> f64;
    fn gradient(&self, z: &ControlTrajectory) -> TrajGrad;
}

/// |1 − F(Z, G)| with F = |Tr(U_T† G)| / d.
pub struct InfidelityTerm {
    pub goal: CMatrix,
}

impl InfidelityTerm {
    fn fidelity(&self, z: &ControlTrajectory) -> (f64, Complex64) {
        let u = &z.unitaries[z.knots - 1];
        let w: Complex64 = u
            .iter()
            .zip(self.goal.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        (w.norm() / z.dim as f64, w)
    }
}

impl ObjectiveTerm for InfidelityTerm {
    fn name(&self) -> &str {
        "infidelity"
    }

    fn value(&self, z: &ControlTrajectory) -> f64 {
        (1.0 - self.fidelity(z).0).abs()
    }

    fn gradient(&self, z: &ControlTrajectory) -> TrajGrad {
        let (f, w) = self.fidelity(z);
        let mut grad = TrajGrad::zeros(z);
        if w.norm() < 1e-300 {
            return grad;
        }
        let d = z.dim as f64;
        let sign = if f <= 1.0 { -1.0 } else { 1.0 };
        // dF = Re Tr{(conj(w) G / (d|w|))† dU_T}
        let scale = Complex64::new(sign / (2.0 * d * w.norm()), 0.0) * w.conj();
        grad.unit[z.knots - 1] = &self.goal * scale;
        grad
    }
}

/// r Σ_t Δt_t (aᵀa + ȧᵀȧ + äᵀä).
pub struct RegularizationTerm {
    pub weight: f64,
}

impl ObjectiveTerm for RegularizationTerm {
    fn name(&self) -> &str {
        "regularization"
    }

    fn value(&self, z: &ControlTrajectory) -> f64 {
        regularization(z, self.weight)
    }

    fn gradient(&self, z: &ControlTrajectory) -> TrajGrad {
        let mut grad = TrajGrad::zeros(z);
        for t in 0..z.knots {
            let w = 2.0 * self.weight * z.timesteps[t];
            for ch in 0..z.channels {
                grad.amplitude[ch][t] = w * z.amplitude[ch][t];
                grad.velocity[ch][t] = w * z.velocity[ch][t];
                grad.acceleration[ch][t] = w * z.acceleration[ch][t];
            }
        }
        grad
    }
}

/// (1/d) Re Tr{M²}, M = (1/T) Σ_t U_t† H U_t.
pub struct SusceptibilityTerm {
    pub h_err: CMatrix,
}

impl ObjectiveTerm for SusceptibilityTerm {
    fn name(&self) -> &str {
        "susceptibility"
    }

    fn value(&self, z: &ControlTrajectory) -> f64 {
        super::error_susceptibility_matrix(z, &self.h_err)
    }

    fn gradient(&self, z: &ControlTrajectory) -> TrajGrad {
        let d = z.dim;
        let t_count = z.knots as f64;
        let mut m = CMatrix::zeros(d, d);
        for u in &z.unitaries {
            m += u.adjoint() * &self.h_err * u;
        }
        m /= Complex64::new(t_count, 0.0);
        let mut grad = TrajGrad::zeros(z);
        let scale = Complex64::new(2.0 / (d as f64 * t_count), 0.0);
        for (t, u) in z.unitaries.iter().enumerate() {
            grad.unit[t] = (&self.h_err * u * &m) * scale;
        }
        grad
    }
}

/// Draw a random trajectory-space direction with unit-scale entries.
pub fn random_direction(z: &ControlTrajectory, rng: &mut impl Rng) -> TrajGrad {
    let mut dir = TrajGrad::zeros(z);
    for g in &mut dir.unit {
        for entry in g.iter_mut() {
            *entry = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    for field in [&mut dir.amplitude, &mut dir.velocity, &mut dir.acceleration] {
        for ch in field.iter_mut() {
            for v in ch.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    }
    dir
}

/// Displace a trajectory along a direction (dU_t = eps·D_t, etc.).
pub fn displace(z: &ControlTrajectory, dir: &TrajGrad, eps: f64) -> ControlTrajectory {
    let mut out = z.clone();
    let e = Complex64::new(eps, 0.0);
    for (u, d) in out.unitaries.iter_mut().zip(&dir.unit) {
        *u += d * e;
    }
    for (field, dfield) in [
        (&mut out.amplitude, &dir.amplitude),
        (&mut out.velocity, &dir.velocity),
        (&mut out.acceleration, &dir.acceleration),
    ] {
        for (ch, dch) in field.iter_mut().zip(dfield) {
            for (v, dv) in ch.iter_mut().zip(dch) {
                *v += eps * dv;
            }
        }
    }
    out
}

/// Compare the analytic gradient of each term against central finite
/// differences (step 1e−6) along `k` random directions; returns the worst
/// relative error.
pub fn check_gradient(
    terms: &[&dyn ObjectiveTerm],
    z: &ControlTrajectory,
    k: usize,
    seed: u64,
) -> f64 {
    assert!(k >= 1);
    let eps = 1e-6;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for term in terms {
        let grad = term.gradient(z);
        for _ in 0..k {
            let dir = random_direction(z, &mut rng);
            let analytic = grad.dot(&dir);
            let plus = term.value(&displace(z, &dir, eps));
            let minus = term.value(&displace(z, &dir, -eps));
            let fd = (plus - minus) / (2.0 * eps);
            let rel = (analytic - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    worst
}
