//! Augmented-Lagrangian solver for trajectory problems.
//!
//! States are eliminated by exact rollout: the decision variables are the
//! per-knot control accelerations, so the dynamics recursion is satisfied to
//! machine precision by construction. Fidelity, amplitude-bound, and
//! integrated-area constraints are handled by an augmented Lagrangian whose
//! inner subproblems are solved with a projected L-BFGS iteration (the
//! acceleration box is enforced by projection). The outer loop doubles the
//! penalty whenever the constraint violation fails to drop by 4×.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::error::{CoreError, Result};
use crate::quantum::{matexp_skew_with_deriv, CMatrix, Operator};

use super::objectives::TrajGrad;
use super::{rollout, Bounds, ControlSystem, ControlTrajectory};

/// One optimization vertex: a single gate trajectory with its own system,
/// goal, constraints, and bounds.
pub struct VertexSpec {
    pub system: ControlSystem,
    pub knots: usize,
    pub timesteps: Vec<f64>,
    /// Target unitary. With `fidelity_in_objective` the infidelity |1−F| is
    /// an objective term (smooth-pulse template); otherwise F ≥ F₀ becomes an
    /// inequality constraint (robustness template).
    pub goal: Option<Operator>,
    pub fidelity_in_objective: bool,
    /// Per-channel equality constraints on the integrated rotation angle
    /// Σ a_t Δt_t.
    pub area_target: Option<Vec<f64>>,
    pub bounds: Bounds,
    /// Fixed vertices (the idle identity) are excluded from the decision
    /// variables but still participate in coupling terms.
    pub fixed: bool,
    /// Error generators whose susceptibility is added to the objective
    /// (detuning robustness).
    pub onsite_errors: Vec<CMatrix>,
    pub initial: Vec<(f64, f64)>,
}

impl VertexSpec {
    pub fn new(system: ControlSystem, knots: usize, dt: f64) -> Self {
        let channels = system.channels();
        Self {
            system,
            knots,
            timesteps: vec![dt; knots],
            goal: None,
            fidelity_in_objective: false,
            area_target: None,
            bounds: Bounds::default(),
            fixed: false,
            onsite_errors: Vec::new(),
            initial: vec![(0.0, 0.0); channels],
        }
    }
}

/// A pairwise coupling objective between two vertices (crosstalk terms).
pub trait CouplingTerm: Sync {
    fn vertices(&self) -> (usize, usize);
    fn value(&self, zi: &ControlTrajectory, zj: &ControlTrajectory) -> f64;
    /// Gradients with respect to both trajectories' variables.
    fn gradients(&self, zi: &ControlTrajectory, zj: &ControlTrajectory) -> (TrajGrad, TrajGrad);
}

/// The joint problem: independent per-vertex trajectories coupled only
/// through pairwise objective terms.
pub struct TrajectoryProblem {
    pub vertices: Vec<VertexSpec>,
    pub couplings: Vec<Box<dyn CouplingTerm>>,
    pub regularization: f64,
}

/// Solver settings (see the problem templates for the roles of F₀ and r).
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub required_fidelity: f64,
    pub regularization: f64,
    pub max_outer: usize,
    pub tolerance: f64,
    pub penalty_growth: f64,
    pub initial_penalty: f64,
    pub max_inner: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
    /// Print per-outer-iteration progress to stderr.
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            required_fidelity: 0.9999,
            regularization: 0.01,
            max_outer: 40,
            tolerance: 1e-8,
            penalty_growth: 2.0,
            initial_penalty: 1.0,
            max_inner: 400,
            gradient_tolerance: 1e-10,
            seed: 0,
            verbose: false,
        }
    }
}

/// Solve outcome summary.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveReport {
    pub objective: f64,
    pub violation: f64,
    pub fidelities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Workspace<'a> {
    problem: &'a TrajectoryProblem,
    decision: Vec<usize>,
    offsets: Vec<usize>,
    n_vars: usize,
    fixed_trajs: Vec<Option<ControlTrajectory>>,
    n_eq: usize,
    n_ineq: usize,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a TrajectoryProblem) -> Result<Self> {
        let mut decision = Vec::new();
        let mut offsets = Vec::new();
        let mut n_vars = 0;
        let mut fixed_trajs = Vec::new();
        for (i, v) in problem.vertices.iter().enumerate() {
            v.bounds.validate()?;
            if v.timesteps.len() != v.knots {
                return Err(CoreError::invalid("timestep count must equal knot count"));
            }
            if v.fixed {
                let zeros = vec![vec![0.0; v.knots]; v.system.channels()];
                let mut z = rollout(&v.system, &zeros, &v.initial, &v.timesteps)?;
                z.bounds = v.bounds;
                fixed_trajs.push(Some(z));
            } else {
                offsets.push(n_vars);
                n_vars += v.system.channels() * (v.knots - 1);
                decision.push(i);
                fixed_trajs.push(None);
            }
        }
        let mut n_eq = 0;
        let mut n_ineq = 0;
        for &i in &decision {
            let v = &problem.vertices[i];
            if let Some(area) = &v.area_target {
                n_eq += area.len();
            }
            if v.goal.is_some() && !v.fidelity_in_objective {
                n_ineq += 1;
            }
            if v.bounds.amplitude.is_some() {
                n_ineq += v.system.channels() * v.knots;
            }
            if v.bounds.velocity.is_some() {
                n_ineq += v.system.channels() * v.knots;
            }
        }
        Ok(Self {
            problem,
            decision,
            offsets,
            n_vars,
            fixed_trajs,
            n_eq,
            n_ineq,
        })
    }

    fn accel_slice<'x>(&self, x: &'x [f64], di: usize) -> &'x [f64] {
        let v = &self.problem.vertices[self.decision[di]];
        let len = v.system.channels() * (v.knots - 1);
        &x[self.offsets[di]..self.offsets[di] + len]
    }

    fn rollout_all(&self, x: &[f64]) -> Result<Vec<ControlTrajectory>> {
        let mut out = Vec::with_capacity(self.problem.vertices.len());
        let mut di = 0;
        for (i, v) in self.problem.vertices.iter().enumerate() {
            if v.fixed {
                out.push(self.fixed_trajs[i].clone().unwrap());
            } else {
                let slice = self.accel_slice(x, di);
                let channels = v.system.channels();
                let mut accel = vec![vec![0.0; v.knots]; channels];
                for ch in 0..channels {
                    for t in 0..v.knots - 1 {
                        accel[ch][t] = slice[ch * (v.knots - 1) + t];
                    }
                }
                let mut z = rollout(&v.system, &accel, &v.initial, &v.timesteps)?;
                z.bounds = v.bounds;
                out.push(z);
                di += 1;
            }
        }
        Ok(out)
    }

    /// Objective terms only (no constraint penalties).
    fn objective(&self, trajs: &[ControlTrajectory]) -> f64 {
        let mut f = 0.0;
        for c in &self.problem.couplings {
            let (i, j) = c.vertices();
            f += c.value(&trajs[i], &trajs[j]);
        }
        for &i in &self.decision {
            let v = &self.problem.vertices[i];
            let z = &trajs[i];
            f += super::regularization(z, self.problem.regularization);
            for h in &v.onsite_errors {
                f += super::error_susceptibility_matrix(z, h);
            }
            if v.fidelity_in_objective {
                if let Some(goal) = &v.goal {
                    f += (1.0 - fidelity(z, goal).0).abs();
                }
            }
        }
        f
    }

    /// Equality then inequality constraint values (fixed ordering).
    fn constraints(&self, trajs: &[ControlTrajectory], f0: f64) -> (Vec<f64>, Vec<f64>) {
        let mut eq = Vec::with_capacity(self.n_eq);
        let mut ineq = Vec::with_capacity(self.n_ineq);
        for &i in &self.decision {
            let v = &self.problem.vertices[i];
            let z = &trajs[i];
            if let Some(area) = &v.area_target {
                for (ch, theta) in area.iter().enumerate() {
                    eq.push(z.integrated_angle(ch) - theta);
                }
            }
            if let Some(goal) = &v.goal {
                if !v.fidelity_in_objective {
                    ineq.push(f0 - fidelity(z, goal).0);
                }
            }
            if let Some(b) = v.bounds.amplitude {
                for ch in 0..z.channels {
                    for t in 0..z.knots {
                        ineq.push(z.amplitude[ch][t].powi(2) - b * b);
                    }
                }
            }
            if let Some(b) = v.bounds.velocity {
                for ch in 0..z.channels {
                    for t in 0..z.knots {
                        ineq.push(z.velocity[ch][t].powi(2) - b * b);
                    }
                }
            }
        }
        (eq, ineq)
    }

    /// Augmented Lagrangian value and gradient with respect to x.
    fn al_value_grad(
        &self,
        x: &[f64],
        f0: f64,
        lam_eq: &[f64],
        lam_ineq: &[f64],
        mu: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let trajs = self.rollout_all(x)?;
        let mut value = self.objective(&trajs);

        // Trajectory-space gradient accumulators per vertex.
        let mut grads: Vec<TrajGrad> = trajs.iter().map(TrajGrad::zeros).collect();

        for c in &self.problem.couplings {
            let (i, j) = c.vertices();
            let (gi, gj) = c.gradients(&trajs[i], &trajs[j]);
            grads[i].add_scaled(&gi, 1.0);
            grads[j].add_scaled(&gj, 1.0);
        }
        for &i in &self.decision {
            let v = &self.problem.vertices[i];
            let z = &trajs[i];
            let reg = super::objectives::RegularizationTerm {
                weight: self.problem.regularization,
            };
            use super::objectives::ObjectiveTerm;
            grads[i].add_scaled(&reg.gradient(z), 1.0);
            for h in &v.onsite_errors {
                let term = super::objectives::SusceptibilityTerm { h_err: h.clone() };
                grads[i].add_scaled(&term.gradient(z), 1.0);
            }
            if v.fidelity_in_objective {
                if let Some(goal) = &v.goal {
                    let (f, gf) = fidelity(z, goal);
                    let sign = if f <= 1.0 { -1.0 } else { 1.0 };
                    let mut g = TrajGrad::zeros(z);
                    g.unit[z.knots - 1] = gf;
                    grads[i].add_scaled(&g, sign);
                }
            }
        }

        // Constraint penalties.
        let mut ie = 0;
        let mut ii = 0;
        for &i in &self.decision {
            let v = &self.problem.vertices[i];
            let z = &trajs[i];
            if let Some(area) = &v.area_target {
                for (ch, theta) in area.iter().enumerate() {
                    let c = z.integrated_angle(ch) - theta;
                    value += lam_eq[ie] * c + 0.5 * mu * c * c;
                    let w = lam_eq[ie] + mu * c;
                    for t in 0..z.knots - 1 {
                        grads[i].amplitude[ch][t] += w * z.timesteps[t];
                    }
                    ie += 1;
                }
            }
            if let Some(goal) = &v.goal {
                if !v.fidelity_in_objective {
                    let (f, gf) = fidelity(z, goal);
                    let c = f0 - f;
                    let shifted = lam_ineq[ii] + mu * c;
                    if shifted > 0.0 {
                        value += (shifted * shifted - lam_ineq[ii] * lam_ineq[ii]) / (2.0 * mu);
                        let mut g = TrajGrad::zeros(z);
                        g.unit[z.knots - 1] = gf;
                        grads[i].add_scaled(&g, -shifted);
                    } else {
                        value -= lam_ineq[ii] * lam_ineq[ii] / (2.0 * mu);
                    }
                    ii += 1;
                }
            }
            if let Some(b) = v.bounds.amplitude {
                for ch in 0..z.channels {
                    for t in 0..z.knots {
                        let c = z.amplitude[ch][t].powi(2) - b * b;
                        let shifted = lam_ineq[ii] + mu * c;
                        if shifted > 0.0 {
                            value += (shifted * shifted - lam_ineq[ii] * lam_ineq[ii]) / (2.0 * mu);
                            grads[i].amplitude[ch][t] += shifted * 2.0 * z.amplitude[ch][t];
                        } else {
                            value -= lam_ineq[ii] * lam_ineq[ii] / (2.0 * mu);
                        }
                        ii += 1;
                    }
                }
            }
            if let Some(b) = v.bounds.velocity {
                for ch in 0..z.channels {
                    for t in 0..z.knots {
                        let c = z.velocity[ch][t].powi(2) - b * b;
                        let shifted = lam_ineq[ii] + mu * c;
                        if shifted > 0.0 {
                            value += (shifted * shifted - lam_ineq[ii] * lam_ineq[ii]) / (2.0 * mu);
                            grads[i].velocity[ch][t] += shifted * 2.0 * z.velocity[ch][t];
                        } else {
                            value -= lam_ineq[ii] * lam_ineq[ii] / (2.0 * mu);
                        }
                        ii += 1;
                    }
                }
            }
        }

        // Backpropagate trajectory-space gradients to acceleration variables.
        let mut grad_x = vec![0.0; self.n_vars];
        for (di, &i) in self.decision.iter().enumerate() {
            let v = &self.problem.vertices[i];
            let gx = backprop(&v.system, &trajs[i], &grads[i]);
            let base = self.offsets[di];
            for ch in 0..v.system.channels() {
                for t in 0..v.knots - 1 {
                    grad_x[base + ch * (v.knots - 1) + t] = gx[ch][t];
                }
            }
        }
        Ok((value, grad_x))
    }

    /// Diagonal preconditioner approximating the inverse squared sensitivity
    /// of the downstream amplitudes to each acceleration variable. The
    /// double-integration map concentrates ~(duration)² of gain on early
    /// knots; without rescaling, quasi-Newton steps on the raw accelerations
    /// stall.
    fn preconditioner(&self) -> Vec<f64> {
        let mut out = vec![1.0; self.n_vars];
        for (di, &i) in self.decision.iter().enumerate() {
            let v = &self.problem.vertices[i];
            let k = v.knots;
            for ch in 0..v.system.channels() {
                for t in 0..k - 1 {
                    let mut p = 0.0;
                    for s in t + 1..k {
                        let dt = v.timesteps[t];
                        let gain = dt * dt * ((s - t) as f64 - 0.5);
                        p += gain * gain;
                    }
                    out[self.offsets[di] + ch * (k - 1) + t] = 1.0 / p.max(1e-12);
                }
            }
        }
        out
    }

    fn box_bounds(&self) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.n_vars];
        for (di, &i) in self.decision.iter().enumerate() {
            let v = &self.problem.vertices[i];
            if let Some(b) = v.bounds.acceleration {
                let len = v.system.channels() * (v.knots - 1);
                for k in 0..len {
                    out[self.offsets[di] + k] = b;
                }
            }
        }
        out
    }
}

/// F and its final-unitary gradient G with dF = 2 Re Tr{G† dU_T}.
fn fidelity(z: &ControlTrajectory, goal: &Operator) -> (f64, CMatrix) {
    let u = &z.unitaries[z.knots - 1];
    let w: Complex64 = u
        .iter()
        .zip(goal.matrix().iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let d = z.dim as f64;
    if w.norm() < 1e-300 {
        return (0.0, CMatrix::zeros(z.dim, z.dim));
    }
    let scale = w.conj() / Complex64::new(2.0 * d * w.norm(), 0.0);
    (w.norm() / d, goal.matrix() * scale)
}

/// Pull a trajectory-space gradient back to the acceleration variables:
/// first the unitary chain, then the double-integrator adjoint.
fn backprop(sys: &ControlSystem, z: &ControlTrajectory, grad: &TrajGrad) -> Vec<Vec<f64>> {
    let knots = z.knots;
    let channels = z.channels;
    let mut ga = grad.amplitude.clone();
    let gv = grad.velocity.clone();
    let gacc = grad.acceleration.clone();

    // Unitary chain: adj_t collects dO/dU_t pulled back from later knots.
    let drive_mats: Vec<&CMatrix> = sys.drives.iter().map(|d| d.matrix()).collect();
    let mut adj = grad.unit[knots - 1].clone();
    let mut amps_t = vec![0.0; channels];
    for t in (0..knots - 1).rev() {
        for ch in 0..channels {
            amps_t[ch] = z.amplitude[ch][t];
        }
        let h = Operator::new(sys.hamiltonian(&amps_t)).expect("square");
        let (e, de) = matexp_skew_with_deriv(&h, z.timesteps[t], &drive_mats)
            .expect("hermitian by construction");
        for (ch, dech) in de.iter().enumerate() {
            let du = dech * &z.unitaries[t];
            let inner: Complex64 = adj.iter().zip(du.iter()).map(|(a, b)| a.conj() * b).sum();
            ga[ch][t] += 2.0 * inner.re;
        }
        let pulled = e.matrix().adjoint() * &adj;
        adj = &grad.unit[t] + pulled;
    }

    // Double-integrator adjoint.
    let mut out = vec![vec![0.0; knots - 1]; channels];
    for ch in 0..channels {
        let mut total_a = ga[ch][knots - 1];
        let mut total_v = gv[ch][knots - 1];
        for t in (0..knots - 1).rev() {
            let dt = z.timesteps[t];
            out[ch][t] = gacc[ch][t] + 0.5 * dt * dt * total_a + dt * total_v;
            let new_a = ga[ch][t] + total_a;
            let new_v = gv[ch][t] + total_v + dt * total_a;
            total_a = new_a;
            total_v = new_v;
        }
    }
    out
}

fn clip(x: &[f64], bounds: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(bounds)
        .map(|(&v, &b)| v.clamp(-b, b))
        .collect()
}

/// Projected L-BFGS for the inner subproblem.
fn inner_minimize<F>(
    mut x: Vec<f64>,
    bounds: &[f64],
    precond: &[f64],
    max_iter: usize,
    gtol: f64,
    mut eval: F,
) -> Result<(Vec<f64>, f64, usize, f64)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    const MEMORY: usize = 10;
    x = clip(&x, bounds);
    let (mut fx, mut gx) = eval(&x)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iters = 0;
    let mut last_pg = f64::NAN;

    for _ in 0..max_iter {
        iters += 1;
        let pg: f64 = x
            .iter()
            .zip(&gx)
            .zip(bounds)
            .map(|((&xi, &gi), &b)| (xi - (xi - gi).clamp(-b, b)).abs())
            .fold(0.0, f64::max);
        last_pg = pg;
        if pg <= gtol {
            break;
        }

        // Two-loop recursion.
        let mut q = gx.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0
                / s_hist[i]
                    .iter()
                    .zip(&y_hist[i])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            let alpha = rho
                * s_hist[i]
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            alphas[i] = alpha;
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alpha * yj;
            }
        }
        // Initial Hessian guess: the sensitivity preconditioner, scaled by
        // the usual γ = sᵀy / yᵀH₀y when curvature history exists.
        let scale = if k > 0 {
            let last = k - 1;
            let sy: f64 = s_hist[last]
                .iter()
                .zip(&y_hist[last])
                .map(|(a, b)| a * b)
                .sum();
            let ypy: f64 = y_hist[last]
                .iter()
                .zip(precond)
                .map(|(a, p)| a * a * p)
                .sum();
            (sy / ypy).max(1e-300)
        } else {
            1.0
        };
        for (qj, pj) in q.iter_mut().zip(precond) {
            *qj *= scale * pj;
        }
        for i in 0..k {
            let rho = 1.0
                / s_hist[i]
                    .iter()
                    .zip(&y_hist[i])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            let beta = rho
                * y_hist[i]
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alphas[i] - beta) * sj;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let descent: f64 = dir.iter().zip(&gx).map(|(a, b)| a * b).sum();
        if descent >= 0.0 {
            dir = gx.iter().map(|v| -v).collect();
        }

        // Backtracking line search on the projected step.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(&xi, &di)| xi + step * di)
                .collect();
            let trial = clip(&trial, bounds);
            let dx_dot_g: f64 = trial
                .iter()
                .zip(&x)
                .zip(&gx)
                .map(|((&t, &xi), &gi)| (t - xi) * gi)
                .sum();
            let (ft, gt) = eval(&trial)?;
            if ft <= fx + 1e-4 * dx_dot_g && dx_dot_g < 0.0 || ft < fx - 1e-16 * fx.abs() {
                let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gt.iter().zip(&gx).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                if sy > 1e-14 {
                    s_hist.push(s);
                    y_hist.push(y);
                    if s_hist.len() > MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                }
                x = trial;
                fx = ft;
                gx = gt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, fx, iters, last_pg))
}

/// Solve a trajectory problem from the accelerations of `init` (which must
/// match the problem's non-fixed vertices in order and shape).
pub fn solve(
    problem: &TrajectoryProblem,
    init: &[ControlTrajectory],
    cfg: &SolverConfig,
) -> Result<(Vec<ControlTrajectory>, SolveReport)> {
    if cfg.required_fidelity > 1.0 {
        return Err(CoreError::invalid("required fidelity must be ≤ 1"));
    }
    let ws = Workspace::new(problem)?;
    if init.len() != ws.decision.len() {
        return Err(CoreError::invalid(format!(
            "expected {} initial trajectories, got {}",
            ws.decision.len(),
            init.len()
        )));
    }

    let mut x = vec![0.0; ws.n_vars];
    for (di, z0) in init.iter().enumerate() {
        let v = &problem.vertices[ws.decision[di]];
        if z0.channels != v.system.channels() || z0.knots != v.knots {
            return Err(CoreError::invalid("initial trajectory shape mismatch"));
        }
        let base = ws.offsets[di];
        for ch in 0..z0.channels {
            for t in 0..v.knots - 1 {
                x[base + ch * (v.knots - 1) + t] = z0.acceleration[ch][t];
            }
        }
    }

    let box_bounds = ws.box_bounds();
    let precond = ws.preconditioner();
    let mut lam_eq = vec![0.0; ws.n_eq];
    let mut lam_ineq = vec![0.0; ws.n_ineq];
    let mut mu = cfg.initial_penalty;
    let mut prev_violation = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for outer in 0..cfg.max_outer {
        iterations = outer + 1;
        let gtol = (1e-4 * 0.25_f64.powi(outer as i32)).max(cfg.gradient_tolerance);
        let (nx, _fal, inner_iters, inner_pg) =
            inner_minimize(x.clone(), &box_bounds, &precond, cfg.max_inner, gtol, |xv| {
                ws.al_value_grad(xv, cfg.required_fidelity, &lam_eq, &lam_ineq, mu)
            })?;
        x = nx;

        let trajs = ws.rollout_all(&x)?;
        let (eq, ineq) = ws.constraints(&trajs, cfg.required_fidelity);
        let violation = eq
            .iter()
            .map(|c| c.abs())
            .chain(ineq.iter().map(|c| c.max(0.0)))
            .fold(0.0, f64::max);

        if cfg.verbose {
            eprintln!(
                "outer {outer}: objective {:.6e} violation {:.3e} mu {:.1e} inner {} pg {:.2e}",
                ws.objective(&trajs),
                violation,
                mu,
                inner_iters,
                inner_pg
            );
        }
        if violation <= cfg.tolerance {
            converged = true;
            break;
        }
        for (l, c) in lam_eq.iter_mut().zip(&eq) {
            *l += mu * c;
        }
        for (l, c) in lam_ineq.iter_mut().zip(&ineq) {
            *l = (*l + mu * c).max(0.0);
        }
        if violation > 0.25 * prev_violation {
            mu *= cfg.penalty_growth;
        }
        prev_violation = prev_violation.min(violation);
    }

    let trajs = ws.rollout_all(&x)?;
    let (eq, ineq) = ws.constraints(&trajs, cfg.required_fidelity);
    let violation = eq
        .iter()
        .map(|c| c.abs())
        .chain(ineq.iter().map(|c| c.max(0.0)))
        .fold(0.0, f64::max);
    let fidelities = problem
        .vertices
        .iter()
        .zip(&trajs)
        .filter_map(|(v, z)| v.goal.as_ref().map(|g| fidelity(z, g).0))
        .collect();
    let report = SolveReport {
        objective: ws.objective(&trajs),
        violation,
        fidelities,
        iterations,
        converged: converged && violation <= cfg.tolerance,
    };
    Ok((trajs, report))
}

/// Trajectory whose amplitude profile is a truncated Gaussian scaled so the
/// integrated rotation angle equals `theta` on each channel. The consistent
/// accelerations are recovered by tracking the profile through the
/// double-integrator recursion, so the result is dynamically feasible.
pub fn gaussian_pulse(
    sys: &ControlSystem,
    thetas: &[f64],
    knots: usize,
    dt: f64,
) -> Result<ControlTrajectory> {
    if thetas.len() != sys.channels() {
        return Err(CoreError::invalid("one angle per channel required"));
    }
    let duration = (knots - 1) as f64 * dt;
    let sigma = duration / 6.0;
    let center = duration / 2.0;
    let shape: Vec<f64> = (0..knots)
        .map(|t| {
            let tt = t as f64 * dt;
            let g = (-((tt - center).powi(2)) / (2.0 * sigma * sigma)).exp();
            let edge = (-(center.powi(2)) / (2.0 * sigma * sigma)).exp();
            ((g - edge) / (1.0 - edge)).max(0.0)
        })
        .collect();
    let area: f64 = shape[..knots - 1].iter().map(|s| s * dt).sum();

    let channels = sys.channels();
    let mut accel = vec![vec![0.0; knots]; channels];
    for (ch, &theta) in thetas.iter().enumerate() {
        let scale = if area.abs() > 0.0 { theta / area } else { 0.0 };
        let target: Vec<f64> = shape.iter().map(|s| s * scale).collect();
        let mut a = target[0];
        let mut v = 0.0;
        for t in 0..knots - 1 {
            let acc = 2.0 * (target[t + 1] - a - v * dt) / (dt * dt);
            accel[ch][t] = acc;
            a = a + v * dt + 0.5 * acc * dt * dt;
            v += acc * dt;
        }
    }
    let initial: Vec<(f64, f64)> = thetas.iter().map(|_| (0.0, 0.0)).collect();
    rollout(sys, &accel, &initial, &vec![dt; knots])
}

/// Gaussian-shaped initial guess with symmetry-breaking acceleration noise.
pub fn initial_guess(
    sys: &ControlSystem,
    thetas: &[f64],
    knots: usize,
    dt: f64,
    seed: u64,
) -> Result<ControlTrajectory> {
    let base = gaussian_pulse(sys, thetas, knots, dt)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let scale = base
        .acceleration
        .iter()
        .flatten()
        .map(|a| a.abs())
        .fold(0.0, f64::max)
        .max(1e-6);
    let mut accel = base.acceleration.clone();
    for ch in accel.iter_mut() {
        for (t, a) in ch.iter_mut().enumerate() {
            if t + 1 < knots {
                *a += 1e-3 * scale * rng.gen_range(-1.0..1.0);
            }
        }
    }
    rollout(sys, &accel, &base.initial_conditions(), &base.timesteps)
}

impl ControlTrajectory {
    pub fn initial_conditions(&self) -> Vec<(f64, f64)> {
        (0..self.channels)
            .map(|ch| (self.amplitude[ch][0], self.velocity[ch][0]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crgs::{build_crgs_problem, BuildOptions, CrgsGraph, GateSetSpec};
    use rand::Rng;

    #[test]
    fn al_gradient_matches_fd_on_gate_set_problem() {
        let spec = GateSetSpec::standard(240.0);
        let graph = CrgsGraph::complete(&spec, 2, false).unwrap();
        let opts = BuildOptions {
            amplitude_bound: 0.4,
            curvature_bound: 0.02,
            knots: 20,
            detuning: Some(0.05),
            seed: 3,
        };
        let built = build_crgs_problem(&spec, &graph, &opts, 0.9999).unwrap();
        let ws = Workspace::new(&built.problem).unwrap();

        let mut x = vec![0.0; ws.n_vars];
        for (di, z0) in built.inits.iter().enumerate() {
            let base = ws.offsets[di];
            for t in 0..z0.knots - 1 {
                x[base + t] = z0.acceleration[0][t];
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let lam_eq: Vec<f64> = (0..ws.n_eq).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lam_ineq: Vec<f64> = (0..ws.n_ineq).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mu = 50.0;

        let (_, grad) = ws
            .al_value_grad(&x, 0.9999, &lam_eq, &lam_ineq, mu)
            .unwrap();
        let dir: Vec<f64> = (0..ws.n_vars).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let analytic: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();

        let eps = 1e-7;
        let shift = |s: f64| -> f64 {
            let xs: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            ws.al_value_grad(&xs, 0.9999, &lam_eq, &lam_ineq, mu)
                .unwrap()
                .0
        };
        let fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        let rel = (analytic - fd).abs() / fd.abs().max(1e-12);
        assert!(rel < 1e-4, "analytic {analytic:.8e} fd {fd:.8e} rel {rel:.2e}");
    }
}
