//! Constrained-solver integration tests: the smooth-pulse and robustness
//! problem templates on a single qubit.

use std::f64::consts::PI;

use crgs_core::quantum::{gate_fidelity, Operator, Pauli, PauliString};
use crgs_core::trajectory::{
    dynamics_residual_max, error_susceptibility, gaussian_pulse, initial_guess, rollout, solve,
    Bounds, ControlSystem, ControlTrajectory, SolverConfig, TrajectoryProblem, VertexSpec,
};

fn x_gate_vertex(f0: Option<f64>) -> VertexSpec {
    let sys = ControlSystem::single_qubit_x();
    let knots = 50;
    let dt = 240.0 / (knots - 1) as f64;
    let mut v = VertexSpec::new(sys, knots, dt);
    v.goal = Some(Operator::sigma_x());
    v.fidelity_in_objective = f0.is_none();
    v.bounds = Bounds {
        amplitude: Some(0.2),
        velocity: None,
        acceleration: Some(0.01),
    };
    v
}

fn rerolled(z: &ControlTrajectory) -> ControlTrajectory {
    let sys = ControlSystem::single_qubit_x();
    rollout(
        &sys,
        &z.acceleration,
        &z.initial_conditions(),
        &z.timesteps,
    )
    .unwrap()
}

#[test]
fn smooth_pulse_template_reaches_target_fidelity() {
    let vertex = x_gate_vertex(None);
    let knots = vertex.knots;
    let dt = vertex.timesteps[0];
    let problem = TrajectoryProblem {
        vertices: vec![vertex],
        couplings: Vec::new(),
        regularization: 0.01,
    };
    let sys = ControlSystem::single_qubit_x();
    let z0 = initial_guess(&sys, &[PI], knots, dt, 1).unwrap();
    let cfg = SolverConfig::default();
    let (trajs, report) = solve(&problem, &[z0], &cfg).unwrap();
    assert!(report.converged, "report: {report:?}");

    // Independent re-rollout of the returned accelerations.
    let z = rerolled(&trajs[0]);
    let f = gate_fidelity(&z.final_unitary(), &Operator::sigma_x()).unwrap();
    assert!(f >= 0.9999, "fidelity {f}");
    assert!(dynamics_residual_max(&sys, &trajs[0]) <= 1e-8);
    assert!((report.fidelities[0] - f).abs() < 1e-10);
    assert!(trajs[0].bound_violation() <= cfg.tolerance);
}

#[test]
fn robustness_template_beats_gaussian_baseline() {
    let delta = 0.01 * 2.0 * PI;
    let h_err = vec![PauliString::new(1, &[(0, Pauli::Z)], delta).unwrap()];

    let mut vertex = x_gate_vertex(Some(0.9999));
    vertex.onsite_errors =
        vec![crgs_core::trajectory::sum_pauli_matrix(&h_err, 2).unwrap()];
    let knots = vertex.knots;
    let dt = vertex.timesteps[0];
    let problem = TrajectoryProblem {
        vertices: vec![vertex],
        couplings: Vec::new(),
        regularization: 1e-4,
    };
    let sys = ControlSystem::single_qubit_x();
    let z0 = initial_guess(&sys, &[PI], knots, dt, 2).unwrap();
    let cfg = SolverConfig {
        required_fidelity: 0.9999,
        ..SolverConfig::default()
    };
    let (trajs, report) = solve(&problem, &[z0], &cfg).unwrap();
    assert!(report.converged, "report: {report:?}");
    assert!(report.fidelities[0] >= 0.9999 - cfg.tolerance);

    let baseline = gaussian_pulse(&sys, &[PI], knots, dt).unwrap();
    let base_f = gate_fidelity(&baseline.final_unitary(), &Operator::sigma_x()).unwrap();
    assert!(base_f >= 0.9999, "gaussian baseline exact by construction");

    let robust = error_susceptibility(&trajs[0], &h_err).unwrap();
    let base = error_susceptibility(&baseline, &h_err).unwrap();
    assert!(
        robust < base,
        "robust {robust:.3e} should beat baseline {base:.3e}"
    );
    // A shaped pulse should suppress the first-order term substantially.
    assert!(robust < 0.1 * base, "robust {robust:.3e} vs base {base:.3e}");
}

#[test]
fn degenerate_problem_accepts_any_feasible_rollout() {
    let sys = ControlSystem::single_qubit_x();
    let knots = 20;
    let dt = 2.0;
    let vertex = VertexSpec::new(sys.clone(), knots, dt);
    let problem = TrajectoryProblem {
        vertices: vec![vertex],
        couplings: Vec::new(),
        regularization: 0.0,
    };
    let z0 = ControlTrajectory::idle(&sys, knots, dt);
    let cfg = SolverConfig {
        required_fidelity: 0.0,
        ..SolverConfig::default()
    };
    let (trajs, report) = solve(&problem, &[z0], &cfg).unwrap();
    assert!(report.converged);
    assert_eq!(report.objective, 0.0);
    assert!(dynamics_residual_max(&sys, &trajs[0]) <= 1e-12);
}

#[test]
fn infeasible_bounds_rejected() {
    let mut vertex = x_gate_vertex(None);
    vertex.bounds.amplitude = Some(-1.0);
    let problem = TrajectoryProblem {
        vertices: vec![vertex],
        couplings: Vec::new(),
        regularization: 0.01,
    };
    let sys = ControlSystem::single_qubit_x();
    let z0 = initial_guess(&sys, &[PI], 50, 240.0 / 49.0, 1).unwrap();
    assert!(solve(&problem, &[z0], &SolverConfig::default()).is_err());
}
