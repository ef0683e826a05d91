//! Crosstalk-robust gate set (CRGS) design and verification.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`quantum`] — dense complex operator algebra for small Hilbert spaces.
//! 2. [`trajectory`] — direct trajectory optimization of control pulses:
//!    rollout dynamics, objective terms with analytic gradients, and an
//!    augmented-Lagrangian constrained solver.
//! 3. [`crgs`] — the graph-structured gate-set problem: layout coloring,
//!    factored pairwise crosstalk susceptibility, Pareto sweeps, and pulse
//!    library export.
//! 4. [`pulse`] — pulse-level Lindblad simulation of statically coupled
//!    transmons, moment transpilation, and echoed cross-resonance gates.
//! 5. [`experiments`] — benchmark protocol builders (XY4, random Clifford,
//!    TFIM), shot sampling, decay fits, calibration loops, and the
//!    coupling co-design sweep.

pub mod crgs;

pub mod error;
pub mod experiments;
pub mod pulse;
pub mod quantum;
pub mod trajectory;

pub use error::{CoreError, Result};
pub use quantum::{Operator, Pauli, PauliString};
pub use trajectory::{ControlSystem, ControlTrajectory, SolveReport, SolverConfig};
