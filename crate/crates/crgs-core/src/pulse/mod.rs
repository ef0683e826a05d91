//! Pulse-level simulation of statically coupled transmons: device model,
//! Lindblad integration, circuit/moment transpilation, pulse schedules, and
//! the moment-fragment circuit simulator.

pub mod circuit;
pub mod device;
pub mod lindblad;
pub mod schedule;
pub mod simulate;

pub use circuit::{phase_distance, reduce_angle, transpile_to_moments, Circuit, Gate, Moment, MomentSchedule};
pub use device::{coherence_limit, zz_coupling, CouplingEdge, DeviceModel, QubitParams};
pub use lindblad::{evolve_density, DensityState, NoiseRates};
pub use schedule::{ecr_schedule, DriveChannel, PulseSchedule, Segment};
pub use simulate::{simulate_circuit, SimMode, SimOptions, SimOutcome};
