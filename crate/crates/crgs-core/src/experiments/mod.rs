//! Benchmark protocols and their analysis: circuit builders (XY4, random
//! Clifford, TFIM), shot sampling and KL scoring, decay-curve fits, the
//! amplitude calibration loop, and the coupling co-design sweep.

pub mod calibrate;
pub mod cliffords;
pub mod codesign;
pub mod fit;
pub mod protocols;
pub mod shots;

pub use calibrate::{fine_calibrate, rough_calibrate, CalibrationRecord, CalibrationSettings};
pub use cliffords::{build_random_clifford, clifford_group, Clifford};
pub use codesign::{codesign_sweep, CodesignRow};
pub use fit::{fit_dd, fit_rb, levenberg_marquardt, DdFit, FitResult, RbFit};
pub use protocols::{
    build_tfim, build_xy4, gaussian_baseline_library, predicted_xy4_rate, tfim_exact_unitary,
    tfim_hamiltonian, xy4_pulse_count, TfimConfig,
};
pub use shots::{kl_bootstrap, kl_divergence, kl_from_counts, sample_shots, ShotDistribution};
