//! Amplitude calibration against virtual hardware: a rough Rabi-frequency
//! sweep followed by an error-amplifying repeated-pulse loop.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::experiments::fit::levenberg_marquardt;
use crate::pulse::{evolve_density, DensityState, NoiseRates};
use crate::quantum::{CMatrix, Operator};
use crate::trajectory::ControlTrajectory;

#[derive(Debug, Clone, Copy)]
pub struct CalibrationSettings {
    /// Stop once the fitted per-pulse angle error drops below this (rad).
    pub tolerance_rad: f64,
    pub max_iterations: usize,
    /// Amplitude-scale samples in the rough Rabi sweep.
    pub rough_points: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            tolerance_rad: 1e-3,
            max_iterations: 8,
            rough_points: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationRecord {
    pub target_theta: f64,
    /// Rabi cycles per unit amplitude scale, from the rough sweep (0 when the
    /// rough stage was skipped).
    pub rabi_frequency: f64,
    pub a_rough: f64,
    pub a_fine: f64,
    /// (fitted per-pulse error, amplitude after the update), one per loop.
    pub history: Vec<(f64, f64)>,
    pub converged: bool,
    /// Whether the amplifying sequence used odd repetition counts (the π/2
    /// working point) rather than a π/2 preparation plus 0..14 repetitions.
    pub odd_reps: bool,
}

/// Evolve `rho` through one playing of `z` with all samples scaled by
/// `scale`. The drive is resonant and along X: H(t) = scale·a(t)·σX/2.
fn play_pulse(
    rho: &mut DensityState,
    z: &ControlTrajectory,
    scale: f64,
    rates: &NoiseRates,
) -> Result<()> {
    let sx = Operator::sigma_x();
    for t in 0..z.knots - 1 {
        let h: CMatrix = sx.matrix() * Complex64::new(0.5 * scale * z.amplitude[0][t], 0.0);
        evolve_density(rho, &|_| h.clone(), rates, z.timesteps[t], f64::INFINITY)?;
    }
    Ok(())
}

/// Excited-state population after `prep_scale.map(..)` then `reps` plays of
/// `z` at `scale`, starting from the ground state.
fn measure_p1(
    z: &ControlTrajectory,
    scale: f64,
    prep_scale: Option<f64>,
    reps: usize,
    rates: &NoiseRates,
) -> Result<f64> {
    let mut rho = DensityState::ground(1);
    if let Some(p) = prep_scale {
        play_pulse(&mut rho, z, p, rates)?;
    }
    for _ in 0..reps {
        play_pulse(&mut rho, z, scale, rates)?;
    }
    Ok(rho.population(1))
}

/// Rough amplitude estimate from a Rabi sweep: play the pulse once at
/// amplitude scales x spanning [0, 2], fit
/// y = ½cos(2πxf + π) + ½, and return (θ/(2πf), f).
pub fn rough_calibrate(
    z: &ControlTrajectory,
    theta: f64,
    rates: &NoiseRates,
    settings: &CalibrationSettings,
) -> Result<(f64, f64)> {
    let points = settings.rough_points.max(8);
    let xs: Vec<f64> = (0..points).map(|i| 2.0 * i as f64 / (points - 1) as f64).collect();
    let mut ys = Vec::with_capacity(points);
    for &x in &xs {
        ys.push(measure_p1(z, x, None, 1, rates)?);
    }
    let residual = |p: &[f64]| -> Vec<f64> {
        let f = p[0];
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| 0.5 * (2.0 * PI * x * f + PI).cos() + 0.5 - y)
            .collect()
    };
    // The pulse is nominally a θ rotation at unit scale, so f ≈ θ/2π; start
    // around that and keep the best of a few inits in case the gain is far off.
    let mut best: Option<(f64, f64)> = None;
    for mult in [0.5, 0.75, 1.0, 1.5, 2.0] {
        let fit = levenberg_marquardt(&residual, &[mult * theta / (2.0 * PI)], 200)?;
        let f = fit.params[0].abs();
        if f > 1e-6 && best.map_or(true, |(_, r)| fit.residual_norm < r) {
            best = Some((f, fit.residual_norm));
        }
    }
    let (f, _) = best.ok_or_else(|| {
        CoreError::CalibrationFailure("rough Rabi fit found no oscillation".into())
    })?;
    Ok((theta / (2.0 * PI * f), f))
}

/// Repeated-pulse fine calibration. For θ = π the sequence is a π/2
/// preparation (the same pulse at half amplitude) followed by x ∈ 0..=14
/// repetitions, fit with y = ½cos((Δθ+π)x − π/2) + ½. For θ = π/2 the
/// repetitions are odd, x ∈ {1, 3, …, 25}, fit with
/// y = ½cos((Δθ+π/2)x − π) + ½. Each loop updates a ← a·θ/(θ+Δθ) until
/// |Δθ| falls under the tolerance.
pub fn fine_calibrate(
    z: &ControlTrajectory,
    theta: f64,
    a_init: f64,
    rates: &NoiseRates,
    settings: &CalibrationSettings,
) -> Result<CalibrationRecord> {
    let odd_reps = (theta - FRAC_PI_2).abs() < (theta - PI).abs();
    let reps: Vec<usize> = if odd_reps {
        (0..=12).map(|k| 2 * k + 1).collect()
    } else {
        (0..=14).collect()
    };
    let mut a = a_init;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..settings.max_iterations {
        let mut ys = Vec::with_capacity(reps.len());
        for &x in &reps {
            let prep = if odd_reps { None } else { Some(0.5 * a) };
            ys.push(measure_p1(z, a, prep, x, rates)?);
        }
        let residual = |p: &[f64]| -> Vec<f64> {
            let d = p[0];
            reps.iter()
                .zip(&ys)
                .map(|(&x, &y)| {
                    let x = x as f64;
                    let model = if odd_reps {
                        0.5 * ((d + FRAC_PI_2) * x - PI).cos() + 0.5
                    } else {
                        0.5 * ((d + PI) * x - FRAC_PI_2).cos() + 0.5
                    };
                    model - y
                })
                .collect()
        };
        let fit = levenberg_marquardt(&residual, &[0.0], 200)?;
        let delta = fit.params[0];
        a *= theta / (theta + delta);
        history.push((delta, a));
        if delta.abs() < settings.tolerance_rad {
            converged = true;
            break;
        }
    }
    Ok(CalibrationRecord {
        target_theta: theta,
        rabi_frequency: 0.0,
        a_rough: a_init,
        a_fine: a,
        history,
        converged,
        odd_reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{rollout, ControlSystem};

    fn square_x(knots: usize, dt: f64, area: f64) -> ControlTrajectory {
        let sys = ControlSystem::single_qubit_x();
        let a0 = area / ((knots - 1) as f64 * dt);
        rollout(&sys, &[vec![0.0; knots]], &[(a0, 0.0)], &vec![dt; knots]).unwrap()
    }

    #[test]
    fn rough_recovers_gain_error() {
        // Pulse plays 1.07π at unit scale; the rough stage should land near
        // 1/1.07.
        let z = square_x(41, 1.0, 1.07 * PI);
        let s = CalibrationSettings::default();
        let (a, f) = rough_calibrate(&z, PI, &NoiseRates::none(1), &s).unwrap();
        assert!((f - 1.07 / 2.0).abs() < 5e-3, "f={f}");
        assert!((a - 1.0 / 1.07).abs() < 0.02, "a={a}");
    }

    #[test]
    fn fine_pi_converges_from_five_percent() {
        let z = square_x(41, 1.0, PI);
        let s = CalibrationSettings::default();
        let rec = fine_calibrate(&z, PI, 1.05, &NoiseRates::none(1), &s).unwrap();
        assert!(rec.converged);
        assert!(rec.history.len() <= 5, "took {} loops", rec.history.len());
        assert!((rec.a_fine - 1.0).abs() < 1e-3, "a={}", rec.a_fine);
        assert!(!rec.odd_reps);
    }

    #[test]
    fn fine_half_pi_converges_from_five_percent() {
        let z = square_x(41, 1.0, FRAC_PI_2);
        let s = CalibrationSettings::default();
        let rec = fine_calibrate(&z, FRAC_PI_2, 0.95, &NoiseRates::none(1), &s).unwrap();
        assert!(rec.converged);
        assert!(rec.history.len() <= 5);
        assert!((rec.a_fine - 1.0).abs() < 2e-3, "a={}", rec.a_fine);
        assert!(rec.odd_reps);
    }

    #[test]
    fn noisy_calibration_still_converges() {
        use crate::pulse::DeviceModel;
        let z = square_x(41, 1.0, PI);
        let model = DeviceModel::standard(1, &[]);
        let rates = NoiseRates::from_model(&model, &[0], true);
        let s = CalibrationSettings::default();
        let rec = fine_calibrate(&z, PI, 1.05, &rates, &s).unwrap();
        assert!(rec.converged);
        // Decoherence biases the visibility, not the phase; the amplitude
        // should still land close.
        assert!((rec.a_fine - 1.0).abs() < 5e-3, "a={}", rec.a_fine);
    }

    #[test]
    fn already_calibrated_exits_immediately() {
        let z = square_x(41, 1.0, PI);
        let s = CalibrationSettings::default();
        let rec = fine_calibrate(&z, PI, 1.0, &NoiseRates::none(1), &s).unwrap();
        assert!(rec.converged);
        assert_eq!(rec.history.len(), 1);
    }
}
