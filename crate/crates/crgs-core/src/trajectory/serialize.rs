//! Pulse-library interchange format for trajectories.
//!
//! A self-describing TOML document carrying everything needed to replay a
//! pulse: the acceleration program, initial conditions, timestep grid, and
//! bounds. Amplitude samples are included for consumers that only need the
//! envelope.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

use super::{rollout, Bounds, ControlSystem, ControlTrajectory};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryDoc {
    pub channels: usize,
    pub knots: usize,
    pub dim: usize,
    pub timesteps: Vec<f64>,
    /// Channel-major acceleration samples, rad/ns³.
    pub accelerations: Vec<Vec<f64>>,
    /// (a, ȧ) at the first knot per channel.
    pub initial_amplitude: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    /// Redundant amplitude samples (rad/ns) for envelope consumers.
    pub amplitudes: Vec<Vec<f64>>,
    pub bounds: Bounds,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl TrajectoryDoc {
    pub fn from_trajectory(z: &ControlTrajectory) -> Self {
        Self {
            channels: z.channels,
            knots: z.knots,
            dim: z.dim,
            timesteps: z.timesteps.clone(),
            accelerations: z.acceleration.clone(),
            initial_amplitude: (0..z.channels).map(|ch| z.amplitude[ch][0]).collect(),
            initial_velocity: (0..z.channels).map(|ch| z.velocity[ch][0]).collect(),
            amplitudes: z.amplitude.clone(),
            bounds: z.bounds,
            metadata: BTreeMap::new(),
        }
    }

    /// Reconstruct the trajectory by re-rolling out the accelerations.
    pub fn to_trajectory(&self, sys: &ControlSystem) -> Result<ControlTrajectory> {
        if sys.channels() != self.channels {
            return Err(CoreError::invalid("channel count mismatch with system"));
        }
        let initial: Vec<(f64, f64)> = self
            .initial_amplitude
            .iter()
            .zip(&self.initial_velocity)
            .map(|(&a, &v)| (a, v))
            .collect();
        let mut z = rollout(sys, &self.accelerations, &initial, &self.timesteps)?;
        z.bounds = self.bounds;
        Ok(z)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CoreError::Serialization(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| CoreError::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn round_trip_preserves_values() {
        let sys = ControlSystem::single_qubit_x();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let knots = 20;
        let acc: Vec<f64> = (0..knots).map(|_| rng.gen_range(-0.01..0.01)).collect();
        let z = rollout(&sys, &[acc], &[(0.0, 0.0)], &vec![3.0; knots]).unwrap();
        let doc = TrajectoryDoc::from_trajectory(&z);
        let text = doc.to_toml().unwrap();
        let back = TrajectoryDoc::from_toml(&text).unwrap();
        assert_eq!(doc, back);
        let z2 = back.to_trajectory(&sys).unwrap();
        for t in 0..knots {
            assert_eq!(z.amplitude[0][t], z2.amplitude[0][t]);
            let diff = (&z.unitaries[t] - &z2.unitaries[t])
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-15);
        }
    }
}
