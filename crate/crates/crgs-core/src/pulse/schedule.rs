//! Pulse schedules: piecewise-constant drive envelopes on qubit and
//! cross-resonance channels, and the echoed cross-resonance construction.

use crate::error::{CoreError, Result};
use crate::trajectory::ControlTrajectory;

use super::device::DeviceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveChannel {
    /// Resonant drive a(t)(cos φ σX + sin φ σY)/2 on one qubit.
    Qubit(usize),
    /// Cross-resonance drive applied to `control`, acting on `target`
    /// through the static coupling.
    CrossResonance { control: usize, target: usize },
}

impl DriveChannel {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            DriveChannel::Qubit(q) => vec![q],
            DriveChannel::CrossResonance { control, target } => vec![control, target],
        }
    }
}

/// A uniformly sampled envelope (rad/ns, piecewise-constant) on one channel.
#[derive(Debug, Clone)]
pub struct Segment {
    pub channel: DriveChannel,
    pub start_ns: f64,
    pub dt_ns: f64,
    pub samples: Vec<f64>,
    pub phase: f64,
}

impl Segment {
    pub fn end_ns(&self) -> f64 {
        self.start_ns + self.dt_ns * self.samples.len() as f64
    }

    /// Envelope value at absolute time t (zero outside the segment).
    pub fn amplitude_at(&self, t: f64) -> f64 {
        let rel = t - self.start_ns;
        if rel < 0.0 {
            return 0.0;
        }
        let idx = (rel / self.dt_ns).floor() as usize;
        self.samples.get(idx).copied().unwrap_or(0.0)
    }

    pub fn area(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.dt_ns
    }
}

#[derive(Debug, Clone, Default)]
pub struct PulseSchedule {
    pub duration_ns: f64,
    pub segments: Vec<Segment>,
}

impl PulseSchedule {
    /// A single-qubit drive from an optimized trajectory. Non-uniform knot
    /// spacings are not needed anywhere, so uniform spacing is required.
    pub fn from_trajectory(q: usize, z: &ControlTrajectory, start_ns: f64, phase: f64) -> Result<Self> {
        let dt = uniform_dt(z)?;
        let samples: Vec<f64> = z.amplitude[0][..z.knots - 1].to_vec();
        let seg = Segment { channel: DriveChannel::Qubit(q), start_ns, dt_ns: dt, samples, phase };
        Ok(Self { duration_ns: seg.end_ns(), segments: vec![seg] })
    }

    pub fn push(&mut self, seg: Segment) {
        self.duration_ns = self.duration_ns.max(seg.end_ns());
        self.segments.push(seg);
    }

    pub fn merge(&mut self, other: PulseSchedule) {
        for seg in other.segments {
            self.push(seg);
        }
    }

    /// Smallest sample spacing over all segments (∞ when empty).
    pub fn min_sample_dt(&self) -> f64 {
        self.segments.iter().map(|s| s.dt_ns).fold(f64::INFINITY, f64::min)
    }
}

fn uniform_dt(z: &ControlTrajectory) -> Result<f64> {
    let dt = z.timesteps[0];
    if z.timesteps.iter().any(|&d| (d - dt).abs() > 1e-12) {
        return Err(CoreError::invalid("trajectory has non-uniform knot spacing"));
    }
    Ok(dt)
}

/// Dimensionless cross-resonance coefficients of an edge: the drive
/// transfer ratio j = J/(Δ₁₂+α₁) and the conditional ratio λ = α₁/Δ₁₂,
/// so the CR Hamiltonian is a(t)·j·(−σX⁽ᵗ⁾ + λ σZ⁽ᶜ⁾σX⁽ᵗ⁾).
pub fn cr_coefficients(model: &DeviceModel, control: usize, target: usize) -> Result<(f64, f64)> {
    let edge = model
        .edge_between(control, target)
        .ok_or_else(|| CoreError::invalid(format!("no coupling between {control} and {target}")))?;
    let e = &model.edges[edge];
    let alpha = model.qubits[control].anharmonicity_ghz;
    let delta = e.freq_diff_ghz;
    if delta.abs() < 1e-9 {
        return Err(CoreError::DegenerateCr(
            "control-target detuning is zero; conditional term diverges".into(),
        ));
    }
    if (delta + alpha).abs() < 1e-9 {
        return Err(CoreError::DegenerateCr(
            "drive sits on the control's two-photon resonance".into(),
        ));
    }
    let j = e.j_ghz * model.coupling_scale / (delta + alpha);
    Ok((j, alpha / delta))
}

/// Flat-top envelope with Gaussian rise and fall, peak 1, `n` samples.
pub fn flat_top_envelope(n: usize) -> Vec<f64> {
    let sigma = n as f64 / 8.0;
    let ramp = (2.0 * sigma).round() as usize;
    (0..n)
        .map(|i| {
            let x = i as f64 + 0.5;
            if i < ramp {
                (-((x - ramp as f64) / sigma).powi(2) / 2.0).exp()
            } else if i >= n - ramp {
                (-((x - (n - ramp) as f64) / sigma).powi(2) / 2.0).exp()
            } else {
                1.0
            }
        })
        .collect()
}

/// Resample a trajectory's amplitude profile onto `n` uniform samples,
/// normalized to peak magnitude 1.
pub fn trajectory_envelope(z: &ControlTrajectory, n: usize) -> Vec<f64> {
    let total = z.duration();
    let dt = z.timesteps[0];
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64 * total;
            let idx = ((t / dt).floor() as usize).min(z.knots - 2);
            z.amplitude[0][idx]
        })
        .collect();
    let peak = out.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut out {
            *v /= peak;
        }
    }
    out
}

/// Echoed cross-resonance schedule for a ZX(π/2) interaction:
/// CR(+) · X-echo on the control · CR(−), with a rotary drive on the target
/// sized to cancel the unconditional part of the CR term. The CR segment
/// duration comes from the device (∝ 1/J via the coupling scale); the
/// envelope is a flat-top Gaussian, or the supplied robust single-qubit
/// envelope resampled to the same duration.
pub fn ecr_schedule(
    model: &DeviceModel,
    control: usize,
    target: usize,
    echo_x: &ControlTrajectory,
    robust_envelope: Option<&ControlTrajectory>,
) -> Result<PulseSchedule> {
    let (j, lambda) = cr_coefficients(model, control, target)?;
    if (j * lambda).abs() < 1e-12 {
        return Err(CoreError::DegenerateCr("conditional rotation rate vanishes".into()));
    }
    let tau = model.cr_duration_ns();
    let n = 160;
    let dt = tau / n as f64;
    let shape = match robust_envelope {
        Some(z) => trajectory_envelope(z, n),
        None => flat_top_envelope(n),
    };
    let shape_area: f64 = shape.iter().sum::<f64>() * dt;
    if shape_area.abs() < 1e-9 {
        return Err(CoreError::invalid("CR envelope has vanishing area"));
    }
    // Conditional rotation: each segment contributes ∓Φ·j·λ to the ZX
    // angle and the echo makes the two add, so 2Φjλ = π/4.
    let phi = std::f64::consts::FRAC_PI_4 / (2.0 * j * lambda);
    let peak = phi / shape_area;

    let mut sched = PulseSchedule::default();
    let echo_dur = echo_x.duration();
    for (half, sign) in [(0.0, 1.0), (tau + echo_dur, -1.0)] {
        let cr: Vec<f64> = shape.iter().map(|s| sign * peak * s).collect();
        let rotary: Vec<f64> = cr.iter().map(|a| 2.0 * a * j).collect();
        sched.push(Segment {
            channel: DriveChannel::CrossResonance { control, target },
            start_ns: half,
            dt_ns: dt,
            samples: cr,
            phase: 0.0,
        });
        sched.push(Segment {
            channel: DriveChannel::Qubit(target),
            start_ns: half,
            dt_ns: dt,
            samples: rotary,
            phase: 0.0,
        });
    }
    let echo = PulseSchedule::from_trajectory(control, echo_x, tau, 0.0)?;
    sched.merge(echo);
    Ok(sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::ControlSystem;
    use approx::assert_abs_diff_eq;

    fn x_pulse() -> ControlTrajectory {
        // Square-ish π pulse as a stand-in echo.
        let sys = ControlSystem::single_qubit_x();
        let knots = 41;
        let dt = 1.0;
        let amp = std::f64::consts::PI / ((knots - 1) as f64 * dt);
        let mut z = ControlTrajectory::idle(&sys, knots, dt);
        for v in &mut z.amplitude[0] {
            *v = amp;
        }
        z
    }

    #[test]
    fn flat_top_shape() {
        let s = flat_top_envelope(160);
        assert!(s[0] < 0.2);
        assert_abs_diff_eq!(s[80], 1.0, epsilon = 1e-12);
        assert!(s[159] < 0.2);
        assert_abs_diff_eq!(s[10], s[149], epsilon = 1e-9);
    }

    #[test]
    fn segment_lookup() {
        let seg = Segment {
            channel: DriveChannel::Qubit(0),
            start_ns: 5.0,
            dt_ns: 2.0,
            samples: vec![1.0, 2.0, 3.0],
            phase: 0.0,
        };
        assert_eq!(seg.amplitude_at(4.9), 0.0);
        assert_eq!(seg.amplitude_at(5.1), 1.0);
        assert_eq!(seg.amplitude_at(9.9), 3.0);
        assert_eq!(seg.amplitude_at(11.1), 0.0);
        assert_abs_diff_eq!(seg.area(), 12.0, epsilon = 1e-12);
    }

    #[test]
    fn ecr_structure_and_angle() {
        let model = DeviceModel::standard(2, &[(0, 1)]);
        let sched = ecr_schedule(&model, 0, 1, &x_pulse(), None).unwrap();
        assert_eq!(sched.segments.len(), 5);
        let (j, lambda) = cr_coefficients(&model, 0, 1).unwrap();
        let mut zx_angle = 0.0;
        for seg in &sched.segments {
            if let DriveChannel::CrossResonance { .. } = seg.channel {
                // Echo flips the conditional sign, so segment areas subtract.
                let sign = if seg.start_ns == 0.0 { 1.0 } else { -1.0 };
                zx_angle += 2.0 * sign * seg.area() * j * lambda;
            }
        }
        assert_abs_diff_eq!(zx_angle, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(sched.duration_ns, 2.0 * 160.0 + 40.0, epsilon = 1e-9);
    }

    #[test]
    fn ecr_duration_scales_inversely_with_coupling() {
        let mut model = DeviceModel::standard(2, &[(0, 1)]);
        model.coupling_scale = 2.0;
        let sched = ecr_schedule(&model, 0, 1, &x_pulse(), None).unwrap();
        assert_abs_diff_eq!(sched.duration_ns, 160.0 + 40.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_detuning_rejected() {
        let mut model = DeviceModel::standard(2, &[(0, 1)]);
        model.edges[0].freq_diff_ghz = 0.0;
        assert!(matches!(
            ecr_schedule(&model, 0, 1, &x_pulse(), None),
            Err(CoreError::DegenerateCr(_))
        ));
    }

    #[test]
    fn robust_envelope_keeps_duration_and_area() {
        let model = DeviceModel::standard(2, &[(0, 1)]);
        let plain = ecr_schedule(&model, 0, 1, &x_pulse(), None).unwrap();
        let robust = ecr_schedule(&model, 0, 1, &x_pulse(), Some(&x_pulse())).unwrap();
        assert_abs_diff_eq!(plain.duration_ns, robust.duration_ns, epsilon = 1e-9);
        let area = |s: &PulseSchedule| {
            s.segments
                .iter()
                .filter(|seg| matches!(seg.channel, DriveChannel::CrossResonance { .. }))
                .map(|seg| if seg.start_ns == 0.0 { seg.area() } else { -seg.area() })
                .sum::<f64>()
        };
        assert_abs_diff_eq!(area(&plain), area(&robust), epsilon = 1e-9);
    }
}
