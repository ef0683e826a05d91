//! Moment-by-moment circuit execution at the pulse level. Each moment is
//! split into connected fragments (active qubits plus idle neighbors, joined
//! through the device's coupling edges); fragments evolve under their drive
//! schedules with static ZZ crosstalk and detuning always on.

use nalgebra::Complex;

use crate::crgs::PulseLibrary;
use crate::error::{CoreError, Result};
use crate::quantum::{matexp_skew, CMatrix, Operator};

use super::circuit::{Circuit, Gate, Moment, MomentSchedule};
use super::device::DeviceModel;
use super::lindblad::{evolve_density, DensityState, NoiseRates};
use super::schedule::{ecr_schedule, DriveChannel, PulseSchedule, Segment};

type C = Complex<f64>;

pub const MAX_FRAGMENT_QUBITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Noise-free propagator of the whole register (width-limited only by
    /// the dense representation).
    Unitary,
    /// Lindblad evolution of the register density matrix (≤ 4 qubits).
    Density,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub mode: SimMode,
    pub noise: bool,
    /// Replace the flat-top CR envelope by the library's robust √X envelope.
    pub robust_ecr: bool,
    /// Initial density matrix (density mode); ground state when absent.
    pub initial: Option<CMatrix>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { mode: SimMode::Density, noise: true, robust_ecr: false, initial: None }
    }
}

/// Per-moment execution record.
#[derive(Debug, Clone)]
pub struct MomentRecord {
    pub duration_ns: f64,
    pub fragments: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub n_qubits: usize,
    pub duration_ns: f64,
    pub unitary: Option<CMatrix>,
    pub density: Option<DensityState>,
    pub moments: Vec<MomentRecord>,
}

impl SimOutcome {
    /// Computational-basis probabilities, from the ground state in unitary
    /// mode or the density diagonal otherwise.
    pub fn probabilities(&self) -> Vec<f64> {
        if let Some(rho) = &self.density {
            (0..rho.dim()).map(|i| rho.population(i).max(0.0)).collect()
        } else if let Some(u) = &self.unitary {
            (0..u.nrows()).map(|i| u[(i, 0)].norm_sqr()).collect()
        } else {
            Vec::new()
        }
    }
}

/// One fragment's Hamiltonian pieces: a static part (detuning + internal ZZ)
/// plus constant drive operators scaled by their envelopes.
struct FragmentOps {
    members: Vec<usize>,
    h_static: CMatrix,
    drives: Vec<(CMatrix, Segment)>,
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Embed an operator on `members` (sorted, local order = list order) into an
/// n-qubit register with qubit 0 as the most significant bit.
fn embed_subspace(op: &CMatrix, members: &[usize], n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut out = CMatrix::zeros(d, d);
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    let local = |idx: usize| -> usize {
        members.iter().fold(0, |acc, &q| (acc << 1) | bit(idx, q))
    };
    for r in 0..d {
        for c in 0..d {
            if (0..n).all(|q| members.contains(&q) || bit(r, q) == bit(c, q)) {
                out[(r, c)] = op[(local(r), local(c))];
            }
        }
    }
    out
}

fn single_site(op: &CMatrix, pos: usize, m: usize) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for i in 0..m {
        let f = if i == pos { op.clone() } else { CMatrix::identity(2, 2) };
        out = kron(&out, &f);
    }
    out
}

fn two_site(a: &CMatrix, pa: usize, b: &CMatrix, pb: usize, m: usize) -> CMatrix {
    single_site(a, pa, m) * single_site(b, pb, m)
}

impl FragmentOps {
    fn build(model: &DeviceModel, members: Vec<usize>, schedule: PulseSchedule) -> Result<Self> {
        let m = members.len();
        if m > MAX_FRAGMENT_QUBITS {
            return Err(CoreError::FragmentTooLarge { qubits: m, max: MAX_FRAGMENT_QUBITS });
        }
        let pos = |q: usize| members.iter().position(|&x| x == q).unwrap();
        let d = 1usize << m;
        let x = Operator::sigma_x().matrix().clone();
        let y = Operator::sigma_y().matrix().clone();
        let z = Operator::sigma_z().matrix().clone();

        let mut h_static = CMatrix::zeros(d, d);
        for &q in &members {
            let delta = model.qubits[q].detuning_ghz;
            if delta != 0.0 {
                h_static += single_site(&z, pos(q), m) * C::new(std::f64::consts::PI * delta, 0.0);
            }
        }
        for (ei, e) in model.edges.iter().enumerate() {
            if members.contains(&e.a) && members.contains(&e.b) {
                let zeta = model.zeta_ghz(ei)?;
                if zeta != 0.0 {
                    h_static += two_site(&z, pos(e.a), &z, pos(e.b), m)
                        * C::new(std::f64::consts::TAU * zeta, 0.0);
                }
            }
        }

        let mut drives = Vec::with_capacity(schedule.segments.len());
        for seg in schedule.segments {
            let op = match seg.channel {
                DriveChannel::Qubit(q) => {
                    (single_site(&x, pos(q), m) * C::new(seg.phase.cos(), 0.0)
                        + single_site(&y, pos(q), m) * C::new(seg.phase.sin(), 0.0))
                        * C::new(0.5, 0.0)
                }
                DriveChannel::CrossResonance { control, target } => {
                    let (j, lambda) = super::schedule::cr_coefficients(model, control, target)?;
                    (single_site(&x, pos(target), m) * C::new(-1.0, 0.0)
                        + two_site(&z, pos(control), &x, pos(target), m)
                            * C::new(lambda, 0.0))
                        * C::new(j, 0.0)
                }
            };
            drives.push((op, seg));
        }
        Ok(Self { members, h_static, drives })
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        let mut h = self.h_static.clone();
        for (op, seg) in &self.drives {
            let a = seg.amplitude_at(t);
            if a != 0.0 {
                h += op * C::new(a, 0.0);
            }
        }
        h
    }

    /// Piecewise-constant sample boundaries of all drive segments, clipped
    /// to [0, duration].
    fn breakpoints(&self, duration: f64) -> Vec<f64> {
        let mut pts = vec![0.0, duration];
        for (_, seg) in &self.drives {
            let mut t = seg.start_ns;
            for _ in 0..=seg.samples.len() {
                if t > 0.0 && t < duration {
                    pts.push(t);
                }
                t += seg.dt_ns;
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        pts
    }

    /// Exact noise-free propagator over [0, duration] (the Hamiltonian is
    /// piecewise constant between breakpoints).
    fn propagator(&self, duration: f64) -> Result<CMatrix> {
        let d = self.h_static.nrows();
        let mut u = CMatrix::identity(d, d);
        let pts = self.breakpoints(duration);
        for w in pts.windows(2) {
            let dt = w[1] - w[0];
            if dt <= 0.0 {
                continue;
            }
            let h = Operator::new(self.hamiltonian(0.5 * (w[0] + w[1])))?;
            u = matexp_skew(&h, dt)?.into_matrix() * u;
        }
        Ok(u)
    }

}

fn gate_name(g: &Gate) -> &'static str {
    match g {
        Gate::X(_) => "x",
        Gate::Sx(_) => "sx",
        _ => unreachable!("only physical one-qubit gates have library names"),
    }
}

/// Connected fragments of a moment: active qubits plus adjacent idle
/// spectators, joined by the device's coupling edges.
fn moment_fragments(model: &DeviceModel, active: &[usize]) -> Vec<Vec<usize>> {
    let n = model.n_qubits();
    let mut in_set = vec![false; n];
    for &q in active {
        in_set[q] = true;
    }
    for e in &model.edges {
        if active.contains(&e.a) {
            in_set[e.b] = true;
        }
        if active.contains(&e.b) {
            in_set[e.a] = true;
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if !in_set[start] || seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < comp.len() {
            let q = comp[head];
            head += 1;
            for e in &model.edges {
                for (u, v) in [(e.a, e.b), (e.b, e.a)] {
                    if u == q && in_set[v] && !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Run a transpiled schedule. `color_of` names each qubit's pulse-library
/// color; virtual moments apply exact Z rotations at zero duration.
pub fn simulate_moments(
    sched: &MomentSchedule,
    model: &DeviceModel,
    library: &PulseLibrary,
    color_of: &[String],
    opts: &SimOptions,
) -> Result<SimOutcome> {
    let n = model.n_qubits();
    if sched.n_qubits > n || color_of.len() != n {
        return Err(CoreError::invalid("device, circuit, and coloring widths disagree"));
    }
    if matches!(opts.mode, SimMode::Density) && n > MAX_FRAGMENT_QUBITS {
        return Err(CoreError::FragmentTooLarge { qubits: n, max: MAX_FRAGMENT_QUBITS });
    }
    let d = 1usize << n;
    let mut unitary = CMatrix::identity(d, d);
    let mut rho = match (&opts.mode, &opts.initial) {
        (SimMode::Density, Some(m)) => DensityState::new(m.clone())?,
        (SimMode::Density, None) => DensityState::ground(n),
        _ => DensityState::ground(0),
    };

    let mut records = Vec::with_capacity(sched.moments.len());
    let mut total = 0.0;
    for moment in &sched.moments {
        match moment {
            Moment::Virtual(v) => {
                let mut op = CMatrix::identity(d, d);
                for &(q, th) in v {
                    op = embed_subspace(Operator::rz(th).matrix(), &[q], n) * op;
                }
                match opts.mode {
                    SimMode::Unitary => unitary = &op * unitary,
                    SimMode::Density => {
                        rho.matrix = &op * &rho.matrix * op.adjoint();
                    }
                }
                records.push(MomentRecord { duration_ns: 0.0, fragments: Vec::new() });
            }
            Moment::OneQubit(_) | Moment::TwoQubit(_) => {
                let active = moment.qubits();
                let fragments = moment_fragments(model, &active);
                let mut frags = Vec::with_capacity(fragments.len());
                let mut duration: f64 = 0.0;
                for members in &fragments {
                    let mut sched_f = PulseSchedule::default();
                    match moment {
                        Moment::OneQubit(gates) => {
                            for (q, g) in gates {
                                if !members.contains(q) {
                                    continue;
                                }
                                let z = library.trajectory(&color_of[*q], gate_name(g))?;
                                sched_f.merge(PulseSchedule::from_trajectory(*q, &z, 0.0, 0.0)?);
                            }
                        }
                        Moment::TwoQubit(pairs) => {
                            for &(c, t) in pairs {
                                if !members.contains(&c) {
                                    continue;
                                }
                                let echo = library.trajectory(&color_of[c], "x")?;
                                // A dedicated "cr" entry overrides the control
                                // color's envelope when present.
                                let robust = if opts.robust_ecr {
                                    Some(
                                        library
                                            .trajectory("cr", "sx")
                                            .or_else(|_| library.trajectory(&color_of[c], "sx"))?,
                                    )
                                } else {
                                    None
                                };
                                sched_f.merge(ecr_schedule(model, c, t, &echo, robust.as_ref())?);
                            }
                        }
                        Moment::Virtual(_) => unreachable!(),
                    }
                    duration = duration.max(sched_f.duration_ns);
                    frags.push(FragmentOps::build(model, members.clone(), sched_f)?);
                }

                match opts.mode {
                    SimMode::Unitary => {
                        for frag in &frags {
                            let u = frag.propagator(duration)?;
                            unitary = embed_subspace(&u, &frag.members, n) * unitary;
                        }
                    }
                    SimMode::Density => {
                        // Disjoint fragments evolve jointly on the register:
                        // embed every fragment's terms and integrate once.
                        let mut h_static = CMatrix::zeros(d, d);
                        let mut drives = Vec::new();
                        let mut gamma1 = vec![0.0; n];
                        let mut gamma_phi = vec![0.0; n];
                        for frag in &frags {
                            h_static += embed_subspace(&frag.h_static, &frag.members, n);
                            for (op, seg) in &frag.drives {
                                drives.push((
                                    embed_subspace(op, &frag.members, n),
                                    seg.clone(),
                                ));
                            }
                            if opts.noise {
                                let r = NoiseRates::from_model(model, &frag.members, true);
                                for (i, &q) in frag.members.iter().enumerate() {
                                    gamma1[q] = r.gamma1[i];
                                    gamma_phi[q] = r.gamma_phi[i];
                                }
                            }
                        }
                        let rates = NoiseRates { gamma1, gamma_phi };
                        // The envelopes are piecewise constant, so integrate
                        // window-by-window with a constant Hamiltonian: RK4
                        // stages must never straddle a sample boundary.
                        let mut pts = vec![0.0, duration];
                        for (_, seg) in &drives {
                            let mut t = seg.start_ns;
                            for _ in 0..=seg.samples.len() {
                                if t > 0.0 && t < duration {
                                    pts.push(t);
                                }
                                t += seg.dt_ns;
                            }
                        }
                        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                        for w in pts.windows(2) {
                            let dt = w[1] - w[0];
                            if dt <= 0.0 {
                                continue;
                            }
                            let mid = 0.5 * (w[0] + w[1]);
                            let mut h = h_static.clone();
                            for (op, seg) in &drives {
                                let a = seg.amplitude_at(mid);
                                if a != 0.0 {
                                    h += op * C::new(a, 0.0);
                                }
                            }
                            evolve_density(&mut rho, &|_| h.clone(), &rates, dt, f64::INFINITY)?;
                        }
                    }
                }
                total += duration;
                records.push(MomentRecord { duration_ns: duration, fragments });
            }
        }
    }

    Ok(SimOutcome {
        n_qubits: n,
        duration_ns: total,
        unitary: matches!(opts.mode, SimMode::Unitary).then_some(unitary),
        density: matches!(opts.mode, SimMode::Density).then_some(rho),
        moments: records,
    })
}

/// Transpile and run a gate-level circuit.
pub fn simulate_circuit(
    circuit: &Circuit,
    model: &DeviceModel,
    library: &PulseLibrary,
    color_of: &[String],
    opts: &SimOptions,
) -> Result<SimOutcome> {
    let sched = super::circuit::transpile_to_moments(circuit)?;
    simulate_moments(&sched, model, library, color_of, opts)
}
