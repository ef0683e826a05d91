//! Gate-level circuits, a line-oriented text format, and transpilation into
//! synchronous moments (the unit the pulse simulator executes).

use std::fmt::Write as _;

use nalgebra::Complex;

use crate::error::{CoreError, Result};
use crate::quantum::{CMatrix, Operator};

type C = Complex<f64>;

/// Native gate set: physical X and √X, virtual Z, and the echoed
/// cross-resonance gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X(usize),
    Sx(usize),
    /// Rz(θ) = e^{−iθσZ/2}, implemented as a frame change (zero duration).
    VirtualZ(usize, f64),
    /// Control, target.
    Ecr(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::Sx(q) | Gate::VirtualZ(q, _) => vec![q],
            Gate::Ecr(c, t) => vec![c, t],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) {
        for q in g.qubits() {
            self.n_qubits = self.n_qubits.max(q + 1);
        }
        self.gates.push(g);
    }

    /// CNOT decomposed over the native set: ECR followed by single-qubit
    /// corrections (X and Rz on the control, an Sx sandwich on the target).
    pub fn push_cnot(&mut self, control: usize, target: usize) {
        use std::f64::consts::PI;
        self.push(Gate::Ecr(control, target));
        self.push(Gate::X(control));
        self.push(Gate::VirtualZ(control, 1.5 * PI));
        self.push(Gate::VirtualZ(target, -PI));
        self.push(Gate::Sx(target));
        self.push(Gate::VirtualZ(target, PI));
    }

    /// Parse the line format: `x 0`, `sx 2`, `rz 1 1.5708`, `ecr 0 1`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Circuit::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap();
            let mut arg = |what: &str| -> Result<&str> {
                parts.next().ok_or_else(|| {
                    CoreError::invalid(format!("line {}: missing {what}", ln + 1))
                })
            };
            let bad = |e: std::num::ParseIntError| {
                CoreError::invalid(format!("line {}: {e}", ln + 1))
            };
            let gate = match op {
                "x" => Gate::X(arg("qubit")?.parse().map_err(bad)?),
                "sx" => Gate::Sx(arg("qubit")?.parse().map_err(bad)?),
                "rz" => {
                    let q = arg("qubit")?.parse().map_err(bad)?;
                    let theta: f64 = arg("angle")?.parse().map_err(|e| {
                        CoreError::invalid(format!("line {}: {e}", ln + 1))
                    })?;
                    Gate::VirtualZ(q, theta)
                }
                "ecr" => {
                    let a = arg("control")?.parse().map_err(bad)?;
                    let b = arg("target")?.parse().map_err(bad)?;
                    Gate::Ecr(a, b)
                }
                other => {
                    return Err(CoreError::invalid(format!("line {}: unknown gate {other:?}", ln + 1)))
                }
            };
            if parts.next().is_some() {
                return Err(CoreError::invalid(format!("line {}: trailing tokens", ln + 1)));
            }
            c.push(gate);
        }
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            match *g {
                Gate::X(q) => writeln!(out, "x {q}").unwrap(),
                Gate::Sx(q) => writeln!(out, "sx {q}").unwrap(),
                Gate::VirtualZ(q, th) => writeln!(out, "rz {q} {th}").unwrap(),
                Gate::Ecr(c, t) => writeln!(out, "ecr {c} {t}").unwrap(),
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let qs = g.qubits();
            if qs.iter().any(|&q| q >= self.n_qubits) {
                return Err(CoreError::invalid("gate addresses qubit outside circuit"));
            }
            if let Gate::Ecr(c, t) = g {
                if c == t {
                    return Err(CoreError::invalid("ECR control equals target"));
                }
            }
        }
        Ok(())
    }

    /// Ideal full-circuit unitary (pulse-free reference), for widths ≤ 4.
    pub fn unitary(&self) -> Result<CMatrix> {
        if self.n_qubits > 4 {
            return Err(CoreError::FragmentTooLarge { qubits: self.n_qubits, max: 4 });
        }
        let d = 1usize << self.n_qubits;
        let mut u = CMatrix::identity(d, d);
        for g in &self.gates {
            u = gate_unitary(g, self.n_qubits) * u;
        }
        Ok(u)
    }
}

/// Ideal ECR unitary on (control, target): the control echo times the
/// entangling quarter rotation, (X⊗I)·e^{−i(π/4)σZ⊗σX}, with the physical
/// phase convention X = e^{−iπσX/2}.
pub fn ecr_ideal() -> CMatrix {
    let x = Operator::sigma_x().matrix().clone();
    let z = Operator::sigma_z().matrix().clone();
    let id = CMatrix::identity(2, 2);
    let zx = kron(&z, &x);
    let d = 4;
    // e^{−i(π/4) ZX} = cos(π/4) I − i sin(π/4) ZX since (ZX)² = I.
    let c = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let s = C::new(0.0, -std::f64::consts::FRAC_1_SQRT_2);
    let rot = CMatrix::identity(d, d) * c + zx * s;
    let echo = kron(&(x * C::new(0.0, -1.0)), &id);
    echo * rot
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn embed_one(m: &CMatrix, q: usize, n: usize) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for i in 0..n {
        let f = if i == q { m.clone() } else { CMatrix::identity(2, 2) };
        out = kron(&out, &f);
    }
    out
}

/// Ideal unitary of one gate embedded in an n-qubit register.
pub fn gate_unitary(g: &Gate, n: usize) -> CMatrix {
    match *g {
        Gate::X(q) => embed_one(Operator::rx(std::f64::consts::PI).matrix(), q, n),
        Gate::Sx(q) => embed_one(Operator::rx(std::f64::consts::FRAC_PI_2).matrix(), q, n),
        Gate::VirtualZ(q, th) => embed_one(Operator::rz(th).matrix(), q, n),
        Gate::Ecr(c, t) => {
            // Build from single-site factors so control/target may be any
            // pair of (possibly non-adjacent) register positions.
            let ecr = ecr_ideal();
            let d = 1usize << n;
            let mut out = CMatrix::zeros(d, d);
            for r in 0..d {
                for col in 0..d {
                    // Index bits: qubit 0 is the most significant.
                    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
                    if (0..n).all(|q| q == c || q == t || bit(r, q) == bit(col, q)) {
                        let rr = (bit(r, c) << 1) | bit(r, t);
                        let cc = (bit(col, c) << 1) | bit(col, t);
                        out[(r, col)] = ecr[(rr, cc)];
                    }
                }
            }
            out
        }
    }
}

/// One synchronous layer. All members run in parallel; the layer's duration
/// is set by its slowest member, shorter pulses being idle-padded.
#[derive(Debug, Clone, PartialEq)]
pub enum Moment {
    /// (qubit, gate), where gate is X or Sx.
    OneQubit(Vec<(usize, Gate)>),
    /// (control, target) pairs on disjoint qubits.
    TwoQubit(Vec<(usize, usize)>),
    /// (qubit, merged angle); applied exactly, zero duration.
    Virtual(Vec<(usize, f64)>),
}

impl Moment {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Moment::OneQubit(v) => v.iter().map(|&(q, _)| q).collect(),
            Moment::TwoQubit(v) => v.iter().flat_map(|&(c, t)| [c, t]).collect(),
            Moment::Virtual(v) => v.iter().map(|&(q, _)| q).collect(),
        }
    }

    fn contains(&self, q: usize) -> bool {
        self.qubits().contains(&q)
    }
}

#[derive(Debug, Clone)]
pub struct MomentSchedule {
    pub n_qubits: usize,
    pub moments: Vec<Moment>,
}

impl MomentSchedule {
    /// Ideal unitary of the scheduled circuit, for widths ≤ 4.
    pub fn unitary(&self) -> Result<CMatrix> {
        let mut c = Circuit::new(self.n_qubits);
        for m in &self.moments {
            match m {
                Moment::OneQubit(v) => {
                    for &(_, g) in v {
                        c.push(g);
                    }
                }
                Moment::TwoQubit(v) => {
                    for &(ctl, tgt) in v {
                        c.push(Gate::Ecr(ctl, tgt));
                    }
                }
                Moment::Virtual(v) => {
                    for &(q, th) in v {
                        c.push(Gate::VirtualZ(q, th));
                    }
                }
            }
        }
        c.unitary()
    }
}

/// Greedy as-soon-as-possible packing into type-homogeneous moments.
/// Consecutive virtual Z rotations on a qubit merge into a single angle
/// (reduced to (−π, π]); single- and two-qubit gates go into the earliest
/// moment of matching type with all their qubits free.
pub fn transpile_to_moments(c: &Circuit) -> Result<MomentSchedule> {
    c.validate()?;
    let n = c.n_qubits;
    let mut moments: Vec<Moment> = Vec::new();
    // Earliest moment index the next gate on each qubit may occupy.
    let mut avail = vec![0usize; n];
    // Open virtual moment a qubit's Rz stream is currently merging into.
    let mut virt: Vec<Option<usize>> = vec![None; n];

    for g in &c.gates {
        match *g {
            Gate::VirtualZ(q, th) => {
                if let Some(m) = virt[q] {
                    if let Moment::Virtual(v) = &mut moments[m] {
                        let slot = v.iter_mut().find(|(qq, _)| *qq == q).unwrap();
                        slot.1 = reduce_angle(slot.1 + th);
                        continue;
                    }
                }
                let mut placed = None;
                for m in avail[q]..moments.len() {
                    if let Moment::Virtual(v) = &mut moments[m] {
                        if !v.iter().any(|(qq, _)| *qq == q) {
                            v.push((q, reduce_angle(th)));
                            placed = Some(m);
                            break;
                        }
                    }
                }
                let m = placed.unwrap_or_else(|| {
                    moments.push(Moment::Virtual(vec![(q, reduce_angle(th))]));
                    moments.len() - 1
                });
                virt[q] = Some(m);
                avail[q] = m + 1;
            }
            Gate::X(q) | Gate::Sx(q) => {
                let mut placed = None;
                for m in avail[q]..moments.len() {
                    if let Moment::OneQubit(v) = &mut moments[m] {
                        if !v.iter().any(|(qq, _)| *qq == q) {
                            v.push((q, *g));
                            placed = Some(m);
                            break;
                        }
                    }
                }
                let m = placed.unwrap_or_else(|| {
                    moments.push(Moment::OneQubit(vec![(q, *g)]));
                    moments.len() - 1
                });
                virt[q] = None;
                avail[q] = m + 1;
            }
            Gate::Ecr(ctl, tgt) => {
                let start = avail[ctl].max(avail[tgt]);
                let mut placed = None;
                for m in start..moments.len() {
                    let free = !moments[m].contains(ctl) && !moments[m].contains(tgt);
                    if let Moment::TwoQubit(v) = &mut moments[m] {
                        if free {
                            v.push((ctl, tgt));
                            placed = Some(m);
                            break;
                        }
                    }
                }
                let m = placed.unwrap_or_else(|| {
                    moments.push(Moment::TwoQubit(vec![(ctl, tgt)]));
                    moments.len() - 1
                });
                virt[ctl] = None;
                virt[tgt] = None;
                avail[ctl] = m + 1;
                avail[tgt] = m + 1;
            }
        }
    }
    // Drop virtual moments that merged to a numerical no-op.
    let moments = moments
        .into_iter()
        .filter(|m| match m {
            Moment::Virtual(v) => v.iter().any(|&(_, th)| th.abs() > 0.0),
            _ => true,
        })
        .collect();
    Ok(MomentSchedule { n_qubits: n, moments })
}

/// Reduce an angle to (−π, π].
pub fn reduce_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t > std::f64::consts::PI {
        t -= two_pi;
    } else if t <= -std::f64::consts::PI {
        t += two_pi;
    }
    t
}

/// Distance between unitaries up to global phase: min_φ ‖A − e^{iφ}B‖.
pub fn phase_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut ip = C::new(0.0, 0.0);
    for r in 0..a.nrows() {
        for col in 0..a.ncols() {
            ip += b[(r, col)].conj() * a[(r, col)];
        }
    }
    let phase = if ip.norm() > 1e-300 { ip / C::new(ip.norm(), 0.0) } else { C::new(1.0, 0.0) };
    (a - b * phase).norm()
}
