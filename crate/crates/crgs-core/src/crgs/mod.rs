//! Crosstalk-robust gate sets over colored layouts.
//!
//! A gate set is replicated once per layout color; cross-color pairs that can
//! fire synchronously pick up a factored pairwise susceptibility term, and
//! the joint trajectory problem minimizes the sum over edges subject to
//! per-gate fidelity and rotation-area constraints.

mod library;

pub use library::{export_library, EdgeAudit, LibraryEntry, PulseLibrary};

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::quantum::{CMatrix, Operator, Pauli};
use crate::trajectory::{
    rollout, solve, Bounds, ControlSystem, ControlTrajectory, CouplingTerm, SolveReport,
    SolverConfig, TrajGrad, TrajectoryProblem, VertexSpec,
};

/// Hardware coupling graph: qubits and undirected couplings.
#[derive(Debug, Clone)]
pub struct LayoutGraph {
    pub n_qubits: usize,
    pub adjacency: Vec<Vec<usize>>,
}

impl LayoutGraph {
    pub fn new(n_qubits: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n_qubits];
        for &(a, b) in edges {
            if a >= n_qubits || b >= n_qubits {
                return Err(CoreError::invalid("edge endpoint out of range"));
            }
            if a == b {
                return Err(CoreError::invalid("self-loops not allowed"));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        Ok(Self { n_qubits, adjacency })
    }

    pub fn chain(n: usize) -> Self {
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::new(n, &edges).unwrap()
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(CoreError::invalid("ring needs at least 3 qubits"));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn square(rows: usize, cols: usize) -> Self {
        let idx = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((idx(r, c), idx(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((idx(r, c), idx(r + 1, c)));
                }
            }
        }
        Self::new(rows * cols, &edges).unwrap()
    }

    pub fn triangle() -> Self {
        Self::new(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    /// Heavy-hex: a brick-wall honeycomb of `rows`×`cols` hexagonal cells
    /// with an extra qubit inserted on every coupling.
    pub fn heavy_hex(rows: usize, cols: usize) -> Self {
        let width = 2 * cols + 2;
        let idx = |r: usize, c: usize| r * width + c;
        let mut edges = Vec::new();
        for r in 0..=rows {
            for c in 0..width - 1 {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
        }
        for r in 0..rows {
            for c in 0..width {
                if (r + c) % 2 == 0 {
                    edges.push((idx(r, c), idx(r + 1, c)));
                }
            }
        }
        let n = (rows + 1) * width;
        // Subdivide each edge with a flag qubit.
        let mut out_edges = Vec::with_capacity(2 * edges.len());
        let mut next = n;
        for (a, b) in edges {
            out_edges.push((a, next));
            out_edges.push((next, b));
            next += 1;
        }
        Self::new(next, &out_edges).unwrap()
    }

    /// Parse a preset name: `chain:<n>`, `ring:<n>`, `square:<n>x<m>`,
    /// `heavy-hex:<r>x<c>`, `triangle`.
    pub fn preset(name: &str) -> Result<Self> {
        let (kind, arg) = match name.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (name, None),
        };
        let parse_n = |a: Option<&str>| -> Result<usize> {
            a.and_then(|s| s.parse().ok())
                .ok_or_else(|| CoreError::invalid(format!("bad layout preset `{name}`")))
        };
        let parse_pair = |a: Option<&str>| -> Result<(usize, usize)> {
            a.and_then(|s| s.split_once('x'))
                .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)))
                .ok_or_else(|| CoreError::invalid(format!("bad layout preset `{name}`")))
        };
        match kind {
            "chain" => Ok(Self::chain(parse_n(arg)?)),
            "ring" => Self::ring(parse_n(arg)?),
            "square" => {
                let (r, c) = parse_pair(arg)?;
                Ok(Self::square(r, c))
            }
            "heavy-hex" => {
                let (r, c) = parse_pair(arg)?;
                Ok(Self::heavy_hex(r, c))
            }
            "triangle" => Ok(Self::triangle()),
            _ => Err(CoreError::invalid(format!("unknown layout preset `{name}`"))),
        }
    }
}

/// Proper vertex coloring: BFS two-coloring when the graph is bipartite,
/// otherwise greedy in descending-degree order. Deterministic.
pub fn color_layout(g: &LayoutGraph) -> Vec<usize> {
    let n = g.n_qubits;
    let mut color = vec![usize::MAX; n];
    let mut bipartite = true;
    'outer: for start in 0..n {
        if color[start] != usize::MAX {
            continue;
        }
        color[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &g.adjacency[u] {
                if color[v] == usize::MAX {
                    color[v] = 1 - color[u];
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    bipartite = false;
                    break 'outer;
                }
            }
        }
    }
    if bipartite {
        return color;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&q| (std::cmp::Reverse(g.adjacency[q].len()), q));
    let mut color = vec![usize::MAX; n];
    for q in order {
        let used: Vec<usize> = g.adjacency[q]
            .iter()
            .map(|&v| color[v])
            .filter(|&c| c != usize::MAX)
            .collect();
        let mut c = 0;
        while used.contains(&c) {
            c += 1;
        }
        color[q] = c;
    }
    color
}

/// One gate in the set.
#[derive(Debug, Clone)]
pub struct GateSpec {
    pub name: String,
    pub target: Operator,
    /// Integrated rotation angle Σ a Δt, principal value in [0, 2π).
    pub area: f64,
    /// The preserved idle: zero controls, excluded from decision variables.
    pub fixed: bool,
}

/// The gate set replicated per color.
#[derive(Debug, Clone)]
pub struct GateSetSpec {
    pub gates: Vec<GateSpec>,
    pub duration_ns: f64,
}

impl GateSetSpec {
    /// The default set {I, √X, X}; virtual Z needs no pulse.
    pub fn standard(duration_ns: f64) -> Self {
        let sqrt_x = Operator::rx(std::f64::consts::FRAC_PI_2);
        Self {
            gates: vec![
                GateSpec {
                    name: "id".into(),
                    target: Operator::identity(2),
                    area: 0.0,
                    fixed: true,
                },
                GateSpec {
                    name: "sx".into(),
                    target: sqrt_x,
                    area: std::f64::consts::FRAC_PI_2,
                    fixed: false,
                },
                GateSpec {
                    name: "x".into(),
                    target: Operator::rx(std::f64::consts::PI),
                    area: std::f64::consts::PI,
                    fixed: false,
                },
            ],
            duration_ns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let idles = self.gates.iter().filter(|g| g.fixed).count();
        if idles != 1 {
            return Err(CoreError::invalid("exactly one fixed idle gate required"));
        }
        for g in &self.gates {
            if !g.target.is_unitary() {
                return Err(CoreError::invalid(format!("gate `{}` target not unitary", g.name)));
            }
        }
        Ok(())
    }
}

/// An edge of the gate-set graph: two colored gates plus the crosstalk pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrgsEdge {
    pub a: usize,
    pub b: usize,
    pub pair: (Pauli, Pauli),
}

/// The gate-set graph: vertices are (color, gate) pairs; edges connect
/// vertices of different colors.
#[derive(Debug, Clone)]
pub struct CrgsGraph {
    pub colors: Vec<String>,
    /// (color index, gate index) per vertex.
    pub vertices: Vec<(usize, usize)>,
    pub edges: Vec<CrgsEdge>,
}

impl CrgsGraph {
    /// Full cross-color edge set over a gate set: every cross-color gate
    /// pair, including unequal gates and gate–idle pairs. Idle–idle pairs
    /// are omitted — with zero controls on both sides their susceptibility
    /// is the constant 1 and nothing in the problem can change it. With
    /// `same_gate_only`, only equal-gate pairs (plus gate–idle) get edges.
    pub fn complete(
        spec: &GateSetSpec,
        n_colors: usize,
        same_gate_only: bool,
    ) -> Result<Self> {
        spec.validate()?;
        if n_colors == 0 {
            return Err(CoreError::invalid("need at least one color"));
        }
        let colors: Vec<String> = (0..n_colors).map(|c| format!("c{c}")).collect();
        let n_gates = spec.gates.len();
        let vertices: Vec<(usize, usize)> = (0..n_colors)
            .flat_map(|c| (0..n_gates).map(move |g| (c, g)))
            .collect();
        let mut edges = Vec::new();
        for (vi, &(ci, gi)) in vertices.iter().enumerate() {
            for (vj, &(cj, gj)) in vertices.iter().enumerate().skip(vi + 1) {
                if ci == cj {
                    continue;
                }
                let fi = spec.gates[gi].fixed;
                let fj = spec.gates[gj].fixed;
                if fi && fj {
                    continue;
                }
                if same_gate_only && gi != gj && !fi && !fj {
                    continue;
                }
                edges.push(CrgsEdge {
                    a: vi,
                    b: vj,
                    pair: (Pauli::Z, Pauli::Z),
                });
            }
        }
        Ok(Self { colors, vertices, edges })
    }

    pub fn validate(&self, n_gates: usize) -> Result<()> {
        if self.vertices.len() != self.colors.len() * n_gates {
            return Err(CoreError::invalid("vertex count must be |gates|·|colors|"));
        }
        for e in &self.edges {
            if e.a >= self.vertices.len() || e.b >= self.vertices.len() {
                return Err(CoreError::invalid("edge references missing vertex"));
            }
            if self.vertices[e.a].0 == self.vertices[e.b].0 {
                return Err(CoreError::invalid("edges must connect different colors"));
            }
        }
        Ok(())
    }
}

/// Bloch rows of the control-frame-rotated Pauli: row t holds
/// v_k = ½ Tr{σ_k U_t† P U_t}.
fn bloch_rows(z: &ControlTrajectory, p: Pauli) -> Result<Vec<[f64; 3]>> {
    if z.dim != 2 {
        return Err(CoreError::invalid("pairwise susceptibility needs single-qubit trajectories"));
    }
    let pm = pauli_matrix(p);
    let sig = [
        Operator::sigma_x(),
        Operator::sigma_y(),
        Operator::sigma_z(),
    ];
    let mut rows = Vec::with_capacity(z.knots);
    for u in &z.unitaries {
        let rot = u.adjoint() * &pm * u;
        let mut v = [0.0; 3];
        for (k, s) in sig.iter().enumerate() {
            let tr: Complex64 = (s.matrix() * &rot).diagonal().sum();
            v[k] = 0.5 * tr.re;
        }
        rows.push(v);
    }
    Ok(rows)
}

fn pauli_matrix(p: Pauli) -> CMatrix {
    match p {
        Pauli::X => Operator::sigma_x().matrix().clone(),
        Pauli::Y => Operator::sigma_y().matrix().clone(),
        Pauli::Z => Operator::sigma_z().matrix().clone(),
    }
}

fn grids_match(zi: &ControlTrajectory, zj: &ControlTrajectory) -> bool {
    zi.knots == zj.knots
        && zi
            .timesteps
            .iter()
            .zip(&zj.timesteps)
            .all(|(a, b)| (a - b).abs() <= 1e-12)
}

/// Factored pairwise susceptibility R̄ of a crosstalk pair (A,B) between two
/// single-qubit trajectories: with Bloch rows v, w of the rotated Paulis,
/// R̄ = ‖Σ_t v_t w_tᵀ‖² / T².
pub fn pairwise_susceptibility(
    zi: &ControlTrajectory,
    zj: &ControlTrajectory,
    pair: (Pauli, Pauli),
) -> Result<f64> {
    if !grids_match(zi, zj) {
        return Err(CoreError::invalid("trajectories must share the knot grid"));
    }
    let v = bloch_rows(zi, pair.0)?;
    let w = bloch_rows(zj, pair.1)?;
    let t = zi.knots as f64;
    let mut m = [[0.0; 3]; 3];
    for (vt, wt) in v.iter().zip(&w) {
        for k in 0..3 {
            for l in 0..3 {
                m[k][l] += vt[k] * wt[l];
            }
        }
    }
    let frob: f64 = m.iter().flatten().map(|x| x * x).sum();
    Ok(frob / (t * t))
}

/// Time-averaged toggling-frame coupling matrix of a crosstalk pair:
/// Ā = Σ_kl M_kl σ_k⊗σ_l with M_kl = (1/T) Σ_t v_tk w_tl. The pair's
/// susceptibility is ‖M‖_F²; individual entries predict the precession
/// observed by specific probe states (e.g. the XY4 oscillation frequency).
pub fn pairwise_average_matrix(
    zi: &ControlTrajectory,
    zj: &ControlTrajectory,
    pair: (Pauli, Pauli),
) -> Result<[[f64; 3]; 3]> {
    if !grids_match(zi, zj) {
        return Err(CoreError::invalid("trajectories must share the knot grid"));
    }
    let v = bloch_rows(zi, pair.0)?;
    let w = bloch_rows(zj, pair.1)?;
    let t = zi.knots as f64;
    let mut m = [[0.0; 3]; 3];
    for (vt, wt) in v.iter().zip(&w) {
        for k in 0..3 {
            for l in 0..3 {
                m[k][l] += vt[k] * wt[l] / t;
            }
        }
    }
    Ok(m)
}

/// Pairwise susceptibility as a solver coupling term with analytic
/// trajectory-space gradients.
pub struct PairSusceptibility {
    pub i: usize,
    pub j: usize,
    pub pair: (Pauli, Pauli),
    pub weight: f64,
}

impl PairSusceptibility {
    fn core(
        &self,
        zi: &ControlTrajectory,
        zj: &ControlTrajectory,
    ) -> (f64, Vec<[f64; 3]>, Vec<[f64; 3]>, [[f64; 3]; 3]) {
        let v = bloch_rows(zi, self.pair.0).expect("single-qubit vertices");
        let w = bloch_rows(zj, self.pair.1).expect("single-qubit vertices");
        assert!(grids_match(zi, zj), "edge trajectories must share the knot grid");
        let t = zi.knots as f64;
        let mut m = [[0.0; 3]; 3];
        for (vt, wt) in v.iter().zip(&w) {
            for k in 0..3 {
                for l in 0..3 {
                    m[k][l] += vt[k] * wt[l];
                }
            }
        }
        let frob: f64 = m.iter().flatten().map(|x| x * x).sum();
        (frob / (t * t), v, w, m)
    }
}

impl CouplingTerm for PairSusceptibility {
    fn vertices(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    fn value(&self, zi: &ControlTrajectory, zj: &ControlTrajectory) -> f64 {
        self.weight * self.core(zi, zj).0
    }

    fn gradients(
        &self,
        zi: &ControlTrajectory,
        zj: &ControlTrajectory,
    ) -> (TrajGrad, TrajGrad) {
        let (_, v, w, m) = self.core(zi, zj);
        let t2 = (zi.knots as f64).powi(2);
        let scale = self.weight / t2;
        let a = pauli_matrix(self.pair.0);
        let b = pauli_matrix(self.pair.1);
        let sig = [
            Operator::sigma_x(),
            Operator::sigma_y(),
            Operator::sigma_z(),
        ];

        // dR = Σ_t 2 Re Tr{G_t† dU_t} with
        // G_t^(i) = (w/T²) A U_t Σ_k (M w_t)_k σ_k and the transpose-M
        // analogue on the j side.
        let mut gi = TrajGrad::zeros(zi);
        let mut gj = TrajGrad::zeros(zj);
        for t in 0..zi.knots {
            let mut coef_i = [0.0; 3];
            let mut coef_j = [0.0; 3];
            for k in 0..3 {
                for l in 0..3 {
                    coef_i[k] += m[k][l] * w[t][l];
                    coef_j[k] += m[l][k] * v[t][l];
                }
            }
            let mut si = CMatrix::zeros(2, 2);
            let mut sj = CMatrix::zeros(2, 2);
            for k in 0..3 {
                si += sig[k].matrix() * Complex64::new(coef_i[k], 0.0);
                sj += sig[k].matrix() * Complex64::new(coef_j[k], 0.0);
            }
            gi.unit[t] = (&a * &zi.unitaries[t] * si) * Complex64::new(scale, 0.0);
            gj.unit[t] = (&b * &zj.unitaries[t] * sj) * Complex64::new(scale, 0.0);
        }
        (gi, gj)
    }
}

/// Full-Hilbert-space cross-check of the factorization: evaluates the
/// first-order susceptibility of the summed crosstalk Hamiltonian on the
/// composite product trajectory and returns the absolute discrepancy from
/// the sum of pairwise terms.
pub fn factorization_check(
    trajectories: &[ControlTrajectory],
    edges: &[CrgsEdge],
) -> Result<f64> {
    let n = trajectories.len();
    if n > 4 {
        return Err(CoreError::FragmentTooLarge { qubits: n, max: 4 });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let knots = trajectories[0].knots;
    for z in trajectories {
        if z.knots != knots || z.dim != 2 {
            return Err(CoreError::invalid("need matched single-qubit trajectories"));
        }
    }
    let dim = 1usize << n;
    let mut h = CMatrix::zeros(dim, dim);
    for e in edges {
        if e.a >= n || e.b >= n {
            return Err(CoreError::invalid("edge references missing vertex"));
        }
        let mut term = CMatrix::identity(1, 1);
        for q in 0..n {
            let factor = if q == e.a {
                pauli_matrix(e.pair.0)
            } else if q == e.b {
                pauli_matrix(e.pair.1)
            } else {
                CMatrix::identity(2, 2)
            };
            term = term.kronecker(&factor);
        }
        h += term;
    }

    let mut avg = CMatrix::zeros(dim, dim);
    for t in 0..knots {
        let mut u = CMatrix::identity(1, 1);
        for z in trajectories {
            u = u.kronecker(&z.unitaries[t]);
        }
        avg += u.adjoint() * &h * u;
    }
    avg /= Complex64::new(knots as f64, 0.0);
    let full = (&avg * &avg).diagonal().sum().re / dim as f64;

    let mut summed = 0.0;
    for e in edges {
        summed += pairwise_susceptibility(&trajectories[e.a], &trajectories[e.b], e.pair)?;
    }
    Ok((full - summed).abs())
}

/// Assembled CRGS problem plus its initial guesses and bookkeeping.
pub struct CrgsProblem {
    pub problem: TrajectoryProblem,
    /// Initial trajectories for the decision vertices, solver order.
    pub inits: Vec<ControlTrajectory>,
    /// Vertex index → (color, gate) of the graph.
    pub vertices: Vec<(usize, usize)>,
    pub knots: usize,
    pub dt: f64,
}

/// Assembly options for [`build_crgs_problem`].
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub amplitude_bound: f64,
    /// Curvature (acceleration) bound in rad/ns³.
    pub curvature_bound: f64,
    pub knots: usize,
    /// Detuning error σZ·Δ (rad/ns) added as an on-site susceptibility term
    /// on every decision vertex; None for the pure-crosstalk problem.
    pub detuning: Option<f64>,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            amplitude_bound: 0.2,
            curvature_bound: 0.01,
            knots: 50,
            detuning: None,
            seed: 0,
        }
    }
}

/// Build the joint gate-set problem: one trajectory vertex per colored gate,
/// pairwise susceptibility on every edge, per-vertex fidelity and rotation
/// area constraints, idle vertices fixed.
pub fn build_crgs_problem(
    spec: &GateSetSpec,
    graph: &CrgsGraph,
    opts: &BuildOptions,
    f0: f64,
) -> Result<CrgsProblem> {
    spec.validate()?;
    graph.validate(spec.gates.len())?;
    if opts.amplitude_bound <= 0.0 || opts.curvature_bound <= 0.0 {
        return Err(CoreError::invalid("bounds must be positive"));
    }
    if opts.knots < 3 {
        return Err(CoreError::invalid("need at least 3 knots"));
    }
    let dt = spec.duration_ns / (opts.knots - 1) as f64;

    let mut vertices = Vec::with_capacity(graph.vertices.len());
    let mut inits = Vec::new();
    for (vi, &(_, gi)) in graph.vertices.iter().enumerate() {
        let gate = &spec.gates[gi];
        let sys = ControlSystem::single_qubit_x();
        let mut v = VertexSpec::new(sys.clone(), opts.knots, dt);
        v.bounds = Bounds {
            amplitude: Some(opts.amplitude_bound),
            velocity: None,
            acceleration: Some(opts.curvature_bound),
        };
        if gate.fixed {
            v.fixed = true;
        } else {
            v.goal = Some(gate.target.clone());
            v.fidelity_in_objective = false;
            v.area_target = Some(vec![gate.area]);
            if let Some(delta) = opts.detuning {
                let z_err = pauli_matrix(Pauli::Z) * Complex64::new(delta, 0.0);
                v.onsite_errors.push(z_err);
            }
            inits.push(crate::trajectory::initial_guess(
                &sys,
                &[gate.area],
                opts.knots,
                dt,
                opts.seed.wrapping_add(vi as u64),
            )?);
        }
        vertices.push(v);
    }

    let couplings: Vec<Box<dyn CouplingTerm>> = graph
        .edges
        .iter()
        .map(|e| {
            Box::new(PairSusceptibility {
                i: e.a,
                j: e.b,
                pair: e.pair,
                weight: 1.0,
            }) as Box<dyn CouplingTerm>
        })
        .collect();

    let _ = f0;
    Ok(CrgsProblem {
        problem: TrajectoryProblem {
            vertices,
            couplings,
            regularization: 0.01,
        },
        inits,
        vertices: graph.vertices.clone(),
        knots: opts.knots,
        dt,
    })
}

/// One solved gate set: trajectories for every vertex (fixed idles included).
pub struct CrgsSolution {
    pub trajectories: Vec<ControlTrajectory>,
    pub report: SolveReport,
    /// Σ over edges of the pairwise susceptibility at the solution.
    pub edge_susceptibility: f64,
}

/// Solve an assembled problem.
pub fn solve_crgs(
    built: &CrgsProblem,
    graph: &CrgsGraph,
    f0: f64,
    cfg: &SolverConfig,
) -> Result<CrgsSolution> {
    let mut cfg = cfg.clone();
    cfg.required_fidelity = f0;
    let (trajectories, report) = solve(&built.problem, &built.inits, &cfg)?;
    let mut edge_susceptibility = 0.0;
    for e in &graph.edges {
        edge_susceptibility +=
            pairwise_susceptibility(&trajectories[e.a], &trajectories[e.b], e.pair)?;
    }
    Ok(CrgsSolution {
        trajectories,
        report,
        edge_susceptibility,
    })
}

/// One cell of a Pareto sweep.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepCell {
    pub amplitude_bound: f64,
    pub curvature_bound: f64,
    pub susceptibility: f64,
    pub fidelities: Vec<f64>,
    pub converged: bool,
}

/// Sweep amplitude × curvature bounds, warm-starting each cell from its
/// smaller-amplitude neighbor. Non-converged cells are recorded and the
/// sweep continues.
pub fn pareto_sweep(
    spec: &GateSetSpec,
    graph: &CrgsGraph,
    amplitude_grid: &[f64],
    curvature_grid: &[f64],
    f0: f64,
    opts: &BuildOptions,
    cfg: &SolverConfig,
) -> Result<Vec<SweepCell>> {
    if amplitude_grid.is_empty() || curvature_grid.is_empty() {
        return Err(CoreError::invalid("sweep grids must be nonempty"));
    }
    let rows: Vec<Result<Vec<SweepCell>>> = curvature_grid
        .par_iter()
        .map(|&curv| {
            let mut cells = Vec::with_capacity(amplitude_grid.len());
            let mut warm: Option<Vec<ControlTrajectory>> = None;
            for &amp in amplitude_grid {
                let cell_opts = BuildOptions {
                    amplitude_bound: amp,
                    curvature_bound: curv,
                    ..opts.clone()
                };
                let mut built = build_crgs_problem(spec, graph, &cell_opts, f0)?;
                if let Some(prev) = &warm {
                    // Warm-started accelerations stay feasible: the box only
                    // grows along the sweep when grids are ascending.
                    built.inits = prev.clone();
                }
                match solve_crgs(&built, graph, f0, cfg) {
                    Ok(sol) => {
                        let decision: Vec<ControlTrajectory> = graph
                            .vertices
                            .iter()
                            .enumerate()
                            .filter(|&(_, &(_, g))| !spec.gates[g].fixed)
                            .map(|(i, _)| sol.trajectories[i].clone())
                            .collect();
                        warm = Some(decision);
                        cells.push(SweepCell {
                            amplitude_bound: amp,
                            curvature_bound: curv,
                            susceptibility: sol.edge_susceptibility,
                            fidelities: sol.report.fidelities.clone(),
                            converged: sol.report.converged,
                        });
                    }
                    Err(_) => cells.push(SweepCell {
                        amplitude_bound: amp,
                        curvature_bound: curv,
                        susceptibility: f64::NAN,
                        fidelities: Vec::new(),
                        converged: false,
                    }),
                }
            }
            Ok(cells)
        })
        .collect();
    let mut out = Vec::new();
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// Random feasible single-qubit trajectory (testing helper).
pub fn random_trajectory(knots: usize, dt: f64, seed: u64) -> ControlTrajectory {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sys = ControlSystem::single_qubit_x();
    let accel: Vec<Vec<f64>> = vec![(0..knots)
        .map(|t| {
            if t + 1 < knots {
                rng.gen_range(-1e-3..1e-3)
            } else {
                0.0
            }
        })
        .collect()];
    rollout(&sys, &accel, &[(0.0, 0.0)], &vec![dt; knots]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{apply_virtual_z_phase, check_gradient, gaussian_pulse};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn square_pulse(theta: f64, knots: usize, duration: f64) -> ControlTrajectory {
        // Constant amplitude over the whole window; last knot's amplitude is
        // irrelevant to the rollout but matches (piecewise-constant hold).
        let sys = ControlSystem::single_qubit_x();
        let dt = duration / (knots - 1) as f64;
        let a = theta / duration;
        let accel = vec![vec![0.0; knots]];
        rollout(&sys, &accel, &[(a, 0.0)], &vec![dt; knots]).unwrap()
    }

    fn proper(g: &LayoutGraph, colors: &[usize]) -> bool {
        (0..g.n_qubits).all(|q| g.adjacency[q].iter().all(|&v| colors[v] != colors[q]))
    }

    #[test]
    fn four_cycle_two_colors_alternating() {
        let g = LayoutGraph::ring(4).unwrap();
        let c = color_layout(&g);
        assert!(proper(&g, &c));
        assert_eq!(c, vec![0, 1, 0, 1]);
    }

    #[test]
    fn triangle_three_colors() {
        let g = LayoutGraph::triangle();
        let c = color_layout(&g);
        assert!(proper(&g, &c));
        let mut u: Vec<usize> = c.clone();
        u.sort();
        u.dedup();
        assert_eq!(u.len(), 3);
    }

    #[test]
    fn single_qubit_one_color() {
        let g = LayoutGraph::new(1, &[]).unwrap();
        assert_eq!(color_layout(&g), vec![0]);
    }

    #[test]
    fn square_lattice_bipartite() {
        let g = LayoutGraph::square(3, 4);
        let c = color_layout(&g);
        assert!(proper(&g, &c));
        assert!(c.iter().max().unwrap() <= &1);
    }

    #[test]
    fn heavy_hex_two_colorable() {
        let g = LayoutGraph::heavy_hex(2, 3);
        let c = color_layout(&g);
        assert!(proper(&g, &c));
        assert!(c.iter().max().unwrap() <= &1);
    }

    #[test]
    fn presets_parse() {
        assert_eq!(LayoutGraph::preset("chain:5").unwrap().n_qubits, 5);
        assert_eq!(LayoutGraph::preset("ring:6").unwrap().n_qubits, 6);
        assert_eq!(LayoutGraph::preset("square:2x3").unwrap().n_qubits, 6);
        assert_eq!(LayoutGraph::preset("triangle").unwrap().n_qubits, 3);
        assert!(LayoutGraph::preset("heavy-hex:1x1").unwrap().n_qubits > 6);
        assert!(LayoutGraph::preset("blob:4").is_err());
        assert!(LayoutGraph::preset("square:x").is_err());
    }

    #[test]
    fn both_idle_unit_susceptibility() {
        let sys = ControlSystem::single_qubit_x();
        let z = ControlTrajectory::idle(&sys, 40, 1.0);
        let r = pairwise_susceptibility(&z, &z, (Pauli::Z, Pauli::Z)).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_square_pi_pulses_half() {
        // Continuum limit of the double sum is 1/2 for matched π pulses.
        let z = square_pulse(PI, 4000, 240.0);
        let r = pairwise_susceptibility(&z, &z, (Pauli::Z, Pauli::Z)).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-3);
    }

    #[test]
    fn two_pi_offset_pair_not_orthogonal() {
        // π/2 against π/2+2π square waves: the sum-frequency term of the
        // double integral survives, giving 2/(9π²) rather than zero.
        let z1 = square_pulse(PI / 2.0, 4000, 240.0);
        let z2 = square_pulse(PI / 2.0 + 2.0 * PI, 4000, 240.0);
        let r = pairwise_susceptibility(&z1, &z2, (Pauli::Z, Pauli::Z)).unwrap();
        assert_abs_diff_eq!(r, 2.0 / (9.0 * PI * PI), epsilon = 1e-3);
    }

    #[test]
    fn symmetry_and_locality() {
        let z1 = random_trajectory(60, 4.0, 7);
        let z2 = random_trajectory(60, 4.0, 8);
        let a = pairwise_susceptibility(&z1, &z2, (Pauli::Z, Pauli::Z)).unwrap();
        let b = pairwise_susceptibility(&z2, &z1, (Pauli::Z, Pauli::Z)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let z1 = random_trajectory(60, 4.0, 1);
        let z2 = random_trajectory(50, 4.0, 2);
        assert!(pairwise_susceptibility(&z1, &z2, (Pauli::Z, Pauli::Z)).is_err());
    }

    #[test]
    fn phase_invariance_zz() {
        let z1 = random_trajectory(60, 4.0, 3);
        let z2 = random_trajectory(60, 4.0, 4);
        let base = pairwise_susceptibility(&z1, &z2, (Pauli::Z, Pauli::Z)).unwrap();
        for phi in [0.3, 1.234, -2.6, PI] {
            let r1 = apply_virtual_z_phase(&z1, phi);
            let r = pairwise_susceptibility(&r1, &z2, (Pauli::Z, Pauli::Z)).unwrap();
            assert_abs_diff_eq!(r, base, epsilon = 1e-12);
            let r2 = apply_virtual_z_phase(&z2, phi);
            let r = pairwise_susceptibility(&z1, &r2, (Pauli::Z, Pauli::Z)).unwrap();
            assert_abs_diff_eq!(r, base, epsilon = 1e-12);
        }
    }

    #[test]
    fn factorization_two_idle() {
        let sys = ControlSystem::single_qubit_x();
        let z = ControlTrajectory::idle(&sys, 30, 2.0);
        let edges = [CrgsEdge { a: 0, b: 1, pair: (Pauli::Z, Pauli::Z) }];
        let d = factorization_check(&[z.clone(), z], &edges).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn factorization_three_path() {
        let zs: Vec<_> = (0..3).map(|s| random_trajectory(40, 3.0, 10 + s)).collect();
        let edges = [
            CrgsEdge { a: 0, b: 1, pair: (Pauli::Z, Pauli::Z) },
            CrgsEdge { a: 1, b: 2, pair: (Pauli::Z, Pauli::Z) },
        ];
        assert!(factorization_check(&zs, &edges).unwrap() <= 1e-10);
    }

    #[test]
    fn factorization_four_cycle() {
        let zs: Vec<_> = (0..4).map(|s| random_trajectory(40, 3.0, 20 + s)).collect();
        let edges = [
            CrgsEdge { a: 0, b: 1, pair: (Pauli::Z, Pauli::Z) },
            CrgsEdge { a: 1, b: 2, pair: (Pauli::Z, Pauli::Z) },
            CrgsEdge { a: 2, b: 3, pair: (Pauli::Z, Pauli::Z) },
            CrgsEdge { a: 3, b: 0, pair: (Pauli::X, Pauli::Z) },
        ];
        assert!(factorization_check(&zs, &edges).unwrap() <= 1e-10);
    }

    #[test]
    fn factorization_rejects_large() {
        let zs: Vec<_> = (0..5).map(|s| random_trajectory(10, 3.0, s)).collect();
        assert!(factorization_check(&zs, &[]).is_err());
    }

    #[test]
    fn pair_term_gradient_matches_fd() {
        let z1 = gaussian_pulse(&ControlSystem::single_qubit_x(), &[PI], 30, 8.0).unwrap();
        let z2 = random_trajectory(30, 8.0, 5);
        let term = PairSusceptibility { i: 0, j: 1, pair: (Pauli::Z, Pauli::Z), weight: 1.0 };
        struct Left<'a>(&'a PairSusceptibility, &'a ControlTrajectory);
        impl crate::trajectory::ObjectiveTerm for Left<'_> {
            fn name(&self) -> &str {
                "pair-left"
            }
            fn value(&self, z: &ControlTrajectory) -> f64 {
                self.0.value(z, self.1)
            }
            fn gradient(&self, z: &ControlTrajectory) -> TrajGrad {
                self.0.gradients(z, self.1).0
            }
        }
        let rel = check_gradient(&[&Left(&term, &z2)], &z1, 8, 42);
        assert!(rel < 1e-6, "relative error {rel}");
        struct Right<'a>(&'a PairSusceptibility, &'a ControlTrajectory);
        impl crate::trajectory::ObjectiveTerm for Right<'_> {
            fn name(&self) -> &str {
                "pair-right"
            }
            fn value(&self, z: &ControlTrajectory) -> f64 {
                self.0.value(self.1, z)
            }
            fn gradient(&self, z: &ControlTrajectory) -> TrajGrad {
                self.0.gradients(self.1, z).1
            }
        }
        let rel = check_gradient(&[&Right(&term, &z1)], &z2, 8, 43);
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn standard_graph_shape() {
        let spec = GateSetSpec::standard(240.0);
        let g = CrgsGraph::complete(&spec, 2, false).unwrap();
        assert_eq!(g.vertices.len(), 6);
        // Cross-color pairs: 3×3 = 9 minus the idle–idle pair.
        assert_eq!(g.edges.len(), 8);
        let built = build_crgs_problem(&spec, &g, &BuildOptions::default(), 0.9999).unwrap();
        assert_eq!(built.inits.len(), 4);
        assert_eq!(built.problem.vertices.iter().filter(|v| !v.fixed).count(), 4);

        let same = CrgsGraph::complete(&spec, 2, true).unwrap();
        // same-gate pairs (sx-sx, x-x) plus the four gate–idle pairs.
        assert_eq!(same.edges.len(), 6);
    }

    #[test]
    fn one_color_no_edges() {
        let spec = GateSetSpec::standard(240.0);
        let g = CrgsGraph::complete(&spec, 1, false).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn problem_size_linear_in_vertices() {
        let spec = GateSetSpec::standard(240.0);
        let opts = BuildOptions::default();
        let n2 = build_crgs_problem(&spec, &CrgsGraph::complete(&spec, 2, false).unwrap(), &opts, 0.999)
            .unwrap()
            .inits
            .len();
        let n3 = build_crgs_problem(&spec, &CrgsGraph::complete(&spec, 3, false).unwrap(), &opts, 0.999)
            .unwrap()
            .inits
            .len();
        assert_eq!(n2, 4);
        assert_eq!(n3, 6);
    }

    #[test]
    fn bad_edges_rejected() {
        let spec = GateSetSpec::standard(240.0);
        let mut g = CrgsGraph::complete(&spec, 2, false).unwrap();
        g.edges.push(CrgsEdge { a: 0, b: 99, pair: (Pauli::Z, Pauli::Z) });
        assert!(build_crgs_problem(&spec, &g, &BuildOptions::default(), 0.999).is_err());
    }

    proptest::proptest! {
        #[test]
        fn coloring_always_proper(edges in proptest::collection::vec((0usize..12, 0usize..12), 0..40)) {
            let filtered: Vec<(usize, usize)> =
                edges.into_iter().filter(|(a, b)| a != b).collect();
            let g = LayoutGraph::new(12, &filtered).unwrap();
            let c = color_layout(&g);
            proptest::prop_assert!(proper(&g, &c));
        }
    }
}
