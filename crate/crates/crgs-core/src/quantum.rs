//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for moments of at most a few qubits (d ≤ 16),
//! so dense `nalgebra` matrices and full Hermitian eigendecompositions are
//! the right tool.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

pub type CMatrix = DMatrix<Complex64>;

const HERMITICITY_TOL: f64 = 1e-10;
const UNITARITY_TOL: f64 = 1e-10;

/// A dense complex operator on a d-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: CMatrix,
}

impl Operator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(CoreError::invalid(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(CoreError::invalid("entry count does not match dimension"));
        }
        Ok(Self {
            mat: CMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    /// Max-norm deviation from Hermiticity, ‖A − A†‖_max.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.mat - self.mat.adjoint();
        diff.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max-norm deviation from unitarity, ‖A†A − I‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.mat.adjoint() * &self.mat;
        let id = CMatrix::identity(self.dim(), self.dim());
        (prod - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITICITY_TOL
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARITY_TOL
    }

    /// Pauli matrices and common single-qubit gates.
    pub fn sigma_x() -> Self {
        Self::from_rows(2, &[c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap()
    }

    pub fn sigma_y() -> Self {
        Self::from_rows(
            2,
            &[
                c(0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                c(0.0),
            ],
        )
        .unwrap()
    }

    pub fn sigma_z() -> Self {
        Self::from_rows(2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]).unwrap()
    }

    /// exp(−i θ σX/2).
    pub fn rx(theta: f64) -> Self {
        matexp_skew(&Self::sigma_x(), theta / 2.0).unwrap()
    }

    /// exp(−i θ σZ/2), exact diagonal form.
    pub fn rz(theta: f64) -> Self {
        let e = |s: f64| Complex64::from_polar(1.0, s);
        Self::from_rows(2, &[e(-theta / 2.0), c(0.0), c(0.0), e(theta / 2.0)]).unwrap()
    }

    /// Tensor product `self ⊗ other` (self on the most significant qubit).
    pub fn kron(&self, other: &Operator) -> Operator {
        Operator {
            mat: self.mat.kronecker(&other.mat),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn operator(self) -> Operator {
        match self {
            Pauli::X => Operator::sigma_x(),
            Pauli::Y => Operator::sigma_y(),
            Pauli::Z => Operator::sigma_z(),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pauli::X => write!(f, "X"),
            Pauli::Y => write!(f, "Y"),
            Pauli::Z => write!(f, "Z"),
        }
    }
}

/// A weighted Pauli word on `n_qubits` qubits. Absent indices act as identity.
/// The coefficient is an angular frequency in rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub n_qubits: usize,
    pub factors: BTreeMap<usize, Pauli>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(n_qubits: usize, factors: &[(usize, Pauli)], coefficient: f64) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(q, p) in factors {
            if q >= n_qubits {
                return Err(CoreError::invalid(format!(
                    "qubit index {q} out of range for {n_qubits} qubits"
                )));
            }
            map.insert(q, p);
        }
        Ok(Self {
            n_qubits,
            factors: map,
            coefficient,
        })
    }
}

/// Materialize a Pauli string as a dense 2^n × 2^n operator: the tensor
/// product with identities on absent sites, scaled by the coefficient.
/// Qubit 0 occupies the most significant position in the bitstring ordering.
pub fn embed(p: &PauliString) -> Operator {
    let mut out = CMatrix::from_element(1, 1, Complex64::new(p.coefficient, 0.0));
    for q in 0..p.n_qubits {
        let factor = match p.factors.get(&q) {
            Some(pauli) => pauli.operator().into_matrix(),
            None => CMatrix::identity(2, 2),
        };
        out = out.kronecker(&factor);
    }
    Operator { mat: out }
}

/// Hermitian eigendecomposition: eigenvalues and the unitary of eigenvectors.
pub fn eigh(h: &Operator) -> Result<(DVector<f64>, CMatrix)> {
    let defect = h.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(CoreError::NotHermitian(defect));
    }
    let eig = h.mat.clone().symmetric_eigen();
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// exp(−i·s·H) for Hermitian H, via eigendecomposition.
pub fn matexp_skew(h: &Operator, s: f64) -> Result<Operator> {
    let (vals, vecs) = eigh(h)?;
    let phases = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::from_polar(1.0, -s * l)),
    );
    let mut out = CMatrix::zeros(h.dim(), h.dim());
    // V diag(e^{-i s λ}) V†
    for k in 0..vals.len() {
        let col = vecs.column(k);
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                out[(i, j)] += col[i] * phases[k] * col[j].conj();
            }
        }
    }
    Ok(Operator { mat: out })
}

/// exp(−i·s·H) together with its directional derivatives along the Hermitian
/// `directions`, i.e. d/dε exp(−i·s·(H + ε D)) at ε = 0.
///
/// Uses the Daleckii–Krein formula in the eigenbasis of H: the derivative is
/// V (W ∘ Γ) V† with W = V†DV and Γ_kl the divided difference of
/// λ ↦ exp(−i·s·λ).
pub fn matexp_skew_with_deriv(
    h: &Operator,
    s: f64,
    directions: &[&CMatrix],
) -> Result<(Operator, Vec<CMatrix>)> {
    let (vals, vecs) = eigh(h)?;
    let d = h.dim();
    let f = |l: f64| Complex64::from_polar(1.0, -s * l);
    let mut gamma = CMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let dl = vals[k] - vals[l];
            gamma[(k, l)] = if dl.abs() < 1e-12 {
                // f'(λ) = -i s e^{-i s λ}
                Complex64::new(0.0, -s) * f(vals[k])
            } else {
                (f(vals[k]) - f(vals[l])) / Complex64::new(dl, 0.0)
            };
        }
    }
    let mut exp_diag = CMatrix::zeros(d, d);
    for k in 0..d {
        exp_diag[(k, k)] = f(vals[k]);
    }
    let e = &vecs * exp_diag * vecs.adjoint();
    let mut derivs = Vec::with_capacity(directions.len());
    for dir in directions {
        let w = vecs.adjoint() * *dir * &vecs;
        let hadamard = w.zip_map(&gamma, |a, b| a * b);
        derivs.push(&vecs * hadamard * vecs.adjoint());
    }
    Ok((Operator { mat: e }, derivs))
}

/// |Tr(U†G)| / d, the global-phase-invariant gate fidelity.
pub fn gate_fidelity(u: &Operator, g: &Operator) -> Result<f64> {
    if u.dim() != g.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: u.dim(),
            got: g.dim(),
        });
    }
    let tr: Complex64 = (u.mat.adjoint() * &g.mat).trace();
    Ok(tr.norm() / u.dim() as f64)
}

/// Isometric real encoding of a complex matrix: all real parts (row-major),
/// then all imaginary parts.
pub fn vectorize(u: &Operator) -> Vec<f64> {
    let d = u.dim();
    let mut out = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(u.mat[(i, j)].re);
        }
    }
    for i in 0..d {
        for j in 0..d {
            out.push(u.mat[(i, j)].im);
        }
    }
    out
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &[f64]) -> Result<Operator> {
    let n = v.len();
    if n % 2 != 0 {
        return Err(CoreError::invalid("vector length must be even"));
    }
    let dd = n / 2;
    let d = (dd as f64).sqrt().round() as usize;
    if d * d != dd {
        return Err(CoreError::invalid(format!(
            "vector length {n} is not 2·d² for integer d"
        )));
    }
    let mut mat = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            mat[(i, j)] = Complex64::new(v[i * d + j], v[dd + i * d + j]);
        }
    }
    Ok(Operator { mat })
}

/// Draw a Haar-ish random unitary by orthonormalizing a random complex matrix.
pub fn random_unitary(dim: usize, rng: &mut impl rand::Rng) -> Operator {
    use rand::distributions::Distribution;
    let normal = rand_distr_standard_normal();
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = Complex64::new(normal.sample(rng), normal.sample(rng));
        }
    }
    // Gram-Schmidt
    for j in 0..dim {
        for k in 0..j {
            let proj: Complex64 = (0..dim).map(|i| m[(i, k)].conj() * m[(i, j)]).sum();
            for i in 0..dim {
                let sub = proj * m[(i, k)];
                m[(i, j)] -= sub;
            }
        }
        let norm: f64 = (0..dim).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            m[(i, j)] /= norm;
        }
    }
    Operator { mat: m }
}

// rand 0.8 re-exports StandardNormal via rand_distr; avoid the extra dep with
// a Box-Muller sampler.
struct BoxMuller;

impl rand::distributions::Distribution<f64> for BoxMuller {
    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn rand_distr_standard_normal() -> impl rand::distributions::Distribution<f64> {
    BoxMuller
}
