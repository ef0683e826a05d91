//! The 24-element single-qubit Clifford group in Rz/√X normal form, and
//! inverse-closed random sequences for benchmarking.

use std::sync::OnceLock;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pulse::circuit::{Circuit, Gate};
use crate::quantum::{CMatrix, Operator};

type C = Complex<f64>;

/// One group element: its unitary and a native-gate decomposition holding
/// at most two physical √X pulses.
#[derive(Debug, Clone)]
pub struct Clifford {
    pub matrix: CMatrix,
    /// Virtual-Z angles around the √X pulses: the unitary reads
    /// Rz(z[0]) · (√X · Rz(z[1]) · (√X · Rz(z[2]))) with trailing entries
    /// absent for shorter forms.
    pub z_angles: Vec<f64>,
}

impl Clifford {
    pub fn sx_count(&self) -> usize {
        self.z_angles.len() - 1
    }

    /// Append this element's gates (first-to-last) on `qubit`.
    pub fn push_onto(&self, c: &mut Circuit, qubit: usize) {
        for (i, &z) in self.z_angles.iter().rev().enumerate() {
            if z != 0.0 {
                c.push(Gate::VirtualZ(qubit, z));
            }
            if i + 1 < self.z_angles.len() {
                c.push(Gate::Sx(qubit));
            }
        }
    }
}

fn phase_equal(a: &CMatrix, b: &CMatrix) -> bool {
    let mut ip = C::new(0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            ip += b[(r, c)].conj() * a[(r, c)];
        }
    }
    ip.norm() > 2.0 - 1e-9
}

/// The full group, built once: all Rz/√X words with ≤ 2 √X pulses and
/// quarter-turn Z angles, deduplicated up to global phase.
pub fn clifford_group() -> &'static [Clifford] {
    static GROUP: OnceLock<Vec<Clifford>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let quarter: Vec<f64> =
            (0..4).map(|k| k as f64 * std::f64::consts::FRAC_PI_2).collect();
        let sx = Operator::rx(std::f64::consts::FRAC_PI_2).into_matrix();
        let mut out: Vec<Clifford> = Vec::new();
        let mut push = |matrix: CMatrix, z_angles: Vec<f64>| {
            if !out.iter().any(|e| phase_equal(&e.matrix, &matrix)) {
                out.push(Clifford { matrix, z_angles });
            }
        };
        for &a in &quarter {
            push(Operator::rz(a).into_matrix(), vec![a]);
        }
        for &a in &quarter {
            for &b in &quarter {
                let m = Operator::rz(a).into_matrix() * &sx * Operator::rz(b).into_matrix();
                push(m, vec![a, b]);
            }
        }
        for &a in &quarter {
            for &b in &quarter {
                for &c in &quarter {
                    let m = Operator::rz(a).into_matrix()
                        * &sx
                        * Operator::rz(b).into_matrix()
                        * &sx
                        * Operator::rz(c).into_matrix();
                    push(m, vec![a, b, c]);
                }
            }
        }
        assert_eq!(out.len(), 24, "single-qubit Clifford group has 24 elements");
        out
    })
}

/// Index of the group element equal (up to phase) to `m`.
pub fn find_element(m: &CMatrix) -> Option<usize> {
    clifford_group().iter().position(|e| phase_equal(&e.matrix, m))
}

/// m uniform Clifford draws on one qubit followed by the group inverse of
/// their product; the whole circuit composes to the identity up to phase.
pub fn build_random_clifford(qubit: usize, m: usize, seed: u64) -> (Circuit, Vec<usize>) {
    let group = clifford_group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuit = Circuit::new(qubit + 1);
    let mut product = CMatrix::identity(2, 2);
    let mut indices = Vec::with_capacity(m + 1);
    for _ in 0..m {
        let idx = rng.gen_range(0..group.len());
        indices.push(idx);
        group[idx].push_onto(&mut circuit, qubit);
        product = &group[idx].matrix * product;
    }
    let inv_idx = find_element(&product.adjoint()).expect("group is closed under inversion");
    indices.push(inv_idx);
    group[inv_idx].push_onto(&mut circuit, qubit);
    (circuit, indices)
}
