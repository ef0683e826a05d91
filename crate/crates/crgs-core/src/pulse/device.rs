//! Device model: statically coupled transmon parameters and derived
//! quantities (ZZ rates, dephasing times, coherence limits).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Per-qubit parameters. Frequencies in GHz, times in µs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitParams {
    /// Static detuning error Δ (GHz) entering H as π·Δ·σZ.
    pub detuning_ghz: f64,
    pub anharmonicity_ghz: f64,
    pub t1_us: f64,
    pub t2_us: f64,
}

impl Default for QubitParams {
    fn default() -> Self {
        Self {
            detuning_ghz: 0.0,
            anharmonicity_ghz: -0.31,
            t1_us: 216.0,
            t2_us: 154.0,
        }
    }
}

/// A static coupling between two qubits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingEdge {
    pub a: usize,
    pub b: usize,
    pub j_ghz: f64,
    /// Inter-qubit frequency difference Δ_ij (GHz) used in the dispersive
    /// ZZ formula and the CR coefficients.
    pub freq_diff_ghz: f64,
    /// Direct override of the ZZ rate (GHz). When set, the dispersive
    /// estimate is ignored (but still scales as the square of the coupling
    /// scale factor).
    pub zeta_override_ghz: Option<f64>,
}

/// The simulated device. `coupling_scale` is the dimensionless co-design
/// factor k: couplings become k·J (so ZZ rates scale by k²) and ECR
/// durations shrink by 1/k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceModel {
    pub qubits: Vec<QubitParams>,
    pub edges: Vec<CouplingEdge>,
    #[serde(default = "default_scale")]
    pub coupling_scale: f64,
    /// Base duration of one CR segment (ns) at coupling scale 1.
    #[serde(default = "default_cr_duration")]
    pub cr_segment_ns: f64,
}

fn default_scale() -> f64 {
    1.0
}

fn default_cr_duration() -> f64 {
    160.0
}

/// Default per-edge ZZ rate (GHz): the 0.2 MHz baseline the dispersive
/// formula with stock parameters does not reproduce (it gives ≈ 4.4e−5 GHz);
/// see `zz_coupling` for the estimate.
pub const DEFAULT_ZETA_GHZ: f64 = 2.0e-4;

pub const DEFAULT_J_GHZ: f64 = 0.00172;
pub const DEFAULT_FREQ_DIFF_GHZ: f64 = 0.11;

impl DeviceModel {
    /// Stock transmon parameters on a given coupling list, with the ZZ rate
    /// pinned to the 0.2 MHz baseline on every edge.
    pub fn standard(n_qubits: usize, couplings: &[(usize, usize)]) -> Self {
        let edges = couplings
            .iter()
            .map(|&(a, b)| CouplingEdge {
                a,
                b,
                j_ghz: DEFAULT_J_GHZ,
                freq_diff_ghz: DEFAULT_FREQ_DIFF_GHZ,
                zeta_override_ghz: Some(DEFAULT_ZETA_GHZ),
            })
            .collect();
        Self {
            qubits: vec![QubitParams::default(); n_qubits],
            edges,
            coupling_scale: 1.0,
            cr_segment_ns: default_cr_duration(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.coupling_scale <= 0.0 {
            return Err(CoreError::invalid("coupling scale must be positive"));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if q.t1_us <= 0.0 || q.t2_us <= 0.0 {
                return Err(CoreError::invalid(format!("qubit {i}: T1, T2 must be positive")));
            }
            if q.t2_us > 2.0 * q.t1_us + 1e-12 {
                return Err(CoreError::invalid(format!(
                    "qubit {i}: T2 = {} exceeds 2·T1 = {}",
                    q.t2_us,
                    2.0 * q.t1_us
                )));
            }
        }
        for e in &self.edges {
            if e.a >= self.qubits.len() || e.b >= self.qubits.len() || e.a == e.b {
                return Err(CoreError::invalid("bad coupling edge"));
            }
        }
        Ok(())
    }

    /// Pure-dephasing time Tφ (µs) from 1/Tφ = 1/T2 − 1/(2T1).
    pub fn tphi_us(&self, q: usize) -> f64 {
        let p = &self.qubits[q];
        let rate = 1.0 / p.t2_us - 1.0 / (2.0 * p.t1_us);
        if rate <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / rate
        }
    }

    /// Effective ZZ rate of an edge (GHz), including the k² coupling-scale
    /// factor.
    pub fn zeta_ghz(&self, edge: usize) -> Result<f64> {
        let e = &self.edges[edge];
        let k2 = self.coupling_scale * self.coupling_scale;
        match e.zeta_override_ghz {
            Some(z) => Ok(z * k2),
            None => {
                let ai = self.qubits[e.a].anharmonicity_ghz;
                let aj = self.qubits[e.b].anharmonicity_ghz;
                zz_coupling(e.j_ghz * self.coupling_scale, ai, aj, e.freq_diff_ghz)
            }
        }
    }

    /// CR segment duration (ns) after coupling scaling (∝ 1/J).
    pub fn cr_duration_ns(&self) -> f64 {
        self.cr_segment_ns / self.coupling_scale
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CoreError::Serialization(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let model: Self =
            toml::from_str(s).map_err(|e| CoreError::Serialization(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Dispersive ZZ estimate ζ = −J²·2(α_i+α_j)/((α_i+Δ_ij)(α_j−Δ_ij)), all
/// arguments and the result in GHz.
pub fn zz_coupling(j: f64, alpha_i: f64, alpha_j: f64, delta_ij: f64) -> Result<f64> {
    let d1 = alpha_i + delta_ij;
    let d2 = alpha_j - delta_ij;
    if d1.abs() < 1e-12 || d2.abs() < 1e-12 {
        return Err(CoreError::StraddlingResonance(format!(
            "α_i + Δ = {d1:.3e}, α_j − Δ = {d2:.3e}"
        )));
    }
    Ok(-j * j * 2.0 * (alpha_i + alpha_j) / (d1 * d2))
}

/// Depolarizing error ε and coherence-limited decay parameter p_lim for a
/// gate of duration t_d (ns) on a qubit with the given T1, T2 (µs).
pub fn coherence_limit(t_d_ns: f64, t1_us: f64, t2_us: f64) -> (f64, f64) {
    let t = t_d_ns * 1e-3;
    let eps = (3.0 - 2.0 * (-t / t2_us).exp() - (-t / t1_us).exp()) / 6.0;
    (eps, 1.0 - 2.0 * eps)
}
