//! Finite-shot sampling of simulator outputs and the KL-divergence
//! statistic with bootstrap error bars.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct ShotDistribution {
    pub n_qubits: usize,
    /// Counts per computational-basis index.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ShotDistribution {
    pub fn empirical(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }

    /// Probability of a given outcome index.
    pub fn frequency(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.total as f64
    }
}

/// Multinomial draw from a probability vector, deterministic per seed.
pub fn sample_shots(probabilities: &[f64], shots: u64, seed: u64) -> Result<ShotDistribution> {
    if probabilities.is_empty() || !probabilities.len().is_power_of_two() {
        return Err(CoreError::invalid("outcome space must be a power of two"));
    }
    if shots == 0 {
        return Err(CoreError::invalid("need at least one shot"));
    }
    let sum: f64 = probabilities.iter().sum();
    if probabilities.iter().any(|&p| p < -1e-12) || (sum - 1.0).abs() > 1e-9 {
        return Err(CoreError::invalid(format!("not a probability vector (sum {sum})")));
    }
    let cdf: Vec<f64> = probabilities
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p.max(0.0);
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probabilities.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen_range(0.0..sum.max(1.0));
        let idx = cdf.partition_point(|&c| c < u).min(counts.len() - 1);
        counts[idx] += 1;
    }
    Ok(ShotDistribution {
        n_qubits: probabilities.len().trailing_zeros() as usize,
        counts,
        total: shots,
    })
}

const PSEUDO_COUNT: f64 = 0.5;
const PROB_FLOOR: f64 = 1e-12;

/// KL divergence Σ p̂ log(p̂/q) of empirical counts against an ideal
/// distribution, with pseudo-count smoothing on the counts and a floor on
/// the ideal probabilities.
pub fn kl_divergence(shots: &ShotDistribution, ideal: &[f64]) -> Result<f64> {
    if ideal.len() != shots.counts.len() {
        return Err(CoreError::invalid("outcome spaces disagree"));
    }
    Ok(kl_from_counts(&shots.counts, shots.total, ideal))
}

pub fn kl_from_counts(counts: &[u64], total: u64, ideal: &[f64]) -> f64 {
    let denom = total as f64 + PSEUDO_COUNT * counts.len() as f64;
    let mut kl = 0.0;
    for (&c, &q) in counts.iter().zip(ideal) {
        let p = (c as f64 + PSEUDO_COUNT) / denom;
        kl += p * (p / q.max(PROB_FLOOR)).ln();
    }
    kl.max(0.0)
}

/// Standard deviation of the KL statistic under resampling of the counts
/// with replacement.
pub fn kl_bootstrap(
    shots: &ShotDistribution,
    ideal: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    if ideal.len() != shots.counts.len() {
        return Err(CoreError::invalid("outcome spaces disagree"));
    }
    let freq = shots.empirical();
    let cdf: Vec<f64> = freq
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut counts = vec![0u64; freq.len()];
        for _ in 0..shots.total {
            let u: f64 = rng.gen_range(0.0..1.0);
            let idx = cdf.partition_point(|&c| c < u).min(counts.len() - 1);
            counts[idx] += 1;
        }
        stats.push(kl_from_counts(&counts, shots.total, ideal));
    }
    let mean = stats.iter().sum::<f64>() / iterations as f64;
    let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / iterations as f64;
    Ok(var.sqrt())
}
