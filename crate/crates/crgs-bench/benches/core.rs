//! Microbenchmarks for the hot paths: susceptibility evaluation, matrix
//! exponentials, Lindblad integration steps, and layout coloring.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use crgs_core::crgs::{color_layout, pairwise_susceptibility, random_trajectory, LayoutGraph};
use crgs_core::pulse::{evolve_density, DensityState, NoiseRates};
use crgs_core::quantum::{matexp_skew, CMatrix, Operator, Pauli};

fn bench_susceptibility(c: &mut Criterion) {
    let zi = random_trajectory(50, 4.0, 1);
    let zj = random_trajectory(50, 4.0, 2);
    c.bench_function("pairwise_susceptibility_50_knots", |b| {
        b.iter(|| pairwise_susceptibility(black_box(&zi), black_box(&zj), (Pauli::Z, Pauli::Z)))
    });
}

fn bench_matexp(c: &mut Criterion) {
    let mut rng_seed = 0u64;
    let mut next = || {
        rng_seed = rng_seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        (rng_seed >> 33) as f64 / (1u64 << 31) as f64 - 0.5
    };
    for dim in [2usize, 4, 16] {
        let mut m = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = num_complex::Complex64::new(next(), if i == j { 0.0 } else { next() });
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        let h = Operator::new(m).unwrap();
        c.bench_function(&format!("matexp_skew_dim_{dim}"), |b| {
            b.iter(|| matexp_skew(black_box(&h), 0.37))
        });
    }
}

fn bench_lindblad_step(c: &mut Criterion) {
    for n in [1usize, 2, 4] {
        let d = 1 << n;
        let mut h = CMatrix::zeros(d, d);
        for i in 0..d {
            h[(i, i)] = num_complex::Complex64::new(0.01 * i as f64, 0.0);
        }
        let rates = NoiseRates {
            gamma1: vec![5e-6; n],
            gamma_phi: vec![3e-6; n],
        };
        c.bench_function(&format!("lindblad_evolve_10ns_{n}_qubits"), |b| {
            b.iter(|| {
                let mut rho = DensityState::ground(n);
                evolve_density(&mut rho, &|_| h.clone(), black_box(&rates), 10.0, f64::INFINITY)
                    .unwrap();
                rho
            })
        });
    }
}

fn bench_coloring(c: &mut Criterion) {
    let hex = LayoutGraph::heavy_hex(3, 3);
    c.bench_function("color_heavy_hex_3x3", |b| b.iter(|| color_layout(black_box(&hex))));
}

criterion_group!(
    benches,
    bench_susceptibility,
    bench_matexp,
    bench_lindblad_step,
    bench_coloring
);
criterion_main!(benches);
