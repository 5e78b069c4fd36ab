use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use procgpt_core::decompose::{decompose_with, DecomposeMode};
use procgpt_core::samples::{random_classical_common_cause, random_quantum_common_cause};
use procgpt_core::{check_nonsignalling_with, Execution, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn decomposition(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trits = random_classical_common_cause(&mut rng, &[(3, 3); 3], 2).unwrap();
    let qubits = random_quantum_common_cause(&mut rng, 3).unwrap();
    let mut group = c.benchmark_group("decompose");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::new("trit-tripartite-rational", format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| decompose_with::<Rational>(&trits, DecomposeMode::MinNorm, 0.0, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("qubit-tripartite-float", format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| decompose_with(&qubits, DecomposeMode::MinNorm, 1e-9, e).unwrap())
        });
    }
    group.finish();
}

fn nonsignalling(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let trits = random_classical_common_cause(&mut rng, &[(3, 3); 3], 2).unwrap();
    let mut group = c.benchmark_group("nonsignalling");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::new("trit-tripartite", format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| check_nonsignalling_with(&trits, 0.0, e))
        });
    }
    group.finish();
}

criterion_group!(benches, decomposition, nonsignalling);
criterion_main!(benches);
