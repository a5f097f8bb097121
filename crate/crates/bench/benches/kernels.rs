use cocycle_core::cocycle::{psi_transition, CocycleSpec};
use cocycle_core::linalg::{exterior_power, rotation2};
use cocycle_core::oseledets::lyapunov_qr;
use cocycle_core::rotation::{rho_periodic, CircleCocycle};
use cocycle_core::shift::{homoclinic_point, parse_word, MarkovMeasureRecord, SftSpec};
use cocycle_core::suspension::{RoofFunction, SuspensionSystem};
use cocycle_core::Matrix;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use std::hint::black_box;

fn diag(v: &[f64]) -> Matrix {
    Matrix::from_diagonal(&DVector::from_row_slice(v))
}

fn twisted(d: usize) -> CocycleSpec {
    let a0 = diag(&(0..d).map(|i| 2f64.powi(d as i32 / 2 - i as i32)).collect::<Vec<_>>());
    let a1 = Matrix::from_fn(d, d, |i, j| if i == j { 1.2 } else { 0.3 / (1.0 + (i + 2 * j) as f64) });
    CocycleSpec::from_symbols(SftSpec::full(2, 0.5).unwrap(), &[a0, a1]).unwrap()
}

fn lyapunov(c: &mut Criterion) {
    let mu = MarkovMeasureRecord::bernoulli(&[0.5, 0.5]).unwrap();
    let mut g = c.benchmark_group("lyapunov_qr");
    g.sample_size(10);
    for d in [2, 4] {
        let a = twisted(d);
        g.bench_with_input(BenchmarkId::new("d", d), &a, |b, a| {
            b.iter(|| lyapunov_qr(a, &mu, 100_000, black_box(7)).unwrap())
        });
    }
    g.finish();
}

fn exterior(c: &mut Criterion) {
    let m = Matrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
    let mut g = c.benchmark_group("exterior_power");
    for k in [2, 3] {
        g.bench_with_input(BenchmarkId::new("d6_k", k), &k, |b, &k| b.iter(|| exterior_power(black_box(&m), k).unwrap()));
    }
    g.finish();
}

fn holonomy(c: &mut Criterion) {
    let full = SftSpec::full(2, 0.5).unwrap();
    let a = twisted(4);
    let h = homoclinic_point(&parse_word("01").unwrap(), &parse_word("11").unwrap(), &full).unwrap();
    c.bench_function("psi_transition/d4", |b| b.iter(|| psi_transition(black_box(&a), &h, 1e-12).unwrap()));
}

fn rotation(c: &mut Criterion) {
    let full = SftSpec::full(2, 0.5).unwrap();
    let spiral = |t: f64, s: f64| rotation2(t) * diag(&[s, 1.0 / s]);
    let a = CocycleSpec::from_symbols(full.clone(), &[spiral(0.9, 1.3), spiral(1.4, 0.8)]).unwrap();
    let sys = SuspensionSystem::new(RoofFunction::from_symbols(full, &[1.0, 1.7]).unwrap());
    let circle = CircleCocycle::from_cocycle(sys, &a).unwrap();
    let word = parse_word("0110100110010110").unwrap();
    c.bench_function("rho_periodic/len16", |b| b.iter(|| rho_periodic(black_box(&circle), &word).unwrap()));
}

criterion_group!(kernels, lyapunov, exterior, holonomy, rotation);
criterion_main!(kernels);
