use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sgfem_bench::{desk_system, rhs};
use sgfem_core::benchmarks::desk_beam;
use sgfem_core::krylov::{cg, HierarchicalGaussSeidel, HierarchicalPartition, LinearOperator, MeanBased, Preconditioner};
use sgfem_core::quadrature::smolyak;
use sgfem_core::{sg_newton_raphson, GpcBasis, PreconditionerKind, SgOptions};

fn operator_and_preconditioners(c: &mut Criterion) {
    let mut group = c.benchmark_group("desk_p");
    for p in [2, 4, 8] {
        let d = desk_system(0.1, p);
        let n = d.system.len();
        let x = rhs(n);
        let mut y = vec![0.0; n];
        let mb = MeanBased::new(d.factor.clone(), d.basis.len());
        let hgs = HierarchicalGaussSeidel::new(d.factor.clone(), d.system.clone(), HierarchicalPartition::new(&d.basis));
        group.bench_with_input(BenchmarkId::new("block_operator", p), &p, |b, _| b.iter(|| d.system.apply(&x, &mut y)));
        group.bench_with_input(BenchmarkId::new("mean_based", p), &p, |b, _| b.iter(|| mb.apply(&x, &mut y)));
        group.bench_with_input(BenchmarkId::new("hierarchical_gs", p), &p, |b, _| b.iter(|| hgs.apply(&x, &mut y)));
        group.bench_with_input(BenchmarkId::new("cg_mean_based", p), &p, |b, _| {
            b.iter(|| cg(d.system.as_ref(), &mb, PreconditionerKind::MeanBased, &x, 1e-8, 1000).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cg_hierarchical_gs", p), &p, |b, _| {
            b.iter(|| cg(d.system.as_ref(), &hgs, PreconditionerKind::HierarchicalGaussSeidel, &x, 1e-8, 1000).unwrap())
        });
    }
    group.finish();
}

fn galerkin_run(c: &mut Criterion) {
    let bench = desk_beam(0.1).unwrap();
    let basis = GpcBasis::new(1, 4).unwrap();
    let rule = smolyak(1, 4).unwrap();
    let options = SgOptions::default();
    let mut group = c.benchmark_group("desk_galerkin");
    group.sample_size(10);
    group.bench_function("p4_full_history", |b| {
        b.iter(|| sg_newton_raphson(&bench.model, &bench.program, &basis, &rule, &options, &bench.observables).unwrap())
    });
    group.finish();
}

criterion_group!(benches, operator_and_preconditioners, galerkin_run);
criterion_main!(benches);
