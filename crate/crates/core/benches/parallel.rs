//! Sequential versus rayon execution of the data-parallel kernels.
//! Build with `--no-default-features` to see both arms run sequentially.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sincmat::experiments::{poles_bench, seed_vector};
use sincmat::expsum::{ExpSumEvaluator, ExpSumPlan, Inner, Target};
use sincmat::fem::{assemble_p1_with, structured_mesh};
use sincmat::operator::SymOperator;
use sincmat::par::Exec;
use sincmat::polesets::Family;
use sincmat::problems::{laplacian_1d, laplacian_2d};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_poles(c: &mut Criterion) {
    let a = laplacian_1d(256).unwrap();
    let mut g = c.benchmark_group("poles_bench");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| poles_bench(&a, &[Family::E, Family::Lbar, Family::PadeSinc], 12, 42, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_p1");
    for m in [64, 256] {
        let mesh = structured_mesh(m).unwrap();
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, m), &mesh, |b, mesh| {
                b.iter(|| assemble_p1_with(exec, black_box(mesh)).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_expsum(c: &mut Criterion) {
    let a = laplacian_2d(4096).unwrap();
    let v = seed_vector(a.order(), 42);
    let op: Arc<dyn SymOperator> = Arc::new(a);
    let mut g = c.benchmark_group("expsum_apply");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let plan = ExpSumPlan::new(Target::Sinc, 12, Inner::krylov(12).unwrap()).unwrap();
        let eval = ExpSumEvaluator::new(Arc::clone(&op), plan).unwrap().with_exec(exec);
        g.bench_function(name, |b| b.iter(|| eval.apply(black_box(&v)).unwrap()));
    }
    g.finish();
}

fn bench_matvec(c: &mut Criterion) {
    let a = laplacian_2d(512 * 512).unwrap();
    let x = seed_vector(a.order(), 42);
    let mut g = c.benchmark_group("matvec");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| a.matvec_with(exec, black_box(&x)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_poles, bench_assembly, bench_expsum, bench_matvec);
criterion_main!(benches);
