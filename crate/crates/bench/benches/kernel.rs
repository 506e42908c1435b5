//! Benchmarks for the expression kernel and the symmetry machinery: expansion
//! and cancellation, second prolongation with residual restriction, the full
//! determining-system derivation, classification, and one symmetry reduction.

use criterion::{criterion_group, criterion_main, Criterion};
use gtfe_core::model::{build_system, case3_triplet, SystemForm};
use gtfe_core::prolong::{derive_determining_system, invariance_residual, prolong2, VectorField};
use gtfe_core::rat::{rint, rq};
use gtfe_core::reduce::{reduced_ode, select_reduction};
use gtfe_core::symexpr::{parse, Expr};

fn bench_kernel(c: &mut Criterion) {
    let poly = parse("(u + v + x*t - 2)").unwrap();
    c.bench_function("expand_power_6", |b| {
        b.iter(|| std::hint::black_box(&poly).pow(&rint(6)).unwrap())
    });

    let a = parse("(u+1)^4 - u^4 - 4*u^3 - 6*u^2 - 4*u - 1").unwrap();
    c.bench_function("cancellation_to_zero", |b| {
        b.iter(|| {
            let e = std::hint::black_box(&a).canonicalize();
            assert!(e.is_zero());
            e
        })
    });
}

fn bench_prolongation(c: &mut Criterion) {
    let tr = case3_triplet(&rint(3), &rint(1), &rint(1), &rq(1, 2));
    let sys = build_system(&tr, SystemForm::Pair).unwrap();
    let d3 = VectorField::pair(
        parse("2*t").unwrap(),
        parse("2*x").unwrap(),
        parse("2*u").unwrap(),
        parse("-2*v").unwrap(),
    );
    c.bench_function("invariance_residual_case3", |b| {
        b.iter(|| {
            let p = prolong2(std::hint::black_box(&d3)).unwrap();
            invariance_residual(&p, &sys).unwrap()
        })
    });
}

fn bench_determine(c: &mut Criterion) {
    let mut g = c.benchmark_group("determining_system");
    g.sample_size(10);
    g.bench_function("pair_form", |b| {
        b.iter(|| derive_determining_system(SystemForm::Pair).unwrap())
    });
    g.finish();
}

fn bench_classify_reduce(c: &mut Criterion) {
    let tr = gtfe_core::model::Triplet::new(
        gtfe_core::model::CoefFn::PowerShifted {
            c: rint(1),
            shift: rint(2),
            exponent: gtfe_core::model::RatOrParam::Rat(rint(3)),
        },
        gtfe_core::model::CoefFn::PowerShifted {
            c: rint(5),
            shift: rint(2),
            exponent: gtfe_core::model::RatOrParam::Rat(rint(2)),
        },
        gtfe_core::model::CoefFn::PowerShifted {
            c: rq(1, 2),
            shift: rint(2),
            exponent: gtfe_core::model::RatOrParam::Rat(rint(2)),
        },
    )
    .unwrap();
    c.bench_function("classify_shifted_power", |b| {
        b.iter(|| gtfe_core::classify::classify(std::hint::black_box(&tr)).unwrap())
    });

    let rc = select_reduction(rint(1), rint(0), rint(1), rint(3), rint(1)).unwrap();
    let mut g = c.benchmark_group("reduction");
    g.sample_size(20);
    g.bench_function("self_similar", |b| {
        b.iter(|| reduced_ode(std::hint::black_box(&rc), &rint(1), &rint(1)).unwrap())
    });
    g.finish();

    let _: Expr = Expr::zero();
}

criterion_group!(
    benches,
    bench_kernel,
    bench_prolongation,
    bench_determine,
    bench_classify_reduce
);
criterion_main!(benches);
