use criterion::{black_box, criterion_group, criterion_main, Criterion};

use zfp_core::abbrev::expand_str;
use zfp_core::catalog::AxiomName;
use zfp_core::hf;
use zfp_core::logic::eliminate_iota;
use zfp_core::semantics::Evaluator;
use zfp_core::{build_w, check_axiom, AxiomId, CheckPlan, Dialect, Mode, Model, Structure};

fn hierarchy(c: &mut Criterion) {
    c.bench_function("build_w(3)", |b| b.iter(|| build_w(black_box(3)).unwrap()));
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("build_w(4)", |b| b.iter(|| build_w(black_box(4)).unwrap()));
    g.finish();
    c.bench_function("v_tier(4)", |b| {
        b.iter(|| hf::v_tier(black_box(4)).unwrap())
    });
}

fn evaluation(c: &mut Criterion) {
    let w3 = Structure::w(&build_w(3).unwrap());
    let f = expand_str(
        "forall x. forall y. Set(x) /\\ Set(y) /\\ (forall z. mem(z, x) <-> mem(z, y)) -> x = y",
        Dialect::Zfp,
    )
    .unwrap();
    c.bench_function("eval extensionality in W3", |b| {
        b.iter(|| Evaluator::new(&w3).formula(&f, &mut Vec::new()).unwrap())
    });
    c.bench_function("eval extensionality in W3 (naive)", |b| {
        b.iter(|| Evaluator::naive(&w3).formula(&f, &mut Vec::new()).unwrap())
    });
    let g = expand_str(
        "forall x. forall y. mem(Union(x), Pow(y)) -> mem(Union(x), Pow(y))",
        Dialect::Zfp,
    )
    .unwrap();
    c.bench_function("eliminate_iota", |b| {
        b.iter(|| eliminate_iota(black_box(&g)))
    });
}

fn checking(c: &mut Criterion) {
    let w3 = Model::new(Dialect::Zfp, 3).unwrap();
    for (name, mode) in [
        ("S3 generic W3", Mode::Generic),
        ("S3 witness W3", Mode::WitnessGuided),
    ] {
        let plan = CheckPlan::new(AxiomId::zfp(AxiomName::S3), None, mode);
        c.bench_function(name, |b| b.iter(|| check_axiom(&plan, &w3).unwrap()));
    }
    let w4 = Model::new(Dialect::Zfp, 4).unwrap();
    let plan = CheckPlan::new(AxiomId::zfp(AxiomName::P1), None, Mode::Generic);
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("P1 generic W4", |b| {
        b.iter(|| check_axiom(&plan, &w4).unwrap())
    });
    g.finish();
}

criterion_group!(benches, hierarchy, evaluation, checking);
criterion_main!(benches);
