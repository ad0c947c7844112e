use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use geobook_bench::large_book;
use geobook_core::backends::{algebraize, wu_prove, WuLimits};
use geobook_core::book::{check, Policy};
use geobook_core::expand::Profile;
use geobook_core::fixtures::simson_store;
use geobook_core::geolang::{parse, SIMSON_SOURCE};
use geobook_core::pipeline::Pipeline;
use geobook_core::store::parse_query;

fn consistency(c: &mut Criterion) {
    let (book, store) = large_book(1000, 10_000, 1);
    let policy = Policy::default_policy();
    c.bench_function("check 1000 leaves 10000 relations", |b| b.iter(|| check(black_box(&book), &store, &policy)));
}

fn prover(c: &mut Criterion) {
    let pipe = Pipeline::for_store(&simson_store());
    let goals = pipe.goals(SIMSON_SOURCE, None).unwrap();
    let forms: Vec<_> = goals.iter().map(|g| algebraize(&g.statement).unwrap()).collect();
    let limits = WuLimits::default();
    c.bench_function("wu simson both directions", |b| {
        b.iter(|| {
            for f in &forms {
                wu_prove(black_box(f), &limits).unwrap();
            }
        })
    });
    c.bench_function("expand simson", |b| b.iter(|| pipe.expand(black_box(SIMSON_SOURCE), &Profile::prover_core()).unwrap()));
}

fn parsing(c: &mut Criterion) {
    c.bench_function("parse simson", |b| b.iter(|| parse(black_box(SIMSON_SOURCE)).unwrap()));
    let (_, store) = large_book(1000, 10_000, 2);
    let q = parse_query("relation[*, o7, Context]").unwrap();
    c.bench_function("relation query", |b| b.iter(|| q.execute(black_box(&store)).unwrap()));
}

criterion_group!(benches, consistency, prover, parsing);
criterion_main!(benches);
