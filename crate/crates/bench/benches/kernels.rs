use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morsefam::algebra::smith_normal_form;
use morsefam::family::{assemble, family_pages};
use morsefam::flowcount::{emit_descriptor, recipe, Tolerances};
use morsefam::library;
use morsefam_bench::{random_matrix, wide_torus_family};

fn smith(c: &mut Criterion) {
    let mut g = c.benchmark_group("smith_normal_form");
    for n in [8, 16, 32] {
        let m = random_matrix(n, n as u64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| smith_normal_form(black_box(m)))
        });
    }
    g.finish();
}

fn pages(c: &mut Criterion) {
    let mut g = c.benchmark_group("family_pages");
    for (name, d) in [
        ("klein", library::klein()),
        ("sphere_base_toy", library::sphere_base_toy(2)),
        ("wide_torus_4", wide_torus_family(4)),
        ("wide_torus_8", wide_torus_family(8)),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| family_pages(&assemble(black_box(&d)).expect("valid")))
        });
    }
    g.finish();
}

fn flowcount(c: &mut Criterion) {
    let mut g = c.benchmark_group("flowcount");
    g.sample_size(10);
    let tol = Tolerances::default();
    for name in ["torus", "klein"] {
        let bundle = recipe(name).expect("recipe");
        g.bench_function(name, |b| {
            b.iter(|| emit_descriptor(black_box(&bundle), &tol, 0).expect("counts"))
        });
    }
    g.finish();
}

criterion_group!(benches, smith, pages, flowcount);
criterion_main!(benches);
