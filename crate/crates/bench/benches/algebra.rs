use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wittfield_bench::{dense_w3, fields, matrix, window};
use wittfield_core::derivations::{centralizer, h1_dimension, solve_inner, DerivationSpec, SubspaceSpec};
use wittfield_core::exactla::{kernel, rref};
use wittfield_core::witt::{bracket, l_basis, sl_basis};

fn brackets(c: &mut Criterion) {
    let fs = fields(64);
    c.bench_function("bracket/64_pairs", |b| {
        b.iter(|| {
            for pair in fs.chunks(2) {
                black_box(bracket(&pair[0], &pair[1]));
            }
        })
    });
}

fn linear_algebra(c: &mut Criterion) {
    for n in [8, 16, 32] {
        let m = matrix(n);
        c.bench_function(&format!("rref/{n}x{n}"), |b| b.iter(|| rref(black_box(&m))));
        c.bench_function(&format!("kernel/{n}x{n}"), |b| b.iter(|| kernel(black_box(&m))));
    }
}

fn centralizers(c: &mut Criterion) {
    let sl3 = sl_basis(3).unwrap();
    let ambient = SubspaceSpec::from_window(window(4, -1, 2));
    c.bench_function("centralizer/sl3_in_4_vars", |b| {
        b.iter(|| centralizer(&sl3, black_box(&ambient)).unwrap())
    });
    let l3 = l_basis(3).unwrap();
    let ambient = SubspaceSpec::from_window(window(3, -1, 3));
    c.bench_function("centralizer/L3", |b| {
        b.iter(|| centralizer(&l3, black_box(&ambient)).unwrap())
    });
}

fn cohomology(c: &mut Criterion) {
    let module = SubspaceSpec::homogeneous(4, 1).unwrap();
    c.bench_function("h1/n3_m4_k1", |b| {
        b.iter(|| h1_dimension(3, black_box(&module)).unwrap())
    });
}

fn inner_derivations(c: &mut Criterion) {
    let w = dense_w3();
    let d = DerivationSpec::inner(l_basis(3).unwrap(), &w).unwrap();
    let search = SubspaceSpec::from_window(window(3, -1, 2));
    c.bench_function("solve_inner/L3", |b| {
        b.iter(|| solve_inner(black_box(&d), &search).unwrap())
    });
}

criterion_group!(
    benches,
    brackets,
    linear_algebra,
    centralizers,
    cohomology,
    inner_derivations
);
criterion_main!(benches);
