use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use cartan_bench::{dense4, so3, so3_signal, sphere_gauge};
use cartan_core::lie::expm::expm_pade;
use cartan_core::lie_equation::{solve, Method};
use cartan_core::transport::{holonomy, ChartCurve};
use cartan_core::Coords;
use nalgebra::DMatrix;

fn exponentials(c: &mut Criterion) {
    let a = dense4();
    c.bench_function("expm_pade_4x4", |b| b.iter(|| expm_pade(black_box(&a))));
    let alg = so3();
    let x = Coords::from_vec(vec![0.3, -1.2, 0.7]);
    c.bench_function("exp_so3_rodrigues", |b| b.iter(|| alg.exp(black_box(&x), 1.0)));
}

fn lie_equation(c: &mut Criterion) {
    let alg = so3();
    let signal = so3_signal();
    let g0 = DMatrix::identity(3, 3);
    let mut group = c.benchmark_group("solve_so3_1000_steps");
    for method in [Method::LieEuler, Method::Rkmk4] {
        group.bench_function(method.to_string(), |b| {
            b.iter(|| solve(&alg, &signal, &g0, 0.0, 10.0, method, 1e-2).unwrap())
        });
    }
    group.finish();
}

fn holonomies(c: &mut Criterion) {
    let gauge = sphere_gauge();
    let lp = ChartCurve::latitude(std::f64::consts::FRAC_PI_4).unwrap();
    c.bench_function("holonomy_sphere_latitude_h1e-3", |b| {
        b.iter(|| holonomy(&gauge, &lp, Method::Rkmk4, 1e-3).unwrap())
    });
}

criterion_group!(benches, exponentials, lie_equation, holonomies);
criterion_main!(benches);
