use std::f64::consts::PI;
use std::hint::black_box;

use cr_orient::analytic_oracles::{minus_pi_field, winding_family_field, winding_gauge_field};
use cr_orient::cr_operator::{numerical_kernel, Discretization, DiscretizedOperator, TolPolicy};
use cr_orient::twisted_complex::{homology, random_datum};
use cr_orient::unitary::boundary_loop;
use cr_orient::{conley_zehnder_index, integrate_symplectic_path, lifts_to_spin, SoLoop, SymmetricLoop};
use criterion::{criterion_group, criterion_main, Criterion};

fn cz(c: &mut Criterion) {
    let lp = SymmetricLoop::scalar(2, -3.0 * PI);
    c.bench_function("cz/n2_steps256", |b| {
        b.iter(|| conley_zehnder_index(&integrate_symplectic_path(black_box(&lp), 256).unwrap()).unwrap())
    });
}

fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    g.sample_size(10);
    let policy = TolPolicy::default();
    let base = minus_pi_field(1);
    let reference = DiscretizedOperator::half_cylinder(&*base, &Discretization::REFERENCE).unwrap();
    g.bench_function("minus_pi_reference", |b| b.iter(|| numerical_kernel(black_box(&reference), &policy).unwrap()));
    let family = winding_family_field(0.5).unwrap();
    let coarse = Discretization::new(6, 5.0, 64).unwrap();
    let op = DiscretizedOperator::half_cylinder(&family, &coarse).unwrap();
    g.bench_function("family_half_transport_grid", |b| b.iter(|| numerical_kernel(black_box(&op), &policy).unwrap()));
    g.finish();
}

fn spin(c: &mut Criterion) {
    let lp = SoLoop::new(boundary_loop(&*winding_gauge_field(), 256)).unwrap().pad(1);
    c.bench_function("spin_lift/so3_256", |b| b.iter(|| lifts_to_spin(black_box(&lp)).unwrap()));
}

fn snf(c: &mut Criterion) {
    let data: Vec<_> = (0..16).map(random_datum).collect();
    c.bench_function("homology/random16", |b| {
        b.iter(|| {
            for d in &data {
                black_box(homology(d, true).unwrap());
            }
        })
    });
}

criterion_group!(benches, cz, kernels, spin, snf);
criterion_main!(benches);
