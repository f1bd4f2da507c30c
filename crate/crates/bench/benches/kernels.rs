use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dnls_core::envelope::curve;
use dnls_core::evolve::Stepper;
use dnls_core::linalg::geomspace;
use dnls_core::spectral::{assemble, solve_spectrum};
use dnls_core::{discrete_ground_state, make_grid, ModelParams};

fn kernels(c: &mut Criterion) {
    let params = ModelParams::new(-1.0, 7.0, 1.0).unwrap();
    let grid = make_grid(&params, 30.0, 3000).unwrap();
    let gs = discrete_ground_state(&params, &grid).unwrap();

    c.bench_function("discrete_ground_state N=3000", |b| b.iter(|| discrete_ground_state(&params, &grid).unwrap()));

    let stepper = Stepper::new(&grid, &params, 1e-3).unwrap();
    c.bench_function("strang_step N=3000", |b| {
        b.iter_batched_ref(|| gs.profile.clone(), |u| stepper.apply(u), BatchSize::SmallInput)
    });

    let ops = assemble(&gs);
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    g.bench_function("solve_spectrum N=3000", |b| b.iter(|| solve_spectrum(&ops, &gs).unwrap()));
    g.finish();

    let omegas: Vec<f64> = geomspace(0.05, 3.75, 200).iter().map(|x| 0.25 + x).collect();
    c.bench_function("envelope 200 points", |b| b.iter(|| curve(&params, &omegas).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
