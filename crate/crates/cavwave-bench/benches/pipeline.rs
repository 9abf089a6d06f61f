//! End-to-end pipeline benchmarks on deliberately small problems: mesh
//! generation, form assembly, system assembly and factorization, triangular
//! solves, quadratic convolutions, a full cascade run, and the periodic
//! oscillator integrator. Sizes are chosen so the whole suite finishes in a
//! few minutes while still spending its time in the same kernels as a
//! desk-scale run.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cavwave_core::cascade::{
    convolve_real, CascadeSession, Formulation, SourceSpec, WeightRule,
};
use cavwave_core::fem::{assemble_forms, assemble_helmholtz};
use cavwave_core::mesh::{generate_disk, Mesh};
use cavwave_core::params::{derive_constants, volume_kernel, SimulationParams};
use cavwave_core::periodic_ode::{floquet_periodic, OscillatorSpec};
use cavwave_core::sparse::factor;

const SOURCE: SourceSpec = SourceSpec {
    r_delta: 0.02,
    center: [0.0, 0.0],
};

fn bench_mesh(c: &mut Criterion) {
    c.bench_function("mesh/generate_disk h=0.0125", |b| {
        b.iter(|| generate_disk(0.2, 0.0125).unwrap())
    });
}

fn small_mesh() -> Mesh {
    generate_disk(0.2, 0.0125).unwrap()
}

fn bench_assembly(c: &mut Criterion) {
    let mesh = small_mesh();
    let weight = vec![1.0; mesh.n_nodes()];
    c.bench_function("fem/assemble_forms 855 nodes", |b| {
        b.iter(|| assemble_forms(&mesh, &weight).unwrap())
    });
}

fn bench_factorization(c: &mut Criterion) {
    let mesh = small_mesh();
    let params = SimulationParams::reference();
    let dc = derive_constants(&params).unwrap();
    let weight: Vec<f64> = vec![dc.mu * params.rho0 * params.n0.max(); mesh.n_nodes()];
    let forms = assemble_forms(&mesh, &weight).unwrap();
    let a = assemble_helmholtz(&forms, 1, params.omega, &params, &dc).unwrap();

    c.bench_function("sparse/factor fundamental system", |b| {
        b.iter(|| factor(&a).unwrap())
    });

    let f = factor(&a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rhs: Vec<Complex64> = (0..mesh.n_nodes())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    c.bench_function("sparse/solve fundamental system", |b| {
        b.iter(|| f.solve(&rhs).unwrap())
    });
}

fn bench_convolution(c: &mut Criterion) {
    let params = SimulationParams::reference();
    let dc = derive_constants(&params).unwrap();
    let omega = params.omega;
    let n_nodes = 855usize;
    let n_max = 6usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let stack: Vec<Vec<Complex64>> = (0..=n_max)
        .map(|_| {
            (0..n_nodes)
                .map(|_| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-18
                })
                .collect()
        })
        .collect();
    c.bench_function("cascade/convolve_real kernel m=3 N=6", |b| {
        b.iter(|| {
            convolve_real(&stack, 3, n_max, WeightRule::TwoSided, |i, j| {
                volume_kernel(i, j, omega, &dc)
            })
        })
    });
}

fn bench_cascade(c: &mut Criterion) {
    let mesh = small_mesh();
    let params = SimulationParams::reference();
    c.bench_function("cascade/complex-direct N=3 a=1e4", |b| {
        b.iter_batched(
            || CascadeSession::new(&mesh, params.clone(), SOURCE).unwrap(),
            |mut session| session.run(Formulation::ComplexDirect, 3, 1e4).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_oscillator(c: &mut Criterion) {
    let params = SimulationParams::reference();
    let dc = derive_constants(&params).unwrap();
    let period = std::f64::consts::TAU / dc.omega0;
    let spec = OscillatorSpec::linear(dc.omega0, dc.delta, period);
    c.bench_function("ode/floquet_periodic 4096 steps", |b| {
        b.iter(|| floquet_periodic(&spec, |t| (dc.omega0 * t).cos(), 4096, 256).unwrap())
    });
}

criterion_group! {
    name = pipeline;
    config = Criterion::default().sample_size(20);
    targets = bench_mesh, bench_assembly, bench_factorization, bench_convolution,
        bench_cascade, bench_oscillator
}
criterion_main!(pipeline);
