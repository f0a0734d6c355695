use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flowsde::dfsde::{forward_particle, hungarian, Interaction, ParticleOptions};
use flowsde::fbm::{sample_fbm, FbmMethod};
use flowsde::nse::{spectral_oracle, velocity_at_points, OracleOptions};
use flowsde::{HurstParams, TimeGrid};
use flowsde_bench::{cost_matrix, normal_points, point_vortex, vortex_pair};

fn pairwise_kernel(c: &mut Criterion) {
    let nu = point_vortex();
    let grid = TimeGrid::new(0.1, 4).unwrap();
    let mut g = c.benchmark_group("pairwise_kernel");
    g.sample_size(10);
    for m in [500usize, 2000] {
        let ens = forward_particle(&nu, &HurstParams::brownian(), &grid, m, 0.05, 1, &ParticleOptions::default()).unwrap();
        let targets: Vec<[f64; 2]> = normal_points(1000, 3).chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        g.bench_with_input(BenchmarkId::new("velocity_at_1000_points", m), &m, |b, _| {
            b.iter(|| velocity_at_points(black_box(&ens), &nu, 4, &targets, 0.05).unwrap())
        });
    }
    for (name, interaction) in [("direct", Interaction::Direct), ("mesh", Interaction::Mesh { cells_per_eps: 2.0 })] {
        let opts = ParticleOptions {
            interaction,
            ..ParticleOptions::default()
        };
        g.bench_function(BenchmarkId::new("particle_step_2000", name), |b| {
            b.iter(|| forward_particle(&nu, &HurstParams::brownian(), &grid, 2000, 0.05, 1, black_box(&opts)).unwrap())
        });
    }
    g.finish();
}

fn fbm_sampling(c: &mut Criterion) {
    let hp = HurstParams::new(0.3).unwrap();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let mut g = c.benchmark_group("fbm_sampling");
    g.sample_size(10);
    for method in [FbmMethod::ExactCholesky, FbmMethod::Circulant, FbmMethod::Volterra] {
        g.bench_function(method.as_str(), |b| {
            b.iter(|| sample_fbm(&hp, &grid, 2, 200, black_box(method), 5).unwrap())
        });
    }
    g.finish();
}

fn assignment(c: &mut Criterion) {
    let mut g = c.benchmark_group("hungarian");
    g.sample_size(10);
    for n in [64usize, 256] {
        let cost = cost_matrix(n, 11);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| hungarian(black_box(&cost), n).unwrap()));
    }
    g.finish();
}

fn spectral_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_step");
    g.sample_size(10);
    for n in [64usize, 128] {
        let w0 = vortex_pair(n);
        let tg = TimeGrid::new(0.01, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| spectral_oracle(black_box(&w0), 0.01, &tg, &OracleOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, pairwise_kernel, fbm_sampling, assignment, spectral_step);
criterion_main!(benches);
