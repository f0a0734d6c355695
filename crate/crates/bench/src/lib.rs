//! Deterministic inputs shared by the benchmarks.

use flowsde::rng::{fill_normal, substream, StreamTag};
use flowsde::{DiscreteSignedMeasure, GridField, GridSpec};

/// `n` standard normal points in the plane, flattened.
pub fn normal_points(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, StreamTag::Diagnostics, 0, 0);
    let mut out = vec![0.0; 2 * n];
    fill_normal(&mut rng, &mut out, 1.0);
    out
}

/// Euclidean cost matrix between two normal point clouds.
pub fn cost_matrix(n: usize, seed: u64) -> Vec<f64> {
    let a = normal_points(n, seed);
    let b = normal_points(n, seed + 1);
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = (a[2 * i] - b[2 * j]).hypot(a[2 * i + 1] - b[2 * j + 1]);
        }
    }
    c
}

/// Two Gaussian vortices of opposite sign on a periodic box of side 2π.
pub fn vortex_pair(n: usize) -> GridField {
    let spec = GridSpec::periodic_square(2.0 * std::f64::consts::PI, n).expect("valid grid");
    GridField::scalar_from_fn(spec, |x| {
        let g = |cx: f64, cy: f64| (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 0.2).exp();
        g(2.5, 3.14) - g(3.8, 3.14)
    })
}

pub fn point_vortex() -> DiscreteSignedMeasure {
    DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0)
}
