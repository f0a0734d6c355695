use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::fbm::{sample_fbm, FbmMethod, HurstParams};
use crate::time::TimeGrid;

use super::TildeOperator;

#[derive(Debug, Clone, Serialize)]
pub struct KhasminskiiReport {
    pub estimate: f64,
    pub stderr: f64,
    /// (replicas used, running mean) at 1/20, 1/2 and all of the sample.
    pub running: Vec<(usize, f64)>,
    /// Running means disagree by more than 5% relative.
    pub diverging: bool,
}

/// Empirical E exp{λ ‖K̃_H I_b‖²_{L²}} with I_b(t) = int_0^t b(s, W^H_s) ds.
///
/// At H = 1/2 the transform is the identity on derivatives.
#[allow(clippy::too_many_arguments)]
pub fn khasminskii_diagnostic(
    b: impl Fn(f64, &[f64], &mut [f64]) + Sync,
    hp: &HurstParams,
    grid: &TimeGrid,
    dim: usize,
    lambda: f64,
    replicas: usize,
    method: FbmMethod,
    seed: u64,
) -> Result<KhasminskiiReport> {
    if !(lambda > 0.0) {
        return usage("lambda must be positive");
    }
    let ens = sample_fbm(hp, grid, dim, replicas, method, seed)?;
    let op = if hp.is_brownian() {
        None
    } else {
        Some(TildeOperator::new(hp, grid)?)
    };
    let n = grid.steps();
    let dt = grid.dt();
    let samples: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = ens.path(r);
            let mut deriv = vec![0.0; n * dim];
            for k in 0..n {
                b(grid.node(k), &path[k * dim..(k + 1) * dim], &mut deriv[k * dim..(k + 1) * dim]);
            }
            let g = match &op {
                None => deriv,
                Some(op) => op.apply(&deriv, dim)[..n * dim].to_vec(),
            };
            let l2: f64 = g.iter().map(|v| v * v * dt).sum();
            (lambda * l2).exp()
        })
        .collect();
    let mean_of = |k: usize| samples[..k].iter().sum::<f64>() / k as f64;
    let checkpoints: Vec<usize> = [replicas / 20, replicas / 2, replicas]
        .into_iter()
        .filter(|&k| k > 0)
        .collect();
    let running: Vec<(usize, f64)> = checkpoints.iter().map(|&k| (k, mean_of(k))).collect();
    let estimate = mean_of(replicas);
    let stderr = if replicas > 1 {
        (samples.iter().map(|v| (v - estimate).powi(2)).sum::<f64>()
            / (replicas as f64 * (replicas as f64 - 1.0)))
            .sqrt()
    } else {
        0.0
    };
    let diverging = !estimate.is_finite()
        || running
            .iter()
            .any(|&(_, m)| (m - estimate).abs() > 0.05 * estimate.abs());
    Ok(KhasminskiiReport {
        estimate,
        stderr,
        running,
        diverging,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentEstimate {
    pub m: u32,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo E|int_0^T f(s, W^H_s) ds|^m for each requested m, using a
/// left-point Riemann sum on `grid`; all m share the same paths.
#[allow(clippy::too_many_arguments)]
pub fn occupation_moments(
    f: impl Fn(f64, &[f64]) -> f64 + Sync,
    hp: &HurstParams,
    grid: &TimeGrid,
    dim: usize,
    ms: &[u32],
    replicas: usize,
    method: FbmMethod,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    if ms.iter().any(|&m| m == 0) {
        return usage("moment orders must be >= 1");
    }
    let ens = sample_fbm(hp, grid, dim, replicas, method, seed)?;
    let n = grid.steps();
    let dt = grid.dt();
    let integrals: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = ens.path(r);
            (0..n)
                .map(|k| f(grid.node(k), &path[k * dim..(k + 1) * dim]) * dt)
                .sum::<f64>()
        })
        .collect();
    let rf = replicas as f64;
    Ok(ms
        .iter()
        .map(|&m| {
            let vals: Vec<f64> = integrals.iter().map(|v| v.abs().powi(m as i32)).collect();
            let mean = vals.iter().sum::<f64>() / rf;
            let stderr = if replicas > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rf * (rf - 1.0))).sqrt()
            } else {
                0.0
            };
            MomentEstimate {
                m,
                estimate: mean,
                stderr,
            }
        })
        .collect())
}

/// Normalized moments E[|I|^m]^{1/m} / (m^{1-α} t^α); bounded in m when the
/// growth pattern C_1^m m^{m(1-α)} t^{mα} holds.
pub fn growth_pattern(moments: &[MomentEstimate], alpha: f64, t: f64) -> Vec<(u32, f64)> {
    moments
        .iter()
        .map(|e| {
            let m = e.m as f64;
            (e.m, e.estimate.powf(1.0 / m) / (m.powf(1.0 - alpha) * t.powf(alpha)))
        })
        .collect()
}
