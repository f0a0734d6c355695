use serde::{Deserialize, Serialize};

use crate::dfsde::{forward_particle, DiscreteSignedMeasure, ParticleOptions};
use crate::error::{usage, Result};
use crate::fbm::HurstParams;
use crate::fields::GridSpec;
use crate::time::TimeGrid;

use super::forward_velocity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingOptions {
    pub replicas: usize,
    pub steps: usize,
    pub eps: f64,
    pub particle: ParticleOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            replicas: 2000,
            steps: 50,
            eps: 0.05,
            particle: ParticleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub t: f64,
    /// sup |λ^{1/H−1} u(λ^{1/H} t, λx) − u_λ(t, x)| / sup |u_λ(t, ·)|.
    pub relative_sup: f64,
    pub rescaled_sup: f64,
}

/// Paired runs for the scaling u_λ(t, x) = λ^{1/H−1} u(λ^{1/H} t, λx):
/// the base run uses ν₀ and ε up to time λ^{1/H} t, the rescaled run uses
/// ν₀^λ(dy) = λ^{1/H−2} ν₀(d(λy)) and ε/λ up to time t, with the same
/// seed and step count.
pub fn scaling_check(
    hp: &HurstParams,
    nu0: &DiscreteSignedMeasure,
    lambda: f64,
    t: f64,
    grid: &GridSpec,
    opts: &ScalingOptions,
    seed: u64,
) -> Result<ScalingReport> {
    if !(lambda > 0.0 && lambda.is_finite()) || !(t > 0.0) {
        return usage("need lambda > 0 and t > 0");
    }
    let inv_h = 1.0 / hp.h();
    let base_grid = TimeGrid::new(lambda.powf(inv_h) * t, opts.steps)?;
    let small_grid = TimeGrid::new(t, opts.steps)?;
    let scaled_nu = nu0.rescaled(lambda, hp.h())?;
    let base = forward_particle(nu0, hp, &base_grid, opts.replicas, opts.eps, seed, &opts.particle)?;
    let small = forward_particle(&scaled_nu, hp, &small_grid, opts.replicas, opts.eps / lambda, seed, &opts.particle)?;
    let ub = forward_velocity(&base, nu0, opts.steps, &grid.scaled(lambda)?, opts.eps)?;
    let us = forward_velocity(&small, &scaled_nu, opts.steps, grid, opts.eps / lambda)?;
    let factor = lambda.powf(inv_h - 1.0);
    let diff = ub
        .field
        .data()
        .iter()
        .zip(us.field.data())
        .map(|(a, b)| (factor * a - b).powi(2))
        .collect::<Vec<_>>();
    let n = grid.len();
    let sup_diff = (0..n).map(|i| (diff[i] + diff[n + i]).sqrt()).fold(0.0, f64::max);
    let rescaled_sup = us.field.sup_norm();
    let relative_sup = if sup_diff == 0.0 { 0.0 } else { sup_diff / rescaled_sup };
    Ok(ScalingReport {
        lambda,
        t,
        relative_sup,
        rescaled_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ScalingOptions {
        ScalingOptions {
            replicas: 100,
            steps: 16,
            eps: 0.1,
            particle: ParticleOptions::default(),
        }
    }

    #[test]
    fn unit_lambda_is_exact() {
        let hp = HurstParams::new(0.4).unwrap();
        let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
        let grid = GridSpec::centered(1.0, 11).unwrap();
        let r = scaling_check(&hp, &nu, 1.0, 0.25, &grid, &opts(), 3).unwrap();
        assert_eq!(r.relative_sup, 0.0);
    }

    #[test]
    fn empty_measure_is_exact() {
        let hp = HurstParams::new(0.4).unwrap();
        let grid = GridSpec::centered(1.0, 11).unwrap();
        let r = scaling_check(&hp, &DiscreteSignedMeasure::empty(), 2.0, 0.25, &grid, &opts(), 3).unwrap();
        assert_eq!(r.relative_sup, 0.0);
    }

    #[test]
    fn point_vortex_scales() {
        let hp = HurstParams::new(0.4).unwrap();
        let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
        let grid = GridSpec::centered(1.0, 11).unwrap();
        let r = scaling_check(&hp, &nu, 2.0, 0.25, &grid, &opts(), 5).unwrap();
        assert!(r.relative_sup < 0.1, "{r:?}");
    }
}
