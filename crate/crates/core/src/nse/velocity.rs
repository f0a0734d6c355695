use serde::{Deserialize, Serialize};

use crate::dfsde::{direct_velocity, DiscreteSignedMeasure, FlowEnsemble};
use crate::error::{usage, Error, Result};
use crate::fields::{divergence_fd, DivergenceReport, GridField, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocitySource {
    ForwardParticle,
    BackwardPicard,
    Oracle,
    ClosedForm,
}

/// A two-component velocity snapshot with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub field: GridField,
    pub t: f64,
    pub eps: f64,
    pub source: VelocitySource,
}

impl VelocityField {
    pub fn new(field: GridField, t: f64, eps: f64, source: VelocitySource) -> Result<Self> {
        if field.components() != 2 {
            return usage("velocity fields have two components");
        }
        if !field.is_finite() {
            return Err(Error::NonFinite {
                context: format!("velocity field at t = {t}"),
            });
        }
        Ok(Self { field, t, eps, source })
    }

    pub fn spec(&self) -> &GridSpec {
        self.field.spec()
    }

    pub fn divergence(&self) -> Result<DivergenceReport> {
        divergence_fd(&self.field)
    }
}

/// Per-particle charges w_j / M in ensemble order.
fn charges(ens: &FlowEnsemble, nu0: &DiscreteSignedMeasure) -> Result<Vec<f64>> {
    if nu0.is_empty() {
        return Ok(vec![0.0; ens.atom_count() * ens.replicas()]);
    }
    if ens.dim() != 2 || ens.atom_count() != nu0.len() {
        return usage("ensemble atoms do not match the measure");
    }
    for (j, y) in nu0.atoms().iter().enumerate() {
        if ens.atom(j) != y.as_slice() {
            return usage("ensemble atoms do not match the measure");
        }
    }
    let m = ens.replicas() as f64;
    Ok(nu0
        .weights()
        .iter()
        .flat_map(|w| std::iter::repeat(w / m).take(ens.replicas()))
        .collect())
}

/// u(x) = Σ_j w_j (1/M) Σ_m K₂^ε(x − X^{j,m}_{t_n}) at arbitrary points.
pub fn velocity_at_points(
    ens: &FlowEnsemble,
    nu0: &DiscreteSignedMeasure,
    n: usize,
    points: &[[f64; 2]],
    eps: f64,
) -> Result<Vec<[f64; 2]>> {
    if !(eps > 0.0) {
        return usage("mollification eps must be positive");
    }
    if n > ens.grid().steps() {
        return usage("time index beyond the ensemble grid");
    }
    let c = charges(ens, nu0)?;
    let targets: Vec<f64> = points.iter().flatten().copied().collect();
    let u = direct_velocity(&targets, ens.snapshot(n), &c, eps);
    Ok(u.chunks_exact(2).map(|v| [v[0], v[1]]).collect())
}

/// Reconstructed velocity of a forward particle ensemble on `grid`.
pub fn forward_velocity(
    ens: &FlowEnsemble,
    nu0: &DiscreteSignedMeasure,
    n: usize,
    grid: &GridSpec,
    eps: f64,
) -> Result<VelocityField> {
    let points: Vec<[f64; 2]> = (0..grid.len()).map(|i| grid.point_at(i)).collect();
    let u = velocity_at_points(ens, nu0, n, &points, eps)?;
    let mut data: Vec<f64> = u.iter().map(|v| v[0]).collect();
    data.extend(u.iter().map(|v| v[1]));
    VelocityField::new(
        GridField::new(*grid, 2, data)?,
        ens.grid().node(n),
        eps,
        VelocitySource::ForwardParticle,
    )
}

/// Azimuthal mean of the tangential component u·(x₂, −x₁)/r over `angles`
/// equally spaced directions at each radius.
pub fn tangential_profile(
    ens: &FlowEnsemble,
    nu0: &DiscreteSignedMeasure,
    n: usize,
    radii: &[f64],
    angles: usize,
    eps: f64,
) -> Result<Vec<f64>> {
    if angles == 0 || radii.iter().any(|r| !(*r > 0.0)) {
        return usage("need positive radii and at least one angle");
    }
    let mut points = Vec::with_capacity(radii.len() * angles);
    for &r in radii {
        for a in 0..angles {
            let th = 2.0 * std::f64::consts::PI * (a as f64 + 0.5) / angles as f64;
            points.push([r * th.cos(), r * th.sin()]);
        }
    }
    let u = velocity_at_points(ens, nu0, n, &points, eps)?;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            (0..angles)
                .map(|a| {
                    let x = points[i * angles + a];
                    let v = u[i * angles + a];
                    (v[0] * x[1] - v[1] * x[0]) / r
                })
                .sum::<f64>()
                / angles as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfsde::{forward_particle, ParticleOptions};
    use crate::fbm::HurstParams;
    use crate::fields::biot_savart_mollified;
    use crate::time::TimeGrid;

    fn run(nu: &DiscreteSignedMeasure, m: usize) -> FlowEnsemble {
        let g = TimeGrid::new(0.2, 8).unwrap();
        forward_particle(nu, &HurstParams::brownian(), &g, m, 0.1, 3, &ParticleOptions::default()).unwrap()
    }

    #[test]
    fn empty_measure_gives_zero_field() {
        let nu = DiscreteSignedMeasure::empty();
        let ens = run(&nu, 10);
        let grid = GridSpec::centered(1.0, 9).unwrap();
        let u = forward_velocity(&ens, &nu, 8, &grid, 0.1).unwrap();
        assert_eq!(u.field.sup_norm(), 0.0);
    }

    #[test]
    fn initial_field_is_the_kernel() {
        let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
        let ens = run(&nu, 25);
        let grid = GridSpec::centered(1.0, 9).unwrap();
        let u = forward_velocity(&ens, &nu, 0, &grid, 0.1).unwrap();
        for i in 0..grid.len() {
            let k = biot_savart_mollified(grid.point_at(i), 0.1);
            assert!((u.field.component(0)[i] - k[0]).abs() < 1e-12);
            assert!((u.field.component(1)[i] - k[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_atoms_have_zero_circulation() {
        // circulation over a large box equals the total signed mass
        let nu = DiscreteSignedMeasure::new(vec![[-0.3, 0.0], [0.3, 0.0]], vec![0.5, -0.5]).unwrap();
        let ens = run(&nu, 40);
        let r = 6.0;
        let k = 2000;
        let mut pts = Vec::new();
        for i in 0..k {
            let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            pts.push([r * th.cos(), r * th.sin()]);
        }
        let u = velocity_at_points(&ens, &nu, 8, &pts, 0.1).unwrap();
        // ∮ u·(x₂, −x₁)/r ds equals the enclosed circulation
        let circ: f64 = pts
            .iter()
            .zip(&u)
            .map(|(x, v)| (v[0] * x[1] - v[1] * x[0]) / r * (2.0 * std::f64::consts::PI * r / k as f64))
            .sum();
        assert!(circ.abs() < 1e-10, "{circ}");
        let single = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
        let e = run(&single, 40);
        let u = velocity_at_points(&e, &single, 8, &pts, 0.1).unwrap();
        let c1: f64 = pts
            .iter()
            .zip(&u)
            .map(|(x, v)| (v[0] * x[1] - v[1] * x[0]) / r * (2.0 * std::f64::consts::PI * r / k as f64))
            .sum();
        assert!((c1 - 1.0).abs() < 1e-6, "{c1}");
    }

    #[test]
    fn mismatched_measure_rejected() {
        let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
        let ens = run(&nu, 5);
        let other = DiscreteSignedMeasure::dirac([1.0, 0.0], 1.0);
        assert!(velocity_at_points(&ens, &other, 0, &[[0.5, 0.5]], 0.1).is_err());
    }
}
