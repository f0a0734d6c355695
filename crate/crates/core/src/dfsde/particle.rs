use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::fbm::{sample_fbm, FbmMethod, HurstParams};
use crate::fields::{biot_savart_mollified, convolve_free, GridField, GridSpec};
use crate::time::TimeGrid;

use super::{DiscreteSignedMeasure, FlowEnsemble};

/// How the empirical drift Σ_{j'} w_{j'} (1/M) Σ_{m'} K₂^ε(x − X^{j',m'})
/// is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interaction {
    /// Exact pairwise sum, O((JM)²) per step.
    Direct,
    /// Cloud-in-cell deposit on a mesh of spacing ε·`cells_per_eps`⁻¹,
    /// FFT convolution with K₂^ε sampled at mesh offsets, bilinear gather.
    Mesh { cells_per_eps: f64 },
    /// Direct up to `direct_max` particles, mesh with 2 cells per ε above.
    Auto { direct_max: usize },
}

impl Default for Interaction {
    fn default() -> Self {
        Self::Auto { direct_max: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleOptions {
    pub method: FbmMethod,
    pub interaction: Interaction,
}

impl Default for ParticleOptions {
    fn default() -> Self {
        Self {
            method: FbmMethod::Circulant,
            interaction: Interaction::default(),
        }
    }
}

/// Largest mesh side before the spacing is coarsened.
const MAX_MESH: usize = 1024;

/// Particle-weighted velocity u(x) = Σ_p c_p K₂^ε(x − X_p) at `targets`.
pub(crate) fn direct_velocity(targets: &[f64], sources: &[f64], charges: &[f64], eps: f64) -> Vec<f64> {
    targets
        .par_chunks_exact(2)
        .flat_map_iter(|x| {
            let mut u = [0.0; 2];
            for (p, c) in sources.chunks_exact(2).zip(charges) {
                let k = biot_savart_mollified([x[0] - p[0], x[1] - p[1]], eps);
                u[0] += c * k[0];
                u[1] += c * k[1];
            }
            u
        })
        .collect()
}

/// Mesh approximation of `direct_velocity` at the particle positions.
pub(crate) fn mesh_velocity(points: &[f64], charges: &[f64], eps: f64, cells_per_eps: f64) -> Result<Vec<f64>> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points.chunks_exact(2) {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let h = (eps / cells_per_eps).max(extent / (MAX_MESH - 3) as f64);
    let n = [
        ((hi[0] - lo[0]) / h).floor() as usize + 3,
        ((hi[1] - lo[1]) / h).floor() as usize + 3,
    ];
    let origin = [lo[0] - h, lo[1] - h];
    let spec = GridSpec::new(origin, [h, h], n, false)?;
    let mut rho = vec![0.0; spec.len()];
    let area = spec.cell_area();
    for (p, c) in points.chunks_exact(2).zip(charges) {
        let fx = (p[0] - origin[0]) / h;
        let fy = (p[1] - origin[1]) / h;
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let q = c / area;
        rho[spec.index(ix, iy)] += q * (1.0 - tx) * (1.0 - ty);
        rho[spec.index(ix + 1, iy)] += q * tx * (1.0 - ty);
        rho[spec.index(ix, iy + 1)] += q * (1.0 - tx) * ty;
        rho[spec.index(ix + 1, iy + 1)] += q * tx * ty;
    }
    let field = GridField::new(spec, 1, rho)?;
    let u = convolve_free(&field, 2, |d, out| {
        let k = biot_savart_mollified(d, eps);
        out[0] = k[0];
        out[1] = k[1];
    })?;
    Ok(points
        .par_chunks_exact(2)
        .flat_map_iter(|p| {
            let mut v = [0.0; 2];
            u.interpolate([p[0], p[1]], &mut v);
            v
        })
        .collect())
}

/// Single forward pass of the coupled vortex system
/// dX^{j,m} = Σ_{j'} w_{j'} (1/M) Σ_{m'} K₂^ε(X^{j,m} − X^{j',m'}) dt + dW^H
/// from X^{j,m}_0 = y_j, with particle (j, m) driven by fBm replica j·M + m.
pub fn forward_particle(
    nu0: &DiscreteSignedMeasure,
    hp: &HurstParams,
    grid: &TimeGrid,
    replicas: usize,
    eps: f64,
    seed: u64,
    opts: &ParticleOptions,
) -> Result<FlowEnsemble> {
    if replicas == 0 {
        return usage("at least one replica per atom is required");
    }
    if !(eps > 0.0) {
        return usage("mollification eps must be positive");
    }
    let atoms: Vec<f64> = if nu0.is_empty() {
        vec![0.0, 0.0]
    } else {
        nu0.atoms().iter().flat_map(|a| a.iter().copied()).collect()
    };
    let j = atoms.len() / 2;
    let total = j * replicas;
    let charges: Vec<f64> = if nu0.is_empty() {
        vec![0.0; total]
    } else {
        nu0.weights()
            .iter()
            .flat_map(|w| std::iter::repeat(w / replicas as f64).take(replicas))
            .collect()
    };
    let noise = sample_fbm(hp, grid, 2, total, opts.method, seed)?;
    let label = format!("forward-vortex eps={eps}");
    let mut flow = FlowEnsemble::with_start(*grid, 2, &atoms, replicas, *hp, label, seed)?;
    let use_mesh = match opts.interaction {
        Interaction::Direct => None,
        Interaction::Mesh { cells_per_eps } => Some(cells_per_eps),
        Interaction::Auto { direct_max } => (total > direct_max).then_some(2.0),
    };
    let interacting = charges.iter().any(|c| *c != 0.0);
    for n in 0..grid.steps() {
        let dt = grid.node(n + 1) - grid.node(n);
        let cur = flow.snapshot(n).to_vec();
        let drift = if !interacting {
            vec![0.0; cur.len()]
        } else if let Some(c) = use_mesh {
            mesh_velocity(&cur, &charges, eps, c)?
        } else {
            direct_velocity(&cur, &cur, &charges, eps)
        };
        if let Some(i) = drift.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("particle drift at step {n}, particle {}", i / 2),
            });
        }
        let next = flow.snapshot_mut(n + 1);
        for r in 0..total {
            let w = noise.path(r);
            for k in 0..2 {
                next[r * 2 + k] = cur[r * 2 + k] + drift[r * 2 + k] * dt + (w[(n + 1) * 2 + k] - w[n * 2 + k]);
            }
        }
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_measure_is_pure_noise() {
        let g = TimeGrid::new(0.5, 10).unwrap();
        let hp = HurstParams::new(0.4).unwrap();
        let f = forward_particle(&DiscreteSignedMeasure::empty(), &hp, &g, 8, 0.1, 3, &ParticleOptions::default()).unwrap();
        let noise = sample_fbm(&hp, &g, 2, 8, FbmMethod::Circulant, 3).unwrap();
        for m in 0..8 {
            for n in 0..=10 {
                assert_eq!(f.position(n, 0, m), &noise.path(m)[n * 2..n * 2 + 2]);
            }
        }
    }

    #[test]
    fn mesh_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 3000;
        let pts: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0) * 0.8).collect();
        let charges = vec![1.0 / n as f64; n];
        let eps = 0.05;
        let d = direct_velocity(&pts, &pts, &charges, eps);
        let m = mesh_velocity(&pts, &charges, eps, 4.0).unwrap();
        let num: f64 = d.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = d.iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() < 0.05, "{}", (num / den).sqrt());
    }

    #[test]
    fn opposite_atoms_cancel_circulation() {
        let nu = DiscreteSignedMeasure::new(vec![[-0.5, 0.0], [0.5, 0.0]], vec![0.5, -0.5]).unwrap();
        let g = TimeGrid::new(0.2, 10).unwrap();
        let f = forward_particle(&nu, &HurstParams::brownian(), &g, 50, 0.1, 1, &ParticleOptions::default()).unwrap();
        let total: f64 = nu.weights().iter().sum();
        assert_eq!(total, 0.0);
        assert_eq!(f.atom_count(), 2);
    }

    #[test]
    fn center_of_vorticity_is_conserved() {
        // antisymmetric interactions cancel in Σ_j w_j mean_m X^{j,m} when
        // weights are equal; only the noise moves the centroid
        let nu = DiscreteSignedMeasure::new(vec![[-0.3, 0.0], [0.3, 0.1]], vec![0.5, 0.5]).unwrap();
        let g = TimeGrid::new(0.5, 20).unwrap();
        let hp = HurstParams::brownian();
        let opts = ParticleOptions {
            method: FbmMethod::Circulant,
            interaction: Interaction::Direct,
        };
        let f = forward_particle(&nu, &hp, &g, 200, 0.1, 9, &opts).unwrap();
        let noise = sample_fbm(&hp, &g, 2, 400, FbmMethod::Circulant, 9).unwrap();
        let centroid = |n: usize| {
            let s = f.snapshot(n);
            let mut c = [0.0; 2];
            for r in 0..400 {
                c[0] += (s[2 * r] - noise.path(r)[2 * n]) / 400.0;
                c[1] += (s[2 * r + 1] - noise.path(r)[2 * n + 1]) / 400.0;
            }
            c
        };
        let c0 = centroid(0);
        let c1 = centroid(20);
        assert!((c0[0] - c1[0]).abs() < 1e-12 && (c0[1] - c1[1]).abs() < 1e-12);
    }
}
