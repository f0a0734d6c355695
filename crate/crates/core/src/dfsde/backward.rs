use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fields::{biot_savart_mollified, convolve_free, GridField, GridSpec};
use crate::rng::{fill_normal, substream, StreamTag};
use crate::time::TimeGrid;

use crate::fbm::HurstParams;

use super::{truncate_by_norm, FlowEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackwardOptions {
    pub replicas: usize,
    pub eps: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Bound B for the drift: u ↦ u / max(1, ‖u‖_∞ / B).
    pub truncation: Option<f64>,
    /// Pair replica m with the negated noise of replica m + M/2.
    pub antithetic: bool,
    /// Keep the lattice-started paths under the final velocity.
    pub record_paths: bool,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            replicas: 2000,
            eps: 0.05,
            tol: 1e-10,
            max_iter: 8,
            truncation: None,
            antithetic: true,
            record_paths: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BackwardResult {
    pub grid: TimeGrid,
    /// u(t_k, ·) on the lattice for k = 0..=N from the last iterate.
    pub velocity: Vec<GridField>,
    /// v(t_k, ·) = μ^x_{t_k,T}(g) on the lattice.
    pub vorticity: Vec<GridField>,
    /// sup_k ‖u_{n+1}(t_k) − u_n(t_k)‖_∞ per iteration.
    pub sup_diffs: Vec<f64>,
    pub converged: bool,
    /// Whether the truncation rescaled any time slice of the last iterate.
    pub truncated: bool,
    /// Paths X^{x,m}_{0,t} from every lattice node when `record_paths` is set.
    pub paths: Option<FlowEnsemble>,
}

impl BackwardResult {
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.sup_diffs.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// C¹ bicubic interpolation of a scalar lattice function, nodes outside
/// the lattice read as 0.
pub(crate) fn bicubic(f: &GridField, x: [f64; 2]) -> f64 {
    let spec = f.spec();
    let [nx, ny] = spec.shape;
    let fx = (x[0] - spec.origin[0]) / spec.spacing[0];
    let fy = (x[1] - spec.origin[1]) / spec.spacing[1];
    if !(fx > -1.0 && fy > -1.0 && fx < nx as f64 && fy < ny as f64) {
        return 0.0;
    }
    let (ix, iy) = (fx.floor() as i64, fy.floor() as i64);
    let wx = catmull_rom(fx - ix as f64);
    let wy = catmull_rom(fy - iy as f64);
    let data = f.component(0);
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        let j = iy - 1 + b as i64;
        if j < 0 || j >= ny as i64 {
            continue;
        }
        for (a, wxa) in wx.iter().enumerate() {
            let i = ix - 1 + a as i64;
            if i < 0 || i >= nx as i64 {
                continue;
            }
            acc += wyb * wxa * data[j as usize * nx + i as usize];
        }
    }
    acc
}

/// Velocity on the lattice plus what is needed to evaluate it off-lattice.
struct LatticeVelocity {
    u: GridField,
    v: GridField,
    far_eps: f64,
}

impl LatticeVelocity {
    fn eval(&self, x: [f64; 2], out: &mut [f64; 2]) {
        if self.u.interpolate(x, out) {
            return;
        }
        let spec = self.v.spec();
        let area = spec.cell_area();
        out[0] = 0.0;
        out[1] = 0.0;
        for (idx, w) in self.v.component(0).iter().enumerate() {
            let y = spec.point_at(idx);
            let k = biot_savart_mollified([x[0] - y[0], x[1] - y[1]], self.far_eps);
            out[0] += area * w * k[0];
            out[1] += area * w * k[1];
        }
    }
}

/// Cell average of K₂^ε over the lattice cell centred at offset d.
fn cell_kernel(d: [f64; 2], h: [f64; 2], eps: f64, out: &mut [f64]) {
    const S: usize = 6;
    let mut acc = [0.0; 2];
    for a in 0..S {
        for b in 0..S {
            let ox = ((a as f64 + 0.5) / S as f64 - 0.5) * h[0];
            let oy = ((b as f64 + 0.5) / S as f64 - 0.5) * h[1];
            let k = biot_savart_mollified([d[0] + ox, d[1] + oy], eps);
            acc[0] += k[0];
            acc[1] += k[1];
        }
    }
    let n = (S * S) as f64;
    out[0] = acc[0] / n;
    out[1] = acc[1] / n;
}

/// u = K₂ * v on the lattice by zero-padded FFT with cell-averaged kernel.
pub fn lattice_biot_savart(v: &GridField, eps: f64) -> Result<GridField> {
    let h = v.spec().spacing;
    convolve_free(v, 2, |d, out| cell_kernel(d, h, eps, out))
}

fn truncate_field(u: GridField, bound: Option<f64>) -> (GridField, bool) {
    let Some(b) = bound else {
        return (u, false);
    };
    let sup = u.magnitude().sup_norm();
    let norm = sup / b;
    if norm <= 1.0 {
        return (u, false);
    }
    let spec = *u.spec();
    let data = truncate_by_norm(u.data(), norm);
    (GridField::new(spec, 2, data).expect("same shape"), true)
}

/// Backward Picard iteration for the vorticity representation at H = 1/2:
/// v_{n+1}(s, x) = E g(X^{s,x}_T) with dX = u_n(r, X) dr + √2 dW, and
/// u_{n+1}(s) = K₂ * v_{n+1}(s) on the lattice. Noise is common across
/// start points, start times and iterations.
pub fn backward_picard(g: &GridField, grid: &TimeGrid, opts: &BackwardOptions, seed: u64) -> Result<BackwardResult> {
    let spec: GridSpec = *g.spec();
    if g.components() != 1 || spec.periodic {
        return usage("terminal datum must be a scalar on a non-periodic lattice");
    }
    if opts.replicas == 0 || (opts.antithetic && opts.replicas % 2 != 0) {
        return usage("replica count must be positive (and even with antithetic pairs)");
    }
    if !(opts.eps > 0.0) {
        return usage("mollification eps must be positive");
    }
    if !g.is_finite() {
        return usage("terminal datum must be finite");
    }
    let steps = grid.steps();
    let times = grid.nodes();
    let base = if opts.antithetic { opts.replicas / 2 } else { opts.replicas };
    let mut noise = vec![0.0; base * steps * 2];
    for m in 0..base {
        let mut rng = substream(seed, StreamTag::Backward, m as u64, 0);
        fill_normal(&mut rng, &mut noise[m * steps * 2..(m + 1) * steps * 2], (2.0 * grid.dt()).sqrt());
    }
    let increment = |m: usize, n: usize, k: usize| {
        if m < base {
            noise[(m * steps + n) * 2 + k]
        } else {
            -noise[((m - base) * steps + n) * 2 + k]
        }
    };
    let far_eps = opts.eps.max(spec.spacing[0].max(spec.spacing[1]));
    let zero = GridField::zeros(spec, 2);
    let mut velocity: Vec<LatticeVelocity> = (0..=steps)
        .map(|_| LatticeVelocity {
            u: zero.clone(),
            v: GridField::zeros(spec, 1),
            far_eps,
        })
        .collect();
    let mut sup_diffs = Vec::new();
    let mut converged = false;
    let mut truncated = false;
    let mut vort: Vec<GridField> = Vec::new();
    for _ in 0..opts.max_iter {
        let jobs: Vec<(usize, usize)> = (0..steps).flat_map(|k| (0..spec.len()).map(move |i| (k, i))).collect();
        let values: Vec<f64> = jobs
            .par_iter()
            .map(|&(k, i)| {
                let x0 = spec.point_at(i);
                let mut acc = 0.0;
                for m in 0..opts.replicas {
                    let x = propagate(&velocity, &times, k, x0, |n, c| increment(m, n, c), |_, _| {});
                    acc += bicubic(g, x);
                }
                acc / opts.replicas as f64
            })
            .collect();
        let mut next_v: Vec<GridField> = (0..steps)
            .map(|k| GridField::new(spec, 1, values[k * spec.len()..(k + 1) * spec.len()].to_vec()))
            .collect::<Result<_>>()?;
        next_v.push(g.clone());
        let mut diff = 0.0f64;
        let mut any_trunc = false;
        let mut next = Vec::with_capacity(steps + 1);
        for (k, v) in next_v.iter().enumerate() {
            let (u, t) = truncate_field(lattice_biot_savart(v, opts.eps)?, opts.truncation);
            any_trunc |= t;
            diff = diff.max(u.sub(&velocity[k].u)?.magnitude().sup_norm());
            next.push(LatticeVelocity {
                u,
                v: v.clone(),
                far_eps,
            });
        }
        velocity = next;
        vort = next_v;
        truncated = any_trunc;
        sup_diffs.push(diff);
        if diff <= opts.tol {
            converged = true;
            break;
        }
    }
    let paths = if opts.record_paths {
        let atoms: Vec<f64> = (0..spec.len()).flat_map(|i| spec.point_at(i)).collect();
        let mut ens = FlowEnsemble::with_start(*grid, 2, &atoms, opts.replicas, HurstParams::brownian(), "backward-vortex", seed)?;
        let stride = spec.len() * opts.replicas * 2;
        let rows: Vec<Vec<[f64; 2]>> = (0..spec.len() * opts.replicas)
            .into_par_iter()
            .map(|p| {
                let (i, m) = (p / opts.replicas, p % opts.replicas);
                let mut row = Vec::with_capacity(steps);
                propagate(&velocity, &times, 0, spec.point_at(i), |n, c| increment(m, n, c), |_, x| row.push(x));
                row
            })
            .collect();
        let pos = &mut ens.positions;
        for (p, row) in rows.iter().enumerate() {
            for (n, x) in row.iter().enumerate() {
                let off = (n + 1) * stride + p * 2;
                pos[off..off + 2].copy_from_slice(x);
            }
        }
        Some(ens)
    } else {
        None
    };
    Ok(BackwardResult {
        grid: *grid,
        velocity: velocity.into_iter().map(|l| l.u).collect(),
        vorticity: vort,
        sup_diffs,
        converged,
        truncated,
        paths,
    })
}

/// Euler steps from node `from` to the end of `times`; `visit(n, x)` sees
/// the position at node n + 1.
fn propagate(
    velocity: &[LatticeVelocity],
    times: &[f64],
    from: usize,
    x0: [f64; 2],
    noise: impl Fn(usize, usize) -> f64,
    mut visit: impl FnMut(usize, [f64; 2]),
) -> [f64; 2] {
    let mut x = x0;
    let mut u = [0.0; 2];
    for n in from..times.len() - 1 {
        velocity[n].eval(x, &mut u);
        let dt = times[n + 1] - times[n];
        x[0] += u[0] * dt + noise(n, 0);
        x[1] += u[1] * dt + noise(n, 1);
        visit(n, x);
    }
    x
}
