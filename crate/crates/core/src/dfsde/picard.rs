use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, usage, Error, Result};
use crate::fbm::{sample_fbm, FbmMethod, HurstParams};
use crate::rng::{child_seed, fill_normal, substream, StreamTag};
use crate::time::TimeGrid;

use super::frozen::euler_path;
use super::wasserstein::{w1_empirical, W1Config};
use super::{solve_frozen, DistributionFlow, FlowEnsemble, RegularDrift};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PicardOptions {
    /// Replicas per start point in the internal flows μ^{y}_{t,T}, ν^{z}_{s,t}.
    pub flow_replicas: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            flow_replicas: 32,
            tol: 1e-10,
            max_iter: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub ensemble: FlowEnsemble,
    pub flow: DistributionFlow,
    /// d_{CP₁} between successive iterates; entry 0 compares the first
    /// iterate with δ_x.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub non_contraction: bool,
}

impl PicardResult {
    /// Geometric mean of successive trace ratios over the nonzero part.
    pub fn contraction_factor(&self) -> Option<f64> {
        let r: Vec<f64> = self
            .trace
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > 0.0)
            .map(|w| (w[1] / w[0]).ln())
            .collect();
        (!r.is_empty()).then(|| (r.iter().sum::<f64>() / r.len() as f64).exp())
    }
}

/// Frozen flow of one Picard iterate, restricted to the quadrature start
/// points the drift can see.
#[derive(Debug, Clone, PartialEq)]
struct FlowState {
    /// X^{y_k}_{t_s, T} samples `[s][k][q][2]`.
    mu: Vec<f64>,
    /// μ^{y_k}_{t_s,T}(φ₁) `[s][k]`.
    means: Vec<f64>,
    /// X^{z_i}_{t_s, t_n} samples `[s][n][i][q][2]`, zero for n < s.
    nu: Vec<f64>,
}

struct Layout {
    nodes: usize,
    lattice: usize,
    gh: usize,
    q: usize,
}

impl Layout {
    fn mu(&self, s: usize, k: usize) -> usize {
        ((s * self.lattice) + k) * self.q * 2
    }
    fn nu_block(&self, s: usize, n: usize) -> usize {
        ((s * self.nodes) + n) * self.gh * self.q * 2
    }
    fn nu_len(&self) -> usize {
        self.gh * self.q * 2
    }
}

fn delta_state(spec: &RegularDrift, lay: &Layout) -> FlowState {
    let lat = spec.lattice();
    let gh = spec.nu_nodes();
    let mut mu = vec![0.0; lay.nodes * lay.lattice * lay.q * 2];
    let mut means = vec![0.0; lay.nodes * lay.lattice];
    let mut nu = vec![0.0; lay.nodes * lay.nodes * lay.nu_len()];
    for s in 0..lay.nodes {
        for (k, y) in lat.iter().enumerate() {
            means[s * lay.lattice + k] = spec.phi1(*y);
            for q in 0..lay.q {
                let o = lay.mu(s, k) + 2 * q;
                mu[o..o + 2].copy_from_slice(y);
            }
        }
        for n in s..lay.nodes {
            for (i, (z, _)) in gh.iter().enumerate() {
                for q in 0..lay.q {
                    let o = lay.nu_block(s, n) + (i * lay.q + q) * 2;
                    nu[o..o + 2].copy_from_slice(z);
                }
            }
        }
    }
    FlowState { mu, means, nu }
}

fn step_drift<'a>(
    spec: &'a RegularDrift,
    state: &'a FlowState,
    lay: &'a Layout,
    s: usize,
) -> impl Fn(usize, f64, &[f64], &mut [f64]) + 'a {
    move |n, _t, x, out| {
        let means = &state.means[n * lay.lattice..(n + 1) * lay.lattice];
        let b = lay.nu_block(s, n);
        spec.eval([x[0], x[1]], means, &state.nu[b..b + lay.nu_len()], out);
    }
}

fn iterate(spec: &RegularDrift, old: &FlowState, lay: &Layout, times: &[f64], noise: &[f64]) -> Result<FlowState> {
    let lat = spec.lattice();
    let gh = spec.nu_nodes();
    let starts: Vec<[f64; 2]> = lat.iter().copied().chain(gh.iter().map(|(z, _)| *z)).collect();
    let last = lay.nodes - 1;
    // one job per (start time, start point, replica)
    let jobs: Vec<(usize, usize, usize)> = (0..lay.nodes)
        .flat_map(|s| (0..starts.len()).flat_map(move |p| (0..lay.q).map(move |q| (s, p, q))))
        .collect();
    let paths: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(s, p, q)| {
            let drift = step_drift(spec, old, lay, s);
            let mut out = vec![0.0; (lay.nodes - s) * 2];
            euler_path(&drift, times, s, &starts[p], |n, k| noise[(q * last + n) * 2 + k], &mut out)
                .map(|_| out)
                .map_err(|(n, x)| Error::NonFinite {
                    context: format!("regular drift at t = {}, start ({s}, {p}), x = {x:?}", times[n]),
                })
        })
        .collect::<Result<_>>()?;
    let mut next = FlowState {
        mu: vec![0.0; old.mu.len()],
        means: vec![0.0; old.means.len()],
        nu: vec![0.0; old.nu.len()],
    };
    for (&(s, p, q), path) in jobs.iter().zip(&paths) {
        let end = &path[(last - s) * 2..];
        if p < lay.lattice {
            let o = lay.mu(s, p) + 2 * q;
            next.mu[o..o + 2].copy_from_slice(end);
            next.means[s * lay.lattice + p] += spec.phi1([end[0], end[1]]) / lay.q as f64;
        } else {
            let i = p - lay.lattice;
            for n in s..lay.nodes {
                let o = lay.nu_block(s, n) + (i * lay.q + q) * 2;
                next.nu[o..o + 2].copy_from_slice(&path[(n - s) * 2..(n - s) * 2 + 2]);
            }
        }
    }
    Ok(next)
}

/// d_{CP₁} between two frozen flows over every start point and time pair.
fn state_distance(spec: &RegularDrift, a: &FlowState, b: &FlowState, lay: &Layout) -> Result<f64> {
    let cfg = W1Config::default();
    let lat = spec.lattice();
    let gh = spec.nu_nodes();
    let weight = |y: &[f64; 2]| 1.0 / (1.0 + (y[0] * y[0] + y[1] * y[1]).sqrt());
    let mut jobs: Vec<(usize, f64)> = Vec::new();
    for s in 0..lay.nodes {
        for (k, y) in lat.iter().enumerate() {
            jobs.push((lay.mu(s, k), weight(y)));
        }
    }
    let mu_jobs = jobs.len();
    for s in 0..lay.nodes {
        for n in s..lay.nodes {
            for (i, (z, _)) in gh.iter().enumerate() {
                jobs.push((lay.nu_block(s, n) + i * lay.q * 2, weight(z)));
            }
        }
    }
    let len = lay.q * 2;
    let d = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(off, w))| {
            let (x, y) = if idx < mu_jobs {
                (&a.mu[off..off + len], &b.mu[off..off + len])
            } else {
                (&a.nu[off..off + len], &b.nu[off..off + len])
            };
            w1_empirical(x, y, 2, &cfg).map(|v| v * w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Picard iteration over distribution flows for the regular drift at
/// H = 1/2: freeze the flow, solve the classical SDE family with common
/// random numbers, update, and stop once successive flows are within `tol`
/// in d_{CP₁}. The returned ensemble is `replicas` paths per atom from
/// time 0 under the last frozen flow.
pub fn picard_forward_regular(
    spec: &RegularDrift,
    hp: &HurstParams,
    grid: &TimeGrid,
    atoms: &[[f64; 2]],
    replicas: usize,
    opts: &PicardOptions,
    seed: u64,
) -> Result<PicardResult> {
    if !hp.is_brownian() {
        return domain("the regular Picard solver is implemented for H = 1/2");
    }
    if grid.start() != 0.0 {
        return usage("Picard grid must start at 0");
    }
    if atoms.is_empty() || replicas == 0 || opts.flow_replicas == 0 {
        return usage("need at least one atom and one replica");
    }
    spec.validate()?;
    let times = grid.nodes();
    let lay = Layout {
        nodes: times.len(),
        lattice: spec.lattice().len(),
        gh: 9,
        q: opts.flow_replicas,
    };
    let steps = grid.steps();
    let mut noise = vec![0.0; opts.flow_replicas * steps * 2];
    for q in 0..opts.flow_replicas {
        let mut rng = substream(seed, StreamTag::Picard, q as u64, 0);
        fill_normal(&mut rng, &mut noise[q * steps * 2..(q + 1) * steps * 2], grid.dt().sqrt());
    }
    let mut state = delta_state(spec, &lay);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut non_contraction = false;
    let mut rises = 0;
    for _ in 0..opts.max_iter {
        let next = iterate(spec, &state, &lay, &times, &noise)?;
        let d = state_distance(spec, &state, &next, &lay)?;
        if let Some(&prev) = trace.last() {
            rises = if d > prev { rises + 1 } else { 0 };
        }
        trace.push(d);
        state = next;
        if d <= opts.tol {
            converged = true;
            break;
        }
        if rises >= 3 {
            non_contraction = true;
            break;
        }
    }
    let x0: Vec<f64> = atoms.iter().flat_map(|a| a.iter().copied()).collect();
    let ens = sample_fbm(hp, grid, 2, atoms.len() * replicas, FbmMethod::ExactCholesky, child_seed(seed, 1))?;
    let frozen = step_drift(spec, &state, &lay, 0);
    let ensemble = solve_frozen(
        |t, x, out| frozen(grid.index_of(t), t, x, out),
        &x0,
        &ens,
        "regular",
    )?;
    let flow = ensemble.flow();
    Ok(PicardResult {
        ensemble,
        flow,
        trace,
        converged,
        non_contraction,
    })
}
