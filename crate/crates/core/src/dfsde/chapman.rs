use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::fields::biot_savart_mollified;
use crate::rng::{fill_normal, substream, StreamTag};
use crate::time::TimeGrid;

use super::frozen::euler_path;
use super::tv::histogram_tv;
use super::{Binning, DiscreteSignedMeasure, FlowEnsemble};

/// Frozen drift built from a particle ensemble:
/// u(t, x) = Σ_p c_p K₂^ε(x − X_p(t_n)) with t_n the grid node nearest t.
#[derive(Debug, Clone)]
pub struct FrozenVortexDrift {
    grid: TimeGrid,
    eps: f64,
    charges: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
}

impl FrozenVortexDrift {
    pub fn from_ensemble(ens: &FlowEnsemble, nu0: &DiscreteSignedMeasure, eps: f64) -> Result<Self> {
        if ens.dim() != 2 || ens.atom_count() != nu0.len() {
            return usage("ensemble atoms must match the measure");
        }
        let m = ens.replicas();
        let charges = nu0
            .weights()
            .iter()
            .flat_map(|w| std::iter::repeat(w / m as f64).take(m))
            .collect();
        let snapshots = (0..=ens.grid().steps()).map(|n| ens.snapshot(n).to_vec()).collect();
        Ok(Self {
            grid: *ens.grid(),
            eps,
            charges,
            snapshots,
        })
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let n = self.grid.index_of(t.clamp(self.grid.start(), self.grid.horizon()));
        out[0] = 0.0;
        out[1] = 0.0;
        for (p, c) in self.snapshots[n].chunks_exact(2).zip(&self.charges) {
            let k = biot_savart_mollified([x[0] - p[0], x[1] - p[1]], self.eps);
            out[0] += c * k[0];
            out[1] += c * k[1];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChapmanOptions {
    pub replicas: usize,
    /// Euler steps on [s, t]; r is snapped to the nearest node.
    pub steps: usize,
    /// Bins per axis over mean ± 4 sd of the direct sample.
    pub bins: usize,
}

impl Default for ChapmanOptions {
    fn default() -> Self {
        Self {
            replicas: 4000,
            steps: 20,
            bins: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChapmanReport {
    /// sup over atoms of TV(direct law, two-stage law).
    pub distance: f64,
    /// Same statistic between the direct law and a resampled independent
    /// copy of it.
    pub noise_floor: f64,
}

impl ChapmanReport {
    pub fn ratio(&self) -> f64 {
        self.distance / self.noise_floor.max(f64::MIN_POSITIVE)
    }
}

type Drift<'a> = dyn Fn(f64, &[f64], &mut [f64]) + Sync + 'a;

/// Flow-property check at H = 1/2: compares X^x_{s,t} with the law obtained
/// by running to r, resampling with replacement and restarting with fresh
/// noise. Returns the sup-over-atoms histogram TV and a same-law floor.
pub fn chapman_flow_check(
    drift: &Drift<'_>,
    times: [f64; 3],
    atoms: &[[f64; 2]],
    opts: &ChapmanOptions,
    seed: u64,
) -> Result<ChapmanReport> {
    chapman_two_drifts(drift, drift, times, atoms, opts, seed)
}

/// As `chapman_flow_check` but the second stage runs under `second`; with a
/// mismatched drift the distance should clear the noise floor.
pub fn chapman_two_drifts(
    first: &Drift<'_>,
    second: &Drift<'_>,
    times: [f64; 3],
    atoms: &[[f64; 2]],
    opts: &ChapmanOptions,
    seed: u64,
) -> Result<ChapmanReport> {
    let [s, r, t] = times;
    if !(s < r && r < t) || !(s.is_finite() && t.is_finite()) {
        return usage("need s < r < t");
    }
    if atoms.is_empty() || opts.replicas < 2 || opts.steps < 2 || opts.bins == 0 {
        return usage("need atoms, at least two replicas, two steps and one bin");
    }
    let k1 = ((opts.steps as f64 * (r - s) / (t - s)).round() as usize).clamp(1, opts.steps - 1);
    let g1 = TimeGrid::on_interval(s, r, k1)?;
    let g2 = TimeGrid::on_interval(r, t, opts.steps - k1)?;
    let m = opts.replicas;
    let mut distance = 0.0f64;
    let mut floor = 0.0f64;
    for (j, y) in atoms.iter().enumerate() {
        let run = |drift_a: &Drift<'_>, drift_b: &Drift<'_>, stream: u64, from: Option<&[f64]>| {
            stage_pair(drift_a, drift_b, &g1, &g2, *y, m, seed, (j as u64) * 8 + stream, from)
        };
        let direct = run(first, first, 0, None)?;
        let mid = run_stage(first, &g1, *y, m, seed, (j as u64) * 8 + 1, None)?;
        let mid = resample(&mid, seed, (j as u64) * 8 + 2);
        let two = run_stage(second, &g2, *y, m, seed, (j as u64) * 8 + 3, Some(&mid))?;
        let control = resample(&run(first, first, 4, None)?, seed, (j as u64) * 8 + 5);
        let bin = auto_binning(&direct, opts.bins)?;
        let p = bin.histogram(&direct, 2)?;
        let (tv, _) = histogram_tv(&p, &bin.histogram(&two, 2)?)?;
        let (fl, _) = histogram_tv(&p, &bin.histogram(&control, 2)?)?;
        distance = distance.max(tv);
        floor = floor.max(fl);
    }
    Ok(ChapmanReport {
        distance,
        noise_floor: floor,
    })
}

#[allow(clippy::too_many_arguments)]
fn stage_pair(
    a: &Drift<'_>,
    b: &Drift<'_>,
    g1: &TimeGrid,
    g2: &TimeGrid,
    y: [f64; 2],
    m: usize,
    seed: u64,
    stream: u64,
    from: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let mid = run_stage(a, g1, y, m, seed, stream, from)?;
    run_stage(b, g2, y, m, seed, stream + 64 * 1024, Some(&mid))
}

/// Terminal positions `[replica][2]` of M Euler paths on `grid`, started
/// at `y` or at the given per-replica points.
fn run_stage(
    drift: &Drift<'_>,
    grid: &TimeGrid,
    y: [f64; 2],
    m: usize,
    seed: u64,
    stream: u64,
    from: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let times = grid.nodes();
    let steps = grid.steps();
    let step_drift = |_: usize, t: f64, x: &[f64], out: &mut [f64]| drift(t, x, out);
    let ends: Vec<[f64; 2]> = (0..m)
        .into_par_iter()
        .map(|q| {
            let mut rng = substream(seed, StreamTag::Chapman, stream, q as u64);
            let mut dw = vec![0.0; steps * 2];
            fill_normal(&mut rng, &mut dw, grid.dt().sqrt());
            let x0 = from.map_or(y, |f| [f[2 * q], f[2 * q + 1]]);
            let mut out = vec![0.0; (steps + 1) * 2];
            euler_path(&step_drift, &times, 0, &x0, |n, k| dw[n * 2 + k], &mut out).map_err(|(n, x)| Error::NonFinite {
                context: format!("drift at t = {}, replica {q}, x = {x:?}", times[n]),
            })?;
            Ok([out[steps * 2], out[steps * 2 + 1]])
        })
        .collect::<Result<_>>()?;
    Ok(ends.into_iter().flatten().collect())
}

fn resample(points: &[f64], seed: u64, stream: u64) -> Vec<f64> {
    let n = points.len() / 2;
    let mut rng = substream(seed, StreamTag::Resample, stream, 0);
    (0..n)
        .flat_map(|_| {
            let i = rng.gen_range(0..n);
            [points[2 * i], points[2 * i + 1]]
        })
        .collect()
}

fn auto_binning(points: &[f64], bins: usize) -> Result<Binning> {
    let n = (points.len() / 2) as f64;
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for c in 0..2 {
        let mean = points.iter().skip(c).step_by(2).sum::<f64>() / n;
        let var = points.iter().skip(c).step_by(2).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt().max(1e-12);
        lo[c] = mean - 4.0 * sd;
        hi[c] = mean + 4.0 * sd;
    }
    Binning::new(lo, hi, [bins, bins])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfsde::{forward_particle, ParticleOptions};
    use crate::fbm::HurstParams;

    fn opts() -> ChapmanOptions {
        ChapmanOptions {
            replicas: 3000,
            steps: 10,
            bins: 10,
        }
    }

    #[test]
    fn zero_drift_within_noise_floor() {
        let zero = |_: f64, _: &[f64], out: &mut [f64]| out.fill(0.0);
        let r = chapman_flow_check(&zero, [0.0, 0.3, 0.6], &[[0.0, 0.0], [1.0, -1.0]], &opts(), 4).unwrap();
        assert!(r.distance < 2.0 * r.noise_floor + 0.01, "{r:?}");
        assert!(r.noise_floor > 0.0 && r.noise_floor < 0.1);
    }

    #[test]
    fn mismatched_drift_is_detected() {
        let zero = |_: f64, _: &[f64], out: &mut [f64]| out.fill(0.0);
        let push = |_: f64, _: &[f64], out: &mut [f64]| {
            out[0] = 2.0;
            out[1] = 0.0;
        };
        let r = chapman_two_drifts(&zero, &push, [0.0, 0.3, 0.6], &[[0.0, 0.0]], &opts(), 4).unwrap();
        assert!(r.distance > 3.0 * r.noise_floor, "{r:?}");
    }

    #[test]
    fn frozen_vortex_flow_property() {
        let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
        let g = TimeGrid::new(0.2, 10).unwrap();
        let ens = forward_particle(&nu, &HurstParams::brownian(), &g, 300, 0.1, 2, &ParticleOptions::default()).unwrap();
        let frozen = FrozenVortexDrift::from_ensemble(&ens, &nu, 0.1).unwrap();
        let drift = |t: f64, x: &[f64], out: &mut [f64]| frozen.eval(t, x, out);
        let o = ChapmanOptions {
            replicas: 1500,
            ..opts()
        };
        let r = chapman_flow_check(&drift, [0.0, 0.1, 0.2], &[[0.0, 0.0]], &o, 8).unwrap();
        assert!(r.distance < 2.0 * r.noise_floor + 0.01, "{r:?}");
    }

    #[test]
    fn rejects_bad_times() {
        let zero = |_: f64, _: &[f64], out: &mut [f64]| out.fill(0.0);
        assert!(chapman_flow_check(&zero, [0.0, 0.0, 1.0], &[[0.0, 0.0]], &opts(), 1).is_err());
    }
}
