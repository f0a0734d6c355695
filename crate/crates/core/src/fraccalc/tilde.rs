use rayon::prelude::*;

use crate::error::{domain, usage, Result};
use crate::fbm::{HurstParams, VolterraKernel};
use crate::quad::{beta_fn, GaussRule, IncompleteBeta};
use crate::time::TimeGrid;

use super::AbsContPath;

const CALIBRATION_NODES: usize = 64;

fn require_fractional(hp: &HurstParams) -> Result<()> {
    if hp.is_brownian() {
        return domain(
            "K̃_H is not integrable at H = 1/2; the Girsanov weight then uses the classical \
             identity-on-derivatives form",
        );
    }
    Ok(())
}

/// C(H) = int_s^t K_H(t,r) K̃_H(r,s) dr at a given placement 0 < s < t.
///
/// With r = s + (t-s)u the first part of K_H integrates in closed form to
/// c_H (s/t)^{1/2-H} B(1/2-H, H+1/2); the second carries the weight
/// u^{-1/2-H}(1-u)^{H+1/2} and is done by Gauss–Jacobi.
pub fn calibration_constant_at(hp: &HurstParams, s: f64, t: f64) -> Result<f64> {
    require_fractional(hp)?;
    if !(s > 0.0 && s < t) {
        return domain("calibration placement needs 0 < s < t");
    }
    let h = hp.h();
    let len = t - s;
    let first = (s / t).powf(0.5 - h) * beta_fn(0.5 - h, h + 0.5)?;
    let j = IncompleteBeta::new(1.0 - 2.0 * h, h + 0.5, CALIBRATION_NODES)?;
    let rule = GaussRule::jacobi(CALIBRATION_NODES, h + 0.5, -0.5 - h)?;
    let smooth = rule.integrate(|u| {
        let r = s + len * u;
        r.powf(2.0 * h - 1.0) * j.upper_tail_scaled(r / t)
    });
    let second = (0.5 - h)
        * s.powf(0.5 - h)
        * len.powf(0.5 - h)
        * (len / t).powf(h + 0.5)
        * smooth;
    Ok(hp.c() * (first + second))
}

/// C(H) at the reference placement (s,t) = (1/2, 1).
pub fn calibration_constant(hp: &HurstParams) -> Result<f64> {
    calibration_constant_at(hp, 0.5, 1.0)
}

/// Calibrated K̃_H on a grid as a packed lower-triangular matrix acting on
/// piecewise-constant derivatives: row n holds
/// t_n^{H-1/2} m_k^{1/2-H} int_{t_k}^{t_{k+1}} (t_n - s)^{-1/2-H} ds / C(H).
#[derive(Debug, Clone)]
pub struct TildeOperator {
    grid: TimeGrid,
    weights: Vec<f64>,
    calibration: f64,
}

impl TildeOperator {
    pub fn new(hp: &HurstParams, grid: &TimeGrid) -> Result<Self> {
        require_fractional(hp)?;
        if grid.start() != 0.0 {
            return usage("K̃_H acts on paths starting at time 0");
        }
        let calibration = calibration_constant(hp)?;
        let n = grid.steps();
        let weights = (1..=n)
            .into_par_iter()
            .map(|i| row(hp.h(), grid, i, calibration))
            .collect::<Vec<_>>()
            .concat();
        Ok(Self {
            grid: *grid,
            weights,
            calibration,
        })
    }

    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Applies the operator to derivative samples `[step][component]`,
    /// returning (K̃h)(t_n) for n = 0..=N as `[node][component]`.
    pub fn apply(&self, derivative: &[f64], dim: usize) -> Vec<f64> {
        let n = self.grid.steps();
        let mut out = vec![0.0; (n + 1) * dim];
        for i in 1..=n {
            let w = &self.weights[(i - 1) * i / 2..i * (i + 1) / 2];
            for c in 0..dim {
                let mut acc = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    acc += wk * derivative[k * dim + c];
                }
                out[i * dim + c] = acc;
            }
        }
        out
    }
}

fn row(h: f64, grid: &TimeGrid, i: usize, calibration: f64) -> Vec<f64> {
    let t = grid.node(i);
    let a = 0.5 - h;
    let pre = t.powf(h - 0.5) / (a * calibration);
    (0..i)
        .map(|k| {
            let tk = grid.node(k);
            let tk1 = grid.node(k + 1);
            let mid = 0.5 * (tk + tk1);
            pre * mid.powf(a) * ((t - tk).powf(a) - (t - tk1).powf(a))
        })
        .collect()
}

/// (K̃_H h)(t_n) at every grid node, `[node][component]`.
pub fn tilde_transform(h: &AbsContPath, hp: &HurstParams) -> Result<Vec<f64>> {
    let op = TildeOperator::new(hp, h.grid())?;
    Ok(op.apply(h.derivative(), h.dim()))
}

/// max_n |h(t_n) - int_0^{t_n} K_H(t_n,s) (K̃_H h)(s) ds| with calibrated K̃_H.
///
/// The outer integral pairs the trapezoid cell mean of K̃h with exact
/// cell integrals of K_H.
pub fn inversion_residual(hp: &HurstParams, grid: &TimeGrid, h: &AbsContPath) -> Result<f64> {
    require_fractional(hp)?;
    if h.grid() != grid {
        return usage("path grid differs from the residual grid");
    }
    let dim = h.dim();
    let n = grid.steps();
    let g = tilde_transform(h, hp)?;
    let values = h.values();
    let kernel = VolterraKernel::new(*hp)?;
    let scale_exp = hp.h() + 0.5;
    let worst = (1..=n)
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i);
            let scale = t.powf(scale_exp);
            let inv = 1.0 / i as f64;
            let mut prev = 0.0;
            let mut acc = vec![0.0; dim];
            for k in 0..i {
                let next = kernel.antiderivative(((k + 1) as f64 * inv).min(1.0));
                let cell = scale * (next - prev);
                prev = next;
                for c in 0..dim {
                    acc[c] += 0.5 * (g[k * dim + c] + g[(k + 1) * dim + c]) * cell;
                }
            }
            (0..dim)
                .map(|c| (values[i * dim + c] - acc[c]).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}
