use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::fbm::{FbmEnsemble, HurstParams};

use super::TildeOperator;

/// Z_T = exp(-stochastic_integral - l2_norm_sq / 2) for one replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovWeight {
    pub z_t: f64,
    pub log_z: f64,
    pub l2_norm_sq: f64,
    pub stochastic_integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightRecord {
    pub replica: usize,
    pub log_z: f64,
    pub l2_norm_sq: f64,
}

impl GirsanovWeight {
    pub fn record(&self, replica: usize) -> WeightRecord {
        WeightRecord {
            replica,
            log_z: self.log_z,
            l2_norm_sq: self.l2_norm_sq,
        }
    }
}

/// Weights turning W^H + I_b into an fBm, where I_b(t) = int_0^t b ds with b
/// sampled at left grid points (`b_along_path` is `[replica][step][component]`,
/// N steps). With g = K̃_H I_b, the weight is
/// exp(-sum g(t_n)·ΔW_n - ½ sum |g(t_n)|² Δt); at H = 1/2, g = b.
pub fn girsanov_weights(
    b_along_path: &[f64],
    ens: &FbmEnsemble,
    hp: &HurstParams,
) -> Result<Vec<GirsanovWeight>> {
    let driver = ens
        .driver()
        .ok_or_else(|| Error::Usage("Girsanov weights need the Volterra driver increments (method = volterra)".into()))?;
    if hp != ens.hurst() {
        return usage("Hurst parameters of weights and ensemble differ");
    }
    let n = ens.grid().steps();
    let dim = ens.dim();
    let stride = n * dim;
    if b_along_path.len() != ens.replicas() * stride {
        return usage("drift samples must be replicas x steps x dim");
    }
    let op = if hp.is_brownian() {
        None
    } else {
        Some(TildeOperator::new(hp, ens.grid())?)
    };
    let dt = ens.grid().dt();
    let weights = (0..ens.replicas())
        .into_par_iter()
        .map(|r| {
            let b = &b_along_path[r * stride..(r + 1) * stride];
            let dw = &driver[r * stride..(r + 1) * stride];
            let g_owned;
            let g: &[f64] = match &op {
                None => b,
                Some(op) => {
                    g_owned = op.apply(b, dim);
                    &g_owned[..stride]
                }
            };
            let mut stoch = 0.0;
            let mut l2 = 0.0;
            for i in 0..stride {
                stoch += g[i] * dw[i];
                l2 += g[i] * g[i] * dt;
            }
            let log_z = -stoch - 0.5 * l2;
            GirsanovWeight {
                z_t: log_z.exp(),
                log_z,
                l2_norm_sq: l2,
                stochastic_integral: stoch,
            }
        })
        .collect::<Vec<_>>();
    if let Some(bad) = weights.iter().position(|w| !w.log_z.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("Girsanov weight of replica {bad}"),
        });
    }
    Ok(weights)
}

/// Samples b(t_n, x0 + W^H_{t_n}) along every replica and returns the weights.
pub fn girsanov_weights_along(
    ens: &FbmEnsemble,
    x0: &[f64],
    b: impl Fn(f64, &[f64], &mut [f64]) + Sync,
) -> Result<Vec<GirsanovWeight>> {
    let dim = ens.dim();
    if x0.len() != dim {
        return usage("starting point dimension mismatch");
    }
    let n = ens.grid().steps();
    let samples: Vec<f64> = (0..ens.replicas())
        .into_par_iter()
        .flat_map_iter(|r| {
            let path = ens.path(r);
            let mut out = vec![0.0; n * dim];
            let mut x = vec![0.0; dim];
            for k in 0..n {
                for c in 0..dim {
                    x[c] = x0[c] + path[k * dim + c];
                }
                b(ens.grid().node(k), &x, &mut out[k * dim..(k + 1) * dim]);
            }
            out
        })
        .collect();
    girsanov_weights(&samples, ens, ens.hurst())
}
