use rayon::prelude::*;

use crate::error::{usage, Error, Result};
use crate::fbm::FbmEnsemble;

use super::FlowEnsemble;

/// Euler–Maruyama for an additive-noise SDE: from `x` at node `from`, steps
/// X_{n+1} = X_n + b(t_n, X_n) dt + noise_n and writes node values into
/// `out` (`[node][dim]` for nodes from..=N). `noise(n, k)` is component k
/// of the increment over [t_n, t_{n+1}].
pub(crate) fn euler_path(
    drift: &(impl Fn(usize, f64, &[f64], &mut [f64]) + ?Sized),
    times: &[f64],
    from: usize,
    x: &[f64],
    noise: impl Fn(usize, usize) -> f64,
    out: &mut [f64],
) -> std::result::Result<(), (usize, Vec<f64>)> {
    let dim = x.len();
    let mut cur = x.to_vec();
    let mut b = vec![0.0; dim];
    out[..dim].copy_from_slice(&cur);
    for n in from..times.len() - 1 {
        let dt = times[n + 1] - times[n];
        drift(n, times[n], &cur, &mut b);
        if b.iter().any(|v| !v.is_finite()) {
            return Err((n, cur));
        }
        for k in 0..dim {
            cur[k] += b[k] * dt + noise(n, k);
        }
        let o = (n + 1 - from) * dim;
        out[o..o + dim].copy_from_slice(&cur);
    }
    Ok(())
}

/// Solves dX = B(t, X) dt + dW^H from every atom in `x0` (`[atom][dim]`)
/// with the frozen time–space drift `drift(t, x, out)`.
///
/// The ensemble must hold J·M replicas; particle (j, m) is driven by
/// replica j·M + m, so the result is a deterministic function of the
/// ensemble.
pub fn solve_frozen<F>(drift: F, x0: &[f64], ens: &FbmEnsemble, label: &str) -> Result<FlowEnsemble>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    let dim = ens.dim();
    if x0.is_empty() || x0.len() % dim != 0 {
        return usage("initial points must be a non-empty [atom][dim] buffer");
    }
    let atoms = x0.len() / dim;
    if ens.replicas() % atoms != 0 {
        return usage("ensemble replicas must be a multiple of the atom count");
    }
    let m = ens.replicas() / atoms;
    let grid = *ens.grid();
    let times = grid.nodes();
    let nodes = times.len();
    let step_drift = |_: usize, t: f64, x: &[f64], out: &mut [f64]| drift(t, x, out);
    let paths: Vec<Vec<f64>> = (0..atoms * m)
        .into_par_iter()
        .map(|r| {
            let w = ens.path(r);
            let mut out = vec![0.0; nodes * dim];
            euler_path(
                &step_drift,
                &times,
                0,
                &x0[(r / m) * dim..(r / m + 1) * dim],
                |n, k| w[(n + 1) * dim + k] - w[n * dim + k],
                &mut out,
            )
            .map(|_| out)
            .map_err(|(n, x)| Error::NonFinite {
                context: format!(
                    "drift at t = {}, atom {}, replica {}, x = {:?}",
                    times[n],
                    r / m,
                    r % m,
                    x
                ),
            })
        })
        .collect::<Result<_>>()?;
    let mut flow = FlowEnsemble::with_start(grid, dim, x0, m, *ens.hurst(), label, ens.seed())?;
    for n in 1..nodes {
        let snap = flow.snapshot_mut(n);
        for (r, p) in paths.iter().enumerate() {
            snap[r * dim..(r + 1) * dim].copy_from_slice(&p[n * dim..(n + 1) * dim]);
        }
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_fbm, FbmMethod, HurstParams};
    use crate::time::TimeGrid;

    #[test]
    fn zero_drift_is_translation() {
        let hp = HurstParams::new(0.3).unwrap();
        let g = TimeGrid::new(1.0, 16).unwrap();
        let ens = sample_fbm(&hp, &g, 2, 6, FbmMethod::Circulant, 4).unwrap();
        let x0 = [1.0, -1.0, 0.5, 2.0];
        let f = solve_frozen(|_, _, o| o.fill(0.0), &x0, &ens, "zero").unwrap();
        for j in 0..2 {
            for m in 0..3 {
                for n in 0..=16 {
                    for k in 0..2 {
                        let expect = x0[j * 2 + k] + ens.value(j * 3 + m, n, k);
                        assert!((f.position(n, j, m)[k] - expect).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_drift_mean_path() {
        let hp = HurstParams::brownian();
        let g = TimeGrid::new(2.0, 10).unwrap();
        let ens = sample_fbm(&hp, &g, 1, 1, FbmMethod::ExactCholesky, 1).unwrap();
        let f = solve_frozen(|_, _, o| o[0] = 0.7, &[0.0], &ens, "const").unwrap();
        for n in 0..=10 {
            let noise = ens.value(0, n, 0);
            assert!((f.position(n, 0, 0)[0] - noise - 0.7 * g.node(n)).abs() < 1e-13);
        }
    }

    #[test]
    fn ornstein_uhlenbeck_variance() {
        // dX = -λX dt + dW from 0: Var X_T = (1 - e^{-2λT}) / (2λ)
        let lambda = 1.5;
        let hp = HurstParams::brownian();
        let g = TimeGrid::new(1.0, 200).unwrap();
        let reps = 4000;
        let ens = sample_fbm(&hp, &g, 1, reps, FbmMethod::Circulant, 11).unwrap();
        let f = solve_frozen(|_, x, o| o[0] = -lambda * x[0], &[0.0], &ens, "ou").unwrap();
        let xs = f.marginal(200, 0);
        let v = xs.iter().map(|x| x * x).sum::<f64>() / reps as f64;
        let exact = (1.0 - (-2.0 * lambda).exp()) / (2.0 * lambda);
        // SE of the second moment of a Gaussian: sqrt(2/n) var
        let se = (2.0 / reps as f64).sqrt() * exact;
        assert!((v - exact).abs() < 4.0 * se + 0.01 * exact, "{v} vs {exact}");
    }

    #[test]
    fn non_finite_drift_reports_location() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let ens = sample_fbm(&HurstParams::brownian(), &g, 1, 2, FbmMethod::Circulant, 1).unwrap();
        let err = solve_frozen(|t, _, o| o[0] = if t > 0.4 { f64::NAN } else { 0.0 }, &[0.0], &ens, "bad")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t = 0.5") && msg.contains("replica"), "{msg}");
    }

    #[test]
    fn strong_order_one_for_additive_noise() {
        // errors at N and 2N against a 4x-finer reference driven by the same path
        let hp = HurstParams::brownian();
        let fine = 512;
        let g = TimeGrid::new(1.0, fine).unwrap();
        let reps = 200;
        let ens = sample_fbm(&hp, &g, 1, reps, FbmMethod::ExactCholesky, 5).unwrap();
        let run = |n: usize| -> Vec<f64> {
            let stride = fine / n;
            let paths: Vec<f64> = (0..reps)
                .flat_map(|r| (0..=n).map(move |k| (r, k * stride)))
                .map(|(r, k)| ens.value(r, k, 0))
                .collect();
            let sub = FbmEnsemble::from_parts(
                hp,
                TimeGrid::new(1.0, n).unwrap(),
                1,
                reps,
                FbmMethod::ExactCholesky,
                5,
                paths,
                None,
            )
            .unwrap();
            let f = solve_frozen(|_, x, o| o[0] = -x[0] + (2.0 * x[0]).sin(), &[0.3], &sub, "lip").unwrap();
            f.marginal(n, 0).to_vec()
        };
        let reference = run(4 * 64);
        let err = |n: usize| {
            let x = run(n);
            (x.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / reps as f64).sqrt()
        };
        let e1 = err(32);
        let e2 = err(64);
        let ratio = e1 / e2;
        assert!(ratio > 1.6 && ratio < 2.6, "ratio {ratio}");
    }
}
