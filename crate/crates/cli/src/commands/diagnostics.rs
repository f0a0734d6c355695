use flowsde::dfsde::{
    chapman_flow_check, forward_particle, moment_report, picard_forward_regular, ChapmanOptions, DriftSpec,
    FrozenVortexDrift, ParticleOptions, PicardOptions,
};
use flowsde::fbm::{sample_fbm, FbmMethod};
use flowsde::fraccalc::{girsanov_weights_along, inversion_residual, AbsContPath};
use flowsde::nse::forward_velocity;
use flowsde::{HurstParams, TimeGrid};

use super::{in_se, mean_se};
use crate::config::{CheckName, GridConfig, RunConfig};
use crate::error::CliResult;
use crate::report::{Artifacts, CheckResult, Outcome, Seeds};

/// Start point of the moment-bound check.
const MOMENT_X0: [f64; 2] = [1.5, -1.0];

/// Runs the enabled diagnostics for the configured drift. Checks that do
/// not apply to the drift or Hurst index are reported as skipped.
pub(super) fn run(cfg: &RunConfig, _art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    let hp = HurstParams::new(cfg.h.unwrap_or(0.5))?;
    let (t, n, m) = (cfg.t.unwrap_or(1.0), cfg.n.unwrap_or(256), cfg.m.unwrap_or(2000));
    let grid = TimeGrid::new(t, n)?;
    let drift = cfg.drift.clone().unwrap_or(DriftSpec::Zero);
    let tol = cfg.tolerances();
    let mut checks = cfg.checks.clone().unwrap_or_else(|| CheckName::ALL.to_vec());
    checks.sort();
    checks.dedup();
    let mut out = Outcome::default();
    out.detail("drift", drift.label())?;

    // the frozen vortex field is shared by several checks
    let vortex = match &drift {
        DriftSpec::ForwardVortex { nu0, eps: veps } => {
            let ens = forward_particle(nu0, &hp, &grid, m, *veps, seeds.stage("particle", 3), &ParticleOptions::default())?;
            Some((ens, nu0, *veps))
        }
        _ => None,
    };
    let frozen = match &vortex {
        Some((ens, nu0, veps)) => Some(FrozenVortexDrift::from_ensemble(ens, nu0, *veps)?),
        None => None,
    };
    let drift_fn = |s: f64, x: &[f64], o: &mut [f64]| match &frozen {
        Some(f) => f.eval(s, x, o),
        None => o.fill(0.0),
    };
    let field_drift = matches!(drift, DriftSpec::Zero | DriftSpec::ForwardVortex { .. });

    for check in checks {
        let name = check.as_str();
        let result = match check {
            CheckName::KernelInversion if hp.is_brownian() => {
                CheckResult::skipped(name, "the companion kernel is the identity at H = 1/2")
            }
            CheckName::KernelInversion => {
                let path = AbsContPath::from_fn(grid, 1, |_, o| o[0] = 1.0)?;
                let r = inversion_residual(&hp, &grid, &path)?;
                CheckResult::at_most(name, r, tol.inversion, "relative residual of K_H K~_H h = h for h(t) = t")
            }
            CheckName::Girsanov if field_drift => {
                let ens = sample_fbm(&hp, &grid, 2, m, FbmMethod::Volterra, seeds.stage("girsanov", 2))?;
                let w = girsanov_weights_along(&ens, &[0.0, 0.0], drift_fn)?;
                let z: Vec<f64> = w.iter().map(|w| w.z_t).collect();
                let (mean, se) = mean_se(&z);
                CheckResult::at_most(
                    name,
                    in_se(mean, se, 1.0),
                    tol.martingale_se,
                    format!("E Z_T = {mean:.5} +/- {se:.5}, distance from 1 in standard errors"),
                )
            }
            CheckName::Girsanov => CheckResult::skipped(name, "drift is not a frozen vector field"),
            CheckName::Chapman if field_drift && hp.is_brownian() => {
                let r = chapman_flow_check(
                    &drift_fn,
                    [0.0, 0.5 * t, t],
                    &[[0.0, 0.0], [1.0, -1.0]],
                    &ChapmanOptions::default(),
                    seeds.stage("chapman", 5),
                )?;
                let limit = tol.chapman_factor * r.noise_floor + tol.chapman_slack;
                CheckResult::at_most(
                    name,
                    r.distance,
                    limit,
                    format!("restarted-flow TV distance; noise floor {:.4}", r.noise_floor),
                )
            }
            CheckName::Chapman => CheckResult::skipped(name, "needs H = 1/2 and a frozen vector field drift"),
            CheckName::Divergence => match &vortex {
                Some((ens, nu0, veps)) => {
                    let spec = cfg.grid.unwrap_or(GridConfig { half: 1.5, n: 120 }).spec()?;
                    let u = forward_velocity(ens, nu0, n, &spec, *veps)?;
                    CheckResult::at_most(
                        name,
                        u.divergence()?.ratio(),
                        tol.divergence,
                        "FD divergence L2 over gradient L2 of the velocity at T",
                    )
                }
                None => CheckResult::skipped(name, "needs a forward-vortex drift"),
            },
            CheckName::MomentBound => match &drift {
                DriftSpec::Regular(spec) if hp.is_brownian() => {
                    let k = spec.kappa();
                    if !k.dissipative() {
                        CheckResult::skipped(name, "drift constants are not dissipative")
                    } else {
                        let res = picard_forward_regular(spec, &hp, &grid, &[MOMENT_X0], m, &PicardOptions::default(), seeds.stage("picard", 6))?;
                        let cps: Vec<usize> = (1..=5).map(|i| (i * n / 5).max(1)).collect();
                        let rows = moment_report(&res.ensemble, 0, &cps)?;
                        let x2 = MOMENT_X0[0].powi(2) + MOMENT_X0[1].powi(2);
                        let mut worst = f64::NEG_INFINITY;
                        let mut bounded = true;
                        for r in &rows {
                            match k.moment_bound(x2, r.t) {
                                Some(b) => worst = worst.max((r.mean_sq - b) / r.mean_sq_se.max(f64::MIN_POSITIVE)),
                                None => bounded = false,
                            }
                        }
                        out.detail("moments", &rows)?;
                        if bounded {
                            CheckResult::at_most(name, worst, tol.moment_se, "largest (E|X_t|^2 - bound) / SE over 5 checkpoints")
                        } else {
                            CheckResult::skipped(name, "moment bound constant unavailable")
                        }
                    }
                }
                _ => CheckResult::skipped(name, "needs a regular drift and H = 1/2"),
            },
        };
        out.checks.push(result);
    }
    Ok(out)
}
