use std::io::Write;

use flowsde::fbm::{sample_fbm, FbmMethod};
use flowsde::fraccalc::girsanov_weights_along;
use flowsde::{HurstParams, TimeGrid};

use super::{in_se, mean_se};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{Artifacts, CheckResult, Outcome, Seeds};

/// Girsanov weights for a constant drift: E Z_T = 1, and at H = 1/2 each
/// weight equals exp(-c·W_T - |c|² T / 2).
pub(super) fn run(cfg: &RunConfig, art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    let hp = HurstParams::new(cfg.h.unwrap_or(0.5))?;
    let (t, n, m) = (cfg.t.unwrap_or(1.0), cfg.n.unwrap_or(64), cfg.m.unwrap_or(2000));
    let c = cfg.constant_drift.unwrap_or([1.0, 0.0]);
    let x0 = cfg.x0.unwrap_or([0.0, 0.0]);
    let grid = TimeGrid::new(t, n)?;
    let ens = sample_fbm(&hp, &grid, 2, m, FbmMethod::Volterra, seeds.stage("fbm", 1))?;
    let weights = girsanov_weights_along(&ens, &x0, |_, _, o| o.copy_from_slice(&c))?;
    art.write("weights.csv", |w| {
        writeln!(w, "replica,log_z,l2_norm_sq")?;
        for (r, wt) in weights.iter().enumerate() {
            let rec = wt.record(r);
            writeln!(w, "{},{},{}", rec.replica, rec.log_z, rec.l2_norm_sq)?;
        }
        Ok(())
    })?;
    let tol = cfg.tolerances();
    let z: Vec<f64> = weights.iter().map(|w| w.z_t).collect();
    let (mean, se) = mean_se(&z);
    let mut out = Outcome::default();
    out.checks.push(CheckResult::at_most(
        "martingale",
        in_se(mean, se, 1.0),
        tol.martingale_se,
        format!("E Z_T = {mean:.5} +/- {se:.5}, distance from 1 in standard errors"),
    ));
    if hp.is_brownian() {
        let c2 = c[0] * c[0] + c[1] * c[1];
        let worst = weights
            .iter()
            .enumerate()
            .map(|(r, wt)| {
                let exact = (-(c[0] * ens.value(r, n, 0) + c[1] * ens.value(r, n, 1)) - 0.5 * c2 * t).exp();
                ((wt.z_t - exact) / exact).abs()
            })
            .fold(0.0, f64::max);
        out.checks.push(CheckResult::at_most(
            "closed-form",
            worst,
            tol.closed_form,
            "max relative error against exp(-c.W_T - |c|^2 T/2)",
        ));
    } else {
        out.checks.push(CheckResult::skipped("closed-form", "only available at H = 1/2"));
    }
    Ok(out)
}
