use std::io::Write;

use flowsde::fbm::{sample_fbm, write_ensemble_binary};
use flowsde::{HurstParams, TimeGrid};

use super::{in_se, mean_se};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{Artifacts, CheckResult, Outcome, Seeds};

/// Samples fBm paths; `paths.csv` has one row per replica and step 1..=N.
pub(super) fn run(cfg: &RunConfig, art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    let hp = HurstParams::new(cfg.h.unwrap_or(0.5))?;
    let (t, n, m, dim) = (cfg.t.unwrap_or(1.0), cfg.n.unwrap_or(64), cfg.m.unwrap_or(1), cfg.dim.unwrap_or(1));
    let grid = TimeGrid::new(t, n)?;
    let method = cfg.method.unwrap_or(flowsde::FbmMethod::ExactCholesky);
    let ens = sample_fbm(&hp, &grid, dim, m, method, seeds.stage("fbm", 1))?;
    art.write("paths.csv", |w| {
        write!(w, "replica,step,t")?;
        for c in 0..dim {
            write!(w, ",x{c}")?;
        }
        writeln!(w)?;
        for r in 0..m {
            for k in 1..=n {
                write!(w, "{r},{k},{}", grid.node(k))?;
                for c in 0..dim {
                    write!(w, ",{}", ens.value(r, k, c))?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    })?;
    art.write("paths.bin", |w| Ok(write_ensemble_binary(w, &ens)?))?;
    let mut out = Outcome::default();
    let target = t.powf(2.0 * hp.h());
    if m >= 2 {
        let sq: Vec<f64> = (0..m)
            .map(|r| (0..dim).map(|c| ens.value(r, n, c).powi(2)).sum::<f64>() / dim as f64)
            .collect();
        let (mean, se) = mean_se(&sq);
        let z = in_se(mean, se, target);
        out.checks.push(CheckResult::at_most(
            "terminal-variance",
            z,
            cfg.tolerances().variance_se,
            format!("E X_T^2 = {mean:.5} +/- {se:.5} vs T^(2H) = {target:.5}, in standard errors"),
        ));
    } else {
        out.checks.push(CheckResult::skipped("terminal-variance", "needs at least 2 replicas"));
    }
    out.detail("method", method.as_str())?;
    Ok(out)
}
