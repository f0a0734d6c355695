use std::io::Write;

use flowsde::dfsde::{forward_particle, Interaction, ParticleOptions};
use flowsde::fields::{write_grid_binary, write_grid_csv};
use flowsde::nse::{forward_velocity, lamb_oseen_speed, tangential_profile};
use flowsde::{FbmMethod, HurstParams, TimeGrid};
use serde_json::json;

use super::grid_metadata;
use crate::config::{GridConfig, RunConfig};
use crate::error::CliResult;
use crate::report::{Artifacts, CheckResult, Outcome, Seeds};

/// Coupled vortex particles from ν₀; emits the velocity at T, its
/// divergence check and, for a single vortex at the origin driven by
/// Brownian noise, the Lamb–Oseen comparison.
pub(super) fn run(cfg: &RunConfig, art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    let hp = HurstParams::new(cfg.h.unwrap_or(0.5))?;
    let (t, n, m, eps) = (cfg.t.unwrap_or(0.5), cfg.n.unwrap_or(200), cfg.m.unwrap_or(20_000), cfg.eps.unwrap_or(0.05));
    let (nu, ingest) = cfg.nu0()?;
    let grid = TimeGrid::new(t, n)?;
    let opts = ParticleOptions {
        method: cfg.method.unwrap_or(FbmMethod::Circulant),
        interaction: cfg.interaction.unwrap_or_else(Interaction::default),
    };
    let ens = forward_particle(&nu, &hp, &grid, m, eps, seeds.stage("particle", 3), &opts)?;
    let spec = cfg.grid.unwrap_or(GridConfig { half: 1.5, n: 120 }).spec()?;
    let u = forward_velocity(&ens, &nu, n, &spec, eps)?;
    art.write("velocity.csv", |w| Ok(write_grid_csv(w, &u.field)?))?;
    let meta = grid_metadata(&[("t", json!(t)), ("eps", json!(eps)), ("H", json!(hp.h())), ("source", json!("forward-particle"))]);
    art.write("velocity.bin", |w| Ok(write_grid_binary(w, &u.field, meta)?))?;
    let tol = cfg.tolerances();
    let mut out = Outcome::default();
    out.detail("measure", &ingest)?;
    let div = u.divergence()?;
    out.checks.push(CheckResult::at_most(
        "divergence",
        div.ratio(),
        tol.divergence,
        "FD divergence L2 over gradient L2 on the evaluation grid",
    ));
    let single_origin = nu.len() == 1 && nu.atoms()[0] == [0.0, 0.0];
    if single_origin && hp.is_brownian() {
        let gamma = nu.weights()[0];
        let radii = cfg.radii.clone().unwrap_or_else(|| vec![0.3, 0.6, 1.0, 1.5]);
        let prof = tangential_profile(&ens, &nu, n, &radii, cfg.angles.unwrap_or(64), eps)?;
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        for (r, v) in radii.iter().zip(&prof) {
            // W at H = 1/2 has generator Δ/2, so the viscosity is 1/2
            let exact = lamb_oseen_speed(gamma, 0.5, t, *r)?;
            let rel = (v - exact).abs() / exact.abs();
            worst = worst.max(rel);
            rows.push((*r, *v, exact, rel));
        }
        art.write("lamb_oseen.csv", |w| {
            writeln!(w, "r,particle,exact,rel_err")?;
            for (r, v, e, rel) in &rows {
                writeln!(w, "{r},{v},{e},{rel}")?;
            }
            Ok(())
        })?;
        out.checks.push(CheckResult::at_most(
            "lamb-oseen",
            worst,
            tol.lamb_oseen,
            format!("max relative error of the tangential speed over {} radii", radii.len()),
        ));
    } else {
        out.checks.push(CheckResult::skipped(
            "lamb-oseen",
            "needs a single vortex at the origin and H = 1/2",
        ));
    }
    Ok(out)
}
