use std::cell::Cell;
use std::f64::consts::PI;

use flowsde::dfsde::{forward_particle, Interaction, ParticleOptions};
use flowsde::fields::{biot_savart_free, write_grid_csv};
use flowsde::nse::{forward_velocity, spectral_oracle, OracleOptions};
use flowsde::{FbmMethod, GridField, GridSpec, HurstParams, TimeGrid};

use crate::config::{GridConfig, OracleBox, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{Artifacts, CheckResult, Outcome, Seeds};

/// Particle velocity at T against a pseudo-spectral solve of the vorticity
/// equation with viscosity 1/2, started at t0 from the heat-evolved measure.
pub(super) fn run(cfg: &RunConfig, art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    let nu_visc = 0.5;
    let (t, n, m, eps) = (cfg.t.unwrap_or(0.25), cfg.n.unwrap_or(50), cfg.m.unwrap_or(4000), cfg.eps.unwrap_or(0.05));
    let (nu, ingest) = cfg.nu0()?;
    let window = cfg.grid.unwrap_or(GridConfig { half: 1.5, n: 48 }).spec()?;
    let obox = cfg.oracle.unwrap_or_default();
    let opts = ParticleOptions {
        method: FbmMethod::Circulant,
        interaction: cfg.interaction.unwrap_or_else(Interaction::default),
    };
    let ens = forward_particle(&nu, &HurstParams::brownian(), &TimeGrid::new(t, n)?, m, eps, seeds.stage("particle", 3), &opts)?;
    let u_part = forward_velocity(&ens, &nu, n, &window, eps)?;
    art.write("particle_velocity.csv", |w| Ok(write_grid_csv(w, &u_part.field)?))?;

    let OracleBox { half, n: on, t0, steps } = obox;
    let h = 2.0 * half / on as f64;
    let box_spec = GridSpec::new([-half, -half], [h, h], [on, on], true)?;
    let var = 2.0 * nu_visc * t0;
    let w0 = GridField::scalar_from_fn(box_spec, |x| {
        nu.atoms()
            .iter()
            .zip(nu.weights())
            .map(|(y, w)| {
                let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                w * (-r2 / (2.0 * var)).exp() / (2.0 * PI * var)
            })
            .sum()
    });
    let run = spectral_oracle(&w0, nu_visc, &TimeGrid::on_interval(t0, t, steps)?, &OracleOptions::default())?;
    let w_end = run.vorticity.last().expect("at least the initial snapshot");
    let free = GridSpec { periodic: false, ..box_spec };
    let u_free = biot_savart_free(&GridField::new(free, 1, w_end.data().to_vec())?)?;
    let inside = Cell::new(true);
    let u_oracle = GridField::from_fn(window, 2, |x, o| {
        if !u_free.interpolate(x, o) {
            inside.set(false);
        }
    });
    if !inside.get() {
        return Err(CliError::config("grid: the comparison window leaves the oracle box"));
    }
    art.write("oracle_velocity.csv", |w| Ok(write_grid_csv(w, &u_oracle)?))?;
    let rel = u_part.field.sub(&u_oracle)?.l2_norm() / u_oracle.l2_norm().max(f64::MIN_POSITIVE);
    let mut out = Outcome::default();
    out.detail("measure", &ingest)?;
    out.detail("oracle_circulation", run.circulation.last())?;
    out.detail("oracle_enstrophy", run.enstrophy.last())?;
    out.checks.push(CheckResult::at_most(
        "oracle",
        rel,
        cfg.tolerances().oracle,
        "relative L2 difference of particle and spectral velocities on the window",
    ));
    Ok(out)
}
