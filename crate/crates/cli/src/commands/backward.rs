use std::io::Write;

use flowsde::dfsde::{backward_picard, BackwardOptions, TerminalDatum};
use flowsde::fields::{write_grid_binary, write_grid_csv};
use flowsde::nse::{vorticity_residual, TimeDirection};
use flowsde::{GridField, TimeGrid};
use serde_json::json;

use super::grid_metadata;
use crate::config::{GridConfig, RunConfig};
use crate::error::CliResult;
use crate::report::{Artifacts, CheckResult, Outcome, Seeds};

/// Backward Picard iteration for the terminal-value problem with √2 W
/// noise (viscosity 1).
pub(super) fn run(cfg: &RunConfig, art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    let (t, n, m, eps) = (cfg.t.unwrap_or(0.5), cfg.n.unwrap_or(16), cfg.m.unwrap_or(2000), cfg.eps.unwrap_or(0.05));
    let lattice = cfg.grid.unwrap_or(GridConfig { half: 3.2, n: 16 }).spec()?;
    let datum = cfg.terminal.clone().unwrap_or(TerminalDatum::Gaussian {
        amplitude: 0.5,
        sigma: 1.0,
        center: [0.0, 0.0],
    });
    let g = datum.on_lattice(&lattice)?;
    let tg = TimeGrid::new(t, n)?;
    let opts = BackwardOptions {
        replicas: m,
        eps,
        tol: cfg.tol.unwrap_or(1e-10),
        max_iter: cfg.max_iter.unwrap_or(6),
        truncation: cfg.truncation,
        antithetic: cfg.antithetic.unwrap_or(true),
        record_paths: false,
    };
    let res = backward_picard(&g, &tg, &opts, seeds.stage("backward", 4))?;
    let u0 = &res.velocity[0];
    art.write("velocity_initial.csv", |w| Ok(write_grid_csv(w, u0)?))?;
    art.write("velocity_initial.bin", |w| {
        Ok(write_grid_binary(w, u0, grid_metadata(&[("t", json!(0.0)), ("source", json!("backward-picard"))]))?)
    })?;
    art.write("vorticity_initial.csv", |w| Ok(write_grid_csv(w, &res.vorticity[0])?))?;
    let ratios = res.contraction_ratios();
    art.write("iterations.csv", |w| {
        writeln!(w, "iteration,sup_diff,ratio")?;
        for (k, d) in res.sup_diffs.iter().enumerate() {
            let r = if k == 0 { String::new() } else { ratios[k - 1].to_string() };
            writeln!(w, "{},{d},{r}", k + 1)?;
        }
        Ok(())
    })?;
    let tol = cfg.tolerances();
    let mut out = Outcome::default();
    out.detail("converged", res.converged)?;
    out.detail("truncated", res.truncated)?;
    out.detail("iterations", res.sup_diffs.len())?;
    // once the differences hit zero the ratios carry no information
    let informative: Vec<f64> = res
        .sup_diffs
        .windows(2)
        .take_while(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .take(4)
        .collect();
    if informative.is_empty() {
        out.checks.push(CheckResult::skipped("contraction", "fewer than two nonzero iterates"));
    } else {
        let worst = informative.iter().copied().fold(0.0, f64::max);
        out.checks.push(CheckResult::at_most(
            "contraction",
            worst,
            tol.contraction,
            format!("largest of the first {} successive sup-difference ratios", informative.len()),
        ));
    }
    if n >= 2 {
        let resid = vorticity_residual(&res.vorticity, &res.velocity, &tg.nodes(), 1.0, TimeDirection::Backward)?;
        out.checks.push(CheckResult::at_most(
            "residual",
            resid.relative,
            tol.residual,
            "relative vorticity-form residual of the backward equation, viscosity 1",
        ));
    } else {
        out.checks.push(CheckResult::skipped("residual", "needs N >= 2"));
    }
    match datum {
        TerminalDatum::Gaussian { amplitude, sigma, center } => {
            let s2 = sigma * sigma;
            let exact = GridField::from_fn(lattice, 2, |x, o| {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let r2 = dx * dx + dy * dy;
                let f = if r2 == 0.0 { 0.0 } else { amplitude * s2 * (-(-r2 / (2.0 * s2)).exp_m1()) / r2 };
                o[0] = f * dy;
                o[1] = -f * dx;
            });
            let terminal = res.velocity.last().expect("N + 1 slices");
            let rel = terminal.sub(&exact)?.l2_norm() / exact.l2_norm().max(f64::MIN_POSITIVE);
            out.checks.push(CheckResult::at_most(
                "terminal",
                rel,
                tol.terminal,
                "relative L2 error of the terminal velocity against K2 * g",
            ));
        }
        TerminalDatum::Grid { .. } => {
            out.checks.push(CheckResult::skipped("terminal", "closed form only for a Gaussian datum"));
        }
    }
    Ok(out)
}
