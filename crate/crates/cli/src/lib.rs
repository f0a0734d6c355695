//! Batch runner: reads a run configuration, dispatches to one of the
//! subcommands and writes `manifest.json`, `summary.json` and data files
//! into the output directory.
//!
//! Exit codes: 0 when every enabled check passes, 1 when a check fails,
//! 2 for configuration or input errors, 3 for numerical aborts.

mod commands;
pub mod config;
pub mod error;
pub mod measure;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;

pub use config::{load_config, parse_config, Overrides, RunConfig, Subcommand};
pub use error::{CliError, CliResult};
pub use measure::{measure_ingest, parse_measure, IngestReport};
pub use report::{Artifacts, CheckResult, Outcome, Seeds, Status};

#[derive(Debug, Parser)]
#[command(name = "flowsde", version, about = "Particle and Picard solvers for distribution-dependent SDEs and 2D Navier-Stokes")]
pub struct Args {
    /// Run configuration (TOML, or JSON with a .json extension; an emitted manifest.json also works).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel kernels.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub subcommand: &'static str,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub details: serde_json::Map<String, serde_json::Value>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    manifest_version: u32,
    config: &'a RunConfig,
    seed_scheme: &'static str,
    seeds: &'a Seeds,
    versions: Versions,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Versions {
    flowsde: &'static str,
    #[serde(rename = "flowsde-cli")]
    flowsde_cli: &'static str,
}

const SEED_SCHEME: &str = "stage seed = child_seed(master, salt); random streams inside a stage are ChaCha8 keyed by (stage seed, tag, index, component)";

/// Runs a resolved configuration and writes all artifacts.
pub fn run_config(cfg: &RunConfig) -> CliResult<Summary> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("flowsde-out"));
    let mut art = Artifacts::new(&out)?;
    let mut seeds = Seeds::new(cfg.seed());
    let outcome = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Abort(format!("thread pool: {e}")))?
            .install(|| commands::dispatch(cfg, &mut art, &mut seeds))?,
        None => commands::dispatch(cfg, &mut art, &mut seeds)?,
    };
    let summary = Summary {
        subcommand: cfg.subcommand.as_str(),
        pass: outcome.checks.iter().all(|c| c.status != Status::Fail),
        checks: outcome.checks,
        details: outcome.details,
    };
    art.write_json("summary.json", &summary)?;
    let manifest = Manifest {
        manifest_version: 1,
        config: cfg,
        seed_scheme: SEED_SCHEME,
        seeds: &seeds,
        versions: Versions {
            flowsde: flowsde::VERSION,
            flowsde_cli: env!("CARGO_PKG_VERSION"),
        },
        outputs: art.files().to_vec(),
    };
    art.write_json("manifest.json", &manifest)?;
    Ok(summary)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let ov = Overrides {
        seed: args.seed,
        out: args.out,
        threads: args.threads,
    };
    let result = load_config(&args.config).and_then(|c| c.resolve(&ov)).and_then(|c| run_config(&c));
    match result {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{}", c.line());
            }
            println!("{}: {}", summary.subcommand, if summary.pass { "all checks passed" } else { "some checks FAILED" });
            if summary.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprint!("{e}");
            e.exit_code()
        }
    }
}
