mod backward;
mod diagnostics;
mod fbm;
mod forward;
mod girsanov;
mod oracle;

use crate::config::{RunConfig, Subcommand};
use crate::error::CliResult;
use crate::report::{Artifacts, Outcome, Seeds};

pub(crate) fn dispatch(cfg: &RunConfig, art: &mut Artifacts, seeds: &mut Seeds) -> CliResult<Outcome> {
    match cfg.subcommand {
        Subcommand::FbmSample => fbm::run(cfg, art, seeds),
        Subcommand::GirsanovCheck => girsanov::run(cfg, art, seeds),
        Subcommand::ForwardNs => forward::run(cfg, art, seeds),
        Subcommand::BackwardNs => backward::run(cfg, art, seeds),
        Subcommand::OracleCompare => oracle::run(cfg, art, seeds),
        Subcommand::Diagnostics => diagnostics::run(cfg, art, seeds),
    }
}

/// Mean and standard error of a sample.
pub(crate) fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `|mean - target|` in standard errors; exact agreement with zero error
/// counts as 0.
pub(crate) fn in_se(mean: f64, se: f64, target: f64) -> f64 {
    let d = (mean - target).abs();
    if d <= 1e-12 * target.abs().max(1.0) {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        f64::INFINITY
    }
}

pub(crate) fn grid_metadata(pairs: &[(&str, serde_json::Value)]) -> serde_json::Map<String, serde_json::Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}
