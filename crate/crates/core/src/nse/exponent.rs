use serde::Serialize;

use crate::error::{domain, usage, Result};
use crate::fields::{localized_norm, GridField, NormVariant};

use super::VelocityField;

/// Exponent [H(2/p − 1)] ∧ [(1 − 2H)/(1 − H)] of the short-time bound on
/// |||u(t) − K₂*ν₀|||_p.
pub fn predicted_exponent(h: f64, p: f64) -> f64 {
    (h * (2.0 / p - 1.0)).min((1.0 - 2.0 * h) / (1.0 - h))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Least-squares slope of log norm against log t; `None` when every
    /// norm is exactly zero.
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub predicted: f64,
    pub window: [f64; 2],
    /// Set when u(t) = u0 at every time.
    pub exact: bool,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Fits the decay of |||u(t) − u0|||_p (tilde variant) over the snapshots.
pub fn short_time_exponent(u: &[VelocityField], u0: &GridField, p: f64, h: f64) -> Result<ExponentFit> {
    if u.len() < 4 {
        return usage("the exponent fit needs at least four snapshots");
    }
    if !(p > 1.0 && p < 2.0) {
        return usage("p must lie in (1, 2)");
    }
    if u.iter().any(|f| f.field.spec() != u0.spec()) || u0.components() != 2 {
        return usage("snapshots and u0 must share a grid");
    }
    if u.iter().any(|f| !(f.t > 0.0)) {
        return usage("snapshot times must be positive");
    }
    let times: Vec<f64> = u.iter().map(|f| f.t).collect();
    let norms: Vec<f64> = u
        .iter()
        .map(|f| localized_norm(&f.field.sub(u0)?.magnitude(), p, NormVariant::Tilde))
        .collect::<Result<_>>()?;
    let window = [
        times.iter().cloned().fold(f64::INFINITY, f64::min),
        times.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    ];
    let predicted = predicted_exponent(h, p);
    if norms.iter().all(|&n| n == 0.0) {
        return Ok(ExponentFit {
            slope: None,
            stderr: None,
            predicted,
            window,
            exact: true,
            times,
            norms,
        });
    }
    if norms.iter().any(|&n| !(n > 0.0)) {
        return domain("some but not all norms vanish; the log fit is undefined");
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let (slope, stderr) = least_squares(&xs, &ys);
    Ok(ExponentFit {
        slope: Some(slope),
        stderr: Some(stderr),
        predicted,
        window,
        exact: false,
        times,
        norms,
    })
}

/// Slope and its standard error for y ≈ a + b x.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    (b, (rss / (n - 2.0) / sxx).sqrt())
}
