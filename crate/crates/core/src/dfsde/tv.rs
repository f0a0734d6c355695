use serde::Serialize;

use crate::error::{usage, Result};

use super::{Binning, DistributionFlow};

/// Slack allowed in the discrete Csiszár–Kullback–Pinsker comparison.
pub const CKP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TvReport {
    /// sup over atoms of ½ Σ |p − q|.
    pub tv: f64,
    /// Relative entropy H(p|q) at the atom attaining the sup; +∞ when p
    /// charges a bin that q leaves empty.
    pub entropy: f64,
    /// Set when some atom has TV > √(2 H(p|q)) + slack, which cannot happen
    /// for genuine probability vectors.
    pub ckp_violation: bool,
}

/// ½ Σ |p − q| and H(p|q) = Σ p log(p/q) for two probability vectors.
pub fn histogram_tv(p: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    if p.len() != q.len() {
        return usage("histograms use different binnings");
    }
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let mut h = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok((tv, f64::INFINITY));
            }
            h += a * (a / b).ln();
        }
    }
    Ok((tv, h.max(0.0)))
}

pub fn ckp_holds(tv: f64, entropy: f64) -> bool {
    tv <= (2.0 * entropy).sqrt() + CKP_SLACK
}

/// Histogram total-variation distance between two flows at one step,
/// sup over atoms, with the companion entropy and CKP flag.
pub fn flow_distance_tv(a: &DistributionFlow, b: &DistributionFlow, step: usize, binning: &Binning) -> Result<TvReport> {
    if a.atoms != b.atoms || a.dim != b.dim {
        return usage("flows have different atoms");
    }
    let mut report = TvReport {
        tv: 0.0,
        entropy: 0.0,
        ckp_violation: false,
    };
    for j in 0..a.atom_count() {
        let p = a.histogram(step, j, binning)?;
        let q = b.histogram(step, j, binning)?;
        let (tv, h) = histogram_tv(&p, &q)?;
        if !ckp_holds(tv, h) {
            report.ckp_violation = true;
        }
        if j == 0 || tv > report.tv {
            report.tv = tv;
            report.entropy = h;
        }
    }
    Ok(report)
}
