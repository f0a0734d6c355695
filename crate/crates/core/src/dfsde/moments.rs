use serde::Serialize;

use crate::error::{usage, Result};

use super::FlowEnsemble;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentRow {
    pub step: usize,
    pub t: f64,
    pub mean_sq: f64,
    pub mean_sq_se: f64,
    pub mean_abs: f64,
    pub mean_abs_se: f64,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Monte Carlo E|X_t|² and E|X_t| with standard errors for one atom at the
/// requested steps.
pub fn moment_report(ens: &FlowEnsemble, atom: usize, checkpoints: &[usize]) -> Result<Vec<MomentRow>> {
    if atom >= ens.atom_count() {
        return usage("atom index out of range");
    }
    checkpoints
        .iter()
        .map(|&n| {
            if n > ens.grid().steps() {
                return usage("checkpoint beyond the time grid");
            }
            let sq: Vec<f64> = ens
                .marginal(n, atom)
                .chunks_exact(ens.dim())
                .map(|x| x.iter().map(|v| v * v).sum())
                .collect();
            let ab: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
            let (mean_sq, mean_sq_se) = mean_se(&sq);
            let (mean_abs, mean_abs_se) = mean_se(&ab);
            Ok(MomentRow {
                step: n,
                t: ens.grid().node(n),
                mean_sq,
                mean_sq_se,
                mean_abs,
                mean_abs_se,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfsde::solve_frozen;
    use crate::fbm::{sample_fbm, FbmMethod, HurstParams};
    use crate::time::TimeGrid;

    #[test]
    fn fbm_second_moment() {
        for &h in &[0.5, 0.3] {
            let hp = HurstParams::new(h).unwrap();
            let g = TimeGrid::new(1.0, 32).unwrap();
            let ens = sample_fbm(&hp, &g, 2, 4000, FbmMethod::Circulant, 8).unwrap();
            let f = solve_frozen(|_, _, o| o.fill(0.0), &[0.0, 0.0], &ens, "zero").unwrap();
            for row in moment_report(&f, 0, &[8, 16, 32]).unwrap() {
                let exact = 2.0 * row.t.powf(2.0 * h);
                assert!((row.mean_sq - exact).abs() < 3.0 * row.mean_sq_se, "H={h} t={}", row.t);
            }
        }
    }
}
