use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

use super::DistributionFlow;

/// Optimal assignment with the dual potentials that certify it:
/// row[i] + col[j] ≤ c_ij everywhere, with equality on the matching.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub cost: f64,
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

/// Hungarian algorithm (shortest augmenting paths with potentials), O(n³),
/// on a row-major n×n cost matrix.
pub fn hungarian(cost: &[f64], n: usize) -> Result<Assignment> {
    if cost.len() != n * n {
        return usage("cost matrix must be n x n");
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return usage("cost matrix must be finite");
    }
    let c = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(Assignment {
        perm,
        cost: total,
        row: u[1..].to_vec(),
        col: v[1..].to_vec(),
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn logsumexp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Entropic optimal transport between uniform empirical measures in the log
/// domain, with ε annealed down to `reg` times the mean cost. Returns the
/// transport cost of the final plan.
pub fn sinkhorn_w1(a: &[f64], b: &[f64], dim: usize, reg: f64) -> Result<f64> {
    let n = a.len() / dim;
    let m = b.len() / dim;
    if n == 0 || m == 0 {
        return usage("empty empirical measure");
    }
    let cost: Vec<f64> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| distance(&a[i * dim..(i + 1) * dim], &b[j * dim..(j + 1) * dim]))
        .collect();
    let mean = cost.iter().sum::<f64>() / cost.len() as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let target = reg * mean;
    let (la, lb) = (-(n as f64).ln(), -(m as f64).ln());
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut eps = mean;
    loop {
        for _ in 0..200 {
            for i in 0..n {
                let row = &cost[i * m..(i + 1) * m];
                f[i] = -eps * logsumexp(row.iter().zip(&g).map(|(c, gj)| (gj - c) / eps + lb));
            }
            let mut err = 0.0f64;
            for j in 0..m {
                let ng = -eps * logsumexp((0..n).map(|i| (f[i] - cost[i * m + j]) / eps + la));
                err = err.max((ng - g[j]).abs());
                g[j] = ng;
            }
            if err < 1e-9 * mean {
                break;
            }
        }
        if eps <= target {
            break;
        }
        eps = (eps * 0.5).max(target);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let c = cost[i * m + j];
            total += ((f[i] + g[j] - c) / eps + la + lb).exp() * c;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct W1Config {
    /// Exact matching up to this many points, entropic above.
    pub exact_max: usize,
    /// Entropic regularization relative to the mean pairwise cost.
    pub sinkhorn_reg: f64,
    /// Use only the first `max_replicas` samples of each measure.
    pub max_replicas: Option<usize>,
}

impl Default for W1Config {
    fn default() -> Self {
        Self {
            exact_max: 512,
            sinkhorn_reg: 0.01,
            max_replicas: None,
        }
    }
}

/// W₁ between two uniform empirical measures with equal sample counts.
pub fn w1_empirical(a: &[f64], b: &[f64], dim: usize, cfg: &W1Config) -> Result<f64> {
    if a.len() != b.len() || a.len() % dim != 0 {
        return usage("empirical measures must have matching replica counts");
    }
    let mut n = a.len() / dim;
    if let Some(cap) = cfg.max_replicas {
        n = n.min(cap);
    }
    if n == 0 {
        return usage("empty empirical measure");
    }
    let (a, b) = (&a[..n * dim], &b[..n * dim]);
    if n > cfg.exact_max {
        return sinkhorn_w1(a, b, dim, cfg.sinkhorn_reg);
    }
    let cost: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| distance(&a[i * dim..(i + 1) * dim], &b[j * dim..(j + 1) * dim]))
        .collect();
    Ok(hungarian(&cost, n)?.cost / n as f64)
}

/// d_{CP₁} restricted to the flow atoms at one step:
/// sup_j W₁(a^{y_j}, b^{y_j}) / (1 + |y_j|).
pub fn flow_distance_w1(a: &DistributionFlow, b: &DistributionFlow, step: usize, cfg: &W1Config) -> Result<f64> {
    if a.atoms != b.atoms || a.dim != b.dim {
        return usage("flows have different atoms");
    }
    if a.replicas != b.replicas {
        return usage("flows have different replica counts");
    }
    if step >= a.steps() || step >= b.steps() {
        return usage("step outside both flows");
    }
    let mut sup = 0.0f64;
    for j in 0..a.atom_count() {
        let y = a.atom(j);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = w1_empirical(a.measure(step, j), b.measure(step, j), a.dim, cfg)?;
        sup = sup.max(d / (1.0 + norm));
    }
    Ok(sup)
}
