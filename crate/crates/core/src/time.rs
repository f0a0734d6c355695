use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Uniform grid t_n = start + n (T - start) / N on [start, T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    start: f64,
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        Self::on_interval(0.0, horizon, steps)
    }

    pub fn on_interval(start: f64, horizon: f64, steps: usize) -> Result<Self> {
        if !(start.is_finite() && horizon.is_finite()) || horizon <= start || start < 0.0 {
            return domain(format!("time interval [{start}, {horizon}] must satisfy 0 <= start < T"));
        }
        if steps == 0 {
            return domain("number of steps must be positive");
        }
        Ok(Self { start, horizon, steps })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        (self.horizon - self.start) / self.steps as f64
    }

    pub fn node(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            self.start + n as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.node(n)).collect()
    }

    /// Grid restricted to [t_k, T]; shares nodes with `self`.
    pub fn tail(&self, k: usize) -> Result<Self> {
        if k >= self.steps {
            return domain("tail grid must keep at least one step");
        }
        Ok(Self {
            start: self.node(k),
            horizon: self.horizon,
            steps: self.steps - k,
        })
    }

    /// Index of the node nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.start) / self.dt()).round();
        k.clamp(0.0, self.steps as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_exact() {
        let g = TimeGrid::new(0.7, 13).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(13), 0.7);
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tail_shares_nodes() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let t = g.tail(4).unwrap();
        assert_eq!(t.steps(), 6);
        assert!((t.node(2) - g.node(6)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }
}
