use crate::error::{usage, Result};
use crate::time::TimeGrid;

/// Absolutely continuous path with h(0) = 0 and derivative piecewise constant
/// on grid cells, stored `[step][component]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsContPath {
    grid: TimeGrid,
    dim: usize,
    derivative: Vec<f64>,
}

impl AbsContPath {
    pub fn new(grid: TimeGrid, dim: usize, derivative: Vec<f64>) -> Result<Self> {
        if dim == 0 || derivative.len() != grid.steps() * dim {
            return usage("derivative samples must have length steps x dim");
        }
        if derivative.iter().any(|v| !v.is_finite()) {
            return usage("derivative samples must be finite");
        }
        Ok(Self {
            grid,
            dim,
            derivative,
        })
    }

    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let mut d = vec![0.0; grid.steps() * dim];
        for k in 0..grid.steps() {
            f(grid.node(k), &mut d[k * dim..(k + 1) * dim]);
        }
        Self::new(grid, dim, d)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn derivative(&self) -> &[f64] {
        &self.derivative
    }

    /// h(t_n) for n = 0..=N, `[node][component]`.
    pub fn values(&self) -> Vec<f64> {
        let dt = self.grid.dt();
        let mut out = vec![0.0; (self.grid.steps() + 1) * self.dim];
        for k in 0..self.grid.steps() {
            for c in 0..self.dim {
                out[(k + 1) * self.dim + c] = out[k * self.dim + c] + self.derivative[k * self.dim + c] * dt;
            }
        }
        out
    }

    /// ‖h‖_{H^q} = ‖ḣ‖_{L^q} with the Euclidean norm on components.
    pub fn hq_norm(&self, q: f64) -> f64 {
        let dt = self.grid.dt();
        self.derivative
            .chunks(self.dim)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt().powf(q) * dt)
            .sum::<f64>()
            .powf(1.0 / q)
    }
}
