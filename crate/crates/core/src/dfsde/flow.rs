use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fbm::HurstParams;
use crate::time::TimeGrid;

/// Particle positions X^{y_j, m}_{s, t_n} laid out `[step][atom][replica][dim]`.
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    pub(crate) grid: TimeGrid,
    pub(crate) dim: usize,
    pub(crate) atoms: Vec<f64>,
    pub(crate) replicas: usize,
    pub(crate) positions: Vec<f64>,
    pub(crate) hurst: HurstParams,
    pub(crate) drift: String,
    pub(crate) seed: u64,
}

impl FlowEnsemble {
    pub(crate) fn with_start(
        grid: TimeGrid,
        dim: usize,
        atoms: &[f64],
        replicas: usize,
        hurst: HurstParams,
        drift: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 || atoms.len() % dim != 0 {
            return usage("atom buffer length must be a multiple of the dimension");
        }
        if replicas == 0 {
            return usage("at least one replica is required");
        }
        let j = atoms.len() / dim;
        let mut positions = vec![0.0; (grid.steps() + 1) * j * replicas * dim];
        for a in 0..j {
            for m in 0..replicas {
                let off = (a * replicas + m) * dim;
                positions[off..off + dim].copy_from_slice(&atoms[a * dim..(a + 1) * dim]);
            }
        }
        Ok(Self {
            grid,
            dim,
            atoms: atoms.to_vec(),
            replicas,
            positions,
            hurst,
            drift: drift.into(),
            seed,
        })
    }

    pub fn start(&self) -> f64 {
        self.grid.start()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.atoms[j * self.dim..(j + 1) * self.dim]
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn hurst(&self) -> &HurstParams {
        &self.hurst
    }

    pub fn drift_label(&self) -> &str {
        &self.drift
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    fn snapshot_len(&self) -> usize {
        self.atom_count() * self.replicas * self.dim
    }

    /// All particles at step n, `[atom][replica][dim]`.
    pub fn snapshot(&self, n: usize) -> &[f64] {
        let l = self.snapshot_len();
        &self.positions[n * l..(n + 1) * l]
    }

    pub(crate) fn snapshot_mut(&mut self, n: usize) -> &mut [f64] {
        let l = self.snapshot_len();
        &mut self.positions[n * l..(n + 1) * l]
    }

    /// Empirical marginal of atom j at step n, `[replica][dim]`.
    pub fn marginal(&self, n: usize, j: usize) -> &[f64] {
        let per = self.replicas * self.dim;
        &self.snapshot(n)[j * per..(j + 1) * per]
    }

    pub fn position(&self, n: usize, j: usize, m: usize) -> &[f64] {
        &self.marginal(n, j)[m * self.dim..(m + 1) * self.dim]
    }

    pub fn flow(&self) -> DistributionFlow {
        DistributionFlow {
            dim: self.dim,
            atoms: self.atoms.clone(),
            times: self.grid.nodes(),
            replicas: self.replicas,
            points: self.positions.clone(),
        }
    }

    pub fn into_flow(self) -> DistributionFlow {
        DistributionFlow {
            dim: self.dim,
            atoms: self.atoms,
            times: self.grid.nodes(),
            replicas: self.replicas,
            points: self.positions,
        }
    }
}

/// Uniform-weight empirical measures μ^{y_j}_{s,t_n} for every (atom, step).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFlow {
    pub(crate) dim: usize,
    pub(crate) atoms: Vec<f64>,
    pub(crate) times: Vec<f64>,
    pub(crate) replicas: usize,
    pub(crate) points: Vec<f64>,
}

impl DistributionFlow {
    /// Builds a flow from `[step][atom][replica][dim]` samples.
    pub fn new(dim: usize, atoms: Vec<f64>, times: Vec<f64>, replicas: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.len() % dim != 0 || replicas == 0 {
            return usage("flow needs a positive dimension and replica count");
        }
        if points.len() != times.len() * atoms.len() * replicas {
            return usage("flow sample buffer does not match steps x atoms x replicas x dim");
        }
        Ok(Self {
            dim,
            atoms,
            times,
            replicas,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.atoms[j * self.dim..(j + 1) * self.dim]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn measure(&self, n: usize, j: usize) -> &[f64] {
        let per = self.replicas * self.dim;
        let off = (n * self.atom_count() + j) * per;
        &self.points[off..off + per]
    }

    /// Mass of the empirical measure (always 1 for uniform weights).
    pub fn mass(&self, n: usize, j: usize) -> f64 {
        self.measure(n, j).len() as f64 / (self.dim * self.replicas) as f64
    }

    /// Per-atom histogram of μ^{y_j}_{t_n} on a common binning.
    pub fn histogram(&self, n: usize, j: usize, binning: &Binning) -> Result<Vec<f64>> {
        binning.histogram(self.measure(n, j), self.dim)
    }
}

/// Rectangular 2D histogram binning with one overflow bin collecting mass
/// outside [lo, hi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub bins: [usize; 2],
}

impl Binning {
    pub fn new(lo: [f64; 2], hi: [f64; 2], bins: [usize; 2]) -> Result<Self> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) || bins[0] == 0 || bins[1] == 0 {
            return usage("binning needs lo < hi and at least one bin per axis");
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn len(&self) -> usize {
        self.bins[0] * self.bins[1] + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bin_of(&self, x: &[f64]) -> usize {
        let mut idx = [0usize; 2];
        for c in 0..2 {
            let f = (x[c] - self.lo[c]) / (self.hi[c] - self.lo[c]);
            if !(0.0..1.0).contains(&f) {
                return self.bins[0] * self.bins[1];
            }
            idx[c] = ((f * self.bins[c] as f64) as usize).min(self.bins[c] - 1);
        }
        idx[1] * self.bins[0] + idx[0]
    }

    /// Normalized bin probabilities of a `[replica][dim]` sample.
    pub fn histogram(&self, points: &[f64], dim: usize) -> Result<Vec<f64>> {
        if dim != 2 {
            return usage("histogram binning is two-dimensional");
        }
        let n = points.len() / dim;
        if n == 0 {
            return usage("empty sample");
        }
        let mut h = vec![0.0; self.len()];
        for p in points.chunks_exact(dim) {
            h[self.bin_of(p)] += 1.0;
        }
        for v in h.iter_mut() {
            *v /= n as f64;
        }
        Ok(h)
    }
}
