use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::rng::{fill_normal, substream, StreamTag};
use crate::time::TimeGrid;

use super::{covariance_unchecked, HurstParams, VolterraKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FbmMethod {
    ExactCholesky,
    Circulant,
    Volterra,
}

impl FbmMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExactCholesky => "exact-cholesky",
            Self::Circulant => "circulant",
            Self::Volterra => "volterra",
        }
    }
}

/// Sampled paths, laid out as `[replica][step][component]` with N+1 steps.
#[derive(Debug, Clone)]
pub struct FbmEnsemble {
    pub(crate) hurst: HurstParams,
    pub(crate) grid: TimeGrid,
    pub(crate) dim: usize,
    pub(crate) replicas: usize,
    pub(crate) method: FbmMethod,
    pub(crate) seed: u64,
    pub(crate) paths: Vec<f64>,
    /// Standard Brownian increments `[replica][step][component]`, N steps.
    pub(crate) driver: Option<Vec<f64>>,
}

impl FbmEnsemble {
    pub fn hurst(&self) -> &HurstParams {
        &self.hurst
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn method(&self) -> FbmMethod {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn paths(&self) -> &[f64] {
        &self.paths
    }

    pub fn driver(&self) -> Option<&[f64]> {
        self.driver.as_deref()
    }

    fn stride(&self) -> usize {
        (self.grid.steps() + 1) * self.dim
    }

    /// Path of one replica, `[step][component]`.
    pub fn path(&self, replica: usize) -> &[f64] {
        let s = self.stride();
        &self.paths[replica * s..(replica + 1) * s]
    }

    pub fn value(&self, replica: usize, step: usize, component: usize) -> f64 {
        self.paths[replica * self.stride() + step * self.dim + component]
    }

    /// Driver increments of one replica, `[step][component]`.
    pub fn driver_path(&self, replica: usize) -> Option<&[f64]> {
        let s = self.grid.steps() * self.dim;
        self.driver
            .as_ref()
            .map(|d| &d[replica * s..(replica + 1) * s])
    }

    /// Assembles an ensemble from raw parts (used when reading dumps).
    pub fn from_parts(
        hurst: HurstParams,
        grid: TimeGrid,
        dim: usize,
        replicas: usize,
        method: FbmMethod,
        seed: u64,
        paths: Vec<f64>,
        driver: Option<Vec<f64>>,
    ) -> Result<Self> {
        if paths.len() != replicas * (grid.steps() + 1) * dim {
            return usage("path buffer length does not match replicas x steps x dim");
        }
        if let Some(d) = &driver {
            if d.len() != replicas * grid.steps() * dim {
                return usage("driver buffer length does not match replicas x steps x dim");
            }
        }
        Ok(Self {
            hurst,
            grid,
            dim,
            replicas,
            method,
            seed,
            paths,
            driver,
        })
    }
}

/// Samples `replicas` independent d-dimensional fBm paths on `grid`.
///
/// Component `c` of replica `r` draws from substream (seed, method, r, c), so
/// results are independent of thread count.
pub fn sample_fbm(
    hp: &HurstParams,
    grid: &TimeGrid,
    dim: usize,
    replicas: usize,
    method: FbmMethod,
    seed: u64,
) -> Result<FbmEnsemble> {
    if replicas == 0 || dim == 0 {
        return usage("replicas and dim must be positive");
    }
    if grid.start() != 0.0 {
        return usage("fBm grids must start at 0");
    }
    let n = grid.steps();
    let stride = (n + 1) * dim;
    let mut paths = vec![0.0; replicas * stride];
    let mut driver = None;
    match method {
        FbmMethod::ExactCholesky => {
            let l = cholesky_factor(hp, grid)?;
            paths.par_chunks_mut(stride).enumerate().for_each(|(r, path)| {
                let mut z = vec![0.0; n];
                for c in 0..dim {
                    let mut rng = substream(seed, StreamTag::FbmCholesky, r as u64, c as u64);
                    fill_normal(&mut rng, &mut z, 1.0);
                    for i in 0..n {
                        let row = l.row(i);
                        let mut acc = 0.0;
                        for k in 0..=i {
                            acc += row[k] * z[k];
                        }
                        path[(i + 1) * dim + c] = acc;
                    }
                }
            });
        }
        FbmMethod::Circulant => {
            let lambda = circulant_eigenvalues(hp.h(), n)?;
            let dt_h = grid.dt().powf(hp.h());
            let m = 2 * n;
            let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
            let amp: Vec<f64> = lambda.iter().map(|&l| (l.max(0.0) / m as f64).sqrt()).collect();
            paths.par_chunks_mut(stride).enumerate().for_each(|(r, path)| {
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                let mut z = vec![0.0; 2 * m];
                for c in 0..dim {
                    let mut rng = substream(seed, StreamTag::FbmCirculant, r as u64, c as u64);
                    fill_normal(&mut rng, &mut z, 1.0);
                    for k in 0..m {
                        buf[k] = Complex64::new(amp[k] * z[2 * k], amp[k] * z[2 * k + 1]);
                    }
                    fft.process(&mut buf);
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += buf[i].re * dt_h;
                        path[(i + 1) * dim + c] = acc;
                    }
                }
            });
        }
        FbmMethod::Volterra => {
            let weights = volterra_weights(hp, grid)?;
            let sqdt = grid.dt().sqrt();
            let dstride = n * dim;
            let mut inc = vec![0.0; replicas * dstride];
            paths
                .par_chunks_mut(stride)
                .zip(inc.par_chunks_mut(dstride))
                .enumerate()
                .for_each(|(r, (path, dw))| {
                    let mut z = vec![0.0; n];
                    for c in 0..dim {
                        let mut rng = substream(seed, StreamTag::FbmVolterra, r as u64, c as u64);
                        fill_normal(&mut rng, &mut z, sqdt);
                        for k in 0..n {
                            dw[k * dim + c] = z[k];
                        }
                        match &weights {
                            None => {
                                let mut acc = 0.0;
                                for k in 0..n {
                                    acc += z[k];
                                    path[(k + 1) * dim + c] = acc;
                                }
                            }
                            Some(w) => {
                                for i in 1..=n {
                                    let row = &w[(i - 1) * i / 2..i * (i + 1) / 2];
                                    let acc: f64 = row.iter().zip(&z[..i]).map(|(a, b)| a * b).sum();
                                    path[i * dim + c] = acc;
                                }
                            }
                        }
                    }
                });
            driver = Some(inc);
        }
    }
    Ok(FbmEnsemble {
        hurst: *hp,
        grid: *grid,
        dim,
        replicas,
        method,
        seed,
        paths,
        driver,
    })
}

fn cholesky_factor(hp: &HurstParams, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let n = grid.steps();
    let t = grid.nodes();
    let cov = DMatrix::from_fn(n, n, |i, j| covariance_unchecked(hp.h(), t[i + 1], t[j + 1]));
    Cholesky::new(cov)
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

/// Eigenvalues of the size-2n circulant embedding of unit-step fGn
/// autocovariance. Errors when the embedding is not nonnegative definite.
pub fn circulant_eigenvalues(h: f64, n: usize) -> Result<Vec<f64>> {
    let gamma = |k: f64| {
        let e = 2.0 * h;
        0.5 * ((k + 1.0).abs().powf(e) - 2.0 * k.abs().powf(e) + (k - 1.0).abs().powf(e))
    };
    let m = 2 * n;
    let mut row: Vec<f64> = (0..m)
        .map(|j| {
            let k = if j <= n { j } else { m - j };
            gamma(k as f64)
        })
        .collect();
    embedding_spectrum(&mut row)
}

pub(crate) fn embedding_spectrum(row: &mut [f64]) -> Result<Vec<f64>> {
    let m = row.len();
    let mut buf: Vec<Complex64> = row.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let lambda: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let scale = lambda.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::NonPositiveEmbedding { min_eigenvalue: min });
    }
    Ok(lambda)
}

/// Lower-triangular packed weights K_H(t_i, t_k + dt/2), or None for H = 1/2.
fn volterra_weights(hp: &HurstParams, grid: &TimeGrid) -> Result<Option<Vec<f64>>> {
    if hp.is_brownian() {
        return Ok(None);
    }
    let kernel = VolterraKernel::new(*hp)?;
    let n = grid.steps();
    let dt = grid.dt();
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let t = grid.node(i);
            (0..i)
                .map(|k| kernel.eval_unchecked(t, (k as f64 + 0.5) * dt))
                .collect()
        })
        .collect();
    Ok(Some(rows.concat()))
}
