use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{usage, Result};

use super::{GridField, GridSpec};

/// 2D complex FFT on row-major `[iy][ix]` buffers.
pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            nx,
            ny,
            fx: p.plan_fft_forward(nx),
            fy: p.plan_fft_forward(ny),
            ix: p.plan_fft_inverse(nx),
            iy: p.plan_fft_inverse(ny),
        }
    }

    fn columns(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                col[j] = buf[j * self.nx + i];
            }
            plan.process(&mut col);
            for j in 0..self.ny {
                buf[j * self.nx + i] = col[j];
            }
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.fx.process(buf);
        self.columns(buf, &self.fy);
    }

    /// Normalized inverse.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.ix.process(buf);
        self.columns(buf, &self.iy);
        let s = 1.0 / (self.nx * self.ny) as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

/// Angular wavenumber of FFT index i on a periodic length `len`; the Nyquist
/// index of an even n is reported as `nyquist = true`.
pub(crate) fn wavenumber(i: usize, n: usize, len: f64) -> (f64, bool) {
    let signed = if 2 * i < n { i as f64 } else { i as f64 - n as f64 };
    (2.0 * PI * signed / len, n % 2 == 0 && 2 * i == n)
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn require_periodic(spec: &GridSpec) -> Result<()> {
    if !spec.periodic {
        return usage("operation requires a periodic grid");
    }
    Ok(())
}

/// Applies a Fourier multiplier per output component. `mult(k1, k2, nyq)`
/// returns the multiplier of each output component for one input component.
fn apply_multipliers(
    spec: &GridSpec,
    input: &[f64],
    outputs: usize,
    mult: impl Fn(f64, f64, bool) -> Vec<Complex64>,
) -> Vec<Vec<f64>> {
    let [nx, ny] = spec.shape;
    let [lx, ly] = spec.extent();
    let fft = Fft2::new(nx, ny);
    let mut hat = to_complex(input);
    fft.forward(&mut hat);
    let mut outs = vec![vec![Complex64::new(0.0, 0.0); nx * ny]; outputs];
    for j in 0..ny {
        let (k2, n2) = wavenumber(j, ny, ly);
        for i in 0..nx {
            let (k1, n1) = wavenumber(i, nx, lx);
            let m = mult(k1, k2, n1 || n2);
            for (o, mv) in outs.iter_mut().zip(m) {
                o[j * nx + i] = hat[j * nx + i] * mv;
            }
        }
    }
    outs.into_iter()
        .map(|mut o| {
            fft.inverse(&mut o);
            o.iter().map(|c| c.re).collect()
        })
        .collect()
}

/// E ∇^j f(ξ + x) for ξ ~ N(0, σ² I): convolution with the Gaussian density
/// (j = 0, any component count) or its gradient (j = 1, scalar input,
/// two-component output). Non-periodic fields are zero-padded to twice their
/// extent before the periodic convolution and cropped afterwards.
pub fn gaussian_smooth(f: &GridField, sigma: f64, j: u8) -> Result<GridField> {
    if !(sigma > 0.0) {
        return usage("sigma must be positive");
    }
    if j > 1 {
        return usage("derivative order must be 0 or 1");
    }
    if j == 1 && f.components() != 1 {
        return usage("gradient smoothing acts on scalar fields");
    }
    let spec = *f.spec();
    let (work_spec, pad) = if spec.periodic {
        (spec, false)
    } else {
        let s = GridSpec::new(
            spec.origin,
            spec.spacing,
            [2 * spec.shape[0], 2 * spec.shape[1]],
            true,
        )?;
        (s, true)
    };
    let gauss = |k1: f64, k2: f64| (-0.5 * sigma * sigma * (k1 * k1 + k2 * k2)).exp();
    let outputs = if j == 0 { f.components() } else { 2 };
    let mut data = Vec::with_capacity(outputs * spec.len());
    let embed = |c: usize| -> Vec<f64> {
        let src = f.component(c);
        if !pad {
            return src.to_vec();
        }
        let [nx, ny] = spec.shape;
        let mut out = vec![0.0; work_spec.len()];
        for iy in 0..ny {
            out[iy * 2 * nx..iy * 2 * nx + nx].copy_from_slice(&src[iy * nx..(iy + 1) * nx]);
        }
        out
    };
    let crop = |v: Vec<f64>| -> Vec<f64> {
        if !pad {
            return v;
        }
        let [nx, ny] = spec.shape;
        (0..ny)
            .flat_map(|iy| v[iy * 2 * nx..iy * 2 * nx + nx].to_vec())
            .collect()
    };
    if j == 0 {
        for c in 0..f.components() {
            let out = apply_multipliers(&work_spec, &embed(c), 1, |k1, k2, _| {
                vec![Complex64::new(gauss(k1, k2), 0.0)]
            });
            data.extend(crop(out.into_iter().next().expect("one output")));
        }
    } else {
        let outs = apply_multipliers(&work_spec, &embed(0), 2, |k1, k2, nyq| {
            if nyq {
                return vec![Complex64::new(0.0, 0.0); 2];
            }
            let g = gauss(k1, k2);
            vec![Complex64::new(0.0, k1 * g), Complex64::new(0.0, k2 * g)]
        });
        for o in outs {
            data.extend(crop(o));
        }
    }
    GridField::new(spec, outputs, data)
}

/// Leray projection v̂ − k (k·v̂)/|k|² on a periodic vector field; the zero
/// mode is left untouched.
pub fn leray_project(v: &GridField) -> Result<GridField> {
    let spec = *v.spec();
    require_periodic(&spec)?;
    if v.components() != 2 {
        return usage("Leray projection needs a two-component field");
    }
    let [nx, ny] = spec.shape;
    let [lx, ly] = spec.extent();
    let fft = Fft2::new(nx, ny);
    let mut a = to_complex(v.component(0));
    let mut b = to_complex(v.component(1));
    fft.forward(&mut a);
    fft.forward(&mut b);
    for j in 0..ny {
        let (k2, _) = wavenumber(j, ny, ly);
        for i in 0..nx {
            let (k1, _) = wavenumber(i, nx, lx);
            let kk = k1 * k1 + k2 * k2;
            if kk == 0.0 {
                continue;
            }
            let idx = j * nx + i;
            let dot = (a[idx] * k1 + b[idx] * k2) / kk;
            a[idx] -= dot * k1;
            b[idx] -= dot * k2;
        }
    }
    fft.inverse(&mut a);
    fft.inverse(&mut b);
    let mut data: Vec<f64> = a.iter().map(|c| c.re).collect();
    data.extend(b.iter().map(|c| c.re));
    GridField::new(spec, 2, data)
}

/// u with û = i(−k₂, k₁) ω̂ / |k|², so that ∂₂u₁ − ∂₁u₂ = ω − mean(ω).
pub fn velocity_from_vorticity_torus(w: &GridField) -> Result<GridField> {
    let spec = *w.spec();
    require_periodic(&spec)?;
    if w.components() != 1 {
        return usage("vorticity must be scalar");
    }
    let outs = apply_multipliers(&spec, w.data(), 2, |k1, k2, nyq| {
        let kk = k1 * k1 + k2 * k2;
        if kk == 0.0 || nyq {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(0.0, -k2 / kk), Complex64::new(0.0, k1 / kk)]
    });
    GridField::new(spec, 2, outs.concat())
}

pub(crate) fn derivative(spec: &GridSpec, v: &[f64], axis: usize) -> Vec<f64> {
    apply_multipliers(spec, v, 1, |k1, k2, nyq| {
        let k = if axis == 0 { k1 } else { k2 };
        vec![if nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) }]
    })
    .pop()
    .expect("one output")
}

/// Spectral curl ∂₂u₁ − ∂₁u₂.
pub fn curl_spectral(u: &GridField) -> Result<GridField> {
    let spec = *u.spec();
    require_periodic(&spec)?;
    if u.components() != 2 {
        return usage("curl needs a two-component field");
    }
    let a = derivative(&spec, u.component(0), 1);
    let b = derivative(&spec, u.component(1), 0);
    GridField::new(spec, 1, a.iter().zip(&b).map(|(x, y)| x - y).collect())
}

pub fn divergence_spectral(u: &GridField) -> Result<GridField> {
    let spec = *u.spec();
    require_periodic(&spec)?;
    if u.components() != 2 {
        return usage("divergence needs a two-component field");
    }
    let a = derivative(&spec, u.component(0), 0);
    let b = derivative(&spec, u.component(1), 1);
    GridField::new(spec, 1, a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

/// Componentwise spectral Laplacian.
pub fn laplacian_spectral(u: &GridField) -> Result<GridField> {
    let spec = *u.spec();
    require_periodic(&spec)?;
    let mut data = Vec::with_capacity(u.data().len());
    for c in 0..u.components() {
        let out = apply_multipliers(&spec, u.component(c), 1, |k1, k2, _| {
            vec![Complex64::new(-(k1 * k1 + k2 * k2), 0.0)]
        });
        data.extend(out.into_iter().next().expect("one output"));
    }
    GridField::new(spec, u.components(), data)
}

/// Free-space discrete convolution sum_j h² K(x_i − x_j) f_j on a
/// non-periodic grid via zero-padded FFT; `kernel` is sampled at node
/// offsets and returns `outputs` components.
pub fn convolve_free(
    f: &GridField,
    outputs: usize,
    kernel: impl Fn([f64; 2], &mut [f64]),
) -> Result<GridField> {
    let spec = *f.spec();
    if f.components() != 1 {
        return usage("free-space convolution takes a scalar field");
    }
    let [nx, ny] = spec.shape;
    let (px, py) = (2 * nx, 2 * ny);
    let fft = Fft2::new(px, py);
    let mut src = vec![Complex64::new(0.0, 0.0); px * py];
    for iy in 0..ny {
        for ix in 0..nx {
            src[iy * px + ix] = Complex64::new(f.component(0)[iy * nx + ix], 0.0);
        }
    }
    fft.forward(&mut src);
    let area = spec.cell_area();
    let mut kern = vec![vec![Complex64::new(0.0, 0.0); px * py]; outputs];
    let mut val = vec![0.0; outputs];
    for jy in 0..py {
        let dy = if jy < ny { jy as i64 } else { jy as i64 - py as i64 };
        if dy.unsigned_abs() as usize >= ny {
            continue;
        }
        for jx in 0..px {
            let dx = if jx < nx { jx as i64 } else { jx as i64 - px as i64 };
            if dx.unsigned_abs() as usize >= nx {
                continue;
            }
            kernel([dx as f64 * spec.spacing[0], dy as f64 * spec.spacing[1]], &mut val);
            for c in 0..outputs {
                kern[c][jy * px + jx] = Complex64::new(val[c] * area, 0.0);
            }
        }
    }
    let mut data = Vec::with_capacity(outputs * spec.len());
    for mut k in kern {
        fft.forward(&mut k);
        for (a, b) in k.iter_mut().zip(&src) {
            *a *= b;
        }
        fft.inverse(&mut k);
        for iy in 0..ny {
            data.extend(k[iy * px..iy * px + nx].iter().map(|c| c.re));
        }
    }
    GridField::new(spec, outputs, data)
}

/// u = K₂ * ω on a non-periodic grid (free-space, K₂(0) := 0).
pub fn biot_savart_free(w: &GridField) -> Result<GridField> {
    convolve_free(w, 2, |x, out| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            out[0] = 0.0;
            out[1] = 0.0;
        } else {
            let f = 1.0 / (2.0 * PI * r2);
            out[0] = x[1] * f;
            out[1] = -x[0] * f;
        }
    })
}
