use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::fields::{wavenumber, Fft2, GridField, GridSpec};
use crate::time::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    /// Abort when max|u| dt / dx exceeds this.
    pub cfl_limit: f64,
    /// Keep every `stride`-th snapshot (the last one is always kept).
    pub stride: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cfl_limit: 0.5,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub times: Vec<f64>,
    pub vorticity: Vec<GridField>,
    /// ∫ω² dx at every step, including unstored ones.
    pub enstrophy: Vec<f64>,
    /// ∫ω dx at every step.
    pub circulation: Vec<f64>,
}

struct Stepper {
    spec: GridSpec,
    fft: Fft2,
    /// −ν|k|²
    lin: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    /// 2/3-rule mask, also zero on the Nyquist rows/columns.
    mask: Vec<bool>,
    dx: f64,
}

impl Stepper {
    fn new(spec: GridSpec, nu: f64) -> Self {
        let [nx, ny] = spec.shape;
        let [lx, ly] = spec.extent();
        let mut lin = vec![0.0; nx * ny];
        let mut k1 = vec![0.0; nx * ny];
        let mut k2 = vec![0.0; nx * ny];
        let mut mask = vec![false; nx * ny];
        for j in 0..ny {
            let (b, nb) = wavenumber(j, ny, ly);
            let sj = if 2 * j < ny { j } else { ny - j };
            for i in 0..nx {
                let (a, na) = wavenumber(i, nx, lx);
                let si = if 2 * i < nx { i } else { nx - i };
                let idx = j * nx + i;
                lin[idx] = -nu * (a * a + b * b);
                if !(na || nb) {
                    k1[idx] = a;
                    k2[idx] = b;
                }
                mask[idx] = 3 * si < nx && 3 * sj < ny && !(na || nb);
            }
        }
        Self {
            spec,
            fft: Fft2::new(nx, ny),
            lin,
            k1,
            k2,
            mask,
            dx: spec.spacing[0].min(spec.spacing[1]),
        }
    }

    /// Dealiased −∇·(uω) in Fourier space; also returns max|u|.
    fn nonlinear(&self, w_hat: &[Complex64]) -> (Vec<Complex64>, f64) {
        let zero = Complex64::new(0.0, 0.0);
        let n = w_hat.len();
        let mut u1 = vec![zero; n];
        let mut u2 = vec![zero; n];
        for idx in 0..n {
            let kk = self.k1[idx] * self.k1[idx] + self.k2[idx] * self.k2[idx];
            if kk > 0.0 {
                u1[idx] = w_hat[idx] * Complex64::new(0.0, -self.k2[idx] / kk);
                u2[idx] = w_hat[idx] * Complex64::new(0.0, self.k1[idx] / kk);
            }
        }
        let mut w = w_hat.to_vec();
        self.fft.inverse(&mut u1);
        self.fft.inverse(&mut u2);
        self.fft.inverse(&mut w);
        let mut umax = 0.0f64;
        for idx in 0..n {
            let (a, b, c) = (u1[idx].re, u2[idx].re, w[idx].re);
            umax = umax.max(a.hypot(b));
            u1[idx] = Complex64::new(a * c, 0.0);
            u2[idx] = Complex64::new(b * c, 0.0);
        }
        self.fft.forward(&mut u1);
        self.fft.forward(&mut u2);
        let out = (0..n)
            .map(|idx| {
                if self.mask[idx] {
                    -(u1[idx] * Complex64::new(0.0, self.k1[idx]) + u2[idx] * Complex64::new(0.0, self.k2[idx]))
                } else {
                    zero
                }
            })
            .collect();
        (out, umax)
    }

    fn step(&self, w: &mut [Complex64], dt: f64, cfl_limit: f64) -> Result<()> {
        let e: Vec<f64> = self.lin.iter().map(|l| (l * dt * 0.5).exp()).collect();
        let (a, umax) = self.nonlinear(w);
        let courant = umax * dt / self.dx;
        if courant > cfl_limit {
            return Err(Error::Cfl {
                courant,
                limit: cfl_limit,
                suggested_dt: 0.9 * cfl_limit * self.dx / umax,
            });
        }
        let h = 0.5 * dt;
        let s2: Vec<Complex64> = (0..w.len()).map(|i| e[i] * (w[i] + a[i] * h)).collect();
        let (b, _) = self.nonlinear(&s2);
        let s3: Vec<Complex64> = (0..w.len()).map(|i| e[i] * w[i] + b[i] * h).collect();
        let (c, _) = self.nonlinear(&s3);
        let s4: Vec<Complex64> = (0..w.len()).map(|i| e[i] * e[i] * w[i] + c[i] * (e[i] * dt)).collect();
        let (d, _) = self.nonlinear(&s4);
        for i in 0..w.len() {
            let e2 = e[i] * e[i];
            w[i] = e2 * w[i] + (a[i] * e2 + (b[i] + c[i]) * (2.0 * e[i]) + d[i]) * (dt / 6.0);
        }
        Ok(())
    }

    fn physical(&self, w_hat: &[Complex64]) -> Result<GridField> {
        let mut w = w_hat.to_vec();
        self.fft.inverse(&mut w);
        GridField::new(self.spec, 1, w.iter().map(|c| c.re).collect())
    }
}

/// Pseudo-spectral vorticity solver for ∂_t ω = νΔω − u·∇ω, u = K₂ * ω with
/// the zero mode of ω ignored for the velocity. Integrating factor for νΔ,
/// classical RK4 for the transport term written as −∇·(uω), 2/3 dealiasing.
pub fn spectral_oracle(w0: &GridField, nu: f64, grid: &TimeGrid, opts: &OracleOptions) -> Result<OracleRun> {
    let spec = *w0.spec();
    if !spec.periodic || w0.components() != 1 {
        return usage("the spectral oracle needs a scalar field on a periodic grid");
    }
    if !(nu > 0.0) || !(opts.cfl_limit > 0.0) || opts.stride == 0 {
        return usage("need nu > 0, a positive CFL limit and stride >= 1");
    }
    if !w0.is_finite() {
        return Err(Error::NonFinite {
            context: "initial vorticity".into(),
        });
    }
    let st = Stepper::new(spec, nu);
    let mut w: Vec<Complex64> = w0.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    st.fft.forward(&mut w);
    let area = spec.cell_area();
    let stats = |f: &GridField| (f.data().iter().map(|v| v * v).sum::<f64>() * area, f.integral(0));
    let (e0, c0) = stats(w0);
    let mut run = OracleRun {
        times: vec![grid.start()],
        vorticity: vec![w0.clone()],
        enstrophy: vec![e0],
        circulation: vec![c0],
    };
    for n in 0..grid.steps() {
        st.step(&mut w, grid.node(n + 1) - grid.node(n), opts.cfl_limit)?;
        let f = st.physical(&w)?;
        if !f.is_finite() {
            return Err(Error::NonFinite {
                context: format!("oracle vorticity at step {}", n + 1),
            });
        }
        let (e, c) = stats(&f);
        run.enstrophy.push(e);
        run.circulation.push(c);
        if (n + 1) % opts.stride == 0 || n + 1 == grid.steps() {
            run.times.push(grid.node(n + 1));
            run.vorticity.push(f);
        }
    }
    Ok(run)
}
