use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fields::{derivative, laplacian_spectral, leray_project, GridField, GridSpec};

use super::VelocityField;

/// Orientation of the time variable in the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDirection {
    /// ∂_t u − νΔu + u·∇u + ∇p = 0
    Forward,
    /// ∂_s u + νΔu + u·∇u + ∇p = 0
    Backward,
}

impl TimeDirection {
    fn viscous_sign(self) -> f64 {
        match self {
            Self::Forward => -1.0,
            Self::Backward => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualForm {
    /// Leray-projected momentum equation with spectral derivatives.
    Velocity,
    /// Vorticity transport with fourth-order differences on interior nodes.
    Vorticity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// ‖r‖₂ / ‖νΔ·‖₂, 0 when the residual vanishes identically.
    pub relative: f64,
    pub residual_l2: f64,
    pub viscous_l2: f64,
    pub form: ResidualForm,
}

impl ResidualReport {
    fn from_sums(r2: f64, v2: f64, form: ResidualForm) -> Self {
        let (r, v) = (r2.sqrt(), v2.sqrt());
        Self {
            relative: if r == 0.0 { 0.0 } else { r / v },
            residual_l2: r,
            viscous_l2: v,
            form,
        }
    }
}

fn uniform_times(times: &[f64]) -> Result<()> {
    if times.len() < 3 {
        return usage("the residual needs at least three snapshots");
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return usage("snapshots must be uniformly spaced in time");
    }
    Ok(())
}

/// Fourth-order first derivative along `axis` at node (ix, iy).
fn d1(f: &[f64], spec: &GridSpec, axis: usize, ix: usize, iy: usize) -> f64 {
    let h = spec.spacing[axis];
    let at = |o: i64| {
        let (x, y) = if axis == 0 { ((ix as i64 + o) as usize, iy) } else { (ix, (iy as i64 + o) as usize) };
        f[spec.index(x, y)]
    };
    (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
}

/// Fourth-order second derivative along `axis`.
fn d2(f: &[f64], spec: &GridSpec, axis: usize, ix: usize, iy: usize) -> f64 {
    let h = spec.spacing[axis];
    let at = |o: i64| {
        let (x, y) = if axis == 0 { ((ix as i64 + o) as usize, iy) } else { (ix, (iy as i64 + o) as usize) };
        f[spec.index(x, y)]
    };
    (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * h * h)
}

/// Residual of ∂_t w ∓ νΔw + u·∇w over snapshots of vorticity `w` and
/// velocity `u` on a shared non-periodic grid, at interior nodes two cells
/// from the boundary and interior times.
pub fn vorticity_residual(w: &[GridField], u: &[GridField], times: &[f64], nu: f64, dir: TimeDirection) -> Result<ResidualReport> {
    uniform_times(times)?;
    if w.len() != times.len() || u.len() != times.len() {
        return usage("one vorticity and one velocity snapshot per time");
    }
    let spec = *w[0].spec();
    if w.iter().any(|f| *f.spec() != spec || f.components() != 1) || u.iter().any(|f| *f.spec() != spec || f.components() != 2) {
        return usage("snapshots live on different grids");
    }
    let [nx, ny] = spec.shape;
    if nx < 5 || ny < 5 {
        return usage("grid too small for fourth-order differences");
    }
    let sign = dir.viscous_sign();
    let (mut r2, mut v2) = (0.0, 0.0);
    for k in 1..times.len() - 1 {
        let dt2 = times[k + 1] - times[k - 1];
        let (wm, wc, wp) = (w[k - 1].data(), w[k].data(), w[k + 1].data());
        let (u1, u2) = (u[k].component(0), u[k].component(1));
        for iy in 2..ny - 2 {
            for ix in 2..nx - 2 {
                let i = spec.index(ix, iy);
                let dt_w = (wp[i] - wm[i]) / dt2;
                let lap = d2(wc, &spec, 0, ix, iy) + d2(wc, &spec, 1, ix, iy);
                let adv = u1[i] * d1(wc, &spec, 0, ix, iy) + u2[i] * d1(wc, &spec, 1, ix, iy);
                let r = dt_w + sign * nu * lap + adv;
                r2 += r * r;
                v2 += (nu * lap).powi(2);
            }
        }
    }
    Ok(ResidualReport::from_sums(r2, v2, ResidualForm::Vorticity))
}

/// Curl ∂₂u₁ − ∂₁u₂ by fourth-order differences on the sub-grid two
/// cells inside `u`, plus `u` restricted to the same nodes.
fn interior_curl(u: &GridField) -> Result<(GridField, GridField)> {
    let spec = *u.spec();
    let [nx, ny] = spec.shape;
    let sub = GridSpec::new(
        [spec.origin[0] + 2.0 * spec.spacing[0], spec.origin[1] + 2.0 * spec.spacing[1]],
        spec.spacing,
        [nx - 4, ny - 4],
        false,
    )?;
    let (a, b) = (u.component(0), u.component(1));
    let mut w = Vec::with_capacity(sub.len());
    let mut v = vec![Vec::with_capacity(sub.len()); 2];
    for iy in 2..ny - 2 {
        for ix in 2..nx - 2 {
            w.push(d1(a, &spec, 1, ix, iy) - d1(b, &spec, 0, ix, iy));
            v[0].push(a[spec.index(ix, iy)]);
            v[1].push(b[spec.index(ix, iy)]);
        }
    }
    Ok((GridField::new(sub, 1, w)?, GridField::new(sub, 2, v.concat())?))
}

/// Relative residual of the Navier–Stokes equation with viscosity ν over
/// time-indexed velocity snapshots. Periodic grids use the projected
/// momentum form P(∂_t u ∓ νΔu + u·∇u) with spectral derivatives; other
/// grids use the vorticity form on interior nodes.
pub fn ns_residual(u: &[VelocityField], nu: f64, dir: TimeDirection) -> Result<ResidualReport> {
    let times: Vec<f64> = u.iter().map(|f| f.t).collect();
    uniform_times(&times)?;
    let spec = *u[0].spec();
    if u.iter().any(|f| *f.spec() != spec) {
        return usage("snapshots live on different grids");
    }
    if !spec.periodic {
        if spec.shape[0] < 9 || spec.shape[1] < 9 {
            return usage("grid too small for the vorticity residual");
        }
        let (w, v): (Vec<GridField>, Vec<GridField>) = u.iter().map(|f| interior_curl(&f.field)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
        return vorticity_residual(&w, &v, &times, nu, dir);
    }
    let sign = dir.viscous_sign();
    let area = spec.cell_area();
    let (mut r2, mut v2) = (0.0, 0.0);
    for k in 1..u.len() - 1 {
        let f = &u[k].field;
        let lap = laplacian_spectral(f)?;
        let grads: Vec<GridField> = (0..2)
            .map(|c| spectral_gradient(&GridField::new(spec, 1, f.component(c).to_vec())?))
            .collect::<Result<_>>()?;
        let dt2 = times[k + 1] - times[k - 1];
        let mut r = Vec::with_capacity(2 * spec.len());
        for c in 0..2 {
            let (up, um) = (u[k + 1].field.component(c), u[k - 1].field.component(c));
            for i in 0..spec.len() {
                let adv = f.component(0)[i] * grads[c].component(0)[i] + f.component(1)[i] * grads[c].component(1)[i];
                r.push((up[i] - um[i]) / dt2 + sign * nu * lap.component(c)[i] + adv);
            }
        }
        let projected = leray_project(&GridField::new(spec, 2, r)?)?;
        r2 += projected.data().iter().map(|v| v * v).sum::<f64>() * area;
        v2 += lap.data().iter().map(|v| (nu * v).powi(2)).sum::<f64>() * area;
    }
    Ok(ResidualReport::from_sums(r2, v2, ResidualForm::Velocity))
}

fn spectral_gradient(f: &GridField) -> Result<GridField> {
    let spec = *f.spec();
    let data = [derivative(&spec, f.data(), 0), derivative(&spec, f.data(), 1)].concat();
    GridField::new(spec, 2, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nse::{lamb_oseen, lamb_oseen_vorticity, VelocitySource};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn snapshots(spec: GridSpec, times: &[f64], f: impl Fn(f64, [f64; 2]) -> [f64; 2]) -> Vec<VelocityField> {
        times
            .iter()
            .map(|&t| {
                let g = GridField::from_fn(spec, 2, |x, o| {
                    let v = f(t, x);
                    o[0] = v[0];
                    o[1] = v[1];
                });
                VelocityField::new(g, t, 0.0, VelocitySource::ClosedForm).unwrap()
            })
            .collect()
    }

    #[test]
    fn constant_field_has_zero_residual() {
        let spec = GridSpec::periodic_square(2.0 * PI, 16).unwrap();
        let u = snapshots(spec, &[0.0, 0.1, 0.2], |_, _| [0.3, -1.2]);
        let r = ns_residual(&u, 0.5, TimeDirection::Forward).unwrap();
        assert!(r.residual_l2 < 1e-12 && r.relative == 0.0, "{r:?}");
    }

    #[test]
    fn decaying_shear_is_an_exact_solution() {
        let spec = GridSpec::periodic_square(2.0 * PI, 32).unwrap();
        let nu = 0.4;
        let times: Vec<f64> = (0..5).map(|k| 0.01 * k as f64).collect();
        let fwd = snapshots(spec, &times, |t, x| [x[1].sin() * (-nu * t).exp(), 0.0]);
        let r = ns_residual(&fwd, nu, TimeDirection::Forward).unwrap();
        assert!(r.relative < 1e-4, "{r:?}");
        // the same data violate the backward equation
        let b = ns_residual(&fwd, nu, TimeDirection::Backward).unwrap();
        assert!(b.relative > 1.5, "{b:?}");
        let bwd = snapshots(spec, &times, |s, x| [x[1].sin() * (nu * s).exp(), 0.0]);
        assert!(ns_residual(&bwd, nu, TimeDirection::Backward).unwrap().relative < 1e-4);
    }

    #[test]
    fn lamb_oseen_residual_shrinks_with_refinement() {
        let nu = 0.5;
        let times: Vec<f64> = (0..5).map(|k| 0.5 + 0.002 * k as f64).collect();
        let rel = |n: usize| {
            let spec = GridSpec::centered(2.5, n).unwrap();
            let u = snapshots(spec, &times, |t, x| lamb_oseen(1.0, nu, t, x).unwrap());
            ns_residual(&u, nu, TimeDirection::Forward).unwrap().relative
        };
        let (a, b) = (rel(33), rel(65));
        assert!(a < 0.05 && b < a / 4.0, "{a} {b}");
    }

    #[test]
    fn vorticity_form_with_exact_vorticity() {
        let nu = 0.5;
        let spec = GridSpec::centered(2.5, 61).unwrap();
        let times: Vec<f64> = (0..3).map(|k| 0.5 + 0.001 * k as f64).collect();
        let w: Vec<GridField> = times
            .iter()
            .map(|&t| GridField::scalar_from_fn(spec, |x| lamb_oseen_vorticity(1.0, nu, t, x).unwrap()))
            .collect();
        let u: Vec<GridField> = snapshots(spec, &times, |t, x| lamb_oseen(1.0, nu, t, x).unwrap())
            .into_iter()
            .map(|v| v.field)
            .collect();
        let r = vorticity_residual(&w, &u, &times, nu, TimeDirection::Forward).unwrap();
        assert!(r.relative < 1e-3, "{r:?}");
    }

    #[test]
    fn noise_has_order_one_residual() {
        let spec = GridSpec::periodic_square(2.0 * PI, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<VelocityField> = (0..4)
            .map(|k| {
                let g = GridField::new(spec, 2, (0..2 * spec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
                VelocityField::new(g, 0.1 * k as f64, 0.0, VelocitySource::ClosedForm).unwrap()
            })
            .collect();
        let r = ns_residual(&u, 0.01, TimeDirection::Forward).unwrap();
        assert!(r.relative > 0.3, "{r:?}");
    }

    #[test]
    fn rejects_uneven_times() {
        let spec = GridSpec::periodic_square(1.0, 8).unwrap();
        let u = snapshots(spec, &[0.0, 0.1, 0.3], |_, _| [0.0, 0.0]);
        assert!(ns_residual(&u, 0.1, TimeDirection::Forward).is_err());
    }
}
