use serde::Serialize;

use crate::error::{usage, Result};

use super::GridField;

/// Discrete L² norms of ∇·u and ∇u over the nodes where central differences
/// are defined (all nodes when periodic, the interior otherwise).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DivergenceReport {
    pub div_l2: f64,
    pub grad_l2: f64,
    pub div_sup: f64,
    pub interior_nodes: usize,
}

impl DivergenceReport {
    pub fn ratio(&self) -> f64 {
        if self.grad_l2 == 0.0 {
            if self.div_l2 == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.div_l2 / self.grad_l2
        }
    }
}

/// Central-difference stencil accessor. Returns None at non-periodic edges.
fn stencil(f: &GridField, c: usize, ix: usize, iy: usize) -> Option<[f64; 2]> {
    let spec = f.spec();
    let [nx, ny] = spec.shape;
    let [hx, hy] = spec.spacing;
    let v = f.component(c);
    let (xm, xp, ym, yp) = if spec.periodic {
        ((ix + nx - 1) % nx, (ix + 1) % nx, (iy + ny - 1) % ny, (iy + 1) % ny)
    } else {
        if ix == 0 || iy == 0 || ix + 1 >= nx || iy + 1 >= ny {
            return None;
        }
        (ix - 1, ix + 1, iy - 1, iy + 1)
    };
    Some([
        (v[spec.index(xp, iy)] - v[spec.index(xm, iy)]) / (2.0 * hx),
        (v[spec.index(ix, yp)] - v[spec.index(ix, ym)]) / (2.0 * hy),
    ])
}

fn require_vector(u: &GridField) -> Result<()> {
    if u.components() != 2 {
        return usage("finite-difference operators need a two-component field");
    }
    Ok(())
}

pub fn divergence_fd(u: &GridField) -> Result<DivergenceReport> {
    require_vector(u)?;
    let spec = u.spec();
    let area = spec.cell_area();
    let (mut div2, mut grad2, mut sup, mut n) = (0.0, 0.0, 0.0f64, 0usize);
    for iy in 0..spec.shape[1] {
        for ix in 0..spec.shape[0] {
            let (Some(a), Some(b)) = (stencil(u, 0, ix, iy), stencil(u, 1, ix, iy)) else {
                continue;
            };
            let d = a[0] + b[1];
            div2 += d * d * area;
            grad2 += (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]) * area;
            sup = sup.max(d.abs());
            n += 1;
        }
    }
    if n == 0 {
        return usage("grid has no interior nodes");
    }
    Ok(DivergenceReport {
        div_l2: div2.sqrt(),
        grad_l2: grad2.sqrt(),
        div_sup: sup,
        interior_nodes: n,
    })
}

/// Curl ∂₂u₁ − ∂₁u₂ by central differences; NaN where undefined.
pub fn curl_fd(u: &GridField) -> Result<GridField> {
    require_vector(u)?;
    let spec = *u.spec();
    let mut out = vec![f64::NAN; spec.len()];
    for iy in 0..spec.shape[1] {
        for ix in 0..spec.shape[0] {
            if let (Some(a), Some(b)) = (stencil(u, 0, ix, iy), stencil(u, 1, ix, iy)) {
                out[spec.index(ix, iy)] = a[1] - b[0];
            }
        }
    }
    GridField::new(spec, 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;

    #[test]
    fn rotation_field() {
        let spec = GridSpec::centered(1.0, 20).unwrap();
        // u = (x₂, −x₁): divergence-free, curl 2
        let u = GridField::from_fn(spec, 2, |x, o| {
            o[0] = x[1];
            o[1] = -x[0];
        });
        let r = divergence_fd(&u).unwrap();
        assert!(r.div_l2 < 1e-12 && r.grad_l2 > 1.0);
        assert_eq!(r.interior_nodes, 18 * 18);
        let c = curl_fd(&u).unwrap();
        assert!(c.data()[0].is_nan());
        assert!((c.data()[spec.index(5, 7)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_field_has_ratio_near_one() {
        let spec = GridSpec::centered(1.0, 64).unwrap();
        // u = ∇(x₁² + x₂²)/2 = x: div 2, |∇u|² = 2
        let u = GridField::from_fn(spec, 2, |x, o| {
            o[0] = x[0];
            o[1] = x[1];
        });
        let r = divergence_fd(&u).unwrap();
        assert!((r.ratio() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn periodic_wraps() {
        let n = 64;
        let spec = GridSpec::periodic_square(std::f64::consts::TAU, n).unwrap();
        let u = GridField::from_fn(spec, 2, |x, o| {
            o[0] = x[1].sin();
            o[1] = 0.0;
        });
        let c = curl_fd(&u).unwrap();
        let h = spec.spacing[0];
        let expect = h.sin() / h;
        for idx in [0usize, 7, n * n - 1] {
            let x = spec.point_at(idx);
            assert!((c.data()[idx] - expect * x[1].cos()).abs() < 1e-12);
        }
    }
}
