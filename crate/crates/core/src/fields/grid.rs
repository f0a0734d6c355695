use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::io::{read_binary, write_binary};

/// Uniform rectangular grid: node (i, j) sits at origin + (i h_x, j h_y).
/// On a periodic grid the domain is [origin, origin + shape * spacing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub shape: [usize; 2],
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], spacing: [f64; 2], shape: [usize; 2], periodic: bool) -> Result<Self> {
        if !(spacing[0] > 0.0 && spacing[1] > 0.0) || shape[0] == 0 || shape[1] == 0 {
            return usage("grid spacing must be positive and shape nonzero");
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return usage("grid origin must be finite");
        }
        Ok(Self {
            origin,
            spacing,
            shape,
            periodic,
        })
    }

    /// Square cell-centered grid covering [-half, half)² with n nodes per side.
    pub fn centered(half: f64, n: usize) -> Result<Self> {
        let h = 2.0 * half / n as f64;
        Self::new([-half + 0.5 * h, -half + 0.5 * h], [h, h], [n, n], false)
    }

    /// Periodic square [0, len)² with n nodes per side.
    pub fn periodic_square(len: f64, n: usize) -> Result<Self> {
        Self::new([0.0, 0.0], [len / n as f64, len / n as f64], [n, n], true)
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.spacing[0],
            self.origin[1] + iy as f64 * self.spacing[1],
        ]
    }

    pub fn point_at(&self, idx: usize) -> [f64; 2] {
        self.point(idx % self.shape[0], idx / self.shape[0])
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.shape[0] + ix
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    pub fn extent(&self) -> [f64; 2] {
        [
            self.shape[0] as f64 * self.spacing[0],
            self.shape[1] as f64 * self.spacing[1],
        ]
    }

    /// Same spacing/shape, translated or scaled nodes.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            [self.origin[0] * factor, self.origin[1] * factor],
            [self.spacing[0] * factor, self.spacing[1] * factor],
            self.shape,
            self.periodic,
        )
    }
}

/// Samples of a scalar (components = 1) or vector field, component-major:
/// `data[c * len + iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    components: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, components: usize, data: Vec<f64>) -> Result<Self> {
        if components == 0 || data.len() != components * spec.len() {
            return usage("field data length must equal components x grid size");
        }
        Ok(Self {
            spec,
            components,
            data,
        })
    }

    pub fn zeros(spec: GridSpec, components: usize) -> Self {
        Self {
            spec,
            components,
            data: vec![0.0; components * spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, components: usize, f: impl Fn([f64; 2], &mut [f64])) -> Self {
        let n = spec.len();
        let mut data = vec![0.0; components * n];
        let mut buf = vec![0.0; components];
        for idx in 0..n {
            f(spec.point_at(idx), &mut buf);
            for c in 0..components {
                data[c * n + idx] = buf[c];
            }
        }
        Self {
            spec,
            components,
            data,
        }
    }

    pub fn scalar_from_fn(spec: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn(spec, 1, |x, out| out[0] = f(x))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.spec.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.spec.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn at(&self, ix: usize, iy: usize, c: usize) -> f64 {
        self.data[c * self.spec.len() + self.spec.index(ix, iy)]
    }

    /// Pointwise Euclidean magnitude over components.
    pub fn magnitude(&self) -> GridField {
        let n = self.spec.len();
        let data = (0..n)
            .map(|i| {
                (0..self.components)
                    .map(|c| self.data[c * n + i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        GridField {
            spec: self.spec,
            components: 1,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same(&self, other: &GridField) -> Result<()> {
        if self.spec != other.spec || self.components != other.components {
            return usage("fields live on different grids");
        }
        Ok(())
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        GridField::new(self.spec, self.components, data)
    }

    pub fn scale(&self, factor: f64) -> GridField {
        GridField {
            spec: self.spec,
            components: self.components,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// sqrt(sum |f|² h²) over the nodes selected by `mask`.
    pub fn l2_norm_where(&self, mask: impl Fn([f64; 2]) -> bool) -> f64 {
        let n = self.spec.len();
        let mut acc = 0.0;
        for i in 0..n {
            if mask(self.spec.point_at(i)) {
                for c in 0..self.components {
                    acc += self.data[c * n + i].powi(2);
                }
            }
        }
        (acc * self.spec.cell_area()).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_where(|_| true)
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitude().data.iter().cloned().fold(0.0, f64::max)
    }

    /// Riemann sum of each component.
    pub fn integral(&self, c: usize) -> f64 {
        self.component(c).iter().sum::<f64>() * self.spec.cell_area()
    }

    /// Bilinear interpolation; None outside the node hull (non-periodic grids).
    pub fn interpolate(&self, x: [f64; 2], out: &mut [f64]) -> bool {
        let s = &self.spec;
        let mut idx = [0usize; 2];
        let mut frac = [0.0; 2];
        for d in 0..2 {
            let u = (x[d] - s.origin[d]) / s.spacing[d];
            let n = s.shape[d];
            if s.periodic {
                let u = u.rem_euclid(n as f64);
                let i = (u.floor() as usize).min(n - 1);
                idx[d] = i;
                frac[d] = u - i as f64;
            } else {
                if !(u >= 0.0 && u <= (n - 1) as f64) {
                    return false;
                }
                let i = (u.floor() as usize).min(n.saturating_sub(2));
                idx[d] = i;
                frac[d] = u - i as f64;
            }
        }
        let nx = s.shape[0];
        let ny = s.shape[1];
        let (i0, j0) = (idx[0], idx[1]);
        let (i1, j1) = if s.periodic {
            ((i0 + 1) % nx, (j0 + 1) % ny)
        } else {
            ((i0 + 1).min(nx - 1), (j0 + 1).min(ny - 1))
        };
        let (fx, fy) = (frac[0], frac[1]);
        let n = s.len();
        for c in 0..self.components {
            let base = c * n;
            let v00 = self.data[base + j0 * nx + i0];
            let v10 = self.data[base + j0 * nx + i1];
            let v01 = self.data[base + j1 * nx + i0];
            let v11 = self.data[base + j1 * nx + i1];
            out[c] = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
        }
        true
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridHeader {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub shape: [usize; 2],
    pub periodic: bool,
    pub components: usize,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

/// CSV with columns x, y, c0, c1, ...
pub fn write_grid_csv<W: Write>(mut w: W, f: &GridField) -> Result<()> {
    write!(w, "x,y")?;
    for c in 0..f.components {
        write!(w, ",c{c}")?;
    }
    writeln!(w)?;
    let n = f.spec.len();
    for i in 0..n {
        let p = f.spec.point_at(i);
        write!(w, "{},{}", p[0], p[1])?;
        for c in 0..f.components {
            write!(w, ",{}", f.data[c * n + i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_grid_binary<W: Write>(
    w: W,
    f: &GridField,
    metadata: serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let header = GridHeader {
        origin: f.spec.origin,
        spacing: f.spec.spacing,
        shape: f.spec.shape,
        periodic: f.spec.periodic,
        components: f.components,
        metadata,
    };
    write_binary(w, &header, &f.data)
}

pub fn read_grid_binary<R: Read>(r: R) -> Result<(GridField, GridHeader)> {
    let (hdr, data): (GridHeader, Vec<f64>) = read_binary(r)?;
    let spec = GridSpec::new(hdr.origin, hdr.spacing, hdr.shape, hdr.periodic)?;
    Ok((GridField::new(spec, hdr.components, data)?, hdr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_and_access() {
        let spec = GridSpec::new([0.0, 1.0], [0.5, 0.25], [3, 2], false).unwrap();
        let f = GridField::from_fn(spec, 2, |x, o| {
            o[0] = x[0];
            o[1] = x[1];
        });
        assert_eq!(f.at(2, 1, 0), 1.0);
        assert_eq!(f.at(2, 1, 1), 1.25);
        assert!(GridField::new(spec, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn bilinear_exact_on_affine() {
        let spec = GridSpec::centered(1.0, 16).unwrap();
        let f = GridField::scalar_from_fn(spec, |x| 2.0 * x[0] - 3.0 * x[1] + 0.5);
        let mut out = [0.0];
        assert!(f.interpolate([0.123, -0.456], &mut out));
        assert!((out[0] - (2.0 * 0.123 + 3.0 * 0.456 + 0.5)).abs() < 1e-13);
        assert!(!f.interpolate([5.0, 0.0], &mut out));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn binary_round_trip(nx in 1usize..6, ny in 1usize..6, comps in 1usize..3, periodic in any::<bool>(), seed in 0u64..100) {
            let spec = GridSpec::new([-0.3, 0.7], [0.1, 0.2], [nx, ny], periodic).unwrap();
            let f = GridField::from_fn(spec, comps, |x, o| {
                for (c, v) in o.iter_mut().enumerate() {
                    *v = (x[0] * (c + 1) as f64 + seed as f64).sin() * x[1];
                }
            });
            let mut buf = Vec::new();
            write_grid_binary(&mut buf, &f, Default::default()).unwrap();
            let (back, hdr) = read_grid_binary(&buf[..]).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(hdr.shape, [nx, ny]);
        }
    }
}
