use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

use super::{CubePartition, GridField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormVariant {
    /// sup over cubes of ‖1_{D_i} f‖_p
    Tilde,
    /// sum over cubes of ‖1_{D_i} f‖_p
    Bar,
}

/// Localized L^p norm of a scalar grid field by Riemann sums; each node is
/// assigned to the cube containing it. `p = f64::INFINITY` takes maxima.
pub fn localized_norm(f: &GridField, p: f64, variant: NormVariant) -> Result<f64> {
    if f.components() != 1 {
        return usage("localized norms act on scalar fields");
    }
    if !(p >= 1.0) {
        return usage("p must lie in [1, inf]");
    }
    let spec = f.spec();
    for &h in &spec.spacing {
        let k = 0.5 / h;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return usage("grid spacing must divide 1/2 so cubes are resolved");
        }
    }
    let part = CubePartition::new(2);
    let area = spec.cell_area();
    let mut cubes: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for (i, &v) in f.data().iter().enumerate() {
        let x = spec.point_at(i);
        let z = part.cube_of(&x);
        let e = cubes.entry((z[0], z[1])).or_insert(0.0);
        if p.is_infinite() {
            *e = e.max(v.abs());
        } else {
            *e += v.abs().powf(p) * area;
        }
    }
    let per_cube = cubes.values().map(|&s| if p.is_infinite() { s } else { s.powf(1.0 / p) });
    Ok(match variant {
        NormVariant::Tilde => per_cube.fold(0.0, f64::max),
        NormVariant::Bar => per_cube.sum(),
    })
}
