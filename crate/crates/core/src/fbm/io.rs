use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::io::{read_binary, write_binary};
use crate::time::TimeGrid;

use super::{FbmEnsemble, FbmMethod, HurstParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleHeader {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub dim: usize,
    pub replicas: usize,
    pub method: FbmMethod,
    pub seed: u64,
}

impl EnsembleHeader {
    pub fn of(ens: &FbmEnsemble) -> Self {
        Self {
            h: ens.hurst.h(),
            t: ens.grid.horizon(),
            n: ens.grid.steps(),
            dim: ens.dim,
            replicas: ens.replicas,
            method: ens.method,
            seed: ens.seed,
        }
    }
}

/// Columnar CSV `replica,step,component,value`; step 0 rows are included.
pub fn write_ensemble_csv<W: Write>(mut w: W, ens: &FbmEnsemble) -> Result<()> {
    writeln!(w, "replica,step,component,value")?;
    let n = ens.grid.steps();
    for r in 0..ens.replicas {
        for k in 0..=n {
            for c in 0..ens.dim {
                writeln!(w, "{r},{k},{c},{}", ens.value(r, k, c))?;
            }
        }
    }
    Ok(())
}

/// Paths only; the Volterra driver is not part of the dump.
pub fn write_ensemble_binary<W: Write>(w: W, ens: &FbmEnsemble) -> Result<()> {
    write_binary(w, &EnsembleHeader::of(ens), &ens.paths)
}

pub fn read_ensemble_binary<R: Read>(r: R) -> Result<FbmEnsemble> {
    let (hdr, data): (EnsembleHeader, Vec<f64>) = read_binary(r)?;
    let hp = HurstParams::new(hdr.h)?;
    let grid = TimeGrid::new(hdr.t, hdr.n)?;
    if data.len() != hdr.replicas * (hdr.n + 1) * hdr.dim {
        return usage("binary payload size does not match header");
    }
    FbmEnsemble::from_parts(hp, grid, hdr.dim, hdr.replicas, hdr.method, hdr.seed, data, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::sample_fbm;
    use proptest::prelude::*;

    #[test]
    fn csv_shape() {
        let hp = HurstParams::brownian();
        let g = TimeGrid::new(1.0, 8).unwrap();
        let ens = sample_fbm(&hp, &g, 1, 1, FbmMethod::ExactCholesky, 7).unwrap();
        let mut out = Vec::new();
        write_ensemble_csv(&mut out, &ens).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,0"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn binary_round_trip(h in 0.1f64..=0.5, n in 1usize..12, dim in 1usize..3, reps in 1usize..4, seed in any::<u64>()) {
            let hp = HurstParams::new(h).unwrap();
            let g = TimeGrid::new(0.8, n).unwrap();
            let ens = sample_fbm(&hp, &g, dim, reps, FbmMethod::Circulant, seed).unwrap();
            let mut buf = Vec::new();
            write_ensemble_binary(&mut buf, &ens).unwrap();
            let back = read_ensemble_binary(&buf[..]).unwrap();
            prop_assert_eq!(back.paths(), ens.paths());
            prop_assert_eq!(EnsembleHeader::of(&back), EnsembleHeader::of(&ens));
        }
    }
}
