use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// Finite signed measure Σ_j w_j δ_{y_j} on ℝ².
///
/// Atoms at identical locations are merged and zero weights pruned on
/// construction, so the variation norm is always computed after merging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSignedMeasure {
    atoms: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl DiscreteSignedMeasure {
    pub fn new(atoms: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return usage("atom and weight counts differ");
        }
        let mut merged_atoms: Vec<[f64; 2]> = Vec::with_capacity(atoms.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (y, w) in atoms.into_iter().zip(weights) {
            if !(y[0].is_finite() && y[1].is_finite() && w.is_finite()) {
                return usage("measure atoms and weights must be finite");
            }
            match merged_atoms.iter().position(|a| *a == y) {
                Some(i) => merged_weights[i] += w,
                None => {
                    merged_atoms.push(y);
                    merged_weights.push(w);
                }
            }
        }
        let (atoms, weights) = merged_atoms
            .into_iter()
            .zip(merged_weights)
            .filter(|(_, w)| *w != 0.0)
            .unzip();
        Ok(Self { atoms, weights })
    }

    pub fn empty() -> Self {
        Self {
            atoms: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn dirac(y: [f64; 2], w: f64) -> Self {
        Self::new(vec![y], vec![w]).expect("finite atom")
    }

    /// Tensor Gauss–Hermite discretization of mass · N(center, σ² I) with
    /// `n` nodes per axis (n ≤ 5).
    pub fn gaussian_blob(center: [f64; 2], sigma: f64, mass: f64, n: usize) -> Result<Self> {
        let (nodes, weights): (&[f64], &[f64]) = match n {
            1 => (&[0.0], &[1.0]),
            2 => (&[-1.0, 1.0], &[0.5, 0.5]),
            3 => (&[-1.732_050_807_568_877_2, 0.0, 1.732_050_807_568_877_2], &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]),
            4 => (
                &[-2.334_414_218_338_977, -0.741_963_784_302_725_9, 0.741_963_784_302_725_9, 2.334_414_218_338_977],
                &[0.045_875_854_768_068_49, 0.454_124_145_231_931_5, 0.454_124_145_231_931_5, 0.045_875_854_768_068_49],
            ),
            5 => (
                &[-2.856_970_013_872_805_6, -1.355_626_179_974_265_9, 0.0, 1.355_626_179_974_265_9, 2.856_970_013_872_805_6],
                &[0.011_257_411_327_720_69, 0.222_075_922_005_612_6, 0.533_333_333_333_333_3, 0.222_075_922_005_612_6, 0.011_257_411_327_720_69],
            ),
            _ => return usage("Gauss–Hermite blob supports 1 to 5 nodes per axis"),
        };
        let mut atoms = Vec::with_capacity(n * n);
        let mut ws = Vec::with_capacity(n * n);
        for (i, &a) in nodes.iter().enumerate() {
            for (j, &b) in nodes.iter().enumerate() {
                atoms.push([center[0] + sigma * a, center[1] + sigma * b]);
                ws.push(mass * weights[i] * weights[j]);
            }
        }
        Self::new(atoms, ws)
    }

    pub fn atoms(&self) -> &[[f64; 2]] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// ν^λ(dy) = λ^{1/H−2} ν(d(λy)): atoms move to y/λ, weights scale.
    pub fn rescaled(&self, lambda: f64, h: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return usage("scaling factor must be positive");
        }
        let f = lambda.powf(1.0 / h - 2.0);
        Self::new(
            self.atoms.iter().map(|y| [y[0] / lambda, y[1] / lambda]).collect(),
            self.weights.iter().map(|w| w * f).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merge_and_prune() {
        let m = DiscreteSignedMeasure::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [2.0, 2.0]],
            vec![0.5, 1.0, 0.25, 0.0],
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.75, 1.0]);
        assert_eq!(m.total_variation(), 1.75);
        let zero = DiscreteSignedMeasure::new(vec![[0.0, 0.0], [1.0, 1.0]], vec![0.5, -0.5]).unwrap();
        assert_eq!(zero.total_mass(), 0.0);
        assert_eq!(zero.total_variation(), 1.0);
        let cancel = DiscreteSignedMeasure::new(vec![[0.0, 0.0], [0.0, 0.0]], vec![0.5, -0.5]).unwrap();
        assert!(cancel.is_empty());
        assert!(DiscreteSignedMeasure::new(vec![[f64::NAN, 0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn blob_moments() {
        let b = DiscreteSignedMeasure::gaussian_blob([0.2, -0.1], 0.3, 1.0, 5).unwrap();
        assert_eq!(b.len(), 25);
        assert!((b.total_mass() - 1.0).abs() < 1e-14);
        let mut m = [0.0; 2];
        let mut v = 0.0;
        for (y, w) in b.atoms().iter().zip(b.weights()) {
            m[0] += w * y[0];
            m[1] += w * y[1];
            v += w * (y[0] - 0.2).powi(2);
        }
        assert!((m[0] - 0.2).abs() < 1e-14 && (m[1] + 0.1).abs() < 1e-14);
        assert!((v - 0.09).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn variation_after_merge(ws in proptest::collection::vec(-2.0f64..2.0, 1..12)) {
            // every atom at one of three sites
            let atoms: Vec<[f64; 2]> = (0..ws.len()).map(|i| [(i % 3) as f64, 0.0]).collect();
            let m = DiscreteSignedMeasure::new(atoms, ws.clone()).unwrap();
            let mut site = [0.0; 3];
            for (i, w) in ws.iter().enumerate() {
                site[i % 3] += w;
            }
            let expect: f64 = site.iter().map(|w| w.abs()).sum();
            prop_assert!((m.total_variation() - expect).abs() < 1e-12);
            prop_assert!((m.total_mass() - ws.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}
