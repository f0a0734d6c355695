//! Fractional Brownian motion with Hurst index H in (0, 1/2].

mod io;
mod kernel;
mod sample;

pub use io::{read_ensemble_binary, write_ensemble_binary, write_ensemble_csv, EnsembleHeader};
pub use kernel::{volterra_kernel, VolterraKernel};
pub use sample::{circulant_eigenvalues, sample_fbm, FbmEnsemble, FbmMethod};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::quad::beta_fn;

/// H together with q_H = 1/(1-H) and the kernel normalization c_H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HurstParams {
    h: f64,
    q: f64,
    c: f64,
}

impl HurstParams {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) {
            return domain(format!("Hurst index must lie in (0, 1/2], got {h}"));
        }
        // (1-2H) B(1-2H, H+1/2) = (3/2-H) B(2-2H, H+1/2)
        let c = (2.0 * h / ((1.5 - h) * beta_fn(2.0 - 2.0 * h, h + 0.5)?)).sqrt();
        Ok(Self {
            h,
            q: 1.0 / (1.0 - h),
            c,
        })
    }

    pub fn brownian() -> Self {
        Self::new(0.5).expect("H = 1/2 is valid")
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_brownian(&self) -> bool {
        self.h == 0.5
    }
}

/// E[W^H_t W^H_s] = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
pub fn fbm_covariance(hp: &HurstParams, t: f64, s: f64) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) {
        return domain(format!("fBm covariance needs nonnegative times, got ({t}, {s})"));
    }
    Ok(covariance_unchecked(hp.h, t, s))
}

pub(crate) fn covariance_unchecked(h: f64, t: f64, s: f64) -> f64 {
    let e = 2.0 * h;
    0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // c_H from 30-digit quadrature of the Beta expression.
    const C_H: [(f64, f64); 6] = [
        (0.1, 0.35768577342234),
        (0.2, 0.55634286500720),
        (0.25, 0.64599800374075),
        (0.3, 0.73028293407992),
        (0.4, 0.88072568336373),
        (0.45, 0.94492003787945),
    ];

    #[test]
    fn c_h_reference_values() {
        for &(h, c) in &C_H {
            let hp = HurstParams::new(h).unwrap();
            assert!((hp.c() - c).abs() < 1e-12, "c_{h} = {} vs {c}", hp.c());
        }
    }

    #[test]
    fn brownian_constants() {
        let hp = HurstParams::brownian();
        assert!((hp.c() - 1.0).abs() <= f64::EPSILON);
        assert_eq!(hp.q(), 2.0);
    }

    #[test]
    fn rejects_out_of_range() {
        for h in [0.0, -0.1, 0.51, 0.7, f64::NAN] {
            assert!(HurstParams::new(h).is_err());
        }
    }

    #[test]
    fn covariance_examples() {
        let hp = HurstParams::new(0.3).unwrap();
        assert_eq!(fbm_covariance(&hp, 1.0, 0.0).unwrap(), 0.0);
        let bm = HurstParams::brownian();
        assert!((fbm_covariance(&bm, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let q = HurstParams::new(0.25).unwrap();
        assert!((fbm_covariance(&q, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(fbm_covariance(&q, -1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn constants_in_range(h in 0.01f64..=0.5) {
            let hp = HurstParams::new(h).unwrap();
            prop_assert!(hp.q() >= 1.0 && hp.q() <= 2.0 + 1e-15);
            prop_assert!(hp.c() > 0.0);
        }

        #[test]
        fn covariance_symmetric(h in 0.01f64..=0.5, t in 0.0f64..10.0, s in 0.0f64..10.0) {
            let hp = HurstParams::new(h).unwrap();
            let a = fbm_covariance(&hp, t, s).unwrap();
            let b = fbm_covariance(&hp, s, t).unwrap();
            prop_assert_eq!(a, b);
            // Cauchy-Schwarz
            let tt = fbm_covariance(&hp, t, t).unwrap();
            let ss = fbm_covariance(&hp, s, s).unwrap();
            prop_assert!(a * a <= tt * ss * (1.0 + 1e-12) + 1e-300);
        }
    }
}
