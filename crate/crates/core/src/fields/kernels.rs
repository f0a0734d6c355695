use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Recorded in output metadata: results at fixed ε depend on this profile.
pub const MOLLIFIER_SHAPE: &str =
    "K2(x) * (1 - (1 - |x|^2/(4 eps^2))^3) for |x| < 2 eps, K2(x) otherwise";

/// K₂(x) = (x₂, −x₁) / (2π|x|²).
pub fn biot_savart(x: [f64; 2]) -> Result<[f64; 2]> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return domain("Biot–Savart kernel is singular at the origin; use the mollified kernel");
    }
    let f = 1.0 / (2.0 * PI * r2);
    Ok([x[1] * f, -x[0] * f])
}

/// Vortex-blob kernel K₂^ε(x) = K₂(x) s(|x|/ε) with s(ρ) = 1 − (1 − ρ²/4)³
/// on ρ < 2 and 1 beyond.
///
/// s(ρ) ≈ 3ρ²/4 near 0, so the kernel is linear at the origin and vanishes
/// there. It is K₂ convolved with a compactly supported radial mollifier,
/// hence exactly divergence-free, and |K₂^ε| ≤ 1/(2πε).
#[inline]
pub fn biot_savart_mollified(x: [f64; 2], eps: f64) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let q = (1.0 - r2 / (4.0 * eps * eps)).max(0.0);
    let s = 1.0 - q * q * q;
    let f = s / (2.0 * PI * r2.max(f64::MIN_POSITIVE));
    [x[1] * f, -x[0] * f]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_directions() {
        let a = biot_savart([1.0, 0.0]).unwrap();
        assert!((a[0]).abs() < 1e-18 && (a[1] + 1.0 / (2.0 * PI)).abs() < 1e-15);
        let b = biot_savart([0.0, 1.0]).unwrap();
        assert!((b[0] - 1.0 / (2.0 * PI)).abs() < 1e-15 && b[1].abs() < 1e-18);
        assert!(biot_savart([0.0, 0.0]).is_err());
    }

    #[test]
    fn mollified_special_points() {
        assert_eq!(biot_savart_mollified([0.0, 0.0], 0.1), [0.0, 0.0]);
        let eps = 0.05;
        let x = [3.0 * eps * 0.6, 3.0 * eps * 0.8];
        assert_eq!(biot_savart_mollified(x, eps), biot_savart(x).unwrap());
        let y = [2.0 * eps, 0.0];
        let k = biot_savart(y).unwrap();
        let m = biot_savart_mollified(y, eps);
        assert!((m[1] - k[1]).abs() < 1e-15);
    }

    #[test]
    fn dense_sup_bound() {
        let eps = 0.03;
        let mut worst = 0.0f64;
        for i in 0..400 {
            for j in 0..400 {
                let x = [(i as f64 - 200.0) * eps / 50.0, (j as f64 - 200.0) * eps / 50.0];
                let v = biot_savart_mollified(x, eps);
                worst = worst.max((v[0] * v[0] + v[1] * v[1]).sqrt());
            }
        }
        assert!(worst <= 1.0 / (2.0 * PI * eps));
    }

    proptest! {
        #[test]
        fn antisymmetric(x in -5.0f64..5.0, y in -5.0f64..5.0, eps in 0.01f64..1.0) {
            prop_assume!(x * x + y * y > 1e-12);
            let a = biot_savart([x, y]).unwrap();
            let b = biot_savart([-x, -y]).unwrap();
            prop_assert!((a[0] + b[0]).abs() < 1e-15 && (a[1] + b[1]).abs() < 1e-15);
            let c = biot_savart_mollified([x, y], eps);
            let d = biot_savart_mollified([-x, -y], eps);
            prop_assert!((c[0] + d[0]).abs() < 1e-15 && (c[1] + d[1]).abs() < 1e-15);
        }

        #[test]
        fn divergence_free_away_from_origin(r in 0.5f64..4.0, th in 0.0f64..6.283) {
            let x = [r * th.cos(), r * th.sin()];
            let h = 1e-4;
            let d1 = (biot_savart([x[0] + h, x[1]]).unwrap()[0] - biot_savart([x[0] - h, x[1]]).unwrap()[0]) / (2.0 * h);
            let d2 = (biot_savart([x[0], x[1] + h]).unwrap()[1] - biot_savart([x[0], x[1] - h]).unwrap()[1]) / (2.0 * h);
            let scale = 1.0 / (2.0 * PI * r * r);
            prop_assert!((d1 + d2).abs() <= 1e-6 * scale);
        }

        #[test]
        fn mollified_divergence_free(r in 0.001f64..0.2, th in 0.0f64..6.283) {
            let eps = 0.05;
            let x = [r * th.cos(), r * th.sin()];
            let h = 1e-5;
            let d1 = (biot_savart_mollified([x[0] + h, x[1]], eps)[0] - biot_savart_mollified([x[0] - h, x[1]], eps)[0]) / (2.0 * h);
            let d2 = (biot_savart_mollified([x[0], x[1] + h], eps)[1] - biot_savart_mollified([x[0], x[1] - h], eps)[1]) / (2.0 * h);
            let scale = 1.0 / (2.0 * PI * eps * eps);
            prop_assert!((d1 + d2).abs() <= 1e-5 * scale);
        }
    }
}
