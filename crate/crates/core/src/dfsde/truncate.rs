/// F(x) = x when ‖x‖ ≤ 1, x/‖x‖ otherwise, applied to a value G(x) with its
/// norm given separately.
pub fn truncate_by_norm(value: &[f64], norm: f64) -> Vec<f64> {
    if norm <= 1.0 {
        value.to_vec()
    } else {
        value.iter().map(|v| v / norm).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l1(x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    #[test]
    fn fixed_examples() {
        assert_eq!(truncate_by_norm(&[1.0, -2.0], 0.5), vec![1.0, -2.0]);
        assert_eq!(truncate_by_norm(&[1.0, -2.0], 4.0), vec![0.25, -0.5]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        // G linear with ‖G‖_Lip = L in ℓ¹, G(0) = 0; F(x) = G(x) truncated by ‖x‖₁
        #[test]
        fn lipschitz_bound(
            x in proptest::collection::vec(-3.0f64..3.0, 3),
            y in proptest::collection::vec(-3.0f64..3.0, 3),
            a in proptest::collection::vec(-1.0f64..1.0, 9),
        ) {
            let g = |v: &[f64]| -> Vec<f64> {
                (0..3).map(|i| (0..3).map(|j| a[i * 3 + j] * v[j]).sum()).collect()
            };
            // induced ℓ¹ operator norm: max column sum
            let lip = (0..3).map(|j| (0..3).map(|i| a[i * 3 + j].abs()).sum::<f64>()).fold(0.0, f64::max);
            let fx = truncate_by_norm(&g(&x), l1(&x));
            let fy = truncate_by_norm(&g(&y), l1(&y));
            let diff: Vec<f64> = fx.iter().zip(&fy).map(|(p, q)| p - q).collect();
            let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
            prop_assert!(l1(&diff) <= 2.0 * lip * l1(&xy) + 1e-12);
            prop_assert!(l1(&fx) <= l1(&g(&x)) + 1e-15);
        }
    }
}
