use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// Probabilists' 3-point Gauss–Hermite rule.
pub(crate) const GH3: [(f64, f64); 3] = [
    (-1.732_050_807_568_877_2, 1.0 / 6.0),
    (0.0, 2.0 / 3.0),
    (1.732_050_807_568_877_2, 1.0 / 6.0),
];

/// The worked regular example in d = 2:
///
/// B(x, μ, ν) = ∫ b₁(x − y) μ^y(φ₁) dy + ∫ (b₂ * ν^z)(x) φ₂(z) dz − λx
///
/// with b₁(x) = a₁ x e^{−|x|²/(2ℓ₁²)}, φ₁ a unit-height Gaussian bump,
/// b₂(x) = a₂ x / √(1 + |x|²) and φ₂ = m₂ N(c₂, ℓ₂² I). The y-integral runs
/// over a square lattice and the z-integral uses a 3×3 Gauss–Hermite rule,
/// so μ and ν are only ever needed at those start points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularDrift {
    pub a1: f64,
    pub l1: f64,
    pub phi1_center: [f64; 2],
    pub phi1_width: f64,
    pub a2: f64,
    pub phi2_center: [f64; 2],
    pub phi2_width: f64,
    pub phi2_mass: f64,
    pub lambda: f64,
    #[serde(default = "default_half")]
    pub lattice_half: f64,
    #[serde(default = "default_nodes")]
    pub lattice_nodes: usize,
    /// Young splitting parameter for the κ constants; 2b when absent.
    #[serde(default)]
    pub delta: Option<f64>,
}

fn default_half() -> f64 {
    3.0
}

fn default_nodes() -> usize {
    7
}

/// Constants certifying 2⟨x, B⟩ + ‖Σ‖²_HS ≤ κ₀ + κ₁|x|² + κ₂(‖μ‖² + ‖ν‖²)
/// for the implemented (discretized) drift with Σ = I.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaConstants {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k5: Option<f64>,
    pub delta: f64,
    /// sup_x |B₁| bound.
    pub a: f64,
    /// Coefficient of ‖ν‖ in the B₂ bound.
    pub b: f64,
}

impl KappaConstants {
    pub fn dissipative(&self) -> bool {
        self.k1 < 0.0 && self.k1 + 2.0 * self.k2 < 0.0
    }

    /// e^{κ₁t}|x|² + (κ₀ + κ₅)(e^{κ₁t} − 1)/κ₁.
    pub fn moment_bound(&self, x_sq: f64, t: f64) -> Option<f64> {
        let k5 = self.k5?;
        let e = (self.k1 * t).exp();
        Some(e * x_sq + (self.k0 + k5) * (e - 1.0) / self.k1)
    }
}

impl RegularDrift {
    /// A small dissipative instance used by the examples and tests.
    pub fn example(lambda: f64) -> Self {
        Self {
            a1: 0.5,
            l1: 1.0,
            phi1_center: [0.5, 0.0],
            phi1_width: 1.0,
            a2: 0.2,
            phi2_center: [-0.5, 0.5],
            phi2_width: 0.5,
            phi2_mass: 1.0,
            lambda,
            lattice_half: 3.0,
            lattice_nodes: 7,
            delta: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.a1,
            self.l1,
            self.phi1_width,
            self.a2,
            self.phi2_width,
            self.phi2_mass,
            self.lambda,
            self.lattice_half,
            self.phi1_center[0],
            self.phi1_center[1],
            self.phi2_center[0],
            self.phi2_center[1],
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return usage("regular drift parameters must be finite");
        }
        if !(self.l1 > 0.0 && self.phi1_width > 0.0 && self.phi2_width > 0.0 && self.lattice_half > 0.0) {
            return usage("regular drift widths must be positive");
        }
        if self.lattice_nodes < 2 {
            return usage("lattice needs at least 2 nodes per axis");
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return usage("delta must be positive");
            }
        }
        Ok(())
    }

    pub fn lattice_spacing(&self) -> f64 {
        2.0 * self.lattice_half / (self.lattice_nodes - 1) as f64
    }

    /// Start points y_k of the μ-lattice, row-major.
    pub fn lattice(&self) -> Vec<[f64; 2]> {
        let h = self.lattice_spacing();
        let n = self.lattice_nodes;
        (0..n * n)
            .map(|k| [-self.lattice_half + (k % n) as f64 * h, -self.lattice_half + (k / n) as f64 * h])
            .collect()
    }

    /// Gauss–Hermite nodes z and weights (including the mass of φ₂).
    pub fn nu_nodes(&self) -> Vec<([f64; 2], f64)> {
        let mut out = Vec::with_capacity(9);
        for &(xa, wa) in &GH3 {
            for &(xb, wb) in &GH3 {
                out.push((
                    [self.phi2_center[0] + self.phi2_width * xa, self.phi2_center[1] + self.phi2_width * xb],
                    self.phi2_mass * wa * wb,
                ));
            }
        }
        out
    }

    pub fn b1(&self, x: [f64; 2]) -> [f64; 2] {
        let e = self.a1 * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * self.l1 * self.l1)).exp();
        [e * x[0], e * x[1]]
    }

    pub fn b2(&self, x: [f64; 2]) -> [f64; 2] {
        let f = self.a2 / (1.0 + x[0] * x[0] + x[1] * x[1]).sqrt();
        [f * x[0], f * x[1]]
    }

    pub fn phi1(&self, x: [f64; 2]) -> f64 {
        let d = [x[0] - self.phi1_center[0], x[1] - self.phi1_center[1]];
        (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * self.phi1_width * self.phi1_width)).exp()
    }

    /// B at x given m_k = μ^{y_k}(φ₁) on the lattice and ν samples
    /// `[node][replica][2]` at the Gauss–Hermite start points.
    pub fn eval(&self, x: [f64; 2], lattice_means: &[f64], nu: &[f64], out: &mut [f64]) {
        let h2 = self.lattice_spacing().powi(2);
        let mut acc = [-self.lambda * x[0], -self.lambda * x[1]];
        if self.a1 != 0.0 {
            for (y, m) in self.lattice().iter().zip(lattice_means) {
                let b = self.b1([x[0] - y[0], x[1] - y[1]]);
                acc[0] += h2 * m * b[0];
                acc[1] += h2 * m * b[1];
            }
        }
        if self.a2 != 0.0 && self.phi2_mass != 0.0 {
            let nodes = self.nu_nodes();
            let reps = nu.len() / (2 * nodes.len());
            for (i, (_, w)) in nodes.iter().enumerate() {
                let mut s = [0.0; 2];
                for q in 0..reps {
                    let off = (i * reps + q) * 2;
                    let b = self.b2([x[0] - nu[off], x[1] - nu[off + 1]]);
                    s[0] += b[0];
                    s[1] += b[1];
                }
                acc[0] += w * s[0] / reps as f64;
                acc[1] += w * s[1] / reps as f64;
            }
        }
        out[0] = acc[0];
        out[1] = acc[1];
    }

    /// sup_x Σ_k h²|b₁(x − y_k)| sampled on a 0.05 grid, plus 2%.
    fn b1_lattice_sup(&self) -> f64 {
        let h2 = self.lattice_spacing().powi(2);
        let lat = self.lattice();
        let reach = self.lattice_half + 4.0 * self.l1;
        let n = (2.0 * reach / 0.05).ceil() as usize + 1;
        let mut sup = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let x = [-reach + i as f64 * 0.05, -reach + j as f64 * 0.05];
                let s: f64 = lat
                    .iter()
                    .map(|y| {
                        let b = self.b1([x[0] - y[0], x[1] - y[1]]);
                        h2 * (b[0] * b[0] + b[1] * b[1]).sqrt()
                    })
                    .sum();
                sup = sup.max(s);
            }
        }
        1.02 * sup
    }

    /// Young splitting 2|x|a ≤ (δ/2)|x|² + 2a²/δ and
    /// 2|x| b‖ν‖ ≤ (δ/2)|x|² + 2b²‖ν‖²/δ, with |b₂(x−X)| ≤ L|x| + L|X|.
    pub fn kappa(&self) -> KappaConstants {
        let lip = self.a2.abs();
        let nodes = self.nu_nodes();
        let phi2_l1: f64 = nodes.iter().map(|(_, w)| w.abs()).sum();
        let b = lip * nodes.iter().map(|(z, w)| w.abs() * (1.0 + (z[0] * z[0] + z[1] * z[1]).sqrt())).sum::<f64>();
        let a = if self.a1 == 0.0 { 0.0 } else { self.b1_lattice_sup() };
        let delta = self.delta.unwrap_or(if b > 0.0 { 2.0 * b } else { 1.0 });
        let d = 2.0;
        let k0 = 2.0 * a * a / delta + d;
        let k1 = 2.0 * (lip * phi2_l1 - self.lambda) + delta;
        let k2 = 2.0 * b * b / delta;
        let k5 = (k1 < 0.0 && k1 + 2.0 * k2 < 0.0).then(|| 2.0 * k2 * (k1.abs() + k0) / (k1.abs() - 2.0 * k2));
        KappaConstants { k0, k1, k2, k5, delta, a, b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example_is_dissipative() {
        let k = RegularDrift::example(2.0).kappa();
        assert!(k.dissipative(), "{k:?}");
        assert!(k.k5.unwrap() > 0.0);
        let weak = RegularDrift::example(0.1).kappa();
        assert!(!weak.dissipative() && weak.k5.is_none());
    }

    #[test]
    fn gauss_hermite_weights_carry_mass() {
        let r = RegularDrift::example(1.0);
        let s: f64 = r.nu_nodes().iter().map(|(_, w)| w).sum();
        assert!((s - r.phi2_mass).abs() < 1e-15);
        // second moment of the rule equals ℓ₂²
        let v: f64 = r.nu_nodes().iter().map(|(z, w)| w * (z[0] - r.phi2_center[0]).powi(2)).sum();
        assert!((v - r.phi2_width.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn moment_bound_at_zero_time() {
        let k = RegularDrift::example(2.0).kappa();
        assert!((k.moment_bound(2.5, 0.0).unwrap() - 2.5).abs() < 1e-15);
    }

    proptest! {
        // the certified inequality holds pointwise for arbitrary flow samples
        #[test]
        fn kappa_inequality(
            x in proptest::array::uniform2(-6.0f64..6.0),
            means in proptest::collection::vec(-1.0f64..1.0, 49),
            nu in proptest::collection::vec(-5.0f64..5.0, 9 * 4 * 2),
        ) {
            let r = RegularDrift::example(2.0);
            let k = r.kappa();
            let mut b = [0.0; 2];
            r.eval(x, &means, &nu, &mut b);
            let lhs = 2.0 * (x[0] * b[0] + x[1] * b[1]) + 2.0;
            let nodes = r.nu_nodes();
            // ‖ν‖ over the quadrature start points
            let mut nu_norm = 0.0f64;
            for (i, (z, _)) in nodes.iter().enumerate() {
                let m: f64 = (0..4).map(|q| {
                    let o = (i * 4 + q) * 2;
                    (nu[o] * nu[o] + nu[o + 1] * nu[o + 1]).sqrt()
                }).sum::<f64>() / 4.0;
                nu_norm = nu_norm.max(m / (1.0 + (z[0] * z[0] + z[1] * z[1]).sqrt()));
            }
            let x2 = x[0] * x[0] + x[1] * x[1];
            let rhs = k.k0 + k.k1 * x2 + k.k2 * nu_norm * nu_norm;
            prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }
}
