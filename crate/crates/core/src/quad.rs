//! Quadrature: Gauss–Jacobi rules (Golub–Welsch), adaptive Gauss–Kronrod,
//! and Beta / incomplete Beta functions built on them.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Result};

/// Gauss rule on [0,1] for the weight (1-u)^alpha u^beta.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Golub–Welsch on the Jacobi matrix of (1-x)^alpha (1+x)^beta over [-1,1],
    /// mapped to [0,1]. `mass` must be the integral of the weight on [0,1],
    /// i.e. B(alpha+1, beta+1).
    pub fn jacobi_with_mass(n: usize, alpha: f64, beta: f64, mass: f64) -> Result<Self> {
        if n == 0 || alpha <= -1.0 || beta <= -1.0 {
            return domain(format!("invalid Jacobi rule n={n} alpha={alpha} beta={beta}"));
        }
        let ab = alpha + beta;
        let mut j = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
            j[(k, k)] = diag;
            if k + 1 < n {
                let m = kf + 1.0;
                let off = if k == 0 {
                    (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
                } else {
                    let s = 2.0 * m + ab;
                    (4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0)))
                        .sqrt()
                };
                j[(k, k + 1)] = off;
                j[(k + 1, k)] = off;
            }
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (0.5 * (1.0 + eig.eigenvalues[i]), mass * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Rule for the one-sided weight u^beta on [0,1] (mass 1/(beta+1)).
    pub fn left_singular(n: usize, beta: f64) -> Result<Self> {
        Self::jacobi_with_mass(n, 0.0, beta, 1.0 / (beta + 1.0))
    }

    /// Rule for (1-u)^alpha u^beta on [0,1].
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::jacobi_with_mass(n, alpha, beta, beta_fn(alpha + 1.0, beta + 1.0)?)
    }

    pub fn legendre(n: usize) -> Result<Self> {
        Self::jacobi_with_mass(n, 0.0, 0.0, 1.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) with absolute tolerance.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        whole: (f64, f64),
        depth: u32,
        budget: &mut u32,
    ) -> f64 {
        let (val, err) = whole;
        if !err.is_finite()
            || err <= tol
            || err <= 64.0 * f64::EPSILON * val.abs()
            || depth == 0
            || *budget == 0
        {
            return val;
        }
        *budget -= 1;
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth - 1, budget)
            + rec(f, m, b, 0.5 * tol, right, depth - 1, budget)
    }
    let whole = gk15(&f, a, b);
    let mut budget = ADAPTIVE_BUDGET;
    rec(&f, a, b, tol, whole, 48, &mut budget)
}

const ADAPTIVE_BUDGET: u32 = 4000;

/// int_0^{1/2} t^{a-1} (1-t)^{b-1} dt; for a < 1 the substitution t = v^{1/a}
/// removes the endpoint singularity.
fn half_beta(a: f64, b: f64) -> f64 {
    if a < 1.0 {
        let upper = 0.5f64.powf(a);
        adaptive(
            |v| (1.0 - v.powf(1.0 / a)).powf(b - 1.0),
            0.0,
            upper,
            1e-16,
        ) / a
    } else {
        adaptive(|t| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0), 0.0, 0.5, 1e-16)
    }
}

/// Beta function B(a,b) = int_0^1 t^{a-1}(1-t)^{b-1} dt from its definition.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return domain(format!("Beta function needs positive arguments, got ({a}, {b})"));
    }
    Ok(half_beta(a, b) + half_beta(b, a))
}

/// Incomplete Beta B_x(a,b) for fixed (a,b) with cached Gauss–Jacobi rules.
///
/// For x <= 1/2, B_x(a,b) = x^a int_0^1 w^{a-1} (1 - x w)^{b-1} dw, whose
/// remaining factor is analytic on a disc of radius >= 2; for x > 1/2 the
/// complement B(a,b) - B_{1-x}(b,a) is used.
#[derive(Debug, Clone)]
pub struct IncompleteBeta {
    a: f64,
    b: f64,
    complete: f64,
    lower: GaussRule,
    upper: GaussRule,
}

impl IncompleteBeta {
    pub fn new(a: f64, b: f64, nodes: usize) -> Result<Self> {
        Ok(Self {
            a,
            b,
            complete: beta_fn(a, b)?,
            lower: GaussRule::left_singular(nodes, a - 1.0)?,
            upper: GaussRule::left_singular(nodes, b - 1.0)?,
        })
    }

    pub fn complete(&self) -> f64 {
        self.complete
    }

    /// x^a int_0^1 w^{a-1}(1-xw)^{b-1} dw, valid for x in [0, 1/2].
    fn lower_part(rule: &GaussRule, p: f64, q: f64, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let qm1 = q - 1.0;
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&w, &wt)| wt * ((-x * w).ln_1p() * qm1).exp())
            .sum();
        x.powf(p) * s
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        if x <= 0.5 {
            Self::lower_part(&self.lower, self.a, self.b, x)
        } else {
            self.complete - Self::lower_part(&self.upper, self.b, self.a, 1.0 - x)
        }
    }

    /// B(a,b) - B_x(a,b) = B_{1-x}(b,a), accurate when x is close to 1.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        if x >= 0.5 {
            Self::lower_part(&self.upper, self.b, self.a, 1.0 - x)
        } else {
            self.complete - Self::lower_part(&self.lower, self.a, self.b, x)
        }
    }

    /// B_{1-x}(b,a) / (1-x)^b: the smooth factor of the upper tail.
    pub fn upper_tail_scaled(&self, x: f64) -> f64 {
        let y = (1.0 - x).clamp(0.0, 1.0);
        if y <= 0.5 {
            let qm1 = self.a - 1.0;
            self.upper
                .nodes
                .iter()
                .zip(&self.upper.weights)
                .map(|(&w, &wt)| wt * ((-y * w).ln_1p() * qm1).exp())
                .sum()
        } else {
            self.upper_tail(x) / y.powf(self.b)
        }
    }
}
