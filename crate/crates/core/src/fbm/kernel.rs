use crate::error::{domain, Result};
use crate::quad::IncompleteBeta;

use super::HurstParams;

const POINT_NODES: usize = 64;
const BULK_NODES: usize = 20;

/// Volterra kernel K_H(t,s) with W^H_t = int_0^t K_H(t,s) dW_s.
///
/// The inner integral int_s^t r^{H-3/2}(r-s)^{H-1/2} dr equals
/// s^{2H-1} J(s/t) with J(a) = int_a^1 v^{-2H}(1-v)^{H-1/2} dv, an upper
/// incomplete Beta function. Cell integrals use the closed-form
/// antiderivative of u -> K_H(1,u).
#[derive(Debug, Clone)]
pub struct VolterraKernel {
    hp: HurstParams,
    inner: Option<Tails>,
}

#[derive(Debug, Clone)]
struct Tails {
    // (1-2H, H+1/2): J(a) = B - B_a
    j_point: IncompleteBeta,
    j_bulk: IncompleteBeta,
    // (3/2-H, H+1/2): primitive of u^{1/2-H}(1-u)^{H-1/2}
    p_bulk: IncompleteBeta,
}

impl VolterraKernel {
    pub fn new(hp: HurstParams) -> Result<Self> {
        if hp.is_brownian() {
            return Ok(Self { hp, inner: None });
        }
        let h = hp.h();
        let j_point = IncompleteBeta::new(1.0 - 2.0 * h, h + 0.5, POINT_NODES)?;
        let mut j_bulk = IncompleteBeta::new(1.0 - 2.0 * h, h + 0.5, BULK_NODES)?;
        let mut p_bulk = IncompleteBeta::new(1.5 - h, h + 0.5, BULK_NODES)?;
        // The bulk rule must agree with the 64-node rule where convergence is
        // slowest (x = 1/2); otherwise fall back to the full rule.
        let probe = |a: &IncompleteBeta, b: &IncompleteBeta| (a.eval(0.5) - b.eval(0.5)).abs();
        let p_point = IncompleteBeta::new(1.5 - h, h + 0.5, POINT_NODES)?;
        if probe(&j_point, &j_bulk) > 1e-14 || probe(&p_point, &p_bulk) > 1e-14 {
            j_bulk = j_point.clone();
            p_bulk = p_point;
        }
        Ok(Self {
            hp,
            inner: Some(Tails {
                j_point,
                j_bulk,
                p_bulk,
            }),
        })
    }

    pub fn hurst(&self) -> &HurstParams {
        &self.hp
    }

    /// K_H(t,s) for 0 < s < t.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < t && t.is_finite()) {
            return domain(format!("Volterra kernel needs 0 < s < t, got t={t}, s={s}"));
        }
        Ok(self.eval_unchecked(t, s))
    }

    pub(crate) fn eval_unchecked(&self, t: f64, s: f64) -> f64 {
        match &self.inner {
            None => 1.0,
            Some(tails) => {
                let h = self.hp.h();
                let e = h - 0.5;
                let first = (t / s).powf(e) * (t - s).powf(e);
                let second = (0.5 - h) * s.powf(e) * tails.j_point.upper_tail(s / t);
                self.hp.c() * (first + second)
            }
        }
    }

    /// Antiderivative F(u) = int_0^u K_H(1,v) dv on [0,1].
    pub fn antiderivative(&self, u: f64) -> f64 {
        match &self.inner {
            None => u,
            Some(tails) => {
                let h = self.hp.h();
                let u = u.clamp(0.0, 1.0);
                let p = tails.p_bulk.eval(u);
                let hp = h + 0.5;
                let tail = if u == 0.0 {
                    0.0
                } else {
                    u.powf(hp) * tails.j_bulk.upper_tail(u)
                };
                self.hp.c() * (p + (0.5 - h) * (tail + p) / hp)
            }
        }
    }

    /// int_a^b K_H(t,s) ds for 0 <= a < b <= t.
    pub fn cell_integral(&self, t: f64, a: f64, b: f64) -> f64 {
        if self.inner.is_none() {
            return b - a;
        }
        let scale = t.powf(self.hp.h() + 0.5);
        scale * (self.antiderivative(b / t) - self.antiderivative(a / t))
    }
}

/// K_H(t,s); see [`VolterraKernel`] for repeated evaluation.
pub fn volterra_kernel(hp: &HurstParams, t: f64, s: f64) -> Result<f64> {
    VolterraKernel::new(*hp)?.eval(t, s)
}
