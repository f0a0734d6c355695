use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Tangential speed of the Lamb–Oseen vortex,
/// Γ/(2πr) (1 − e^{−r²/(4νt)}).
pub fn lamb_oseen_speed(gamma: f64, nu: f64, t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0) || !(nu > 0.0) {
        return domain("Lamb–Oseen needs t > 0 and nu > 0");
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let a = r * r / (4.0 * nu * t);
    Ok(-gamma * (-a).exp_m1() / (2.0 * PI * r))
}

/// Lamb–Oseen velocity at x, pointing along (x₂, −x₁) for Γ > 0 to match
/// the orientation of K₂.
pub fn lamb_oseen(gamma: f64, nu: f64, t: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    let r = x[0].hypot(x[1]);
    let s = lamb_oseen_speed(gamma, nu, t, r)?;
    if r == 0.0 {
        return Ok([0.0, 0.0]);
    }
    Ok([s * x[1] / r, -s * x[0] / r])
}

/// Vorticity Γ/(4πνt) e^{−r²/(4νt)}.
pub fn lamb_oseen_vorticity(gamma: f64, nu: f64, t: f64, x: [f64; 2]) -> Result<f64> {
    if !(t > 0.0) || !(nu > 0.0) {
        return domain("Lamb–Oseen needs t > 0 and nu > 0");
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    Ok(gamma / (4.0 * PI * nu * t) * (-r2 / (4.0 * nu * t)).exp())
}
