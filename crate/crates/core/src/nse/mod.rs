//! Navier–Stokes layer: velocity reconstruction from particle clouds,
//! closed-form and spectral oracles, residual, exponent and scaling
//! diagnostics.
//!
//! Viscosity bookkeeping: an fBm driver at H = 1/2 has generator ½Δ, so
//! particle runs driven by W compare against ν = ½; the backward solver
//! is driven by √2 W and compares against ν = 1.

mod exponent;
mod oracle;
mod oseen;
mod residual;
mod scaling;
mod velocity;

pub use exponent::{predicted_exponent, short_time_exponent, ExponentFit};
pub use oracle::{spectral_oracle, OracleOptions, OracleRun};
pub use oseen::{lamb_oseen, lamb_oseen_speed, lamb_oseen_vorticity};
pub use residual::{ns_residual, vorticity_residual, ResidualForm, ResidualReport, TimeDirection};
pub use scaling::{scaling_check, ScalingOptions, ScalingReport};
pub use velocity::{forward_velocity, tangential_profile, velocity_at_points, VelocityField, VelocitySource};
