//! Fractional calculus on grids: the companion kernel K̃_H, kernel inversion,
//! Girsanov weights, and exponential / occupation-time diagnostics.

mod diagnostics;
mod girsanov;
mod path;
mod tilde;

pub use diagnostics::{
    growth_pattern, khasminskii_diagnostic, occupation_moments, KhasminskiiReport, MomentEstimate,
};
pub use girsanov::{girsanov_weights, girsanov_weights_along, GirsanovWeight, WeightRecord};
pub use path::AbsContPath;
pub use tilde::{
    calibration_constant, calibration_constant_at, inversion_residual, tilde_transform,
    TildeOperator,
};
