//! Simulation of distribution-flow dependent SDEs driven by Brownian and
//! fractional Brownian motion, and the particle representation of 2D
//! Navier–Stokes flows built on them.

pub mod dfsde;
pub mod error;
pub mod fbm;
pub mod fields;
pub mod fraccalc;
pub mod io;
pub mod nse;
pub mod quad;
pub mod rng;
pub mod time;

pub use dfsde::{DiscreteSignedMeasure, DistributionFlow, DriftSpec, FlowEnsemble};
pub use error::{Error, Result};
pub use fbm::{FbmEnsemble, FbmMethod, HurstParams};
pub use fields::{GridField, GridSpec};
pub use nse::VelocityField;
pub use time::TimeGrid;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
