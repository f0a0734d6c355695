//! Spatial kernels and grid-function utilities in two dimensions.
//!
//! Orientation convention used throughout: the scalar curl of u is
//! ∂₂u₁ − ∂₁u₂, which makes u = K₂ * ω invert curl u = ω for
//! K₂(x) = (x₂, −x₁)/(2π|x|²).

mod cubes;
mod fd;
mod grid;
mod kernels;
mod norms;
mod spectral;

pub use cubes::CubePartition;
pub use fd::{curl_fd, divergence_fd, DivergenceReport};
pub use grid::{read_grid_binary, write_grid_binary, write_grid_csv, GridField, GridHeader, GridSpec};
pub use kernels::{biot_savart, biot_savart_mollified, MOLLIFIER_SHAPE};
pub use norms::{localized_norm, NormVariant};
pub(crate) use spectral::{derivative, wavenumber, Fft2};
pub use spectral::{
    biot_savart_free, convolve_free, curl_spectral, divergence_spectral, gaussian_smooth,
    laplacian_spectral, leray_project, velocity_from_vorticity_torus,
};
