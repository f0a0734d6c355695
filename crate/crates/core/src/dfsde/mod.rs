//! Distribution-dependent SDE solvers: frozen-flow Euler–Maruyama, Picard
//! iteration over distribution flows, the forward vortex particle system,
//! the backward Picard solver, and flow-distance diagnostics.

mod backward;
mod chapman;
mod flow;
mod frozen;
mod measure;
mod moments;
mod particle;
mod picard;
mod regular;
mod spec;
mod truncate;
mod tv;
mod wasserstein;

pub use backward::{backward_picard, lattice_biot_savart, BackwardOptions, BackwardResult};
pub use chapman::{chapman_flow_check, chapman_two_drifts, ChapmanOptions, ChapmanReport, FrozenVortexDrift};
pub use flow::{Binning, DistributionFlow, FlowEnsemble};
pub use frozen::solve_frozen;
pub use measure::DiscreteSignedMeasure;
pub use moments::{moment_report, MomentRow};
pub use particle::{forward_particle, Interaction, ParticleOptions};
pub use picard::{picard_forward_regular, PicardOptions, PicardResult};
pub use regular::{KappaConstants, RegularDrift};
pub use spec::{DriftSpec, TerminalDatum};
pub use truncate::truncate_by_norm;
pub use tv::{ckp_holds, flow_distance_tv, histogram_tv, TvReport, CKP_SLACK};
pub use wasserstein::{flow_distance_w1, hungarian, sinkhorn_w1, w1_empirical, Assignment, W1Config};

pub(crate) use particle::direct_velocity;
