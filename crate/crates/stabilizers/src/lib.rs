//! Upper-body balance stabilizers and the prioritized differential-IK layer
//! they plug into.
//!
//! Three strategies are provided:
//! - a Raibert-like postural increment proportional to the measured body
//!   angular rate ([`raibert_update`]),
//! - an angular-momentum damping stack resolved by hierarchical IK
//!   ([`angmom_tasks`] + [`hik_solve`]),
//! - a phase-indexed replay of a periodic flywheel arm trajectory
//!   ([`ocp_posture_lookup`]).
//!
//! [`StabilizerState`] is mutated only by its owning control loop; every
//! other operation here is a pure function.

mod hik;
mod ocp_posture;
mod raibert;
mod stack;

pub use hik::hik_solve;
pub use ocp_posture::{ocp_posture_lookup, FlywheelTrajectory};
pub use raibert::{raibert_update, StabilizerState};
pub use stack::{angmom_tasks, AngMomGains, Task, TaskLevel, TaskStack};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilizerError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("flywheel trajectory is not periodic (first/last differ by {0:.3e})")]
    NotPeriodic(f64),
    #[error("invalid stabilizer state: {0}")]
    Invalid(String),
    #[error(transparent)]
    Centroidal(#[from] centroidal::CentroidalError),
}
