//! Desk-scale physics replay of planned trajectories on the template model
//! with stabilizer arms.
//!
//! The simulator integrates the full floating-base dynamics with
//! semi-implicit Euler and a penalty contact model (spring-damper normal
//! force, regularized Coulomb friction). Joint torques come from a
//! decentralized PD with the plan's feedforward; the upper-body references
//! come from the selected stabilizer driven by IMU angular-velocity
//! feedback. A replay run is single-threaded and deterministic for a fixed
//! seed; independent runs may execute in parallel.

mod imu;
mod replay;
mod sim;

pub use imu::imu_read;
pub use replay::{run_replay, RunLog, RunRow, RunSummary, StabilizerChoice, StabilizerConfig};
pub use sim::{base_pitch, step_sim, SimConfig, SimState, StepOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    BadConfig(String),
    #[error("trajectory/model mismatch: {0}")]
    Mismatch(String),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Rbd(#[from] rbd_core::RbdError),
    #[error(transparent)]
    Stabilizer(#[from] stabilizers::StabilizerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
