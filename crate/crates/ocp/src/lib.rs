//! Continuous-time optimal control problem definition and its Direct
//! Multiple Shooting transcription into a finite nonlinear program.
//!
//! The decision vector stacks the `N_s + 1` node states followed by the
//! `N_s` interval controls:
//!
//! ```text
//!     z = [x_0, ..., x_{N_s}, u_0, ..., u_{N_s-1}]
//!     x_k = [q_k, nu_k]                       (dim nq + nv)
//!     u_k = [nu_dot_k, F_C_k (3 per contact), dt_k]
//! ```
//!
//! Constraint blocks, in order: continuity defects per interval, quaternion
//! unit-norm per node, underactuation + torque rows per interval, then per
//! contact the surface / no-slip / stance-anchoring rows at active nodes,
//! friction pyramid rows on active intervals, workspace boxes per node, and
//! a periodicity block when requested. See `docs/formats.md` for the exact
//! byte-level layout used in debugging dumps.
//!
//! Evaluation callbacks are pure and reentrant; concurrent evaluation at
//! different points is safe.

mod constraints;
mod problem;
mod trajectory;
mod transcribe;

pub use constraints::{friction_cone_check, friction_pyramid, surface_residual, tangent_basis};
pub use problem::{Bounds, ContactSchedule, CostTerm, OcpError, Problem, SavedSolution, Surface};
pub use trajectory::{interpolate_trajectory, Trajectory, TrajectorySample};
pub use transcribe::{continuity_defect, transcribe, BlockKind, NodeDefect, TranscribedNlp};
