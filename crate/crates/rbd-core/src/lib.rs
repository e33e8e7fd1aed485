//! Rigid-body dynamics for floating-base kinematic trees.
//!
//! Supplies the spatial math, model description and core dynamics
//! algorithms (composite-rigid-body mass matrix, recursive Newton-Euler
//! bias terms, point Jacobians, RK4 state integration with quaternion
//! kinematics) used by the planning and simulation layers.
//!
//! Conventions, fixed project-wide:
//! - Quaternions store the imaginary part first: `[eps_x, eps_y, eps_z, eta]`.
//! - Base angular velocity is expressed in the world frame; the quaternion
//!   rate is `0.5 * [omega, 0] ∘ rho` (left product).
//! - Generalized velocity layout: `[base linear (3), base angular (3), joints]`
//!   for floating-base models, plain joint order for fixed-base models.
//! - Internal 6-vectors use Plücker coordinates at the world origin with
//!   block order (angular, linear).
//!
//! All operations are pure functions of their inputs; [`Model`] is immutable
//! after construction and safe to share across threads.

pub mod dual;
mod dynamics;
mod error;
mod integrate;
mod kinematics;
mod model;
mod quat;
mod spatial;
mod state;

pub use dual::Dual;
pub use dynamics::{
    bias_terms, forward_dynamics, forward_dynamics_full, inverse_dynamics, inverse_dynamics_split,
    mass_matrix,
};
pub use error::RbdError;
pub use integrate::{integrate_step, integrate_step_generic, RealScalar, StateLayout};
pub use kinematics::{body_jacobian, com, contact_jacobian, fk_contact, point_jacobian, Kinematics};
pub use model::{Body, ContactFrame, Joint, JointKind, Model, ModelSpec};
pub use quat::{quat_propagate, Quaternion};
pub use spatial::{
    cross_force, cross_motion, spatial_inertia_at_origin, SpatialTransform, Vec6,
};
pub use state::{Control, State};

/// Standard gravity magnitude, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;
