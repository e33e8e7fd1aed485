use crate::error::RbdError;
use crate::model::Model;
use crate::quat::Quaternion;
use nalgebra::{DVector, Vector3};

/// Generalized coordinates and velocities.
///
/// For floating-base models `q = [p_u, rho_u, q_joints]` with the quaternion
/// stored `[eps, eta]`, and `nu = [pdot_u, omega_u(world), qdot_joints]`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: DVector<f64>,
    pub nu: DVector<f64>,
}

impl State {
    pub fn new(q: DVector<f64>, nu: DVector<f64>) -> Self {
        Self { q, nu }
    }

    /// Model's neutral pose at rest.
    pub fn neutral(model: &Model) -> Self {
        Self {
            q: model.neutral_q(),
            nu: DVector::zeros(model.nv()),
        }
    }

    pub fn check_dims(&self, model: &Model) -> Result<(), RbdError> {
        if self.q.len() != model.nq() {
            return Err(RbdError::Dimension {
                what: "q coordinates",
                expected: model.nq(),
                got: self.q.len(),
            });
        }
        if self.nu.len() != model.nv() {
            return Err(RbdError::Dimension {
                what: "nu coordinates",
                expected: model.nv(),
                got: self.nu.len(),
            });
        }
        Ok(())
    }

    /// Base position for floating-base models.
    pub fn base_position(&self) -> Vector3<f64> {
        Vector3::new(self.q[0], self.q[1], self.q[2])
    }

    /// Base orientation quaternion for floating-base models.
    pub fn base_quaternion(&self) -> Quaternion {
        Quaternion::from_parts(self.q[3], self.q[4], self.q[5], self.q[6])
    }

    /// World angular velocity of the base for floating-base models.
    pub fn base_angular_velocity(&self) -> Vector3<f64> {
        Vector3::new(self.nu[3], self.nu[4], self.nu[5])
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite()) && self.nu.iter().all(|v| v.is_finite())
    }
}

/// Control sample: accelerations, stacked contact forces and (inside the
/// transcription only) the interval step size.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub nu_dot: DVector<f64>,
    /// One 3D force per model contact frame, N.
    pub forces: Vec<Vector3<f64>>,
    /// Step size, s; `None` outside the transcription.
    pub dt: Option<f64>,
}

impl Control {
    pub fn zero(model: &Model) -> Self {
        Self {
            nu_dot: DVector::zeros(model.nv()),
            forces: vec![Vector3::zeros(); model.contacts().len()],
            dt: None,
        }
    }

    pub fn check_dims(&self, model: &Model) -> Result<(), RbdError> {
        if self.nu_dot.len() != model.nv() {
            return Err(RbdError::Dimension {
                what: "nu_dot coordinates",
                expected: model.nv(),
                got: self.nu_dot.len(),
            });
        }
        if self.forces.len() != model.contacts().len() {
            return Err(RbdError::Dimension {
                what: "contact forces",
                expected: model.contacts().len(),
                got: self.forces.len(),
            });
        }
        if let Some(dt) = self.dt {
            if dt <= 0.0 {
                return Err(RbdError::BadStepSize(dt));
            }
        }
        Ok(())
    }
}
