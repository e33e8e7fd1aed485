use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

/// Unit quaternion storing the imaginary part `eps` first and the real
/// part `eta` last, matching the `[eps^T eta]^T` storage order used by
/// every file format in this project.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub eps: Vector3<f64>,
    pub eta: f64,
}

impl Quaternion {
    pub fn new(eps: Vector3<f64>, eta: f64) -> Self {
        Self { eps, eta }
    }

    pub fn identity() -> Self {
        Self {
            eps: Vector3::zeros(),
            eta: 1.0,
        }
    }

    /// Build from raw components `[x, y, z, w]`.
    pub fn from_parts(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self {
            eps: Vector3::new(x, y, z),
            eta: w,
        }
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n < 1e-300 {
            return Self::identity();
        }
        let half = 0.5 * angle;
        Self {
            eps: axis * (half.sin() / n),
            eta: half.cos(),
        }
    }

    pub fn as_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.eps.x, self.eps.y, self.eps.z, self.eta)
    }

    pub fn norm(&self) -> f64 {
        (self.eps.norm_squared() + self.eta * self.eta).sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.eps.dot(&other.eps) + self.eta * other.eta
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            eps: self.eps / n,
            eta: self.eta / n,
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            eps: -self.eps,
            eta: self.eta,
        }
    }

    /// Hamilton product `self ∘ other`.
    pub fn product(&self, other: &Quaternion) -> Self {
        Self {
            eps: self.eta * other.eps + other.eta * self.eps + self.eps.cross(&other.eps),
            eta: self.eta * other.eta - self.eps.dot(&other.eps),
        }
    }

    /// Quaternion rate for a world-frame angular velocity:
    /// `rho_dot = [omega/2, 0] ∘ rho`, returned as `[eps_dot, eta_dot]`.
    pub fn propagate(&self, omega: &Vector3<f64>) -> Vector4<f64> {
        let w = Quaternion {
            eps: 0.5 * omega,
            eta: 0.0,
        };
        let rate = w.product(self);
        rate.as_vector4()
    }

    /// Rotation matrix mapping body coordinates to world coordinates.
    /// The quaternion is normalized internally, so slightly off-manifold
    /// inputs (as visited by an NLP solver) stay well-defined.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let q = self.normalized();
        let e = q.eps;
        let w = q.eta;
        let skew = Matrix3::new(0.0, -e.z, e.y, e.z, 0.0, -e.x, -e.y, e.x, 0.0);
        Matrix3::identity() * (w * w - e.norm_squared())
            + 2.0 * e * e.transpose()
            + 2.0 * w * skew
    }

    /// Rotate a vector from body to world coordinates.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * v
    }
}

/// Quaternion rate `[omega/2, 0] ∘ rho` as a 4-vector `[eps_dot, eta_dot]`.
pub fn quat_propagate(rho: &Quaternion, omega: &Vector3<f64>) -> Vector4<f64> {
    rho.propagate(omega)
}
