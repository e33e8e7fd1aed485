use crate::error::RbdError;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Joint connecting a body to its parent.
#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    /// Joint frame origin expressed in the parent body frame.
    pub origin: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub enum JointKind {
    /// 6-DoF free joint: 3 prismatic coordinates plus a unit quaternion.
    /// Contributes 7 position coordinates and 6 velocity coordinates.
    Floating,
    Prismatic { axis: Vector3<f64> },
    Revolute { axis: Vector3<f64> },
}

impl JointKind {
    pub fn nq(&self) -> usize {
        match self {
            JointKind::Floating => 7,
            _ => 1,
        }
    }

    pub fn nv(&self) -> usize {
        match self {
            JointKind::Floating => 6,
            _ => 1,
        }
    }
}

/// Rigid body attached to the tree by exactly one joint.
#[derive(Debug, Clone)]
pub struct Body {
    pub name: String,
    pub mass: f64,
    /// CoM offset in the body frame.
    pub com: Vector3<f64>,
    /// Rotational inertia about the body CoM, in the body frame.
    pub inertia: Matrix3<f64>,
    /// Parent body index; `None` attaches the body to the world.
    pub parent: Option<usize>,
    pub joint: Joint,
}

/// Named point frame rigidly attached to a body, used as a contact point.
#[derive(Debug, Clone)]
pub struct ContactFrame {
    pub name: String,
    pub body: usize,
    /// Offset in the body frame.
    pub offset: Vector3<f64>,
}

/// Immutable kinematic tree with inertial parameters.
///
/// Bodies are stored in topological order (every parent precedes its
/// children). Velocity coordinates are laid out with the floating base
/// first (when present), then the remaining joints in body order.
#[derive(Debug, Clone)]
pub struct Model {
    bodies: Vec<Body>,
    contacts: Vec<ContactFrame>,
    gravity: Vector3<f64>,
    nq: usize,
    nv: usize,
    q_off: Vec<usize>,
    v_off: Vec<usize>,
    floating_body: Option<usize>,
    total_mass: f64,
}

impl Model {
    pub fn new(
        bodies: Vec<Body>,
        contacts: Vec<ContactFrame>,
        gravity: Vector3<f64>,
    ) -> Result<Self, RbdError> {
        if bodies.is_empty() {
            return Err(RbdError::EmptyModel);
        }
        let mut floating = Vec::new();
        let mut total_mass = 0.0;
        for (i, b) in bodies.iter().enumerate() {
            if let Some(p) = b.parent {
                if p >= i {
                    return Err(RbdError::BadParent(i, p));
                }
            }
            if b.mass < 0.0 {
                return Err(RbdError::NegativeMass(i, b.name.clone(), b.mass));
            }
            total_mass += b.mass;
            if (b.inertia - b.inertia.transpose()).norm() > 1e-9 {
                return Err(RbdError::BadInertia(i, b.name.clone()));
            }
            let eig = b.inertia.symmetric_eigenvalues();
            if eig.min() < -1e-12 {
                return Err(RbdError::BadInertia(i, b.name.clone()));
            }
            match &b.joint.kind {
                JointKind::Floating => {
                    if b.parent.is_some() {
                        return Err(RbdError::FloatingNotRoot(i));
                    }
                    floating.push(i);
                }
                JointKind::Prismatic { axis } | JointKind::Revolute { axis } => {
                    if (axis.norm() - 1.0).abs() > 1e-9 {
                        return Err(RbdError::BadAxis(i, b.joint.name.clone()));
                    }
                }
            }
        }
        if floating.len() > 1 {
            return Err(RbdError::MultipleFloatingBases(floating.len()));
        }
        if total_mass <= 0.0 {
            return Err(RbdError::ZeroTotalMass);
        }
        for (i, c) in contacts.iter().enumerate() {
            if c.body >= bodies.len() {
                return Err(RbdError::BadContactBody(i, c.name.clone(), c.body));
            }
        }

        let mut q_off = vec![0; bodies.len()];
        let mut v_off = vec![0; bodies.len()];
        let mut nq = 0;
        let mut nv = 0;
        for (i, b) in bodies.iter().enumerate() {
            q_off[i] = nq;
            v_off[i] = nv;
            nq += b.joint.kind.nq();
            nv += b.joint.kind.nv();
        }

        Ok(Self {
            bodies,
            contacts,
            gravity,
            nq,
            nv,
            q_off,
            v_off,
            floating_body: floating.first().copied(),
            total_mass,
        })
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn contacts(&self) -> &[ContactFrame] {
        &self.contacts
    }

    pub fn contact(&self, id: usize) -> Result<&ContactFrame, RbdError> {
        self.contacts.get(id).ok_or(RbdError::UnknownContact(id))
    }

    pub fn contact_id(&self, name: &str) -> Option<usize> {
        self.contacts.iter().position(|c| c.name == name)
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.gravity
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    /// Number of actuated (non-floating) velocity coordinates.
    pub fn n_actuated(&self) -> usize {
        if self.floating_body.is_some() {
            self.nv - 6
        } else {
            self.nv
        }
    }

    /// Number of unactuated position coordinates (7 for a floating base).
    pub fn n_unactuated(&self) -> usize {
        if self.floating_body.is_some() {
            7
        } else {
            0
        }
    }

    pub fn has_floating_base(&self) -> bool {
        self.floating_body.is_some()
    }

    pub fn q_offset(&self, body: usize) -> usize {
        self.q_off[body]
    }

    pub fn v_offset(&self, body: usize) -> usize {
        self.v_off[body]
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Neutral configuration: identity base pose, zero joint coordinates.
    pub fn neutral_q(&self) -> nalgebra::DVector<f64> {
        let mut q = nalgebra::DVector::zeros(self.nq);
        for (i, b) in self.bodies.iter().enumerate() {
            if matches!(b.joint.kind, JointKind::Floating) {
                q[self.q_off[i] + 6] = 1.0; // eta
            }
        }
        q
    }

    pub fn from_json(text: &str) -> Result<Self, RbdError> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| RbdError::Json(e.to_string()))?;
        spec.build()
    }

    pub fn to_json(&self) -> String {
        let spec = ModelSpec::from_model(self);
        serde_json::to_string_pretty(&spec).expect("model serialization cannot fail")
    }
}

/// JSON schema for [`Model`]; see `docs/formats.md` for field documentation.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub bodies: Vec<BodySpec>,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub contacts: Vec<ContactSpec>,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -crate::STANDARD_GRAVITY]
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BodySpec {
    pub name: String,
    pub mass: f64,
    pub com: [f64; 3],
    /// Upper-triangular inertia entries `[ixx, ixy, ixz, iyy, iyz, izz]`.
    pub inertia: [f64; 6],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// One of `floating`, `prismatic`, `revolute`.
    #[serde(rename = "type")]
    pub joint_type: String,
    #[serde(default)]
    pub axis: [f64; 3],
    /// Parent body name, or `world`.
    pub parent: String,
    /// Joint origin in the parent body frame.
    #[serde(default)]
    pub origin: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContactSpec {
    pub name: String,
    pub body: String,
    #[serde(default)]
    pub offset: [f64; 3],
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, RbdError> {
        if self.bodies.len() != self.joints.len() {
            return Err(RbdError::Json(format!(
                "bodies ({}) and joints ({}) must pair one-to-one in order",
                self.bodies.len(),
                self.joints.len()
            )));
        }
        let name_index = |name: &str| -> Result<Option<usize>, RbdError> {
            if name == "world" {
                return Ok(None);
            }
            self.bodies
                .iter()
                .position(|b| b.name == name)
                .map(Some)
                .ok_or_else(|| RbdError::Json(format!("unknown parent body `{name}`")))
        };
        let mut bodies = Vec::with_capacity(self.bodies.len());
        for (b, j) in self.bodies.iter().zip(&self.joints) {
            let kind = match j.joint_type.as_str() {
                "floating" => JointKind::Floating,
                "prismatic" => JointKind::Prismatic {
                    axis: Vector3::from(j.axis),
                },
                "revolute" => JointKind::Revolute {
                    axis: Vector3::from(j.axis),
                },
                other => {
                    return Err(RbdError::Json(format!(
                        "joint `{}`: unknown type `{other}`",
                        j.name
                    )))
                }
            };
            let i = &b.inertia;
            bodies.push(Body {
                name: b.name.clone(),
                mass: b.mass,
                com: Vector3::from(b.com),
                inertia: Matrix3::new(
                    i[0], i[1], i[2], i[1], i[3], i[4], i[2], i[4], i[5],
                ),
                parent: name_index(&j.parent)?,
                joint: Joint {
                    name: j.name.clone(),
                    kind,
                    origin: Vector3::from(j.origin),
                },
            });
        }
        let mut contacts = Vec::with_capacity(self.contacts.len());
        for c in &self.contacts {
            let body = name_index(&c.body)?
                .ok_or_else(|| RbdError::Json(format!("contact `{}` on world", c.name)))?;
            contacts.push(ContactFrame {
                name: c.name.clone(),
                body,
                offset: Vector3::from(c.offset),
            });
        }
        Model::new(bodies, contacts, Vector3::from(self.gravity))
    }

    pub fn from_model(model: &Model) -> Self {
        let bodies = model
            .bodies()
            .iter()
            .map(|b| BodySpec {
                name: b.name.clone(),
                mass: b.mass,
                com: b.com.into(),
                inertia: [
                    b.inertia[(0, 0)],
                    b.inertia[(0, 1)],
                    b.inertia[(0, 2)],
                    b.inertia[(1, 1)],
                    b.inertia[(1, 2)],
                    b.inertia[(2, 2)],
                ],
            })
            .collect();
        let joints = model
            .bodies()
            .iter()
            .map(|b| {
                let (joint_type, axis) = match &b.joint.kind {
                    JointKind::Floating => ("floating", [0.0; 3]),
                    JointKind::Prismatic { axis } => ("prismatic", (*axis).into()),
                    JointKind::Revolute { axis } => ("revolute", (*axis).into()),
                };
                JointSpec {
                    name: b.joint.name.clone(),
                    joint_type: joint_type.to_string(),
                    axis,
                    parent: match b.parent {
                        Some(p) => model.bodies()[p].name.clone(),
                        None => "world".to_string(),
                    },
                    origin: b.joint.origin.into(),
                }
            })
            .collect();
        let contacts = model
            .contacts()
            .iter()
            .map(|c| ContactSpec {
                name: c.name.clone(),
                body: model.bodies()[c.body].name.clone(),
                offset: c.offset.into(),
            })
            .collect();
        ModelSpec {
            bodies,
            joints,
            contacts,
            gravity: model.gravity().into(),
        }
    }
}
