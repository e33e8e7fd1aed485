use crate::error::RbdError;
use crate::model::{JointKind, Model};
use crate::quat::Quaternion;
use crate::spatial::{spatial_vec, Vec6};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

/// Forward-kinematics cache: world placements of every body plus the motion
/// subspace columns of every joint in origin Plücker coordinates.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// World rotation of each body frame.
    pub rot: Vec<Matrix3<f64>>,
    /// World position of each body frame origin.
    pub pos: Vec<Vector3<f64>>,
    /// World CoM of each body.
    pub com: Vec<Vector3<f64>>,
    /// Per body: motion subspace columns of its joint (angular, linear at
    /// world origin).
    pub s_cols: Vec<Vec<Vec6>>,
}

impl Kinematics {
    pub fn compute(model: &Model, q: &DVector<f64>) -> Result<Self, RbdError> {
        if q.len() != model.nq() {
            return Err(RbdError::Dimension {
                what: "q coordinates",
                expected: model.nq(),
                got: q.len(),
            });
        }
        let nb = model.bodies().len();
        let mut rot = vec![Matrix3::identity(); nb];
        let mut pos = vec![Vector3::zeros(); nb];
        let mut com = vec![Vector3::zeros(); nb];
        let mut s_cols = vec![Vec::new(); nb];

        for (i, body) in model.bodies().iter().enumerate() {
            let (parent_rot, parent_pos) = match body.parent {
                Some(p) => (rot[p], pos[p]),
                None => (Matrix3::identity(), Vector3::zeros()),
            };
            let joint_pos = parent_pos + parent_rot * body.joint.origin;
            let qo = model.q_offset(i);
            match &body.joint.kind {
                JointKind::Floating => {
                    let p_u = Vector3::new(q[qo], q[qo + 1], q[qo + 2]);
                    let rho = Quaternion::from_parts(q[qo + 3], q[qo + 4], q[qo + 5], q[qo + 6]);
                    rot[i] = parent_rot * rho.rotation_matrix();
                    pos[i] = joint_pos + parent_rot * p_u;
                    let mut cols = Vec::with_capacity(6);
                    for k in 0..3 {
                        let mut e = Vector3::zeros();
                        e[k] = 1.0;
                        cols.push(spatial_vec(&Vector3::zeros(), &e));
                    }
                    for k in 0..3 {
                        let mut e = Vector3::zeros();
                        e[k] = 1.0;
                        cols.push(spatial_vec(&e, &pos[i].cross(&e)));
                    }
                    s_cols[i] = cols;
                }
                JointKind::Prismatic { axis } => {
                    let a = parent_rot * axis;
                    rot[i] = parent_rot;
                    pos[i] = joint_pos + a * q[qo];
                    s_cols[i] = vec![spatial_vec(&Vector3::zeros(), &a)];
                }
                JointKind::Revolute { axis } => {
                    let a = parent_rot * axis;
                    let rj = Quaternion::from_axis_angle(axis, q[qo]).rotation_matrix();
                    rot[i] = parent_rot * rj;
                    pos[i] = joint_pos;
                    s_cols[i] = vec![spatial_vec(&a, &pos[i].cross(&a))];
                }
            }
            com[i] = pos[i] + rot[i] * body.com;
        }
        Ok(Self {
            rot,
            pos,
            com,
            s_cols,
        })
    }

    /// Spatial velocity of every body in origin coordinates.
    pub fn body_velocities(&self, model: &Model, nu: &DVector<f64>) -> Vec<Vec6> {
        let nb = model.bodies().len();
        let mut vel = vec![Vec6::zeros(); nb];
        for (i, body) in model.bodies().iter().enumerate() {
            let mut v = match body.parent {
                Some(p) => vel[p],
                None => Vec6::zeros(),
            };
            let vo = model.v_offset(i);
            for (k, s) in self.s_cols[i].iter().enumerate() {
                v += s * nu[vo + k];
            }
            vel[i] = v;
        }
        vel
    }
}

/// 6 x nv origin-coordinates Jacobian of a body: `V_body = J * nu`.
pub fn body_jacobian(model: &Model, kin: &Kinematics, body: usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(6, model.nv());
    let mut b = Some(body);
    while let Some(i) = b {
        let vo = model.v_offset(i);
        for (k, s) in kin.s_cols[i].iter().enumerate() {
            for r in 0..6 {
                jac[(r, vo + k)] = s[r];
            }
        }
        b = model.bodies()[i].parent;
    }
    jac
}

/// 3 x nv world-frame linear-velocity Jacobian of a point rigidly attached
/// to `body`, given in world coordinates.
pub fn point_jacobian(
    model: &Model,
    kin: &Kinematics,
    body: usize,
    point_world: &Vector3<f64>,
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(3, model.nv());
    let mut b = Some(body);
    while let Some(i) = b {
        let vo = model.v_offset(i);
        for (k, s) in kin.s_cols[i].iter().enumerate() {
            let ang = Vector3::new(s[0], s[1], s[2]);
            let lin = Vector3::new(s[3], s[4], s[5]);
            let col = lin + ang.cross(point_world);
            for r in 0..3 {
                jac[(r, vo + k)] = col[r];
            }
        }
        b = model.bodies()[i].parent;
    }
    jac
}

/// World position of a registered contact point.
pub fn fk_contact(model: &Model, q: &DVector<f64>, contact_id: usize) -> Result<Vector3<f64>, RbdError> {
    let c = model.contact(contact_id)?;
    let kin = Kinematics::compute(model, q)?;
    Ok(kin.pos[c.body] + kin.rot[c.body] * c.offset)
}

/// World-frame linear-velocity Jacobian of a registered contact point.
pub fn contact_jacobian(
    model: &Model,
    q: &DVector<f64>,
    contact_id: usize,
) -> Result<DMatrix<f64>, RbdError> {
    let c = model.contact(contact_id)?;
    let kin = Kinematics::compute(model, q)?;
    let p = kin.pos[c.body] + kin.rot[c.body] * c.offset;
    Ok(point_jacobian(model, &kin, c.body, &p))
}

/// Mass-weighted mean of body CoM positions and the total mass.
pub fn com(model: &Model, q: &DVector<f64>) -> Result<(Vector3<f64>, f64), RbdError> {
    let kin = Kinematics::compute(model, q)?;
    let mut weighted = Vector3::zeros();
    for (i, b) in model.bodies().iter().enumerate() {
        weighted += b.mass * kin.com[i];
    }
    Ok((weighted / model.total_mass(), model.total_mass()))
}
