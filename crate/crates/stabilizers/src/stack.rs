use crate::StabilizerError;
use nalgebra::{DMatrix, DVector, Vector3};
use rbd_core::Model;

/// One differential task: drive `J qdot` to `desired` with a weight.
#[derive(Debug, Clone)]
pub struct Task {
    pub jacobian: DMatrix<f64>,
    pub desired: DVector<f64>,
    pub weight: f64,
}

/// Tasks sharing one priority level (stacked and solved together).
#[derive(Debug, Clone)]
pub struct TaskLevel {
    pub tasks: Vec<Task>,
}

/// Ordered priority levels plus box constraints on the solution.
#[derive(Debug, Clone)]
pub struct TaskStack {
    pub levels: Vec<TaskLevel>,
    /// Per-coordinate symmetric velocity limit (infinite entries disable).
    pub vel_limit: DVector<f64>,
    /// Optional position limits, converted to velocity bounds over the
    /// control period inside [`crate::hik_solve`].
    pub pos_lower: Option<DVector<f64>>,
    pub pos_upper: Option<DVector<f64>>,
}

impl TaskStack {
    pub fn validate(&self, nv: usize) -> Result<(), StabilizerError> {
        if self.levels.is_empty() {
            return Err(StabilizerError::Invalid("stack needs at least one level".into()));
        }
        for (l, level) in self.levels.iter().enumerate() {
            for (t, task) in level.tasks.iter().enumerate() {
                if task.jacobian.ncols() != nv {
                    return Err(StabilizerError::Dimension(format!(
                        "level {l} task {t}: jacobian has {} columns, expected {nv}",
                        task.jacobian.ncols()
                    )));
                }
                if task.jacobian.nrows() != task.desired.len() {
                    return Err(StabilizerError::Dimension(format!(
                        "level {l} task {t}: jacobian rows vs desired length"
                    )));
                }
            }
        }
        if self.vel_limit.len() != nv {
            return Err(StabilizerError::Dimension("velocity limit length".into()));
        }
        Ok(())
    }
}

/// Gains of the angular-momentum stabilizer stack.
#[derive(Debug, Clone)]
pub struct AngMomGains {
    /// Feedback gain of the foot-hold task, 1/s.
    pub feet: f64,
    /// Posture pull toward the home configuration, 1/s.
    pub posture: f64,
    /// Weight of the angular-momentum task relative to the posture task.
    pub momentum_weight: f64,
    pub posture_weight: f64,
}

impl Default for AngMomGains {
    fn default() -> Self {
        Self {
            feet: 2.0,
            posture: 1.0,
            momentum_weight: 1.0,
            posture_weight: 0.05,
        }
    }
}

/// Three-level stack of the angular-momentum stabilizer:
/// 1. feet positions relative to the pelvis hold their current values,
/// 2. world pelvis angular velocity tracks `-omega_imu`,
/// 3. the angular-momentum rows of the CMM driven to zero, summed with a
///    posture regularizer toward `q_home` (actuated coordinates).
pub fn angmom_tasks(
    model: &Model,
    q: &DVector<f64>,
    omega_imu: &Vector3<f64>,
    q_home: &DVector<f64>,
    gains: &AngMomGains,
) -> Result<TaskStack, StabilizerError> {
    let nv = model.nv();
    let nq = model.nq();
    if q.len() != nq || q_home.len() != nq {
        return Err(StabilizerError::Dimension("configuration length".into()));
    }
    let kin = rbd_core::Kinematics::compute(model, q).map_err(centroidal::CentroidalError::from)?;
    let base_rot = kin.rot[0];
    let base_pos = kin.pos[0];

    // Level 1: relative foot positions r = R^T (p_foot - p_base) held.
    // d/dt r = R^T [(J_f - J_base) nu + skew(r) J_omega nu].
    let mut feet_tasks = Vec::new();
    for c in 0..model.contacts().len() {
        let frame = &model.contacts()[c];
        let p = kin.pos[frame.body] + kin.rot[frame.body] * frame.offset;
        let jac_foot = rbd_core::point_jacobian(model, &kin, frame.body, &p);
        let jac_base = rbd_core::point_jacobian(model, &kin, 0, &base_pos);
        let r = p - base_pos;
        let sk = nalgebra::Matrix3::new(0.0, -r.z, r.y, r.z, 0.0, -r.x, -r.y, r.x, 0.0);
        let mut jac = DMatrix::zeros(3, nv);
        for col in 0..nv {
            let dv = Vector3::new(
                jac_foot[(0, col)] - jac_base[(0, col)],
                jac_foot[(1, col)] - jac_base[(1, col)],
                jac_foot[(2, col)] - jac_base[(2, col)],
            );
            // Angular rows of the base map directly through columns 3..6.
            let w = if (3..6).contains(&col) {
                Vector3::ith(col - 3, 1.0)
            } else {
                Vector3::zeros()
            };
            let v = base_rot.transpose() * (dv + sk * w);
            for row in 0..3 {
                jac[(row, col)] = v[row];
            }
        }
        feet_tasks.push(Task {
            jacobian: jac,
            desired: DVector::zeros(3),
            weight: 1.0,
        });
    }

    // Level 2: world pelvis angular velocity -> -omega_imu.
    let mut jac_pelvis = DMatrix::zeros(3, nv);
    for k in 0..3 {
        jac_pelvis[(k, 3 + k)] = 1.0;
    }
    let pelvis_task = Task {
        jacobian: jac_pelvis,
        desired: DVector::from_column_slice((-omega_imu).as_slice()),
        weight: 1.0,
    };

    // Level 3: bottom three CMM rows driven to zero momentum, plus the
    // posture regularizer on the actuated joints.
    let a = centroidal::cmm(model, q)?;
    let mut jac_h = DMatrix::zeros(3, nv);
    for col in 0..nv {
        for row in 0..3 {
            jac_h[(row, col)] = a[(row + 3, col)];
        }
    }
    let momentum_task = Task {
        jacobian: jac_h,
        desired: DVector::zeros(3),
        weight: gains.momentum_weight,
    };
    let n_act = model.n_actuated();
    let mut jac_posture = DMatrix::zeros(n_act, nv);
    let mut desired_posture = DVector::zeros(n_act);
    for j in 0..n_act {
        jac_posture[(j, 6 + j)] = 1.0;
        desired_posture[j] = gains.posture * (q_home[7 + j] - q[7 + j]);
    }
    let posture_task = Task {
        jacobian: jac_posture,
        desired: desired_posture,
        weight: gains.posture_weight,
    };

    // Feet feedback keeps level 1 regulating instead of drifting.
    for (c, task) in feet_tasks.iter_mut().enumerate() {
        let frame = &model.contacts()[c];
        let p = kin.pos[frame.body] + kin.rot[frame.body] * frame.offset;
        let r_now = base_rot.transpose() * (p - base_pos);
        let frame_home = {
            // Relative position at the home configuration.
            let kin0 = rbd_core::Kinematics::compute(model, q_home)
                .map_err(centroidal::CentroidalError::from)?;
            let p0 = kin0.pos[frame.body] + kin0.rot[frame.body] * frame.offset;
            kin0.rot[0].transpose() * (p0 - kin0.pos[0])
        };
        task.desired = DVector::from_column_slice((gains.feet * (frame_home - r_now)).as_slice());
    }

    Ok(TaskStack {
        levels: vec![
            TaskLevel { tasks: feet_tasks },
            TaskLevel { tasks: vec![pelvis_task] },
            TaskLevel { tasks: vec![momentum_task, posture_task] },
        ],
        vel_limit: DVector::from_element(nv, f64::INFINITY),
        pos_lower: None,
        pos_upper: None,
    })
}
