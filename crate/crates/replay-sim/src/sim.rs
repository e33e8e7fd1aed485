use crate::SimError;
use nalgebra::{DVector, Vector3};
use ocp::Surface;
use rbd_core::{forward_dynamics, Kinematics, Model, Quaternion, State};
use serde::{Deserialize, Serialize};

/// Penalty-contact simulator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Contact spring stiffness, N/m.
    pub contact_stiffness: f64,
    /// Contact damper, N s/m.
    pub contact_damping: f64,
    /// Tangential regularization velocity of the Coulomb model, m/s.
    pub friction_reg_vel: f64,
    /// Friction coefficient of every surface.
    pub friction: f64,
    /// Simulation step, s (matches the plan interpolation step).
    pub dt: f64,
    /// Leg joint PD gains (prismatic: N/m, N s/m).
    pub kp_leg: f64,
    pub kd_leg: f64,
    /// Arm joint PD gains (revolute: N m/rad, N m s/rad).
    pub kp_arm: f64,
    pub kd_arm: f64,
    /// IMU rate noise standard deviation, rad/s.
    pub imu_noise_std: f64,
    /// Extra settling time simulated after the plan ends, s.
    pub settle_time: f64,
    /// Settling time simulated before the plan starts (not logged), s.
    pub preroll: f64,
    /// Contact surfaces (the ground plane by default).
    pub surfaces: Vec<Surface>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            contact_stiffness: 5e4,
            contact_damping: 2e3,
            friction_reg_vel: 5e-3,
            friction: 0.5,
            dt: 1e-3,
            kp_leg: 3e4,
            kd_leg: 600.0,
            kp_arm: 120.0,
            kd_arm: 8.0,
            imu_noise_std: 0.0,
            settle_time: 1.0,
            preroll: 0.6,
            surfaces: vec![Surface {
                normal: Vector3::z(),
                offset: 0.0,
                friction: 0.5,
                force_threshold: 0.0,
            }],
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.contact_stiffness <= 0.0 || self.contact_damping <= 0.0 {
            return Err(SimError::BadConfig("stiffness and damping must be positive".into()));
        }
        if self.dt <= 0.0 {
            return Err(SimError::BadConfig("step must be positive".into()));
        }
        Ok(())
    }
}

/// Simulator state: generalized coordinates plus simulated time.
#[derive(Debug, Clone)]
pub struct SimState {
    pub x: State,
    pub t: f64,
}

/// Per-step byproducts used for logging.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Net contact force applied at each contact frame.
    pub contact_forces: Vec<Vector3<f64>>,
    /// Applied actuated torques (PD + feedforward).
    pub tau: DVector<f64>,
}

/// Penalty contact force of one point against every configured surface:
/// spring-damper along the normal (tension clamped to zero), regularized
/// Coulomb friction capped at `mu * F_n` in the tangent plane.
fn contact_force(p: &Vector3<f64>, v: &Vector3<f64>, cfg: &SimConfig) -> Vector3<f64> {
    let mut total = Vector3::zeros();
    for s in &cfg.surfaces {
        let phi = s.normal.dot(p) + s.offset;
        if phi >= 0.0 {
            continue;
        }
        let phi_dot = s.normal.dot(v);
        let fn_mag = (-cfg.contact_stiffness * phi - cfg.contact_damping * phi_dot).max(0.0);
        if fn_mag == 0.0 {
            continue;
        }
        let v_t = v - phi_dot * s.normal;
        let speed = v_t.norm();
        let friction = cfg.friction.min(s.friction);
        let f_t = if speed > 1e-12 {
            -friction * fn_mag * v_t / speed.max(cfg.friction_reg_vel)
        } else {
            Vector3::zeros()
        };
        total += fn_mag * s.normal + f_t;
    }
    total
}

/// One semi-implicit Euler step of the full dynamics under penalty contacts
/// and joint PD with feedforward.
pub fn step_sim(
    model: &Model,
    state: &SimState,
    q_cmd: &DVector<f64>,
    qd_cmd: &DVector<f64>,
    tau_ff: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<(SimState, StepOutput), SimError> {
    cfg.validate()?;
    let n_act = model.n_actuated();
    if q_cmd.len() != n_act || qd_cmd.len() != n_act || tau_ff.len() != n_act {
        return Err(SimError::Mismatch(format!(
            "commands sized {} / {} / {}, model has {n_act} actuated joints",
            q_cmd.len(),
            qd_cmd.len(),
            tau_ff.len()
        )));
    }
    let x = &state.x;
    let kin = Kinematics::compute(model, &x.q)?;

    // Contact forces at the registered frames.
    let mut forces = Vec::with_capacity(model.contacts().len());
    for c in model.contacts() {
        let p = kin.pos[c.body] + kin.rot[c.body] * c.offset;
        let jac = rbd_core::point_jacobian(model, &kin, c.body, &p);
        let v = &jac * &x.nu;
        forces.push(contact_force(&p, &Vector3::new(v[0], v[1], v[2]), cfg));
    }

    // Joint PD with feedforward; gains switch per joint type.
    let n_u = if model.has_floating_base() { 7 } else { 0 };
    let v_u = if model.has_floating_base() { 6 } else { 0 };
    let mut tau = DVector::zeros(n_act);
    let mut act = 0usize;
    for body in model.bodies() {
        match body.joint.kind {
            rbd_core::JointKind::Floating => {}
            rbd_core::JointKind::Prismatic { .. } => {
                let q_i = x.q[n_u + act];
                let qd_i = x.nu[v_u + act];
                tau[act] = cfg.kp_leg * (q_cmd[act] - q_i) + cfg.kd_leg * (qd_cmd[act] - qd_i)
                    + tau_ff[act];
                act += 1;
            }
            rbd_core::JointKind::Revolute { .. } => {
                let q_i = x.q[n_u + act];
                let qd_i = x.nu[v_u + act];
                tau[act] = cfg.kp_arm * (q_cmd[act] - q_i) + cfg.kd_arm * (qd_cmd[act] - qd_i)
                    + tau_ff[act];
                act += 1;
            }
        }
    }

    let nu_dot = forward_dynamics(model, &x.q, &x.nu, &tau, &forces)?;
    let nu_next = &x.nu + cfg.dt * nu_dot;

    // Position update with the new velocity (semi-implicit).
    let mut q_next = x.q.clone();
    if model.has_floating_base() {
        for k in 0..3 {
            q_next[k] += cfg.dt * nu_next[k];
        }
        let rho = Quaternion::from_parts(x.q[3], x.q[4], x.q[5], x.q[6]);
        let omega = Vector3::new(nu_next[3], nu_next[4], nu_next[5]);
        let rate = rho.propagate(&omega);
        let mut raw = [0.0; 4];
        for k in 0..4 {
            raw[k] = x.q[3 + k] + cfg.dt * rate[k];
        }
        let norm = (raw.iter().map(|v| v * v).sum::<f64>()).sqrt();
        for k in 0..4 {
            q_next[3 + k] = raw[k] / norm;
        }
        for j in 6..model.nv() {
            q_next[j + 1] += cfg.dt * nu_next[j];
        }
    } else {
        for j in 0..model.nv() {
            q_next[j] += cfg.dt * nu_next[j];
        }
    }

    let next = State::new(q_next, nu_next);
    if !next.is_finite() {
        return Err(SimError::NonFinite(state.t));
    }
    Ok((
        SimState {
            x: next,
            t: state.t + cfg.dt,
        },
        StepOutput {
            contact_forces: forces,
            tau,
        },
    ))
}

/// Pitch of the base: the y-rotation of the ZYX (yaw-pitch-roll)
/// decomposition of the base orientation.
pub fn base_pitch(x: &State) -> f64 {
    let r = x.base_quaternion().rotation_matrix();
    (-r[(2, 0)]).clamp(-1.0, 1.0).asin()
}
