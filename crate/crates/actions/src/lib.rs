//! Problem builders for the planned agile actions: the squat jump, the
//! half-squat jump onto a vertical surface, and the periodic arm flywheel
//! trajectory used by the upper-body stabilizer.
//!
//! Published parameters are the defaults: 30 shooting intervals with
//! take-off interval 10 and landing interval 20, step sizes within
//! [0.03 s, 0.25 s], and cost weights 50 (base target), 1 (joint
//! velocities), 1 (force rate) and 1e-3 (acceleration rate). The remaining
//! defaults (target height, wall placement, flywheel weights) are artifact
//! choices, all overridable.

use nalgebra::{DVector, Vector3};
use ocp::{Bounds, ContactSchedule, CostTerm, OcpError, Problem, Surface};
use rbd_core::{Control, Model, State};
use serde::{Deserialize, Serialize};
use template_model::{home_state, TemplateParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("invalid action parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Ocp(#[from] OcpError),
}

/// Jump problem parameters (squat and half-squat).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct JumpParams {
    /// Number of shooting intervals `N_s`.
    pub n_intervals: usize,
    /// Take-off interval `N_T` (last stance interval before flight).
    pub take_off: usize,
    /// Landing interval `N_L` (first stance interval after flight).
    pub landing: usize,
    /// Step-size bounds, s.
    pub dt_bounds: (f64, f64),
    /// Base-position displacement target, m (vertical jumps move +z).
    pub target_displacement: Vector3<f64>,
    /// Flight-phase base-target weight.
    pub weight_target: f64,
    /// Post-take-off actuated-velocity weight.
    pub weight_joint_vel: f64,
    /// Post-landing force-rate weight.
    pub weight_force_rate: f64,
    /// Whole-horizon acceleration-rate weight.
    pub weight_accel_rate: f64,
    /// Flight-phase generalized-velocity weight.
    pub weight_flight_vel: f64,
    /// Ground surface.
    pub ground: Surface,
    /// Vertical surface for the half-squat jump.
    pub wall: Surface,
    /// Symmetric actuator force limit, N.
    pub tau_limit: f64,
    /// Workspace box half-extents around each home foot position
    /// (x, y, below, above), m.
    pub workspace_xy: f64,
    pub workspace_below: f64,
    pub workspace_above: f64,
}

impl Default for JumpParams {
    fn default() -> Self {
        Self {
            n_intervals: 30,
            take_off: 10,
            landing: 20,
            dt_bounds: (0.03, 0.25),
            target_displacement: Vector3::new(0.0, 0.0, 0.3),
            weight_target: 50.0,
            weight_joint_vel: 1.0,
            weight_force_rate: 1.0,
            weight_accel_rate: 1e-3,
            weight_flight_vel: 1.0,
            ground: Surface {
                normal: Vector3::z(),
                offset: 0.0,
                friction: 0.5,
                force_threshold: 10.0,
            },
            wall: Surface {
                normal: Vector3::x(),
                offset: 0.6,
                friction: 0.5,
                force_threshold: 10.0,
            },
            tau_limit: 2500.0,
            workspace_xy: 0.45,
            workspace_below: 0.05,
            workspace_above: 0.9,
        }
    }
}

impl JumpParams {
    pub fn validate(&self) -> Result<(), ActionError> {
        if !(self.take_off < self.landing && self.landing < self.n_intervals) {
            return Err(ActionError::BadParams(format!(
                "need take_off < landing < N_s, got {} / {} / {}",
                self.take_off, self.landing, self.n_intervals
            )));
        }
        for w in [
            self.weight_target,
            self.weight_joint_vel,
            self.weight_force_rate,
            self.weight_accel_rate,
            self.weight_flight_vel,
        ] {
            if w < 0.0 {
                return Err(ActionError::BadParams("weights must be >= 0".into()));
            }
        }
        Ok(())
    }
}

fn shared_bounds(model: &Model, params: &JumpParams, x_init: &State) -> Bounds {
    let n_act = model.n_actuated();
    let workspace = (0..model.contacts().len())
        .map(|c| {
            let p = rbd_core::fk_contact(model, &x_init.q, c).expect("contact ids valid");
            (
                p + Vector3::new(-params.workspace_xy, -params.workspace_xy, -params.workspace_below),
                p + Vector3::new(params.workspace_xy, params.workspace_xy, params.workspace_above),
            )
        })
        .collect();
    Bounds {
        tau_lower: DVector::from_element(n_act, -params.tau_limit),
        tau_upper: DVector::from_element(n_act, params.tau_limit),
        dt: params.dt_bounds,
        workspace,
        q_lower: None,
        q_upper: None,
        nu_lower: None,
        nu_upper: None,
    }
}

/// Shared cost structure of both jumps; `target_idx`/`target_vals` select
/// which state entries the flight-phase tracking term penalizes.
fn jump_cost(
    model: &Model,
    params: &JumpParams,
    target_idx: Vec<usize>,
    target_vals: Vec<f64>,
) -> Vec<CostTerm> {
    let nq = model.nq();
    let nv = model.nv();
    let n_c = model.contacts().len();
    let n_s = params.n_intervals;
    let flight_nodes: Vec<usize> = (params.take_off + 1..=params.landing).collect();
    let mut cost = vec![
        CostTerm::StateQuad {
            nodes: flight_nodes.clone(),
            idx: (nq..nq + nv).collect(),
            target: vec![0.0; nv],
            weight: params.weight_flight_vel,
        },
        CostTerm::StateQuad {
            nodes: flight_nodes,
            idx: target_idx,
            target: target_vals,
            weight: params.weight_target,
        },
        CostTerm::StateQuad {
            nodes: (params.take_off + 1..=n_s).collect(),
            idx: (nq + 6..nq + nv).collect(),
            target: vec![0.0; nv - 6],
            weight: params.weight_joint_vel,
        },
        CostTerm::ControlDiffQuad {
            first: 0,
            last: n_s - 2,
            idx: (0..nv).collect(),
            weight: params.weight_accel_rate,
        },
    ];
    if params.landing + 1 <= n_s - 2 {
        cost.push(CostTerm::ControlDiffQuad {
            first: params.landing + 1,
            last: n_s - 2,
            idx: (nv..nv + 3 * n_c).collect(),
            weight: params.weight_force_rate,
        });
    }
    cost
}

/// Squat jump: all four feet leave the ground between the take-off and
/// landing intervals; the flight-phase cost tracks a vertically displaced
/// base height.
pub fn build_squat_jump(
    model: &Model,
    template: &TemplateParams,
    params: &JumpParams,
) -> Result<Problem, ActionError> {
    params.validate()?;
    let x_init = home_state(model, template);
    let n_s = params.n_intervals;
    let active: Vec<Vec<Option<usize>>> = (0..model.contacts().len())
        .map(|_| {
            (0..n_s)
                .map(|k| {
                    if k <= params.take_off || k >= params.landing {
                        Some(0)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let target_z = x_init.q[2] + params.target_displacement.z;
    let cost = jump_cost(model, params, vec![2], vec![target_z]);
    let problem = Problem {
        model: model.clone(),
        schedule: ContactSchedule {
            active,
            take_off: params.take_off,
            landing: params.landing,
        },
        surfaces: vec![params.ground.clone()],
        x_init,
        x_goal: None,
        periodic: false,
        bounds: shared_bounds(model, params, &home_state(model, template)),
        cost,
        n_intervals: n_s,
    };
    problem.validate()?;
    Ok(problem)
}

/// Half-squat jump: the front feet stay on the ground throughout while the
/// rear feet lift and land on a vertical surface; the flight-phase cost
/// tracks the initial floating-base pose.
pub fn build_half_squat_jump(
    model: &Model,
    template: &TemplateParams,
    params: &JumpParams,
) -> Result<Problem, ActionError> {
    params.validate()?;
    if params.ground.normal.dot(&params.wall.normal).abs() > 1.0 - 1e-6 {
        return Err(ActionError::BadParams(
            "wall surface must be transverse to the ground".into(),
        ));
    }
    let x_init = home_state(model, template);
    let n_s = params.n_intervals;
    let front = ["fl_foot", "fr_foot"];
    let active: Vec<Vec<Option<usize>>> = model
        .contacts()
        .iter()
        .map(|c| {
            let is_front = front.contains(&c.name.as_str());
            (0..n_s)
                .map(|k| {
                    if is_front {
                        Some(0)
                    } else if k <= params.take_off {
                        Some(0)
                    } else if k >= params.landing {
                        Some(1)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    // Flight-phase tracking of the initial base pose (position and
    // quaternion components).
    let target_idx: Vec<usize> = (0..7).collect();
    let target_vals: Vec<f64> = (0..7).map(|i| x_init.q[i]).collect();
    let cost = jump_cost(model, params, target_idx, target_vals);

    let mut bounds = shared_bounds(model, params, &x_init);
    // Rear-foot workspaces must reach the wall plane.
    for (c, frame) in model.contacts().iter().enumerate() {
        if !front.contains(&frame.name.as_str()) {
            let wall_x = -params.wall.offset / params.wall.normal.x.max(1e-9);
            bounds.workspace[c].0.x = bounds.workspace[c].0.x.min(wall_x - 0.05);
        }
    }
    let problem = Problem {
        model: model.clone(),
        schedule: ContactSchedule {
            active,
            take_off: params.take_off,
            landing: params.landing,
        },
        surfaces: vec![params.ground.clone(), params.wall.clone()],
        x_init,
        x_goal: None,
        periodic: false,
        bounds,
        cost,
        n_intervals: n_s,
    };
    problem.validate()?;
    Ok(problem)
}

/// Initial guess for jump problems: stance nodes hold the initial state
/// with the weight shared over the active contacts; flight nodes follow a
/// ballistic arc (free-fall accelerations, take-off velocity chosen so the
/// base lands at its starting height) with flight step sizes at their lower
/// bound. Dynamics-consistent along the flight, which gives the first
/// linearization usable step-size derivatives.
pub fn jump_initial_guess(nlp: &ocp::TranscribedNlp) -> DVector<f64> {
    let problem = &nlp.problem;
    let model = &problem.model;
    let n_s = problem.n_intervals;
    let n_t = problem.schedule.take_off;
    let n_l = problem.schedule.landing;
    let g = model.gravity().norm();
    let dt_stance = 0.5 * (problem.bounds.dt.0 + problem.bounds.dt.1);
    let dt_flight = problem.bounds.dt.0;
    let flight_intervals: Vec<usize> = (n_t + 1..n_l).collect();
    let t_flight = flight_intervals.len() as f64 * dt_flight;
    let v0 = 0.5 * g * t_flight;

    let weight = model.total_mass() * g;
    let mut states = vec![problem.x_init.clone(); n_s + 1];
    let mut controls = Vec::with_capacity(n_s);
    // Ballistic arc over the flight nodes (take-off instant is node
    // n_t + 1).
    let mut tau = 0.0;
    for k in n_t + 1..=n_l {
        let x = &mut states[k];
        x.q[2] += v0 * tau - 0.5 * g * tau * tau;
        x.nu[2] = v0 - g * tau;
        tau += dt_flight;
    }
    for k in 0..n_s {
        let mut u = Control::zero(model);
        let in_flight = k > n_t && k < n_l;
        u.dt = Some(if in_flight { dt_flight } else { dt_stance });
        if in_flight {
            u.nu_dot[2] = -g;
        }
        let active: Vec<usize> = (0..model.contacts().len())
            .filter(|&c| problem.schedule.active[c][k].is_some())
            .collect();
        if !active.is_empty() {
            let share = weight / active.len() as f64;
            for &c in &active {
                let s = problem.schedule.active[c][k].unwrap();
                u.forces[c] = share * problem.surfaces[s].normal;
            }
        }
        controls.push(u);
    }
    nlp.pack(&states, &controls)
}

/// Flywheel problem parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FlywheelParams {
    pub n_intervals: usize,
    /// Horizon length (the trajectory is replayed by phase, so the scale is
    /// nominal), s.
    pub period: f64,
    /// Target angular-momentum direction.
    pub direction: Vector3<f64>,
    pub weight_momentum: f64,
    pub weight_joint_vel: f64,
    /// Per-joint symmetric position limits, rad.
    pub q_limits: Vec<f64>,
    /// Symmetric velocity limit, rad/s.
    pub qd_limit: f64,
    /// Symmetric torque limit, N m.
    pub tau_limit: f64,
    /// End-effector workspace box (self-collision guard), m.
    pub workspace_lower: Vector3<f64>,
    pub workspace_upper: Vector3<f64>,
}

impl Default for FlywheelParams {
    fn default() -> Self {
        Self {
            n_intervals: 20,
            period: 1.0,
            direction: Vector3::y(),
            weight_momentum: 10.0,
            weight_joint_vel: 0.01,
            q_limits: vec![2.8, 2.5],
            qd_limit: 8.0,
            tau_limit: 120.0,
            workspace_lower: Vector3::new(-0.55, -0.2, -0.65),
            workspace_upper: Vector3::new(0.55, 0.2, 0.35),
        }
    }
}

impl FlywheelParams {
    pub fn validate(&self, model: &Model) -> Result<(), ActionError> {
        if self.n_intervals < 4 {
            return Err(ActionError::BadParams("need at least 4 intervals".into()));
        }
        if self.q_limits.len() != model.nq() {
            return Err(ActionError::BadParams(format!(
                "q_limits covers {} joints, the arm has {}",
                self.q_limits.len(),
                model.nq()
            )));
        }
        if (0..3).any(|i| self.workspace_lower[i] >= self.workspace_upper[i]) {
            return Err(ActionError::BadParams("degenerate workspace box".into()));
        }
        if self.period <= 0.0 {
            return Err(ActionError::BadParams("period must be positive".into()));
        }
        Ok(())
    }
}

/// Periodic flywheel trajectory on the fixed-base arm: maximize the angular
/// momentum along `direction` (the printed momentum term is linear, read
/// here as its component along the target axis) under joint, torque and
/// workspace bounds, with equal first and final states and a free initial
/// configuration.
pub fn build_flywheel_ocp(
    arm_model: &Model,
    params: &FlywheelParams,
) -> Result<Problem, ActionError> {
    params.validate(arm_model)?;
    let n_s = params.n_intervals;
    let nq = arm_model.nq();
    let nv = arm_model.nv();
    let dt = params.period / n_s as f64;
    let q_lower = DVector::from_fn(nq, |i, _| -params.q_limits[i]);
    let q_upper = DVector::from_fn(nq, |i, _| params.q_limits[i]);
    let problem = Problem {
        model: arm_model.clone(),
        schedule: ContactSchedule {
            active: vec![vec![None; n_s]; arm_model.contacts().len()],
            take_off: 0,
            landing: 0,
        },
        surfaces: vec![],
        x_init: State::neutral(arm_model),
        x_goal: None,
        periodic: true,
        bounds: Bounds {
            tau_lower: DVector::from_element(nv, -params.tau_limit),
            tau_upper: DVector::from_element(nv, params.tau_limit),
            dt: (dt, dt),
            workspace: vec![(params.workspace_lower, params.workspace_upper)],
            q_lower: Some(q_lower),
            q_upper: Some(q_upper),
            nu_lower: Some(DVector::from_element(nv, -params.qd_limit)),
            nu_upper: Some(DVector::from_element(nv, params.qd_limit)),
        },
        cost: vec![
            CostTerm::AngularMomentumAlong {
                direction: params.direction,
                weight: params.weight_momentum,
            },
            CostTerm::StateQuad {
                nodes: (0..=n_s).collect(),
                idx: (nq..nq + nv).collect(),
                target: vec![0.0; nv],
                weight: params.weight_joint_vel,
            },
        ],
        n_intervals: n_s,
    };
    problem.validate()?;
    Ok(problem)
}
