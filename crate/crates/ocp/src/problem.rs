use nalgebra::{DVector, Vector3};
use rbd_core::{Model, RbdError, State};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OcpError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Rbd(#[from] RbdError),
    #[error("JSON: {0}")]
    Json(String),
}

/// Planar contact surface with friction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Surface {
    /// Unit outward normal (pointing away from the material).
    pub normal: Vector3<f64>,
    /// Plane offset `d` in `n·p + d = 0`.
    pub offset: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Minimum normal loading, N.
    pub force_threshold: f64,
}

impl Surface {
    pub fn validate(&self) -> Result<(), OcpError> {
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(OcpError::Invalid("surface normal must be unit".into()));
        }
        if self.friction <= 0.0 {
            return Err(OcpError::Invalid("friction must be positive".into()));
        }
        if self.force_threshold < 0.0 {
            return Err(OcpError::Invalid("force threshold must be >= 0".into()));
        }
        Ok(())
    }
}

/// Fixed a-priori contact plan: for every contact and shooting interval,
/// the surface it is pressed against (`None` while in flight).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSchedule {
    /// `active[contact][interval] = Some(surface index)`.
    pub active: Vec<Vec<Option<usize>>>,
    /// Take-off interval `N_T` (last stance interval of the leading phase).
    pub take_off: usize,
    /// Landing interval `N_L` (first stance interval after flight).
    pub landing: usize,
}

impl ContactSchedule {
    pub fn n_intervals(&self) -> usize {
        self.active.first().map_or(0, Vec::len)
    }

    /// Nodes at which contact `c` must satisfy the kinematic constraints:
    /// every node touching an active interval.
    pub fn active_nodes(&self, contact: usize) -> Vec<(usize, usize)> {
        let mut nodes = Vec::new();
        let intervals = &self.active[contact];
        for k in 0..=intervals.len() {
            // Surface at node k: from interval k if active, else k-1.
            let surf = if k < intervals.len() && intervals[k].is_some() {
                intervals[k]
            } else if k > 0 {
                intervals[k - 1]
            } else {
                None
            };
            if let Some(s) = surf {
                nodes.push((k, s));
            }
        }
        nodes
    }
}

/// Box and path bounds of the OCP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bounds {
    pub tau_lower: DVector<f64>,
    pub tau_upper: DVector<f64>,
    /// Step-size bounds `(lower, upper)`, s.
    pub dt: (f64, f64),
    /// Per-contact world-frame workspace box `(lower, upper)`.
    pub workspace: Vec<(Vector3<f64>, Vector3<f64>)>,
    /// Optional per-coordinate boxes applied at every node.
    pub q_lower: Option<DVector<f64>>,
    pub q_upper: Option<DVector<f64>>,
    pub nu_lower: Option<DVector<f64>>,
    pub nu_upper: Option<DVector<f64>>,
}

/// One additive term of the objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CostTerm {
    /// `sum_{k in nodes} weight * || x_k[idx] - target ||^2` with `idx`
    /// indexing into `x = [q, nu]`.
    StateQuad {
        nodes: Vec<usize>,
        idx: Vec<usize>,
        target: Vec<f64>,
        weight: f64,
    },
    /// `sum_{k=first..=last} weight * || u_{k+1}[idx] - u_k[idx] ||^2`
    /// (forward differences over the interval controls).
    ControlDiffQuad {
        first: usize,
        last: usize,
        idx: Vec<usize>,
        weight: f64,
    },
    /// `sum_k -weight * (h_ang(x_k) · direction)` over all nodes: rewards
    /// angular momentum about the model root along a fixed axis
    /// (fixed-base models).
    AngularMomentumAlong {
        direction: Vector3<f64>,
        weight: f64,
    },
}

/// Continuous OCP definition ready for transcription.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub schedule: ContactSchedule,
    pub surfaces: Vec<Surface>,
    pub x_init: State,
    pub x_goal: Option<State>,
    /// Enforce `x_0 = x_{N_s}` and leave `x_0` free (flywheel problems).
    pub periodic: bool,
    pub bounds: Bounds,
    pub cost: Vec<CostTerm>,
    pub n_intervals: usize,
}

impl Problem {
    pub fn validate(&self) -> Result<(), OcpError> {
        let n_c = self.model.contacts().len();
        self.x_init.check_dims(&self.model)?;
        if let Some(goal) = &self.x_goal {
            goal.check_dims(&self.model)?;
        }
        if self.model.has_floating_base() {
            let n = self.x_init.base_quaternion().norm();
            if (n - 1.0).abs() > 1e-9 {
                return Err(OcpError::Invalid(format!(
                    "initial quaternion norm {n} is not unit"
                )));
            }
        }
        if n_c > 0 && self.schedule.active.len() != n_c {
            return Err(OcpError::Invalid(format!(
                "schedule covers {} contacts, model has {n_c}",
                self.schedule.active.len()
            )));
        }
        // A contact problem (surfaces declared) must activate something;
        // contact frames used only as workspace markers may stay inactive.
        if n_c > 0
            && !self.surfaces.is_empty()
            && self.schedule.active.iter().all(|v| v.iter().all(Option::is_none))
        {
            return Err(OcpError::Invalid("empty contact schedule".into()));
        }
        for (c, intervals) in self.schedule.active.iter().enumerate() {
            if intervals.len() != self.n_intervals {
                return Err(OcpError::Invalid(format!(
                    "contact {c}: schedule has {} intervals, expected {}",
                    intervals.len(),
                    self.n_intervals
                )));
            }
            for s in intervals.iter().flatten() {
                if *s >= self.surfaces.len() {
                    return Err(OcpError::Invalid(format!(
                        "contact {c}: surface index {s} out of range"
                    )));
                }
            }
        }
        if self.schedule.take_off > self.schedule.landing
            || self.schedule.landing > self.n_intervals
        {
            return Err(OcpError::Invalid(
                "need take_off <= landing <= N_s".into(),
            ));
        }
        for s in &self.surfaces {
            s.validate()?;
        }
        if self.bounds.dt.0 <= 0.0 || self.bounds.dt.0 > self.bounds.dt.1 {
            return Err(OcpError::Invalid("bad step-size bounds".into()));
        }
        let n_act = self.model.n_actuated();
        if self.bounds.tau_lower.len() != n_act || self.bounds.tau_upper.len() != n_act {
            return Err(OcpError::Invalid("torque bound dimension mismatch".into()));
        }
        if self
            .bounds
            .tau_lower
            .iter()
            .zip(self.bounds.tau_upper.iter())
            .any(|(l, u)| l > u)
        {
            return Err(OcpError::Invalid("torque bounds crossed".into()));
        }
        if self.bounds.workspace.len() != n_c {
            return Err(OcpError::Invalid("workspace bounds per contact required".into()));
        }
        for (lo, hi) in &self.bounds.workspace {
            if (0..3).any(|i| lo[i] > hi[i]) {
                return Err(OcpError::Invalid("workspace box crossed".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let spec = ProblemSpec::from_problem(self);
        serde_json::to_string_pretty(&spec).expect("problem serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, OcpError> {
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| OcpError::Json(e.to_string()))?;
        spec.into_problem()
    }
}

/// Solved problem artifact: the problem definition plus the decision
/// vector, replayable by the `export` command.
#[derive(Debug, Serialize, Deserialize)]
pub struct SavedSolution {
    pub problem: serde_json::Value,
    pub z: Vec<f64>,
}

impl SavedSolution {
    pub fn new(problem: &Problem, z: &DVector<f64>) -> Self {
        let spec = ProblemSpec::from_problem(problem);
        Self {
            problem: serde_json::to_value(spec).expect("problem serialization"),
            z: z.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialization")
    }

    pub fn from_json(text: &str) -> Result<(Problem, DVector<f64>), OcpError> {
        let saved: SavedSolution =
            serde_json::from_str(text).map_err(|e| OcpError::Json(e.to_string()))?;
        let spec: ProblemSpec = serde_json::from_value(saved.problem)
            .map_err(|e| OcpError::Json(e.to_string()))?;
        let problem = spec.into_problem()?;
        Ok((problem, DVector::from_vec(saved.z)))
    }
}

/// Serialization mirror of [`Problem`].
#[derive(Debug, Serialize, Deserialize)]
struct ProblemSpec {
    model: rbd_core::ModelSpec,
    schedule: ContactSchedule,
    surfaces: Vec<Surface>,
    x_init_q: Vec<f64>,
    x_init_nu: Vec<f64>,
    x_goal_q: Option<Vec<f64>>,
    x_goal_nu: Option<Vec<f64>>,
    periodic: bool,
    bounds: Bounds,
    cost: Vec<CostTerm>,
    n_intervals: usize,
}

impl ProblemSpec {
    fn from_problem(p: &Problem) -> Self {
        Self {
            model: rbd_core::ModelSpec::from_model(&p.model),
            schedule: p.schedule.clone(),
            surfaces: p.surfaces.clone(),
            x_init_q: p.x_init.q.iter().copied().collect(),
            x_init_nu: p.x_init.nu.iter().copied().collect(),
            x_goal_q: p.x_goal.as_ref().map(|x| x.q.iter().copied().collect()),
            x_goal_nu: p.x_goal.as_ref().map(|x| x.nu.iter().copied().collect()),
            periodic: p.periodic,
            bounds: p.bounds.clone(),
            cost: p.cost.clone(),
            n_intervals: p.n_intervals,
        }
    }

    fn into_problem(self) -> Result<Problem, OcpError> {
        let model = self.model.build()?;
        let x_goal = match (self.x_goal_q, self.x_goal_nu) {
            (Some(q), Some(nu)) => Some(State::new(
                DVector::from_vec(q),
                DVector::from_vec(nu),
            )),
            _ => None,
        };
        let p = Problem {
            model,
            schedule: self.schedule,
            surfaces: self.surfaces,
            x_init: State::new(
                DVector::from_vec(self.x_init_q),
                DVector::from_vec(self.x_init_nu),
            ),
            x_goal,
            periodic: self.periodic,
            bounds: self.bounds,
            cost: self.cost,
            n_intervals: self.n_intervals,
        };
        p.validate()?;
        Ok(p)
    }
}
