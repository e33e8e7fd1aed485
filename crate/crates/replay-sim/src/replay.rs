use crate::imu::imu_read;
use crate::sim::{base_pitch, step_sim, SimConfig, SimState};
use crate::SimError;
use nalgebra::DVector;
use ocp::Trajectory;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rbd_core::{Model, State};
use serde::{Deserialize, Serialize};
use stabilizers::{
    angmom_tasks, hik_solve, ocp_posture_lookup, raibert_update, AngMomGains,
    FlywheelTrajectory, StabilizerState,
};
use std::io::Write;
use std::path::Path;

/// Upper-body stabilizing strategy applied during the replay.
#[derive(Debug, Clone)]
pub enum StabilizerChoice {
    None,
    Raibert,
    AngMom,
    /// Phase-indexed replay of a periodic flywheel arm trajectory.
    OcpPosture(FlywheelTrajectory),
}

impl StabilizerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            StabilizerChoice::None => "none",
            StabilizerChoice::Raibert => "raibert",
            StabilizerChoice::AngMom => "angmom",
            StabilizerChoice::OcpPosture(_) => "ocp",
        }
    }
}

/// Stabilizer gains; the continuous-time gains are multiplied by the
/// control period internally.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilizerConfig {
    /// Raibert posture gain, s (joint increment per unit pitch rate per
    /// second of control time).
    pub raibert_gain: f64,
    /// Flywheel phase gain, 1/rad (per second of control time).
    pub gain_tau: f64,
    /// Arm joint excursion limit, rad.
    pub arm_q_limit: f64,
    /// Arm velocity limit used by the hierarchical IK, rad/s.
    pub arm_vel_limit: f64,
    /// Angular-momentum stack gains.
    pub angmom_feet: f64,
    pub angmom_posture: f64,
    pub angmom_momentum_weight: f64,
    pub angmom_posture_weight: f64,
}

impl Default for StabilizerConfig {
    fn default() -> Self {
        Self {
            raibert_gain: 0.8,
            gain_tau: 0.18,
            arm_q_limit: 2.6,
            arm_vel_limit: 10.0,
            angmom_feet: 2.0,
            angmom_posture: 1.5,
            angmom_momentum_weight: 1.0,
            angmom_posture_weight: 0.02,
        }
    }
}

/// One logged control tick.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    pub t: f64,
    pub pitch: f64,
    pub omega_imu: [f64; 3],
    pub forces: Vec<[f64; 3]>,
    pub q: Vec<f64>,
    /// Arm position references issued by the stabilizer.
    pub arm_cmd: Vec<f64>,
}

/// Time series of a replay run.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub dt: f64,
    pub rows: Vec<RunRow>,
    pub contact_names: Vec<String>,
}

/// Headline numbers of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub peak_pitch_rad: f64,
    pub settling_time_s: f64,
    pub max_contact_force_n: f64,
}

impl RunLog {
    pub fn summary(&self) -> RunSummary {
        let peak = self
            .rows
            .iter()
            .map(|r| r.pitch.abs())
            .fold(0.0f64, f64::max);
        let final_pitch = self.rows.last().map_or(0.0, |r| r.pitch);
        let mut settling = 0.0;
        for r in &self.rows {
            if (r.pitch - final_pitch).abs() > 0.02 {
                settling = r.t;
            }
        }
        let max_force = self
            .rows
            .iter()
            .flat_map(|r| r.forces.iter())
            .map(|f| (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt())
            .fold(0.0f64, f64::max);
        RunSummary {
            peak_pitch_rad: peak,
            settling_time_s: settling,
            max_contact_force_n: max_force,
        }
    }

    /// CSV export: `t, pitch, omega..., F_<contact>..., q...`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        let nq = self.rows.first().map_or(0, |r| r.q.len());
        let mut header = vec![
            "t".to_string(),
            "pitch".to_string(),
            "wx".to_string(),
            "wy".to_string(),
            "wz".to_string(),
        ];
        for c in &self.contact_names {
            for ax in ["x", "y", "z"] {
                header.push(format!("F_{c}_{ax}"));
            }
        }
        for i in 0..nq {
            header.push(format!("q{i}"));
        }
        writeln!(f, "{}", header.join(","))?;
        for r in &self.rows {
            let mut row = vec![
                format!("{:.17e}", r.t),
                format!("{:.17e}", r.pitch),
                format!("{:.17e}", r.omega_imu[0]),
                format!("{:.17e}", r.omega_imu[1]),
                format!("{:.17e}", r.omega_imu[2]),
            ];
            for fc in &r.forces {
                row.extend(fc.iter().map(|v| format!("{v:.17e}")));
            }
            row.extend(r.q.iter().map(|v| format!("{v:.17e}")));
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Map the plan's joint columns onto the replay model's actuated indices.
fn plan_to_model_map(model: &Model, traj: &Trajectory) -> Result<Vec<usize>, SimError> {
    let actuated: Vec<&str> = model
        .bodies()
        .iter()
        .filter(|b| !matches!(b.joint.kind, rbd_core::JointKind::Floating))
        .map(|b| b.joint.name.as_str())
        .collect();
    traj.joint_names
        .iter()
        .map(|n| {
            actuated
                .iter()
                .position(|a| a == n)
                .ok_or_else(|| SimError::Mismatch(format!("plan joint `{n}` not in the model")))
        })
        .collect()
}

/// Closed-loop replay: lower-body joint references from the plan,
/// upper-body references from the chosen stabilizer, feedforward torques
/// from the plan. Runs at the simulator rate for the plan duration plus the
/// configured settling time and logs the IMU-pitch benchmark quantities.
pub fn run_replay(
    model: &Model,
    traj: &Trajectory,
    stabilizer: &StabilizerChoice,
    stab_cfg: &StabilizerConfig,
    cfg: &SimConfig,
) -> Result<RunLog, SimError> {
    cfg.validate()?;
    if traj.samples.is_empty() {
        return Err(SimError::Mismatch("empty trajectory".into()));
    }
    let plan_map = plan_to_model_map(model, traj)?;
    let n_act = model.n_actuated();
    let n_u = model.n_unactuated();
    let arm_idx: Vec<usize> = template_model::arm_joint_indices(model)
        .iter()
        .map(|&v| v - 6)
        .collect();

    // Initial state from the first plan sample (plan coordinates cover the
    // base and the lower body; arms start at the home posture).
    let first = &traj.samples[0];
    let mut q0 = model.neutral_q();
    let mut nu0 = DVector::zeros(model.nv());
    for i in 0..7 {
        q0[i] = first.q[i];
    }
    for i in 0..6 {
        nu0[i] = first.nu[i];
    }
    for (col, &j) in plan_map.iter().enumerate() {
        q0[n_u + j] = first.q[7 + col];
        nu0[6 + j] = first.nu[6 + col];
    }
    // Start at the spring equilibrium: sink the base by the static
    // penetration so the initial drop-in transient does not excite pitch.
    let static_sink =
        model.total_mass() * model.gravity().norm()
            / (model.contacts().len().max(1) as f64 * cfg.contact_stiffness);
    q0[2] -= static_sink;
    let mut state = SimState {
        x: State::new(q0.clone(), nu0),
        t: 0.0,
    };
    let q_home_full = q0.clone();

    // Stabilizer state over the actuated joints.
    let arm_low = DVector::from_fn(n_act, |j, _| {
        if arm_idx.contains(&j) {
            -stab_cfg.arm_q_limit
        } else {
            f64::NEG_INFINITY
        }
    });
    let arm_high = DVector::from_fn(n_act, |j, _| {
        if arm_idx.contains(&j) {
            stab_cfg.arm_q_limit
        } else {
            f64::INFINITY
        }
    });
    let q_home_act = DVector::from_fn(n_act, |j, _| q_home_full[n_u + j]);
    let mut st = StabilizerState::pitch_only(
        q_home_act.clone(),
        &arm_idx,
        stab_cfg.raibert_gain * cfg.dt,
        stab_cfg.gain_tau * cfg.dt,
        arm_low,
        arm_high,
    )?;
    let angmom_gains = AngMomGains {
        feet: stab_cfg.angmom_feet,
        posture: stab_cfg.angmom_posture,
        momentum_weight: stab_cfg.angmom_momentum_weight,
        posture_weight: stab_cfg.angmom_posture_weight,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let steps = ((traj.duration() + cfg.settle_time) / cfg.dt).round() as usize;
    let mut rows = Vec::with_capacity(steps);
    let mut q_cmd = q_home_act.clone();
    let mut qd_cmd = DVector::zeros(n_act);
    let mut tau_ff = DVector::zeros(n_act);

    // Settle onto the ground holding the first plan sample before logging.
    let preroll_steps = (cfg.preroll / cfg.dt).round() as usize;
    for (col, &j) in plan_map.iter().enumerate() {
        q_cmd[j] = first.q[7 + col];
        qd_cmd[j] = 0.0;
    }
    for _ in 0..preroll_steps {
        let (next, _) = step_sim(model, &state, &q_cmd, &qd_cmd, &tau_ff, cfg)?;
        state = next;
    }
    state.t = 0.0;

    for _ in 0..steps {
        let omega = imu_read(&state, cfg, &mut rng);

        // Lower-body references from the plan (held at the final sample
        // after the plan ends).
        let sample = &traj.samples[traj.index_at(state.t)];
        for (col, &j) in plan_map.iter().enumerate() {
            q_cmd[j] = sample.q[7 + col];
            qd_cmd[j] = sample.nu[6 + col];
            tau_ff[j] = sample.tau[col];
        }

        // Upper-body references from the stabilizer.
        match stabilizer {
            StabilizerChoice::None => {
                for &j in &arm_idx {
                    q_cmd[j] = q_home_act[j];
                    qd_cmd[j] = 0.0;
                    tau_ff[j] = 0.0;
                }
            }
            StabilizerChoice::Raibert => {
                let q_d = raibert_update(&mut st, &omega);
                for &j in &arm_idx {
                    q_cmd[j] = q_d[j];
                    qd_cmd[j] = 0.0;
                    tau_ff[j] = 0.0;
                }
            }
            StabilizerChoice::AngMom => {
                let mut stack =
                    angmom_tasks(model, &state.x.q, &omega, &q_home_full, &angmom_gains)?;
                for j in 0..model.nv() {
                    stack.vel_limit[j] = if j >= 6 && arm_idx.contains(&(j - 6)) {
                        stab_cfg.arm_vel_limit
                    } else {
                        f64::INFINITY
                    };
                }
                let qdot = hik_solve(model, &stack, &state.x.q, cfg.dt)?;
                for &j in &arm_idx {
                    let target = (st.q_d[j] + cfg.dt * qdot[6 + j])
                        .max(-stab_cfg.arm_q_limit)
                        .min(stab_cfg.arm_q_limit);
                    st.q_d[j] = target;
                    q_cmd[j] = target;
                    qd_cmd[j] = qdot[6 + j];
                    tau_ff[j] = 0.0;
                }
            }
            StabilizerChoice::OcpPosture(qstar) => {
                let q_arm = ocp_posture_lookup(&mut st, qstar, omega.y)?;
                // Mirror the single-arm trajectory onto both arms.
                for (pair, &j) in arm_idx.iter().enumerate() {
                    let src = pair % q_arm.len();
                    q_cmd[j] = q_arm[src].max(-stab_cfg.arm_q_limit).min(stab_cfg.arm_q_limit);
                    qd_cmd[j] = 0.0;
                    tau_ff[j] = 0.0;
                }
            }
        }

        let (next, out) = step_sim(model, &state, &q_cmd, &qd_cmd, &tau_ff, cfg)?;
        rows.push(RunRow {
            t: state.t,
            pitch: base_pitch(&state.x),
            omega_imu: [omega.x, omega.y, omega.z],
            forces: out
                .contact_forces
                .iter()
                .map(|f| [f.x, f.y, f.z])
                .collect(),
            q: state.x.q.iter().copied().collect(),
            arm_cmd: arm_idx.iter().map(|&j| q_cmd[j]).collect(),
        });
        state = next;
    }

    Ok(RunLog {
        dt: cfg.dt,
        rows,
        contact_names: model.contacts().iter().map(|c| c.name.clone()).collect(),
    })
}
