use crate::problem::OcpError;
use crate::transcribe::TranscribedNlp;
use nalgebra::{DVector, Vector3};
use rbd_core::{integrate_step, inverse_dynamics_split, Model, State};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// One time sample of a planned trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: Vec<f64>,
    pub nu: Vec<f64>,
    /// One world-frame force per contact, N.
    pub forces: Vec<[f64; 3]>,
    /// Actuated joint torques from the inverse dynamics, N or N m.
    pub tau: Vec<f64>,
}

/// Time-stamped sequence of states, forces and feedforward torques sampled
/// at a fixed output step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Output sampling step, s.
    pub dt: f64,
    /// Joint names of the actuated coordinates (torque column order).
    pub joint_names: Vec<String>,
    /// Contact frame names (force column order).
    pub contact_names: Vec<String>,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn state_at(&self, index: usize) -> State {
        let s = &self.samples[index.min(self.samples.len() - 1)];
        State::new(
            DVector::from_vec(s.q.clone()),
            DVector::from_vec(s.nu.clone()),
        )
    }

    /// Sample index for a time, clamped to the trajectory span.
    pub fn index_at(&self, t: f64) -> usize {
        if self.samples.is_empty() {
            return 0;
        }
        ((t / self.dt).round() as usize).min(self.samples.len() - 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, OcpError> {
        serde_json::from_str(text).map_err(|e| OcpError::Json(e.to_string()))
    }

    /// CSV export: `t, q..., nu..., F_<contact>_{x,y,z}..., tau_<joint>...`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        let nq = self.samples.first().map_or(0, |s| s.q.len());
        let nv = self.samples.first().map_or(0, |s| s.nu.len());
        let mut header = vec!["t".to_string()];
        for i in 0..nq {
            header.push(format!("q{i}"));
        }
        for i in 0..nv {
            header.push(format!("v{i}"));
        }
        for c in &self.contact_names {
            for ax in ["x", "y", "z"] {
                header.push(format!("F_{c}_{ax}"));
            }
        }
        for j in &self.joint_names {
            header.push(format!("tau_{j}"));
        }
        writeln!(f, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = Vec::with_capacity(header.len());
            row.push(format!("{:.17e}", s.t));
            row.extend(s.q.iter().map(|v| format!("{v:.17e}")));
            row.extend(s.nu.iter().map(|v| format!("{v:.17e}")));
            for fc in &s.forces {
                row.extend(fc.iter().map(|v| format!("{v:.17e}")));
            }
            row.extend(s.tau.iter().map(|v| format!("{v:.17e}")));
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Parse the CSV format written by [`Trajectory::write_csv`]. Column
    /// counts are inferred from the header names.
    pub fn read_csv(path: &Path) -> Result<Self, OcpError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OcpError::Json(format!("read {}: {e}", path.display())))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| OcpError::Json("empty trajectory CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let nq = cols.iter().filter(|c| c.starts_with('q')).count();
        let nv = cols.iter().filter(|c| c.starts_with('v')).count();
        let mut contact_names = Vec::new();
        for c in &cols {
            if let Some(rest) = c.strip_prefix("F_") {
                if let Some(base) = rest.strip_suffix("_x") {
                    contact_names.push(base.to_string());
                }
            }
        }
        let joint_names: Vec<String> = cols
            .iter()
            .filter_map(|c| c.strip_prefix("tau_").map(str::to_string))
            .collect();
        let mut samples = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|e| OcpError::Json(e.to_string())))
                .collect::<Result<_, _>>()?;
            if vals.len() != cols.len() {
                return Err(OcpError::Json("ragged trajectory CSV".into()));
            }
            let mut it = vals.into_iter();
            let t = it.next().unwrap();
            let q: Vec<f64> = (0..nq).map(|_| it.next().unwrap()).collect();
            let nu: Vec<f64> = (0..nv).map(|_| it.next().unwrap()).collect();
            let forces: Vec<[f64; 3]> = (0..contact_names.len())
                .map(|_| {
                    [
                        it.next().unwrap(),
                        it.next().unwrap(),
                        it.next().unwrap(),
                    ]
                })
                .collect();
            let tau: Vec<f64> = (0..joint_names.len()).map(|_| it.next().unwrap()).collect();
            samples.push(TrajectorySample { t, q, nu, forces, tau });
        }
        let dt = if samples.len() > 1 {
            samples[1].t - samples[0].t
        } else {
            1e-3
        };
        Ok(Self {
            dt,
            joint_names,
            contact_names,
            samples,
        })
    }
}

fn sample_from(
    model: &Model,
    t: f64,
    x: &State,
    nu_dot: &DVector<f64>,
    forces: &[Vector3<f64>],
) -> TrajectorySample {
    let (_, tau) = inverse_dynamics_split(model, &x.q, &x.nu, nu_dot, forces)
        .expect("dimensions fixed by caller");
    TrajectorySample {
        t,
        q: x.q.iter().copied().collect(),
        nu: x.nu.iter().copied().collect(),
        forces: forces.iter().map(|f| [f.x, f.y, f.z]).collect(),
        tau: tau.iter().copied().collect(),
    }
}

/// Re-integrate a transcription solution at a fixed output step, carrying
/// the piecewise-constant controls; emits timestamps, states, forces and
/// inverse-dynamics torques.
pub fn interpolate_trajectory(
    nlp: &TranscribedNlp,
    z: &DVector<f64>,
    dt_out: f64,
) -> Result<Trajectory, OcpError> {
    if dt_out <= 0.0 {
        return Err(OcpError::Invalid(format!("dt_out must be positive, got {dt_out}")));
    }
    let model = &nlp.problem.model;
    let joint_names: Vec<String> = model
        .bodies()
        .iter()
        .filter(|b| !matches!(b.joint.kind, rbd_core::JointKind::Floating))
        .map(|b| b.joint.name.clone())
        .collect();
    let contact_names: Vec<String> = model.contacts().iter().map(|c| c.name.clone()).collect();
    let mut samples = Vec::new();
    let mut t = 0.0;
    let mut x_final = nlp.unpack_state(z, 0);
    let mut u_final_nudot = DVector::zeros(model.nv());
    let mut forces_final: Vec<Vector3<f64>> = vec![Vector3::zeros(); model.contacts().len()];
    for k in 0..nlp.problem.n_intervals {
        let mut x = nlp.unpack_state(z, k);
        let u = nlp.unpack_control(z, k);
        let dt_k = u.dt.expect("transcription controls carry dt");
        let mut remaining = dt_k;
        while remaining > 1e-12 {
            samples.push(sample_from(model, t, &x, &u.nu_dot, &u.forces));
            let step = dt_out.min(remaining);
            x = integrate_step(model, &x, &u, step)?;
            t += step;
            remaining -= step;
        }
        x_final = x;
        u_final_nudot = u.nu_dot.clone();
        forces_final = u.forces.clone();
    }
    samples.push(sample_from(model, t, &x_final, &u_final_nudot, &forces_final));
    Ok(Trajectory {
        dt: dt_out,
        joint_names,
        contact_names,
        samples,
    })
}
