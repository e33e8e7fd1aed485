use crate::raibert::StabilizerState;
use crate::StabilizerError;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Periodic single-arm joint trajectory exported by the flywheel problem:
/// `samples[k]` holds the arm configuration at phase `k / n_intervals`,
/// with the first and last samples equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlywheelTrajectory {
    pub n_intervals: usize,
    pub samples: Vec<Vec<f64>>,
}

impl FlywheelTrajectory {
    pub fn validate(&self) -> Result<(), StabilizerError> {
        if self.samples.len() != self.n_intervals + 1 {
            return Err(StabilizerError::Dimension(format!(
                "expected {} samples, got {}",
                self.n_intervals + 1,
                self.samples.len()
            )));
        }
        let first = &self.samples[0];
        let last = &self.samples[self.n_intervals];
        let gap = first
            .iter()
            .zip(last)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if gap > 1e-6 {
            return Err(StabilizerError::NotPeriodic(gap));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("flywheel trajectory serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, StabilizerError> {
        let t: Self = serde_json::from_str(text)
            .map_err(|e| StabilizerError::Invalid(format!("flywheel JSON: {e}")))?;
        t.validate()?;
        Ok(t)
    }
}

fn wrap01(tau: f64) -> f64 {
    let w = tau - tau.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Advance the replay phase by `gain_tau * omega_pitch` (wrapping in
/// [0, 1)) and linearly interpolate the periodic arm trajectory at the new
/// phase. Negative pitch rates traverse the trajectory backwards.
pub fn ocp_posture_lookup(
    st: &mut StabilizerState,
    qstar: &FlywheelTrajectory,
    omega_pitch: f64,
) -> Result<DVector<f64>, StabilizerError> {
    qstar.validate()?;
    let n_s = qstar.n_intervals;
    let tau = wrap01(st.tau_phase + st.gain_tau * omega_pitch);
    st.tau_phase = tau;
    let k = ((n_s as f64 * tau).floor() as usize).min(n_s - 1);
    let frac = n_s as f64 * (tau - k as f64 / n_s as f64);
    let a = &qstar.samples[k];
    let b = &qstar.samples[k + 1];
    let q_d = DVector::from_fn(a.len(), |i, _| a[i] + frac * (b[i] - a[i]));
    Ok(q_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn qstar() -> FlywheelTrajectory {
        // Simple closed loop over 4 intervals, 2 joints.
        FlywheelTrajectory {
            n_intervals: 4,
            samples: vec![
                vec![0.0, 0.0],
                vec![0.5, -0.2],
                vec![0.8, 0.1],
                vec![0.3, 0.4],
                vec![0.0, 0.0],
            ],
        }
    }

    fn state(gain_tau: f64) -> StabilizerState {
        StabilizerState::new(
            DVector::zeros(2),
            DMatrix::zeros(2, 3),
            gain_tau,
            DVector::from_element(2, 1.0),
            DVector::from_element(2, -3.0),
            DVector::from_element(2, 3.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_pitch_rate_is_a_fixed_point() {
        let mut st = state(0.1);
        st.tau_phase = 0.3;
        let q1 = ocp_posture_lookup(&mut st, &qstar(), 0.0).unwrap();
        let tau1 = st.tau_phase;
        let q2 = ocp_posture_lookup(&mut st, &qstar(), 0.0).unwrap();
        assert_eq!(st.tau_phase, tau1);
        assert_eq!(q1, q2);
    }

    #[test]
    fn one_knot_step_lands_exactly_on_the_sample() {
        let traj = qstar();
        let mut st = state(1.0);
        st.tau_phase = 0.0;
        // gain_tau * omega = 1/N_s advances exactly one knot.
        let q = ocp_posture_lookup(&mut st, &traj, 0.25).unwrap();
        assert!((st.tau_phase - 0.25).abs() < 1e-15);
        assert_eq!(q.as_slice(), traj.samples[1].as_slice());
    }

    #[test]
    fn negative_rate_reverses_the_phase() {
        let mut st = state(0.05);
        st.tau_phase = 0.5;
        ocp_posture_lookup(&mut st, &qstar(), -1.0).unwrap();
        assert!(st.tau_phase < 0.5);
        // And wraps below zero.
        st.tau_phase = 0.01;
        ocp_posture_lookup(&mut st, &qstar(), -1.0).unwrap();
        assert!(st.tau_phase > 0.9);
    }

    #[test]
    fn interpolation_is_continuous_across_knots() {
        let traj = qstar();
        let eps = 1e-9;
        for knot in 1..4 {
            let tau_k = knot as f64 / 4.0;
            let mut st = state(1.0);
            st.tau_phase = tau_k - eps;
            let left = ocp_posture_lookup(&mut st, &traj, 0.0).unwrap();
            let mut st = state(1.0);
            st.tau_phase = tau_k + eps;
            let right = ocp_posture_lookup(&mut st, &traj, 0.0).unwrap();
            assert!((left - right).abs().max() < 1e-7, "knot {knot}");
        }
    }

    #[test]
    fn non_periodic_trajectories_are_rejected() {
        let mut bad = qstar();
        bad.samples[4] = vec![0.1, 0.0];
        let mut st = state(0.1);
        assert!(matches!(
            ocp_posture_lookup(&mut st, &bad, 0.0),
            Err(StabilizerError::NotPeriodic(_))
        ));
    }
}
