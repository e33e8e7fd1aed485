use crate::StabilizerError;
use nalgebra::{DMatrix, DVector, Vector3};

/// Mutable state of the posture stabilizers.
///
/// `gain_matrix` is the per-tick increment map (the continuous-time gain
/// times the control period): one row per actuated joint, one column per
/// IMU axis. `enabled` is the 0/1 joint selector.
#[derive(Debug, Clone)]
pub struct StabilizerState {
    /// Desired posture over the actuated joints.
    pub q_d: DVector<f64>,
    /// Flywheel replay phase in [0, 1).
    pub tau_phase: f64,
    /// Per-tick IMU-rate gain matrix (n_act x 3).
    pub gain_matrix: DMatrix<f64>,
    /// Per-tick phase gain of the flywheel replay.
    pub gain_tau: f64,
    /// Diagonal 0/1 selector of stabilizer-enabled joints.
    pub enabled: DVector<f64>,
    pub q_lower: DVector<f64>,
    pub q_upper: DVector<f64>,
}

impl StabilizerState {
    pub fn new(
        q_home: DVector<f64>,
        gain_matrix: DMatrix<f64>,
        gain_tau: f64,
        enabled: DVector<f64>,
        q_lower: DVector<f64>,
        q_upper: DVector<f64>,
    ) -> Result<Self, StabilizerError> {
        let n = q_home.len();
        if gain_matrix.nrows() != n || gain_matrix.ncols() != 3 {
            return Err(StabilizerError::Dimension(format!(
                "gain matrix is {}x{}, expected {n}x3",
                gain_matrix.nrows(),
                gain_matrix.ncols()
            )));
        }
        if enabled.len() != n || q_lower.len() != n || q_upper.len() != n {
            return Err(StabilizerError::Dimension(
                "selector and limits must match the posture size".into(),
            ));
        }
        if enabled.iter().any(|&e| e != 0.0 && e != 1.0) {
            return Err(StabilizerError::Invalid(
                "joint selector entries must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            q_d: q_home,
            tau_phase: 0.0,
            gain_matrix,
            gain_tau,
            enabled,
            q_lower,
            q_upper,
        })
    }

    /// Convenience: selector and pitch-only gains for a named joint subset.
    pub fn pitch_only(
        q_home: DVector<f64>,
        enabled_joints: &[usize],
        gain_per_tick: f64,
        gain_tau: f64,
        q_lower: DVector<f64>,
        q_upper: DVector<f64>,
    ) -> Result<Self, StabilizerError> {
        let n = q_home.len();
        let mut gain = DMatrix::zeros(n, 3);
        let mut enabled = DVector::zeros(n);
        for &j in enabled_joints {
            gain[(j, 1)] = gain_per_tick;
            enabled[j] = 1.0;
        }
        Self::new(q_home, gain, gain_tau, enabled, q_lower, q_upper)
    }
}

/// Raibert-like postural increment: enabled joints move by `Gamma w_imu`
/// per tick, disabled joints stay untouched, and the result is clamped to
/// the joint limits.
pub fn raibert_update(st: &mut StabilizerState, omega_imu: &Vector3<f64>) -> DVector<f64> {
    let delta = &st.gain_matrix * omega_imu;
    for j in 0..st.q_d.len() {
        if st.enabled[j] != 0.0 {
            st.q_d[j] = (st.q_d[j] + delta[j]).max(st.q_lower[j]).min(st.q_upper[j]);
        }
    }
    st.q_d.clone()
}
