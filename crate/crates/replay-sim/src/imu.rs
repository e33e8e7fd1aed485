use crate::sim::{SimConfig, SimState};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// World-frame base angular velocity plus optional Gaussian rate noise.
pub fn imu_read(state: &SimState, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let mut omega = state.x.base_angular_velocity();
    if cfg.imu_noise_std > 0.0 {
        for k in 0..3 {
            // Box-Muller keeps the dependency surface small and the draw
            // count deterministic.
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            let n = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            omega[k] += cfg.imu_noise_std * n;
        }
    }
    omega
}
