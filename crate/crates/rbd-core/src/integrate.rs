use crate::dual::Dual;
use crate::error::RbdError;
use crate::model::Model;
use crate::state::{Control, State};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction letting the integrator run on plain floats or dual
/// numbers (for exact sensitivities of the shooting map).
pub trait RealScalar:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Primal (real) part.
    fn re(self) -> f64;
    fn sqrt(self) -> Self;
}

impl RealScalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn re(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl RealScalar for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.du / (2.0 * r))
    }
}

/// Dimensions needed to integrate a state without the full model.
#[derive(Debug, Clone, Copy)]
pub struct StateLayout {
    pub nq: usize,
    pub nv: usize,
    pub floating: bool,
}

impl StateLayout {
    pub fn of(model: &Model) -> Self {
        Self {
            nq: model.nq(),
            nv: model.nv(),
            floating: model.has_floating_base(),
        }
    }
}

/// `q_dot` from `(q, nu)`: identity map on linear coordinates plus the
/// quaternion kinematics `rho_dot = [omega/2, 0] ∘ rho` for the base block.
fn q_rate<S: RealScalar>(layout: &StateLayout, q: &[S], nu: &[S], out: &mut [S]) {
    if layout.floating {
        out[0] = nu[0];
        out[1] = nu[1];
        out[2] = nu[2];
        // Half world angular velocity.
        let half = S::from_f64(0.5);
        let wx = nu[3] * half;
        let wy = nu[4] * half;
        let wz = nu[5] * half;
        let (ex, ey, ez, et) = (q[3], q[4], q[5], q[6]);
        // [w, 0] ∘ [eps, eta]
        out[3] = et * wx + wy * ez - wz * ey;
        out[4] = et * wy + wz * ex - wx * ez;
        out[5] = et * wz + wx * ey - wy * ex;
        out[6] = -(wx * ex + wy * ey + wz * ez);
        for j in 6..layout.nv {
            out[j + 1] = nu[j];
        }
    } else {
        out[..layout.nv].copy_from_slice(&nu[..layout.nv]);
    }
}

/// One explicit RK4 step of the double-integrator dynamics
/// `(q_dot, nu_dot) = (Q(q) nu, u)` followed by quaternion renormalization.
///
/// Intermediate stages evaluate the quaternion rate on the raw (non-unit)
/// intermediate quaternion; only the final result is renormalized.
pub fn integrate_step_generic<S: RealScalar>(
    layout: &StateLayout,
    q: &[S],
    nu: &[S],
    nu_dot: &[S],
    dt: S,
) -> (Vec<S>, Vec<S>) {
    let nq = layout.nq;
    let nv = layout.nv;
    let half = S::from_f64(0.5);
    let sixth = S::from_f64(1.0 / 6.0);
    let two = S::from_f64(2.0);

    // nu(t) is affine in t; precompute the stage velocities.
    let nu_mid: Vec<S> = (0..nv).map(|i| nu[i] + nu_dot[i] * dt * half).collect();
    let nu_end: Vec<S> = (0..nv).map(|i| nu[i] + nu_dot[i] * dt).collect();

    let mut k1 = vec![S::from_f64(0.0); nq];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = vec![S::from_f64(0.0); nq];

    q_rate(layout, q, nu, &mut k1);
    for i in 0..nq {
        tmp[i] = q[i] + k1[i] * dt * half;
    }
    q_rate(layout, &tmp, &nu_mid, &mut k2);
    for i in 0..nq {
        tmp[i] = q[i] + k2[i] * dt * half;
    }
    q_rate(layout, &tmp, &nu_mid, &mut k3);
    for i in 0..nq {
        tmp[i] = q[i] + k3[i] * dt;
    }
    q_rate(layout, &tmp, &nu_end, &mut k4);

    let mut q_next = vec![S::from_f64(0.0); nq];
    for i in 0..nq {
        q_next[i] = q[i] + (k1[i] + two * k2[i] + two * k3[i] + k4[i]) * dt * sixth;
    }
    if layout.floating {
        let norm =
            (q_next[3] * q_next[3] + q_next[4] * q_next[4] + q_next[5] * q_next[5]
                + q_next[6] * q_next[6])
                .sqrt();
        for i in 3..7 {
            q_next[i] = q_next[i] / norm;
        }
    }
    (q_next, nu_end)
}

/// RK4 integration of one step of the double-integrator dynamics.
pub fn integrate_step(
    model: &Model,
    x: &State,
    u: &Control,
    dt: f64,
) -> Result<State, RbdError> {
    x.check_dims(model)?;
    u.check_dims(model)?;
    if dt <= 0.0 {
        return Err(RbdError::BadStepSize(dt));
    }
    let layout = StateLayout::of(model);
    let (q_next, nu_next) = integrate_step_generic(
        &layout,
        x.q.as_slice(),
        x.nu.as_slice(),
        u.nu_dot.as_slice(),
        dt,
    );
    let next = State::new(
        nalgebra::DVector::from_vec(q_next),
        nalgebra::DVector::from_vec(nu_next),
    );
    if !next.is_finite() {
        return Err(RbdError::NonFinite("integrate_step"));
    }
    Ok(next)
}
