//! Centroidal momentum quantities for floating-base models.
//!
//! The Centroidal Momentum Matrix `A(q)` maps generalized velocities to the
//! system's 6D momentum at the CoM. It is obtained from the floating-base
//! rows of the joint-space dynamics: with our velocity parameterization the
//! base Jacobian is the identity, so `A = X * B_fb(q)` where `X` transports
//! a wrench from the base origin to the CoM (translation only, frames are
//! world-aligned). The same transport applied to the floating-base Coriolis
//! and gravity rows yields the bias `Adot * nu` and the gravity wrench.
//!
//! All public 6-vectors and the rows of `A` use block order
//! `[linear, angular]`.
//!
//! [`cmm_oracle`] recomputes `A` as the sum of per-body spatial momenta
//! projected at the CoM — an independent validation route kept for tests.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};
use rbd_core::{
    bias_terms, com, mass_matrix, spatial_inertia_at_origin, Kinematics, Model, RbdError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CentroidalError {
    #[error("centroidal quantities require a floating-base model")]
    FixedBase,
    #[error("base Jacobian is singular")]
    SingularBaseJacobian,
    #[error(transparent)]
    Rbd(#[from] RbdError),
}

/// Bundle of centroidal quantities at one state.
#[derive(Debug, Clone)]
pub struct CentroidalQuantities {
    /// 6 x nv Centroidal Momentum Matrix, rows `[linear, angular]`.
    pub a: DMatrix<f64>,
    /// Velocity bias `Adot(q, nu) * nu`.
    pub adot_nu: Vector6<f64>,
    /// Gravity wrench at the CoM (angular part vanishes).
    pub gravity: Vector6<f64>,
    /// Centroidal momentum `h = A nu`.
    pub h: Vector6<f64>,
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn base_position(_model: &Model, q: &DVector<f64>) -> Vector3<f64> {
    // The floating base is always the root; its position coordinates lead q.
    Vector3::new(q[0], q[1], q[2])
}

/// Wrench/momentum transport from `from` to `to` acting on `[linear, angular]`
/// 6-vectors: linear part unchanged, angular part gains `(from - to) x lin`.
fn transport(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix6<f64> {
    let mut x = Matrix6::identity();
    x.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&(from - to)));
    x
}

/// Base Jacobian of the velocity parameterization. Identity here; kept as an
/// explicit factor with an invertibility guard so a virtual-chain
/// parameterization (6 joint coordinates) remains supported.
fn base_jacobian_inverse_transpose() -> Result<Matrix6<f64>, CentroidalError> {
    let j_fb = Matrix6::<f64>::identity();
    let inv = j_fb
        .try_inverse()
        .ok_or(CentroidalError::SingularBaseJacobian)?;
    Ok(inv.transpose())
}

/// Centroidal Momentum Matrix `A(q)`, 6 x nv, rows `[linear, angular]`.
pub fn cmm(model: &Model, q: &DVector<f64>) -> Result<DMatrix<f64>, CentroidalError> {
    if !model.has_floating_base() {
        return Err(CentroidalError::FixedBase);
    }
    let b = mass_matrix(model, q)?;
    // The floating-base generalized-force rows are already ordered
    // [linear; angular-about-base-origin] because nu leads with the base
    // linear velocity.
    let b_fb = b.rows(0, 6).clone_owned();
    let jinv_t = base_jacobian_inverse_transpose()?;
    let (c, _) = com(model, q)?;
    let x = transport(&base_position(model, q), &c);
    let xj = x * jinv_t;
    let mut a = DMatrix::zeros(6, model.nv());
    for col in 0..model.nv() {
        let v = Vector6::from_fn(|r, _| b_fb[(r, col)]);
        let out = xj * v;
        for r in 0..6 {
            a[(r, col)] = out[r];
        }
    }
    Ok(a)
}

/// Independent CMM route: sum of per-body spatial momenta maps, projected at
/// the CoM. Used to validate [`cmm`].
pub fn cmm_oracle(model: &Model, q: &DVector<f64>) -> Result<DMatrix<f64>, CentroidalError> {
    if !model.has_floating_base() {
        return Err(CentroidalError::FixedBase);
    }
    let kin = Kinematics::compute(model, q)?;
    let (c, _) = com(model, q)?;
    // Momentum map at the world origin in (angular, linear) spatial order.
    let mut at_origin = DMatrix::<f64>::zeros(6, model.nv());
    for (i, body) in model.bodies().iter().enumerate() {
        if body.mass == 0.0 && body.inertia.norm() == 0.0 {
            continue;
        }
        let jac = rbd_core::body_jacobian(model, &kin, i);
        let iw = kin.rot[i] * body.inertia * kin.rot[i].transpose();
        let io = spatial_inertia_at_origin(body.mass, &kin.com[i], &iw);
        let io_dyn = DMatrix::from_fn(6, 6, |r, cix| io[(r, cix)]);
        at_origin += io_dyn * jac;
    }
    // Reorder to [linear, angular] and move the moment to the CoM:
    // n_c = n_O - c x f.
    let mut a = DMatrix::zeros(6, model.nv());
    let sk = skew(&c);
    for col in 0..model.nv() {
        let n_o = Vector3::new(at_origin[(0, col)], at_origin[(1, col)], at_origin[(2, col)]);
        let f = Vector3::new(at_origin[(3, col)], at_origin[(4, col)], at_origin[(5, col)]);
        let n_c = n_o - sk * f;
        for r in 0..3 {
            a[(r, col)] = f[r];
            a[(r + 3, col)] = n_c[r];
        }
    }
    Ok(a)
}

/// Velocity bias `Adot(q, nu) nu`: the floating-base Coriolis rows
/// transported to the CoM.
pub fn cmm_bias(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<Vector6<f64>, CentroidalError> {
    if !model.has_floating_base() {
        return Err(CentroidalError::FixedBase);
    }
    let h_full = bias_terms(model, q, nu)?;
    let g_full = bias_terms(model, q, &DVector::zeros(model.nv()))?;
    let cor = Vector6::from_fn(|r, _| h_full[r] - g_full[r]);
    let (c, _) = com(model, q)?;
    let x = transport(&base_position(model, q), &c);
    Ok(x * base_jacobian_inverse_transpose()? * cor)
}

/// Gravity wrench at the CoM; the angular part vanishes because gravity
/// acts through the CoM.
pub fn gravity_wrench(model: &Model, q: &DVector<f64>) -> Result<Vector6<f64>, CentroidalError> {
    if !model.has_floating_base() {
        return Err(CentroidalError::FixedBase);
    }
    let g_full = bias_terms(model, q, &DVector::zeros(model.nv()))?;
    let g_fb = Vector6::from_fn(|r, _| g_full[r]);
    let (c, _) = com(model, q)?;
    let x = transport(&base_position(model, q), &c);
    Ok(x * base_jacobian_inverse_transpose()? * g_fb)
}

/// Centroidal momentum `h = A(q) nu`, block order `[linear, angular]`.
pub fn centroidal_momentum(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<Vector6<f64>, CentroidalError> {
    let a = cmm(model, q)?;
    let h = &a * nu;
    Ok(Vector6::from_fn(|r, _| h[r]))
}

/// Dynamics consistency probe: `A nu_dot + Adot nu - F_com + G`.
/// Vanishes along any trajectory whose external wrench at the CoM is `F_com`.
pub fn centroidal_residual(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
    nu_dot: &DVector<f64>,
    f_com: &Vector6<f64>,
) -> Result<Vector6<f64>, CentroidalError> {
    let a = cmm(model, q)?;
    let a_nudot = &a * nu_dot;
    let a_nudot = Vector6::from_fn(|r, _| a_nudot[r]);
    Ok(a_nudot + cmm_bias(model, q, nu)? - f_com + gravity_wrench(model, q)?)
}

/// All centroidal quantities at one state.
pub fn compute_all(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<CentroidalQuantities, CentroidalError> {
    let a = cmm(model, q)?;
    let h = &a * nu;
    Ok(CentroidalQuantities {
        adot_nu: cmm_bias(model, q, nu)?,
        gravity: gravity_wrench(model, q)?,
        h: Vector6::from_fn(|r, _| h[r]),
        a,
    })
}

/// Total momentum of the system about an arbitrary world point, computed
/// from elementary body kinematics (no CMM involved). Block order
/// `[linear, angular]`. Works for fixed-base models too, where it feeds the
/// flywheel objective.
pub fn momentum_about(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
    point: &Vector3<f64>,
) -> Result<Vector6<f64>, CentroidalError> {
    let kin = Kinematics::compute(model, q)?;
    let vels = kin.body_velocities(model, nu);
    let mut lin = Vector3::zeros();
    let mut ang = Vector3::zeros();
    for (i, body) in model.bodies().iter().enumerate() {
        if body.mass == 0.0 && body.inertia.norm() == 0.0 {
            continue;
        }
        let omega = Vector3::new(vels[i][0], vels[i][1], vels[i][2]);
        let v_origin = Vector3::new(vels[i][3], vels[i][4], vels[i][5]);
        let c_i = kin.com[i];
        let v_com = v_origin + omega.cross(&c_i);
        let iw = kin.rot[i] * body.inertia * kin.rot[i].transpose();
        lin += body.mass * v_com;
        ang += body.mass * (c_i - point).cross(&v_com) + iw * omega;
    }
    Ok(Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z))
}

/// CoM linear velocity from elementary kinematics; ties `h_lin` to
/// `m_total * v_com` in tests.
pub fn com_velocity(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<Vector3<f64>, CentroidalError> {
    let h = momentum_about(model, q, nu, &Vector3::zeros())?;
    Ok(Vector3::new(h[0], h[1], h[2]) / model.total_mass())
}
