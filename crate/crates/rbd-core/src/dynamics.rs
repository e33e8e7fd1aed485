use crate::error::RbdError;
use crate::kinematics::{point_jacobian, Kinematics};
use crate::model::{JointKind, Model};
use crate::spatial::{cross_force, cross_motion, spatial_inertia_at_origin, spatial_vec, Vec6};
use nalgebra::{DMatrix, DVector, Matrix6, Vector3};

fn origin_inertias(model: &Model, kin: &Kinematics) -> Vec<Matrix6<f64>> {
    model
        .bodies()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let inertia_world = kin.rot[i] * b.inertia * kin.rot[i].transpose();
            spatial_inertia_at_origin(b.mass, &kin.com[i], &inertia_world)
        })
        .collect()
}

/// Joint-space inertia matrix `B(q)` by the composite-rigid-body algorithm.
///
/// Symmetric positive definite, size `nv x nv`.
pub fn mass_matrix(model: &Model, q: &DVector<f64>) -> Result<DMatrix<f64>, RbdError> {
    let kin = Kinematics::compute(model, q)?;
    let nb = model.bodies().len();
    let mut composite = origin_inertias(model, &kin);

    // Accumulate subtree inertias; all terms share origin coordinates, so a
    // plain sum replaces the usual frame transport.
    for i in (0..nb).rev() {
        if let Some(p) = model.bodies()[i].parent {
            let child = composite[i];
            composite[p] += child;
        }
    }

    let mut b_mat = DMatrix::zeros(model.nv(), model.nv());
    for i in 0..nb {
        let vi = model.v_offset(i);
        let si = &kin.s_cols[i];
        if si.is_empty() {
            continue;
        }
        // F = I_c_i * S_i
        let f: Vec<Vec6> = si.iter().map(|s| composite[i] * s).collect();
        for (a, fa) in f.iter().enumerate() {
            for (b, sb) in si.iter().enumerate() {
                b_mat[(vi + a, vi + b)] = fa.dot(sb);
            }
        }
        let mut j = model.bodies()[i].parent;
        while let Some(pj) = j {
            let vj = model.v_offset(pj);
            for (a, fa) in f.iter().enumerate() {
                for (b, sb) in kin.s_cols[pj].iter().enumerate() {
                    let val = fa.dot(sb);
                    b_mat[(vi + a, vj + b)] = val;
                    b_mat[(vj + b, vi + a)] = val;
                }
            }
            j = model.bodies()[pj].parent;
        }
    }
    Ok(b_mat)
}

/// Generalized forces `B(q) nu_dot + h(q, nu)` by recursive Newton-Euler,
/// gravity included.
pub fn inverse_dynamics(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
    nu_dot: &DVector<f64>,
) -> Result<DVector<f64>, RbdError> {
    if nu.len() != model.nv() || nu_dot.len() != model.nv() {
        return Err(RbdError::Dimension {
            what: "velocity coordinates",
            expected: model.nv(),
            got: nu.len().max(nu_dot.len()),
        });
    }
    let kin = Kinematics::compute(model, q)?;
    let inertias = origin_inertias(model, &kin);
    let nb = model.bodies().len();
    let g = model.gravity();

    // Velocity and acceleration passes. The fictitious base acceleration -g
    // folds gravity into the computed forces.
    let mut vel = vec![Vec6::zeros(); nb];
    let a_world = spatial_vec(&Vector3::zeros(), &(-g));
    let mut acc = vec![a_world; nb];
    let mut net = vec![Vec6::zeros(); nb];
    for (i, body) in model.bodies().iter().enumerate() {
        let (v_parent, a_parent) = match body.parent {
            Some(p) => (vel[p], acc[p]),
            None => (Vec6::zeros(), a_world),
        };
        let vo = model.v_offset(i);
        let mut v = v_parent;
        let mut a = a_parent;
        let si = &kin.s_cols[i];
        match &body.joint.kind {
            JointKind::Floating => {
                let pdot = Vector3::new(nu[vo], nu[vo + 1], nu[vo + 2]);
                let omega = Vector3::new(nu[vo + 3], nu[vo + 4], nu[vo + 5]);
                for (k, s) in si.iter().enumerate() {
                    v += s * nu[vo + k];
                    a += s * nu_dot[vo + k];
                }
                // Subspace rate: the angular columns are anchored at the
                // moving base origin.
                a += spatial_vec(&Vector3::zeros(), &pdot.cross(&omega));
            }
            _ => {
                let s = si[0];
                v += s * nu[vo];
                a += s * nu_dot[vo] + cross_motion(&v_parent, &(s * nu[vo]));
            }
        }
        vel[i] = v;
        acc[i] = a;
        let momentum = inertias[i] * v;
        net[i] = inertias[i] * a + cross_force(&v, &momentum);
    }

    // Backward pass.
    let mut tau = DVector::zeros(model.nv());
    for i in (0..nb).rev() {
        let vo = model.v_offset(i);
        let f = net[i];
        for (k, s) in kin.s_cols[i].iter().enumerate() {
            tau[vo + k] = s.dot(&f);
        }
        if let Some(p) = model.bodies()[i].parent {
            net[p] += f;
        }
    }
    Ok(tau)
}

/// Gravity plus Coriolis/centrifugal generalized forces `h(q, nu)`
/// (recursive Newton-Euler with zero accelerations).
pub fn bias_terms(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<DVector<f64>, RbdError> {
    inverse_dynamics(model, q, nu, &DVector::zeros(model.nv()))
}

/// Underactuated and actuated generalized-force rows of the equations of
/// motion under the given contact forces:
/// `tau_u = B_u nu_dot + h_u - J_u^T F`, `tau = B_a nu_dot + h_a - J_a^T F`.
///
/// `forces` holds one world-frame 3D force per registered contact.
pub fn inverse_dynamics_split(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
    nu_dot: &DVector<f64>,
    forces: &[Vector3<f64>],
) -> Result<(DVector<f64>, DVector<f64>), RbdError> {
    if forces.len() != model.contacts().len() {
        return Err(RbdError::Dimension {
            what: "contact forces",
            expected: model.contacts().len(),
            got: forces.len(),
        });
    }
    let mut tau = inverse_dynamics(model, q, nu, nu_dot)?;
    if !forces.is_empty() {
        let kin = Kinematics::compute(model, q)?;
        for (c, force) in model.contacts().iter().zip(forces) {
            let p = kin.pos[c.body] + kin.rot[c.body] * c.offset;
            let jac = point_jacobian(model, &kin, c.body, &p);
            // tau -= J^T F, touching only columns on the contact's path.
            for col in 0..model.nv() {
                let jcol = Vector3::new(jac[(0, col)], jac[(1, col)], jac[(2, col)]);
                tau[col] -= jcol.dot(force);
            }
        }
    }
    let n_u = if model.has_floating_base() { 6 } else { 0 };
    let tau_u = DVector::from_iterator(n_u, tau.iter().take(n_u).copied());
    let tau_a = DVector::from_iterator(model.nv() - n_u, tau.iter().skip(n_u).copied());
    Ok((tau_u, tau_a))
}

/// Accelerations from full generalized forces (underactuated rows included):
/// `nu_dot = B^{-1}(tau_gen + J_C^T F - h)`.
pub fn forward_dynamics_full(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
    tau_gen: &DVector<f64>,
    forces: &[Vector3<f64>],
) -> Result<DVector<f64>, RbdError> {
    if tau_gen.len() != model.nv() {
        return Err(RbdError::Dimension {
            what: "generalized forces",
            expected: model.nv(),
            got: tau_gen.len(),
        });
    }
    let mut rhs = tau_gen - bias_terms(model, q, nu)?;
    if !forces.is_empty() {
        let kin = Kinematics::compute(model, q)?;
        for (c, force) in model.contacts().iter().zip(forces) {
            let p = kin.pos[c.body] + kin.rot[c.body] * c.offset;
            let jac = point_jacobian(model, &kin, c.body, &p);
            for col in 0..model.nv() {
                let jcol = Vector3::new(jac[(0, col)], jac[(1, col)], jac[(2, col)]);
                rhs[col] += jcol.dot(force);
            }
        }
    }
    let b_mat = mass_matrix(model, q)?;
    b_mat
        .cholesky()
        .ok_or(RbdError::SingularMassMatrix)
        .map(|ch| ch.solve(&rhs))
}

/// Accelerations from actuated joint torques (zero underactuated rows).
pub fn forward_dynamics(
    model: &Model,
    q: &DVector<f64>,
    nu: &DVector<f64>,
    tau_actuated: &DVector<f64>,
    forces: &[Vector3<f64>],
) -> Result<DVector<f64>, RbdError> {
    let n_u = if model.has_floating_base() { 6 } else { 0 };
    if tau_actuated.len() != model.nv() - n_u {
        return Err(RbdError::Dimension {
            what: "actuated torques",
            expected: model.nv() - n_u,
            got: tau_actuated.len(),
        });
    }
    let mut tau_gen = DVector::zeros(model.nv());
    tau_gen.rows_mut(n_u, model.nv() - n_u).copy_from(tau_actuated);
    forward_dynamics_full(model, q, nu, &tau_gen, forces)
}
