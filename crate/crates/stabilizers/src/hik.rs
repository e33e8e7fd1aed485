use crate::stack::TaskStack;
use crate::StabilizerError;
use nalgebra::{DMatrix, DVector};
use rbd_core::Model;

const DAMPING: f64 = 1e-3;
const RANK_TOL: f64 = 1e-9;

/// Prioritized damped least squares: each level is solved in the exact
/// nullspace of all higher-priority task Jacobians, so lower levels can
/// never disturb higher ones. The damped inverse guarantees solvability;
/// velocity and position limits are enforced by uniform scaling of the
/// final solution (task directions preserved).
pub fn hik_solve(
    model: &Model,
    stack: &TaskStack,
    q: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>, StabilizerError> {
    let nv = model.nv();
    stack.validate(nv)?;
    let mut qdot = DVector::zeros(nv);
    let mut nullspace = DMatrix::<f64>::identity(nv, nv);

    for level in &stack.levels {
        if level.tasks.is_empty() {
            continue;
        }
        let rows: usize = level.tasks.iter().map(|t| t.jacobian.nrows()).sum();
        let mut jac = DMatrix::zeros(rows, nv);
        let mut desired = DVector::zeros(rows);
        let mut r0 = 0;
        for t in &level.tasks {
            let w = t.weight.sqrt();
            jac.view_mut((r0, 0), (t.jacobian.nrows(), nv))
                .copy_from(&(&t.jacobian * w));
            desired
                .rows_mut(r0, t.desired.len())
                .copy_from(&(&t.desired * w));
            r0 += t.jacobian.nrows();
        }
        // Project onto the remaining freedom.
        let jp = &jac * &nullspace;
        let residual = desired - &jac * &qdot;
        // Damped pseudo-inverse step: jp^T (jp jp^T + lambda^2 I)^-1 r.
        let m = jp.nrows();
        let gram = &jp * jp.transpose() + DMatrix::identity(m, m) * DAMPING * DAMPING;
        let y = gram
            .cholesky()
            .expect("damped Gram matrix is positive definite")
            .solve(&residual);
        let step = jp.transpose() * y;
        // step lies in range(nullspace), so higher-priority residuals are
        // untouched exactly.
        qdot += &step;
        // Shrink the nullspace by the exact range of jp.
        let svd = jp.clone().svd(false, true);
        let v_t = svd.v_t.expect("svd requested v_t");
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > RANK_TOL {
                let dir = v_t.row(i).transpose();
                // nullspace -= nullspace * dir dir^T (dir is unit).
                let proj = &nullspace * &dir;
                for r in 0..nv {
                    for c in 0..nv {
                        nullspace[(r, c)] -= proj[r] * dir[c];
                    }
                }
            }
        }
    }

    // Uniform scaling into the velocity box (sign-aware, so asymmetric
    // position-derived bounds work too).
    let mut scale = 1.0f64;
    let n_u = if model.has_floating_base() { 7 } else { 0 };
    for j in 0..nv {
        let v = qdot[j];
        if v == 0.0 {
            continue;
        }
        let mut hi = stack.vel_limit[j];
        let mut lo = -stack.vel_limit[j];
        // Position limits of actuated coordinates (q index offset by the
        // floating-base block when present).
        let qi = if model.has_floating_base() { n_u + (j.saturating_sub(6)) } else { j };
        if j >= 6 || !model.has_floating_base() {
            if let (Some(pl), Some(pu)) = (&stack.pos_lower, &stack.pos_upper) {
                hi = hi.min((pu[qi] - q[qi]) / dt);
                lo = lo.max((pl[qi] - q[qi]) / dt);
            }
        }
        if v > hi && hi.is_finite() {
            scale = scale.min((hi / v).max(0.0));
        }
        if v < lo && lo.is_finite() {
            scale = scale.min((lo / v).max(0.0));
        }
    }
    Ok(qdot * scale)
}
