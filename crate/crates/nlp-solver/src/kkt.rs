use crate::problem::NlpProblem;
use nalgebra::DVector;

/// First-order optimality measures, recomputed from problem callbacks and
/// multipliers (independent of solver internals).
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `|| grad f - J^T lam - mu ||_inf` over free variables.
    pub stationarity: f64,
    /// Max violation of constraint rows and variable bounds.
    pub violation: f64,
    /// Max `|multiplier| * slack` over inequality sides and bounds.
    pub complementarity: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity.max(self.violation).max(self.complementarity)
    }
}

/// Evaluate the KKT conditions at `z` with signed row multipliers
/// (`lam_rows[i]` > 0 pushes `c_i` up from its lower bound, < 0 down from
/// its upper bound) and signed bound multipliers (`lam_bounds[j]` > 0 at a
/// lower bound).
pub fn kkt_report(
    problem: &dyn NlpProblem,
    z: &DVector<f64>,
    lam_rows: &DVector<f64>,
    lam_bounds: &DVector<f64>,
) -> KktReport {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let (lb, ub) = problem.var_bounds();
    let (cl, cu) = problem.constraint_bounds();
    let mut c = DVector::zeros(m);
    problem.constraints(z, &mut c);
    let grad = problem.gradient(z);
    let jac = problem.jacobian(z);

    let mut r = grad - jac.transpose() * lam_rows - lam_bounds;
    let mut violation: f64 = 0.0;
    let mut compl: f64 = 0.0;
    for i in 0..m {
        violation = violation.max(cl[i] - c[i]).max(c[i] - cu[i]);
        if cl[i] < cu[i] {
            let lam = lam_rows[i];
            if lam > 0.0 {
                compl = compl.max(lam * (c[i] - cl[i]).abs());
            } else if lam < 0.0 {
                compl = compl.max(-lam * (cu[i] - c[i]).abs());
            }
        }
    }
    for j in 0..n {
        violation = violation.max(lb[j] - z[j]).max(z[j] - ub[j]);
        // Fixed variables satisfy stationarity by definition: their bound
        // multiplier absorbs the residual.
        if ub[j] - lb[j] <= 1e-14 {
            r[j] = 0.0;
            continue;
        }
        let mu = lam_bounds[j];
        if mu > 0.0 && lb[j].is_finite() {
            compl = compl.max(mu * (z[j] - lb[j]).abs());
        } else if mu < 0.0 && ub[j].is_finite() {
            compl = compl.max(-mu * (ub[j] - z[j]).abs());
        }
    }
    KktReport {
        stationarity: r.abs().max(),
        violation: violation.max(0.0),
        complementarity: compl,
    }
}
