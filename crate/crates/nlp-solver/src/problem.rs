use crate::derivatives::{fd_gradient, fd_jacobian};
use nalgebra::{DMatrix, DVector};

/// A smooth nonlinear program.
///
/// Constraint rows with `cl == cu` are equalities. Infinite entries in the
/// variable or constraint bounds disable the corresponding side.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_constraints(&self) -> usize;

    /// `(lb, ub)` on the variables.
    fn var_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let n = self.num_vars();
        (
            DVector::from_element(n, f64::NEG_INFINITY),
            DVector::from_element(n, f64::INFINITY),
        )
    }

    /// `(cl, cu)` on the constraint values.
    fn constraint_bounds(&self) -> (DVector<f64>, DVector<f64>);

    fn objective(&self, z: &DVector<f64>) -> f64;

    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>);

    /// Objective gradient; the default falls back to central differences.
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        fd_gradient(&|p| self.objective(p), z)
    }

    /// Constraint Jacobian; the default falls back to central differences.
    /// Implementations with structure (stage-wise coupling, analytic or
    /// dual-number derivatives) should override this.
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let m = self.num_constraints();
        fd_jacobian(
            &|p, out| self.constraints(p, out),
            z,
            m,
        )
    }

    /// Per-variable scaling applied internally by the solver (values of
    /// roughly unit size after division). Defaults to no scaling.
    fn var_scales(&self) -> DVector<f64> {
        DVector::from_element(self.num_vars(), 1.0)
    }

    /// Constant objective Hessian when the cost is an exact quadratic;
    /// used to seed the BFGS approximation.
    fn objective_hessian(&self) -> Option<DMatrix<f64>> {
        None
    }
}
