//! Dense nonlinear programming: an SQP method with a damped BFGS Hessian,
//! l1-merit line search and a dual active-set QP subproblem solver.
//!
//! Problems are posed through the [`NlpProblem`] trait in the form
//!
//! ```text
//!     minimize    f(z)
//!     subject to  cl <= c(z) <= cu      (cl == cu for equalities)
//!                 lb <= z <= ub
//! ```
//!
//! `solve` is single-threaded and deterministic: identical inputs and
//! options produce bit-identical iterate sequences. Callbacks must be
//! reentrant; concurrent solves of distinct problems are safe.

mod derivatives;
mod kkt;
mod problem;
mod qp;
mod sqp;

pub use derivatives::{fd_gradient, fd_jacobian};
pub use kkt::{kkt_report, KktReport};
pub use problem::NlpProblem;
pub use qp::{qp_solve, qp_solve_with_inverse, Qp, QpError, QpOptions, QpSolution, WorkRow};
pub use sqp::{solve, NlpSolution, SolveOptions, SolveStatus};
