//! SQP driver: damped BFGS quadratic model, dual active-set QP subproblem,
//! l1-merit backtracking line search and elastic relaxation on infeasible
//! subproblems.

use crate::derivatives::{fd_gradient, fd_jacobian};
use crate::kkt::{kkt_report, KktReport};
use crate::problem::NlpProblem;
use crate::qp::{qp_solve_with_inverse, Qp, QpError, QpOptions, WorkRow};
use nalgebra::{DMatrix, DVector};
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("non-finite objective or constraints at the initial point")]
    NonFiniteAtStart,
    #[error("problem dimensions are inconsistent: {0}")]
    Dimension(String),
    #[error("iteration log: {0}")]
    Log(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// KKT tolerance (stationarity and complementarity, scaled space).
    pub tol: f64,
    /// Constraint violation tolerance.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Elastic slack penalty applied on QP infeasibility.
    pub elastic_penalty: f64,
    /// Ridge added to the initial Hessian model.
    pub hessian_ridge: f64,
    /// Apply the problem's variable scaling internally.
    pub use_scaling: bool,
    /// Force central finite differences instead of the problem's own
    /// derivative callbacks.
    pub force_fd: bool,
    /// Initial box trust radius on the scaled step (adapted online;
    /// `INFINITY` disables).
    pub trust_radius: f64,
    /// Run Gauss-Newton feasibility iterations on the equality rows until
    /// the violation drops below this level before the SQP phase
    /// (`0` disables the presolve).
    pub presolve_feasibility: f64,
    /// 0 silent, 1 per-iteration prints to stderr.
    pub verbosity: u32,
    /// Iteration log CSV: `iter,merit,violation,step_length`.
    pub log_path: Option<std::path::PathBuf>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            feas_tol: 1e-8,
            max_iter: 500,
            elastic_penalty: 1e6,
            hessian_ridge: 1e-4,
            use_scaling: true,
            force_fd: false,
            trust_radius: 5.0,
            presolve_feasibility: 1e-2,
            verbosity: 0,
            log_path: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NlpSolution {
    pub z: DVector<f64>,
    /// Signed multiplier per constraint row.
    pub lam_rows: DVector<f64>,
    /// Signed multiplier per variable bound.
    pub lam_bounds: DVector<f64>,
    pub status: SolveStatus,
    pub kkt: KktReport,
    pub iterations: usize,
    pub wall_time_s: f64,
    /// `(merit before, merit after)` per accepted step, fixed penalty.
    pub merit_history: Vec<(f64, f64)>,
}

struct ScaledView<'a> {
    problem: &'a dyn NlpProblem,
    free: Vec<usize>,
    scale: DVector<f64>,
    force_fd: bool,
    m: usize,
}

impl<'a> ScaledView<'a> {
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let g = if self.force_fd {
            fd_gradient(&|p| self.problem.objective(p), z)
        } else {
            self.problem.gradient(z)
        };
        DVector::from_fn(self.free.len(), |k, _| {
            let j = self.free[k];
            g[j] * self.scale[j]
        })
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let jac = if self.force_fd {
            fd_jacobian(&|p, out| self.problem.constraints(p, out), z, self.m)
        } else {
            self.problem.jacobian(z)
        };
        let mut out = DMatrix::zeros(self.m, self.free.len());
        for (k, &j) in self.free.iter().enumerate() {
            let s = self.scale[j];
            for i in 0..self.m {
                out[(i, k)] = jac[(i, j)] * s;
            }
        }
        out
    }
}

fn violation_l1(c: &DVector<f64>, cl: &DVector<f64>, cu: &DVector<f64>) -> f64 {
    let mut v = 0.0;
    for i in 0..c.len() {
        v += (cl[i] - c[i]).max(0.0) + (c[i] - cu[i]).max(0.0);
    }
    v
}

fn violation_inf(c: &DVector<f64>, cl: &DVector<f64>, cu: &DVector<f64>) -> f64 {
    let mut v: f64 = 0.0;
    for i in 0..c.len() {
        v = v.max(cl[i] - c[i]).max(c[i] - cu[i]);
    }
    v.max(0.0)
}

/// BFGS pair update with Powell damping; keeps `h` and `h_inv` consistent.
fn bfgs_update(
    h: &mut DMatrix<f64>,
    h_inv: &mut DMatrix<f64>,
    s: &DVector<f64>,
    y: &DVector<f64>,
) {
    let s_norm = s.norm();
    if s_norm < 1e-14 {
        return;
    }
    let hs = &*h * s;
    let sths = s.dot(&hs);
    if sths <= 1e-300 {
        return;
    }
    let sty = s.dot(y);
    // Powell damping keeps positive curvature.
    let y_hat = if sty < 0.2 * sths {
        let theta = 0.8 * sths / (sths - sty);
        y * theta + &hs * (1.0 - theta)
    } else {
        y.clone()
    };
    let sty_hat = s.dot(&y_hat);
    if sty_hat <= 1e-12 * s_norm * y_hat.norm().max(1e-300) {
        return;
    }
    // H update.
    let rho_h = 1.0 / sths;
    let rho = 1.0 / sty_hat;
    h.ger(-rho_h, &hs, &hs, 1.0);
    h.ger(rho, &y_hat, &y_hat, 1.0);
    // Matching inverse update (Sherman-Morrison-Woodbury).
    let hy = &*h_inv * &y_hat;
    let yhy = y_hat.dot(&hy);
    h_inv.ger(rho * rho * yhy + rho, s, s, 1.0);
    h_inv.ger(-rho, s, &hy, 1.0);
    h_inv.ger(-rho, &hy, s, 1.0);
}

/// SQP iteration on an [`NlpProblem`]: damped-BFGS quadratic model,
/// active-set QP step, l1-merit Armijo backtracking. Stops at the KKT
/// tolerance or the iteration cap.
pub fn solve(
    problem: &dyn NlpProblem,
    z0: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<NlpSolution, SolveError> {
    let start = Instant::now();
    let n = problem.num_vars();
    let m = problem.num_constraints();
    if z0.len() != n {
        return Err(SolveError::Dimension(format!(
            "z0 has {} entries, problem has {n} variables",
            z0.len()
        )));
    }
    let (lb, ub) = problem.var_bounds();
    let (cl, cu) = problem.constraint_bounds();
    let scale = if opts.use_scaling {
        problem.var_scales()
    } else {
        DVector::from_element(n, 1.0)
    };

    // Project into bounds; pin fixed variables exactly.
    let mut z = z0.clone();
    for j in 0..n {
        if ub[j] - lb[j] <= 1e-14 {
            z[j] = lb[j];
        } else {
            z[j] = z[j].max(lb[j]).min(ub[j]);
        }
    }
    let free: Vec<usize> = (0..n).filter(|&j| ub[j] - lb[j] > 1e-14).collect();
    let nf = free.len();

    let mut c = DVector::zeros(m);
    problem.constraints(&z, &mut c);
    let mut f = problem.objective(&z);
    if !f.is_finite() || c.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteAtStart);
    }

    let view = ScaledView {
        problem,
        free: free.clone(),
        scale: scale.clone(),
        force_fd: opts.force_fd,
        m,
    };

    // Initial Hessian model in the scaled free space.
    let ridge = opts.hessian_ridge;
    let mut h = DMatrix::identity(nf, nf);
    if let Some(h_obj) = problem.objective_hessian() {
        for (a, &ja) in free.iter().enumerate() {
            for (b, &jb) in free.iter().enumerate() {
                h[(a, b)] = h_obj[(ja, jb)] * scale[ja] * scale[jb];
            }
        }
        for a in 0..nf {
            h[(a, a)] += ridge;
        }
        // Guard: a PSD quadratic cost plus ridge must factor; otherwise
        // fall back to identity.
        if h.clone().cholesky().is_none() {
            h = DMatrix::identity(nf, nf);
        }
    }
    let mut h_inv = h
        .clone()
        .cholesky()
        .map(|ch| ch.inverse())
        .unwrap_or_else(|| DMatrix::identity(nf, nf));

    let mut log = match &opts.log_path {
        Some(p) => {
            let mut fh = std::fs::File::create(p)?;
            writeln!(fh, "iter,merit,violation,step_length")?;
            Some(fh)
        }
        None => None,
    };

    let mut rho: f64 = 1.0;
    let mut lam_rows = DVector::zeros(m);
    let mut lam_bounds = DVector::zeros(n);
    let mut warm: Vec<WorkRow> = Vec::new();
    let mut pending: Option<(DVector<f64>, DVector<f64>)> = None; // (s, grad L at old point)
    let mut merit_history = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    let mut restoration_failures = 0;
    let mut trust = opts.trust_radius;

    // Row classification (fixed for the problem).
    let eq_rows: Vec<usize> = (0..m).filter(|&i| cu[i] - cl[i] <= 1e-14).collect();
    let in_lo: Vec<usize> = (0..m)
        .filter(|&i| cu[i] - cl[i] > 1e-14 && cl[i].is_finite())
        .collect();
    let in_hi: Vec<usize> = (0..m)
        .filter(|&i| cu[i] - cl[i] > 1e-14 && cu[i].is_finite())
        .collect();

    // Feasibility presolve: damped Gauss-Newton on the equality residuals
    // with an l1 line search, staying inside the variable bounds. The jump
    // transcriptions start far from the constraint manifold, where plain
    // SQP steps are poorly scaled; a few cheap GN iterations bring the
    // iterate close enough for clean SQP contraction.
    if opts.presolve_feasibility > 0.0 && !eq_rows.is_empty() {
        for _ in 0..40 {
            let viol = violation_inf(&c, &cl, &cu);
            if viol <= opts.presolve_feasibility {
                break;
            }
            iterations += 1;
            let j_s = view.jacobian(&z);
            let mut a_eq = DMatrix::zeros(eq_rows.len(), nf);
            let mut r_eq = DVector::zeros(eq_rows.len());
            for (k, &i) in eq_rows.iter().enumerate() {
                a_eq.row_mut(k).copy_from(&j_s.row(i));
                r_eq[k] = c[i] - cl[i];
            }
            let mut jtj = a_eq.tr_mul(&a_eq);
            let mean_diag =
                (0..nf).map(|k| jtj[(k, k)]).sum::<f64>() / nf as f64;
            for k in 0..nf {
                jtj[(k, k)] += 1e-9 * mean_diag.max(1.0);
            }
            let rhs = -(a_eq.tr_mul(&r_eq));
            let Some(ch) = jtj.cholesky() else { break };
            let d = ch.solve(&rhs);
            // Line search on the l1 equality violation.
            let viol1_of = |cv: &DVector<f64>| -> f64 {
                eq_rows.iter().map(|&i| (cv[i] - cl[i]).abs()).sum()
            };
            let base = viol1_of(&c);
            let mut alpha = 1.0f64;
            let mut improved = false;
            let mut z_try = z.clone();
            let mut c_try = c.clone();
            for _ in 0..25 {
                for (k, &j) in free.iter().enumerate() {
                    z_try[j] = (z[j] + alpha * d[k] * scale[j]).max(lb[j]).min(ub[j]);
                }
                problem.constraints(&z_try, &mut c_try);
                if c_try.iter().all(|v| v.is_finite()) && viol1_of(&c_try) < base * (1.0 - 0.1 * alpha)
                {
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if let Some(fh) = log.as_mut() {
                writeln!(
                    fh,
                    "{},{:.17e},{:.17e},{:.17e}",
                    iterations - 1,
                    problem.objective(&z_try),
                    violation_inf(&c_try, &cl, &cu),
                    alpha
                )?;
            }
            if !improved {
                break;
            }
            z = z_try;
            c = c_try;
        }
        f = problem.objective(&z);
    }

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let t_phase = Instant::now();
        let g_s = view.gradient(&z);
        let j_s = view.jacobian(&z);
        let t_deriv = t_phase.elapsed().as_secs_f64();
        let t_phase = Instant::now();

        // Deferred BFGS update from the previous accepted step.
        if let Some((s, gl_prev)) = pending.take() {
            let lam_free = lam_scaled_rows(&lam_rows, m);
            let gl_now = &g_s - j_s.transpose() * &lam_free;
            let y = gl_now - gl_prev;
            bfgs_update(&mut h, &mut h_inv, &s, &y);
        }

        // Assemble the QP in the scaled free space.
        let mut a_eq = DMatrix::zeros(eq_rows.len(), nf);
        let mut b_eq = DVector::zeros(eq_rows.len());
        for (k, &i) in eq_rows.iter().enumerate() {
            a_eq.row_mut(k).copy_from(&j_s.row(i));
            b_eq[k] = cl[i] - c[i];
        }
        let m_in = in_lo.len() + in_hi.len();
        let mut a_in = DMatrix::zeros(m_in, nf);
        let mut b_in = DVector::zeros(m_in);
        for (k, &i) in in_lo.iter().enumerate() {
            a_in.row_mut(k).copy_from(&j_s.row(i));
            b_in[k] = cl[i] - c[i];
        }
        for (k, &i) in in_hi.iter().enumerate() {
            let k = in_lo.len() + k;
            for col in 0..nf {
                a_in[(k, col)] = -j_s[(i, col)];
            }
            b_in[k] = c[i] - cu[i];
        }
        let lb_d = DVector::from_fn(nf, |k, _| {
            let j = free[k];
            let hard = if lb[j].is_finite() {
                (lb[j] - z[j]) / scale[j]
            } else {
                f64::NEG_INFINITY
            };
            hard.max(-trust)
        });
        let ub_d = DVector::from_fn(nf, |k, _| {
            let j = free[k];
            let hard = if ub[j].is_finite() {
                (ub[j] - z[j]) / scale[j]
            } else {
                f64::INFINITY
            };
            hard.min(trust)
        });

        let qp = Qp {
            g: &g_s,
            a_eq: &a_eq,
            b_eq: &b_eq,
            a_in: &a_in,
            b_in: &b_in,
            lb: &lb_d,
            ub: &ub_d,
        };
        let qp_opts = QpOptions {
            tol: 1e-9,
            max_pivots: 0,
            warm_start: std::mem::take(&mut warm),
        };
        let qp_sol = match qp_solve_with_inverse(&h_inv, &qp, &qp_opts) {
            Ok(s) => Some(s),
            Err(QpError::Infeasible) | Err(QpError::PivotLimit(_)) => {
                // A tight trust box can make the full equality correction
                // unreachable; retry with partially relaxed equality
                // targets before falling back to the elastic relaxation.
                let mut recovered = None;
                let mut kappa = 0.25;
                while kappa > 1e-3 {
                    let b_eq_scaled = &b_eq * kappa;
                    let qp_k = Qp {
                        g: &g_s,
                        a_eq: &a_eq,
                        b_eq: &b_eq_scaled,
                        a_in: &a_in,
                        b_in: &b_in,
                        lb: &lb_d,
                        ub: &ub_d,
                    };
                    match qp_solve_with_inverse(&h_inv, &qp_k, &QpOptions::default()) {
                        Ok(s) => {
                            recovered = Some(s);
                            break;
                        }
                        Err(_) => kappa *= 0.25,
                    }
                }
                if recovered.is_none() && nf <= 600 {
                    recovered = elastic_solve(&h_inv, &qp, &qp_opts, opts.elastic_penalty);
                }
                recovered
            }
            Err(_) => None,
        };

        let (d_scaled, qp_active) = match qp_sol {
            Some(sol) => {
                // Map multipliers back to signed NLP rows/bounds.
                lam_rows.fill(0.0);
                for (k, &i) in eq_rows.iter().enumerate() {
                    lam_rows[i] = sol.lam_eq[k];
                }
                for (k, &i) in in_lo.iter().enumerate() {
                    lam_rows[i] += sol.lam_in[k];
                }
                for (k, &i) in in_hi.iter().enumerate() {
                    lam_rows[i] -= sol.lam_in[in_lo.len() + k];
                }
                lam_bounds.fill(0.0);
                for (k, &j) in free.iter().enumerate() {
                    lam_bounds[j] = (sol.lam_lb[k] - sol.lam_ub[k]) / scale[j];
                }
                (sol.x, sol.active)
            }
            None => {
                // Feasibility restoration: damped Gauss-Newton on the
                // equality residuals.
                restoration_failures += 1;
                trust = (trust * 0.5).max(1e-2);
                if restoration_failures > 25 {
                    status = SolveStatus::Infeasible;
                    break;
                }
                let jtj = a_eq.transpose() * &a_eq
                    + DMatrix::<f64>::identity(nf, nf) * 1e-8;
                let rhs = a_eq.transpose() * &b_eq;
                let d = jtj
                    .cholesky()
                    .map(|ch| ch.solve(&rhs))
                    .unwrap_or_else(|| DVector::zeros(nf));
                let d = DVector::from_fn(nf, |k, _| d[k].max(lb_d[k]).min(ub_d[k]));
                (d, Vec::new())
            }
        };
        warm = qp_active;

        // Convergence test with fresh multipliers.
        let lam_free = lam_scaled_rows(&lam_rows, m);
        let stat = (&g_s
            - j_s.transpose() * &lam_free
            - DVector::from_fn(nf, |k, _| lam_bounds[free[k]] * scale[free[k]]))
        .abs()
        .max();
        let viol_now = violation_inf(&c, &cl, &cu);
        let step_norm = d_scaled.abs().max();
        if stat <= opts.tol && viol_now <= opts.feas_tol && step_norm <= opts.tol.max(1e-9) {
            status = SolveStatus::Converged;
            if let Some(fh) = log.as_mut() {
                writeln!(fh, "{iter},{:.17e},{:.17e},0", f, viol_now)?;
            }
            break;
        }

        // l1 merit line search.
        rho = rho.max(1.5 * lam_rows.abs().max() + 1.0);
        let d_full = {
            let mut d = DVector::zeros(n);
            for (k, &j) in free.iter().enumerate() {
                d[j] = d_scaled[k] * scale[j];
            }
            d
        };
        let viol1 = violation_l1(&c, &cl, &cu);
        let merit0 = f + rho * viol1;
        let g_full_dot_d = {
            // g_s . d_scaled equals grad f . d in unscaled space.
            g_s.dot(&d_scaled)
        };
        let descent = g_full_dot_d - rho * viol1;
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut soc_tried = false;
        #[allow(unused_mut)]
        let mut z_next = z.clone();
        let mut c_next = c.clone();
        let mut f_next = f;
        let mut d_eff = d_full.clone();
        for trial in 0..40 {
            z_next = &z + alpha * &d_eff;
            // Clamp for safety against rounding at the bounds.
            for &j in &free {
                z_next[j] = z_next[j].max(lb[j]).min(ub[j]);
            }
            problem.constraints(&z_next, &mut c_next);
            f_next = problem.objective(&z_next);
            if f_next.is_finite() && c_next.iter().all(|v| v.is_finite()) {
                let merit = f_next + rho * violation_l1(&c_next, &cl, &cu);
                if merit <= merit0 + 0.1 * alpha * descent.min(0.0) + 1e-12 * merit0.abs() {
                    merit_history.push((merit0, merit));
                    accepted = true;
                    break;
                }
                // Second-order correction against the curvature-induced
                // violation of the full step (Maratos effect): shift by the
                // minimum-norm equality correction evaluated at z + d.
                if trial == 0 && !soc_tried && !eq_rows.is_empty() {
                    soc_tried = true;
                    let mut r = DVector::zeros(eq_rows.len());
                    for (k, &i) in eq_rows.iter().enumerate() {
                        r[k] = c_next[i] - cl[i];
                    }
                    let gram = &a_eq * a_eq.transpose()
                        + DMatrix::<f64>::identity(eq_rows.len(), eq_rows.len()) * 1e-10;
                    if let Some(ch) = gram.cholesky() {
                        let y = ch.solve(&r);
                        let d_soc = -(a_eq.transpose() * y);
                        let mut d_try = d_full.clone();
                        for (k, &j) in free.iter().enumerate() {
                            d_try[j] += d_soc[k] * scale[j];
                        }
                        d_eff = d_try;
                        continue; // retry alpha = 1 with the corrected step
                    }
                }
                if soc_tried && trial == 1 {
                    // Correction did not help; fall back to plain backtracking.
                    d_eff = d_full.clone();
                    continue;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                break;
            }
        }
        if !accepted {
            // Reject: raise the penalty, shrink the trust region and stay
            // put; the next iteration re-linearizes with the same point.
            rho *= 10.0;
            trust = (trust * 0.25).max(1e-2);
            restoration_failures += 1;
            if restoration_failures > 25 {
                status = SolveStatus::Infeasible;
                break;
            }
            z_next = z.clone();
            problem.constraints(&z_next, &mut c_next);
            f_next = f;
            alpha = 0.0;
        } else {
            restoration_failures = 0;
            // Trust management by the achieved merit reduction against the
            // model's prediction.
            let actual = merit0 - (f_next + rho * violation_l1(&c_next, &cl, &cu));
            let predicted = (-alpha * descent).max(1e-16);
            let ratio = actual / predicted;
            if ratio < 0.25 || alpha < 0.2 {
                trust = (trust * 0.5).max(1e-2);
            } else if ratio > 0.75 && alpha >= 1.0 - 1e-12 {
                trust = (trust * 1.6).min(f64::min(1e4, opts.trust_radius * 200.0));
            }
        }

        if let Some(fh) = log.as_mut() {
            writeln!(
                fh,
                "{iter},{:.17e},{:.17e},{:.17e}",
                f_next,
                violation_inf(&c_next, &cl, &cu),
                alpha
            )?;
        }
        if opts.verbosity > 0 {
            eprintln!(
                "iter {iter:4} f {f_next:+.6e} viol {:.3e} stat {stat:.3e} alpha {alpha:.2e} deriv {t_deriv:.2}s rest {:.2}s trust {trust:.2}",
                violation_inf(&c_next, &cl, &cu),
                t_phase.elapsed().as_secs_f64(),
            );
        }

        pending = if alpha > 0.0 {
            Some((alpha * &d_scaled, &g_s - j_s.transpose() * &lam_free))
        } else {
            None
        };
        z = z_next;
        c = c_next;
        f = f_next;
    }

    let kkt = kkt_report(problem, &z, &lam_rows, &lam_bounds);
    Ok(NlpSolution {
        z,
        lam_rows,
        lam_bounds,
        status,
        kkt,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        merit_history,
    })
}

fn lam_scaled_rows(lam_rows: &DVector<f64>, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| lam_rows[i])
}

/// Elastic relaxation: slack variables on the inequality rows with an l1
/// penalty, solved with the extended Hessian `blkdiag(H, w I)`.
fn elastic_solve(
    h_inv: &DMatrix<f64>,
    qp: &Qp,
    opts: &QpOptions,
    penalty: f64,
) -> Option<crate::qp::QpSolution> {
    let n = qp.g.len();
    let m_in = qp.a_in.nrows();
    if m_in == 0 {
        return None;
    }
    let slack_curv = 1e-4;
    let ne = n + m_in;
    let mut h_inv_ext = DMatrix::zeros(ne, ne);
    h_inv_ext.view_mut((0, 0), (n, n)).copy_from(h_inv);
    for k in 0..m_in {
        h_inv_ext[(n + k, n + k)] = 1.0 / slack_curv;
    }
    let mut g_ext = DVector::zeros(ne);
    g_ext.rows_mut(0, n).copy_from(qp.g);
    let pen = penalty * (1.0 + qp.g.abs().max());
    for k in 0..m_in {
        g_ext[n + k] = pen;
    }
    let mut a_eq = DMatrix::zeros(qp.a_eq.nrows(), ne);
    a_eq.view_mut((0, 0), (qp.a_eq.nrows(), n)).copy_from(qp.a_eq);
    let mut a_in = DMatrix::zeros(m_in, ne);
    a_in.view_mut((0, 0), (m_in, n)).copy_from(qp.a_in);
    for k in 0..m_in {
        a_in[(k, n + k)] = 1.0;
    }
    let mut lb = DVector::from_element(ne, f64::NEG_INFINITY);
    lb.rows_mut(0, n).copy_from(qp.lb);
    for k in 0..m_in {
        lb[n + k] = 0.0;
    }
    let mut ub = DVector::from_element(ne, f64::INFINITY);
    ub.rows_mut(0, n).copy_from(qp.ub);

    let qp_ext = Qp {
        g: &g_ext,
        a_eq: &a_eq,
        b_eq: qp.b_eq,
        a_in: &a_in,
        b_in: qp.b_in,
        lb: &lb,
        ub: &ub,
    };
    let ext_opts = QpOptions {
        tol: opts.tol,
        max_pivots: 0,
        warm_start: Vec::new(),
    };
    match qp_solve_with_inverse(&h_inv_ext, &qp_ext, &ext_opts) {
        Ok(sol) => {
            let x = sol.x.rows(0, n).clone_owned();
            Some(crate::qp::QpSolution {
                x,
                lam_eq: sol.lam_eq,
                lam_in: sol.lam_in,
                lam_lb: sol.lam_lb.rows(0, n).clone_owned(),
                lam_ub: sol.lam_ub.rows(0, n).clone_owned(),
                active: sol
                    .active
                    .into_iter()
                    .filter(|w| match w {
                        WorkRow::Lower(j) | WorkRow::Upper(j) => *j < n,
                        _ => true,
                    })
                    .collect(),
                pivots: sol.pivots,
                dropped_eq: sol.dropped_eq,
            })
        }
        Err(_) => None,
    }
}
