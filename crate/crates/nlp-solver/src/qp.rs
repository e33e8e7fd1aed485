//! Dense strictly convex quadratic programming by a dual active-set method.
//!
//! Solves
//! ```text
//!     minimize    1/2 x^T H x + g^T x
//!     subject to  A_eq x  = b_eq
//!                 A_in x >= b_in
//!                 lb <= x <= ub
//! ```
//! with `H` positive definite. Equalities (plus any warm-started actives)
//! enter the working set in one bulk factorization; inequalities are then
//! activated one at a time with primal/dual steps. The working-set Gram
//! matrix `M = A_W H^{-1} A_W^T` is kept as a Cholesky factor under row
//! appends and deletions, so each pivot costs `O(m^2 + m n)`.
//!
//! Constraint rows are stored column-major (transposed) internally so the
//! per-pivot products stream through contiguous memory; bound rows are
//! handled implicitly. Exactly redundant working rows (consistent
//! linearizations) are absorbed by an escalating ridge on the Gram matrix;
//! the final residual check still guards against true inconsistency. Ties
//! in the violated-constraint selection break toward the lowest row index,
//! which also serves as the anti-cycling rule.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("QP constraints are infeasible")]
    Infeasible,
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("pivot limit exceeded ({0})")]
    PivotLimit(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Identity of a working-set row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WorkRow {
    Eq(usize),
    /// `a_i^T x >= b_i`.
    Ineq(usize),
    /// `x_j >= lb_j`.
    Lower(usize),
    /// `x_j <= ub_j` (internally `-x_j >= -ub_j`).
    Upper(usize),
}

/// Problem data; all references borrowed for the duration of the solve.
pub struct Qp<'a> {
    pub g: &'a DVector<f64>,
    pub a_eq: &'a DMatrix<f64>,
    pub b_eq: &'a DVector<f64>,
    pub a_in: &'a DMatrix<f64>,
    pub b_in: &'a DVector<f64>,
    pub lb: &'a DVector<f64>,
    pub ub: &'a DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct QpOptions {
    /// Constraint feasibility tolerance.
    pub tol: f64,
    /// Pivot cap; 0 picks `40 + 10 * (m_in + n)`.
    pub max_pivots: usize,
    /// Inequality-type rows to activate in the bulk factorization.
    pub warm_start: Vec<WorkRow>,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_pivots: 0,
            warm_start: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of the equality rows (free sign).
    pub lam_eq: DVector<f64>,
    /// Multipliers of the general inequality rows (non-negative).
    pub lam_in: DVector<f64>,
    pub lam_lb: DVector<f64>,
    pub lam_ub: DVector<f64>,
    /// Active inequality-type rows at the solution.
    pub active: Vec<WorkRow>,
    pub pivots: usize,
    /// Equality rows excluded as linearly dependent (consistent but
    /// redundant); their multipliers are zero.
    pub dropped_eq: Vec<usize>,
}

struct Solver<'a> {
    n: usize,
    h_inv: &'a DMatrix<f64>,
    qp: &'a Qp<'a>,
    /// Equality / inequality rows stored as contiguous columns.
    a_eq_t: DMatrix<f64>,
    a_in_t: DMatrix<f64>,
    rows: Vec<WorkRow>,
    /// `H^{-1} a_k` as columns (capacity grows; logical width = rows.len()).
    y: DMatrix<f64>,
    /// Lower Cholesky factor of `M` (same capacity scheme).
    l: DMatrix<f64>,
    lam: Vec<f64>,
    x: DVector<f64>,
    /// `H^{-1} g`, fixed for the whole solve.
    v: DVector<f64>,
    /// Working-set membership flags.
    in_w: Vec<bool>,
    lo_w: Vec<bool>,
    up_w: Vec<bool>,
}

impl<'a> Solver<'a> {
    fn b_of(&self, r: WorkRow) -> f64 {
        match r {
            WorkRow::Eq(i) => self.qp.b_eq[i],
            WorkRow::Ineq(i) => self.qp.b_in[i],
            WorkRow::Lower(j) => self.qp.lb[j],
            WorkRow::Upper(j) => -self.qp.ub[j],
        }
    }

    fn a_dot(&self, r: WorkRow, v: &DVector<f64>) -> f64 {
        match r {
            WorkRow::Eq(i) => self.a_eq_t.column(i).dot(v),
            WorkRow::Ineq(i) => self.a_in_t.column(i).dot(v),
            WorkRow::Lower(j) => v[j],
            WorkRow::Upper(j) => -v[j],
        }
    }

    fn hinv_a(&self, r: WorkRow) -> DVector<f64> {
        match r {
            WorkRow::Eq(i) => self.h_inv * self.a_eq_t.column(i),
            WorkRow::Ineq(i) => self.h_inv * self.a_in_t.column(i),
            WorkRow::Lower(j) => self.h_inv.column(j).clone_owned(),
            WorkRow::Upper(j) => -self.h_inv.column(j).clone_owned(),
        }
    }

    fn m_len(&self) -> usize {
        self.rows.len()
    }

    fn set_flag(&mut self, r: WorkRow, value: bool) {
        match r {
            WorkRow::Eq(_) => {}
            WorkRow::Ineq(i) => self.in_w[i] = value,
            WorkRow::Lower(j) => self.lo_w[j] = value,
            WorkRow::Upper(j) => self.up_w[j] = value,
        }
    }

    /// Solve `L L^T lam = rhs` in place.
    fn factor_solve(&self, rhs: &mut DVector<f64>) {
        let m = self.m_len();
        for i in 0..m {
            let mut s = rhs[i];
            let li = self.l.column(i);
            for k in 0..i {
                s -= self.l[(i, k)] * rhs[k];
            }
            rhs[i] = s / li[i];
        }
        for i in (0..m).rev() {
            let col = self.l.column(i);
            let mut s = rhs[i];
            for k in i + 1..m {
                s -= col[k] * rhs[k];
            }
            rhs[i] = s / col[i];
        }
    }

    /// Multipliers of the current working set at its EQP solution.
    fn eqp_multipliers(&self) -> DVector<f64> {
        let m = self.m_len();
        let mut rhs = DVector::zeros(m);
        for (k, &r) in self.rows.iter().enumerate() {
            rhs[k] = self.b_of(r) + self.a_dot(r, &self.v);
        }
        self.factor_solve(&mut rhs);
        rhs
    }

    /// Recompute `x` for the current working set: `x = -v + Y lam`.
    fn eqp_point(&mut self) {
        let m = self.m_len();
        let lam = self.eqp_multipliers();
        let mut x = -self.v.clone();
        if m > 0 {
            x.gemv(1.0, &self.y.columns(0, m).clone_owned(), &lam, 1.0);
        }
        self.lam = lam.iter().copied().collect();
        self.x = x;
    }

    /// Append a working row given `u = H^{-1} a`; returns false when the
    /// row is linearly dependent on the working set.
    fn try_append(&mut self, r: WorkRow, u: DVector<f64>, lam_new: f64) -> bool {
        let m = self.m_len();
        let mut lcol = DVector::zeros(m);
        for (k, &row) in self.rows.iter().enumerate() {
            lcol[k] = self.a_dot(row, &u);
        }
        // Forward solve for the new factor column.
        for i in 0..m {
            let mut s = lcol[i];
            for k in 0..i {
                s -= self.l[(i, k)] * lcol[k];
            }
            lcol[i] = s / self.l[(i, i)];
        }
        let a_u = self.a_dot(r, &u);
        let d2 = a_u - lcol.dot(&lcol);
        if d2 <= 1e-12 * (1.0 + a_u.abs()) {
            return false;
        }
        self.ensure_capacity(m + 1);
        for k in 0..m {
            self.l[(m, k)] = lcol[k];
        }
        self.l[(m, m)] = d2.sqrt();
        self.y.column_mut(m).copy_from(&u);
        self.rows.push(r);
        self.lam.push(lam_new);
        self.set_flag(r, true);
        true
    }

    fn ensure_capacity(&mut self, m: usize) {
        if self.l.nrows() < m {
            let cap = (self.l.nrows() * 2 + 8).max(m);
            let old = self.m_len();
            let mut l2 = DMatrix::zeros(cap, cap);
            l2.view_mut((0, 0), (old, old))
                .copy_from(&self.l.view((0, 0), (old, old)));
            self.l = l2;
            let mut y2 = DMatrix::zeros(self.n, cap);
            y2.view_mut((0, 0), (self.n, old))
                .copy_from(&self.y.view((0, 0), (self.n, old)));
            self.y = y2;
        }
    }

    /// Remove working row `k`, restoring the factor by Givens rotations.
    fn remove(&mut self, k: usize) {
        let m = self.m_len();
        let removed = self.rows.remove(k);
        self.set_flag(removed, false);
        self.lam.remove(k);
        // Shift Y columns left.
        for c in k..m - 1 {
            let col = self.y.column(c + 1).clone_owned();
            self.y.column_mut(c).copy_from(&col);
        }
        // Delete row k of L and re-triangularize.
        for i in k..m - 1 {
            for j in 0..m {
                let val = self.l[(i + 1, j)];
                self.l[(i, j)] = val;
            }
        }
        for j in 0..m {
            self.l[(m - 1, j)] = 0.0;
        }
        for i in k..m - 1 {
            let a = self.l[(i, i)];
            let b = self.l[(i, i + 1)];
            if b.abs() < 1e-300 {
                continue;
            }
            let rho = (a * a + b * b).sqrt();
            let (c, s) = (a / rho, b / rho);
            for row in i..m - 1 {
                let x1 = self.l[(row, i)];
                let x2 = self.l[(row, i + 1)];
                self.l[(row, i)] = c * x1 + s * x2;
                self.l[(row, i + 1)] = -s * x1 + c * x2;
            }
        }
        for row in 0..m - 1 {
            self.l[(row, m - 1)] = 0.0;
        }
    }
}

/// Solve with an explicit Hessian inverse (the SQP hot path: the BFGS
/// recursion maintains the inverse directly).
pub fn qp_solve_with_inverse(
    h_inv: &DMatrix<f64>,
    qp: &Qp,
    opts: &QpOptions,
) -> Result<QpSolution, QpError> {
    let n = qp.g.len();
    if h_inv.nrows() != n
        || qp.a_eq.ncols() != n && qp.a_eq.nrows() > 0
        || qp.a_in.ncols() != n && qp.a_in.nrows() > 0
    {
        return Err(QpError::Dimension(format!(
            "n = {n}, a_eq {}x{}, a_in {}x{}",
            qp.a_eq.nrows(),
            qp.a_eq.ncols(),
            qp.a_in.nrows(),
            qp.a_in.ncols()
        )));
    }
    let m_eq = qp.a_eq.nrows();
    let m_in = qp.a_in.nrows();
    let max_pivots = if opts.max_pivots == 0 {
        40 + 10 * (m_in + n)
    } else {
        opts.max_pivots
    };

    let mut solver = Solver {
        n,
        h_inv,
        qp,
        a_eq_t: qp.a_eq.transpose(),
        a_in_t: qp.a_in.transpose(),
        rows: Vec::new(),
        y: DMatrix::zeros(n, 8),
        l: DMatrix::zeros(8, 8),
        lam: Vec::new(),
        x: DVector::zeros(n),
        v: h_inv * qp.g,
        in_w: vec![false; m_in],
        lo_w: vec![false; n],
        up_w: vec![false; n],
    };

    // Bulk working set: all equalities plus warm-started actives.
    let mut bulk: Vec<WorkRow> = (0..m_eq).map(WorkRow::Eq).collect();
    for &w in &opts.warm_start {
        match w {
            WorkRow::Eq(_) => {}
            WorkRow::Ineq(i) if i < m_in && !solver.in_w[i] => {
                solver.in_w[i] = true;
                bulk.push(w);
            }
            WorkRow::Lower(j) if j < n && qp.lb[j].is_finite() && !solver.lo_w[j] => {
                solver.lo_w[j] = true;
                bulk.push(w);
            }
            WorkRow::Upper(j) if j < n && qp.ub[j].is_finite() && !solver.up_w[j] => {
                solver.up_w[j] = true;
                bulk.push(w);
            }
            _ => {}
        }
    }

    let t_bulk = std::time::Instant::now();
    let mut dropped_eq = Vec::new();
    if !bulk.is_empty() {
        // Factor M = A_W H^{-1} A_W^T in one shot. Columns of the bulk
        // matrix are the working rows.
        let build_bulk_t = |list: &[WorkRow], s: &Solver| -> DMatrix<f64> {
            let mut a_t = DMatrix::zeros(n, list.len());
            for (k, &r) in list.iter().enumerate() {
                match r {
                    WorkRow::Eq(i) => a_t.column_mut(k).copy_from(&s.a_eq_t.column(i)),
                    WorkRow::Ineq(i) => a_t.column_mut(k).copy_from(&s.a_in_t.column(i)),
                    WorkRow::Lower(j) => a_t[(j, k)] = 1.0,
                    WorkRow::Upper(j) => a_t[(j, k)] = -1.0,
                }
            }
            a_t
        };
        let mut a_t = build_bulk_t(&bulk, &solver);
        let mut y_bulk = h_inv * &a_t;
        let mut m_mat = a_t.tr_mul(&y_bulk);
        let mut mb = bulk.len();
        let diag_scale =
            (0..mb).map(|k| m_mat[(k, k)].abs()).fold(0.0f64, f64::max) / mb.max(1) as f64;
        let mut factor = m_mat.clone().cholesky();
        let mut ridge = 1e-12 * diag_scale.max(1e-300);
        while factor.is_none() && ridge < 1e-2 * diag_scale.max(1.0) {
            let mut reg = m_mat.clone();
            for k in 0..mb {
                reg[(k, k)] += ridge;
            }
            factor = reg.cholesky();
            ridge *= 100.0;
        }
        if factor.is_none() {
            // Explicit dependent-row exclusion as a last resort.
            match lower_cholesky_with_dependents(&m_mat) {
                Ok(_) => {}
                Err(dep) => {
                    let mut keep = Vec::new();
                    for (k, &r) in bulk.iter().enumerate() {
                        if dep.contains(&k) {
                            solver.set_flag(r, false);
                            if let WorkRow::Eq(i) = r {
                                dropped_eq.push(i);
                            }
                        } else {
                            keep.push(r);
                        }
                    }
                    bulk = keep;
                    mb = bulk.len();
                    a_t = build_bulk_t(&bulk, &solver);
                    y_bulk = h_inv * &a_t;
                    m_mat = a_t.tr_mul(&y_bulk);
                }
            }
            let mut reg = m_mat.clone();
            for k in 0..mb {
                reg[(k, k)] += 1e-10 * diag_scale.max(1e-300);
            }
            factor = reg.cholesky();
        }
        let chol = factor.ok_or(QpError::NotPositiveDefinite)?;
        let l_small = chol.unpack();
        let cap = mb.max(8);
        solver.l = DMatrix::zeros(cap, cap);
        solver
            .l
            .view_mut((0, 0), (mb, mb))
            .copy_from(&l_small.view((0, 0), (mb, mb)));
        solver.y = DMatrix::zeros(n, cap);
        solver.y.view_mut((0, 0), (n, mb)).copy_from(&y_bulk);
        solver.rows = bulk;
        solver.lam = vec![0.0; mb];

        // Dual feasibility of warm-started inequality rows: drop negatives
        // (multipliers only; the point is recomputed once afterwards).
        loop {
            let lam = solver.eqp_multipliers();
            let mut worst = (usize::MAX, -opts.tol);
            for (k, &r) in solver.rows.iter().enumerate() {
                if !matches!(r, WorkRow::Eq(_)) && lam[k] < worst.1 {
                    worst = (k, lam[k]);
                }
            }
            if worst.0 == usize::MAX {
                break;
            }
            solver.remove(worst.0);
        }
        solver.eqp_point();
    } else {
        solver.x = -solver.v.clone();
    }
    let bulk_elapsed = t_bulk.elapsed().as_secs_f64();
    let t_loop = std::time::Instant::now();

    // Row norms for scale-free violation pricing.
    let in_norms: Vec<f64> = (0..m_in)
        .map(|i| solver.a_in_t.column(i).norm().max(1e-12))
        .collect();

    // Dual active-set main loop.
    let mut pivots = 0usize;
    loop {
        // Most violated inequality not in the working set, priced relative
        // to the row norm so mixed units compete fairly.
        let mut best: Option<(WorkRow, f64)> = None;
        let mut consider = |row: WorkRow, viol: f64| {
            if viol > opts.tol {
                let better = match &best {
                    None => true,
                    Some((brow, bviol)) => {
                        viol > *bviol + 1e-14 || (viol > *bviol - 1e-14 && row < *brow)
                    }
                };
                if better {
                    best = Some((row, viol));
                }
            }
        };
        if m_in > 0 {
            let ax = solver.a_in_t.tr_mul(&solver.x);
            for i in 0..m_in {
                if !solver.in_w[i] {
                    consider(WorkRow::Ineq(i), (qp.b_in[i] - ax[i]) / in_norms[i]);
                }
            }
        }
        for j in 0..n {
            if qp.lb[j].is_finite() && !solver.lo_w[j] {
                consider(WorkRow::Lower(j), qp.lb[j] - solver.x[j]);
            }
            if qp.ub[j].is_finite() && !solver.up_w[j] {
                consider(WorkRow::Upper(j), solver.x[j] - qp.ub[j]);
            }
        }
        let Some((p, _)) = best else {
            break; // primal feasible: done
        };

        // Inner loop: drive constraint p into the working set.
        let p_norm = match p {
            WorkRow::Ineq(i) => in_norms[i],
            _ => 1.0,
        };
        let u = solver.hinv_a(p);
        let mut lam_p = 0.0;
        loop {
            pivots += 1;
            if pivots > max_pivots {
                return Err(QpError::PivotLimit(max_pivots));
            }
            let m = solver.m_len();
            let mut w = DVector::zeros(m);
            for (k, &row) in solver.rows.iter().enumerate() {
                w[k] = solver.a_dot(row, &u);
            }
            let mut r_dir = w.clone();
            solver.factor_solve(&mut r_dir);
            let a_u = solver.a_dot(p, &u);
            let d2 = a_u - w.dot(&r_dir);
            let dependent = d2 <= 1e-12 * (1.0 + a_u.abs());

            let viol = solver.b_of(p) - solver.a_dot(p, &solver.x);
            if viol <= opts.tol * p_norm {
                break;
            }
            let t2 = if dependent { f64::INFINITY } else { viol / d2 };

            // Dual blocking over inequality-type working rows.
            let mut t1 = f64::INFINITY;
            let mut blocker = None;
            for (k, &row) in solver.rows.iter().enumerate() {
                if matches!(row, WorkRow::Eq(_)) || r_dir[k] <= 1e-14 {
                    continue;
                }
                let ratio = solver.lam[k] / r_dir[k];
                if ratio < t1 - 1e-14 {
                    t1 = ratio;
                    blocker = Some(k);
                }
            }
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }
            if !dependent {
                // z = u - Y r (stays in range of the working-set rows'
                // complement).
                let mut z = u.clone();
                if m > 0 {
                    let y_view = solver.y.columns(0, m);
                    // z -= Y * r_dir
                    let correction = &y_view * &r_dir;
                    z -= correction;
                }
                solver.x.axpy(t, &z, 1.0);
            }
            for k in 0..m {
                solver.lam[k] -= t * r_dir[k];
            }
            lam_p += t;
            if t == t2 && !dependent {
                let _ = solver.try_append(p, u, lam_p);
                break;
            }
            let Some(k) = blocker else {
                return Err(QpError::Infeasible);
            };
            solver.remove(k);
        }
    }

    // Distribute multipliers.
    let mut lam_eq = DVector::zeros(m_eq);
    let mut lam_in = DVector::zeros(m_in);
    let mut lam_lb = DVector::zeros(n);
    let mut lam_ub = DVector::zeros(n);
    let mut active = Vec::new();
    for (k, &r) in solver.rows.iter().enumerate() {
        let l = solver.lam[k];
        match r {
            WorkRow::Eq(i) => lam_eq[i] = l,
            WorkRow::Ineq(i) => {
                lam_in[i] = l;
                active.push(r);
            }
            WorkRow::Lower(j) => {
                lam_lb[j] = l;
                active.push(r);
            }
            WorkRow::Upper(j) => {
                lam_ub[j] = l;
                active.push(r);
            }
        }
    }
    // Dropped equality rows must still be satisfied (consistency check).
    for &i in &dropped_eq {
        let resid = solver.a_eq_t.column(i).dot(&solver.x) - qp.b_eq[i];
        if resid.abs() > 1e3 * opts.tol.max(1e-9) {
            return Err(QpError::Infeasible);
        }
    }
    if std::env::var_os("QP_TRACE").is_some() {
        eprintln!(
            "qp: n {} m_eq {} m_in {} pivots {} bulk {:.2}s pivot-loop {:.2}s",
            n,
            m_eq,
            m_in,
            pivots,
            bulk_elapsed,
            t_loop.elapsed().as_secs_f64()
        );
    }
    Ok(QpSolution {
        x: solver.x,
        lam_eq,
        lam_in,
        lam_lb,
        lam_ub,
        active,
        pivots,
        dropped_eq,
    })
}

/// Solve given the Hessian itself (factorized internally).
pub fn qp_solve(h: &DMatrix<f64>, qp: &Qp, opts: &QpOptions) -> Result<QpSolution, QpError> {
    let chol = h.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let h_inv = chol.inverse();
    qp_solve_with_inverse(&h_inv, qp, opts)
}

/// Lower Cholesky with zero-pivot detection. `Err` carries the indices of
/// dependent rows (ascending).
fn lower_cholesky_with_dependents(m: &DMatrix<f64>) -> Result<DMatrix<f64>, Vec<usize>> {
    let n = m.nrows();
    let mut l = DMatrix::zeros(n.max(8), n.max(8));
    let mut dependents = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                let tol = 1e-12 * (1.0 + m[(i, i)].abs());
                if s <= tol {
                    dependents.push(i);
                    // Keep the factor usable so later rows can still be
                    // screened in the same pass.
                    l[(i, i)] = f64::INFINITY;
                } else {
                    l[(i, i)] = s.sqrt();
                }
            } else {
                l[(i, j)] = if l[(j, j)].is_finite() { s / l[(j, j)] } else { 0.0 };
            }
        }
    }
    if dependents.is_empty() {
        Ok(l)
    } else {
        Err(dependents)
    }
}
