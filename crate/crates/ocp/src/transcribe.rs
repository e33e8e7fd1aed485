use crate::constraints::{friction_pyramid, tangent_basis};
use crate::problem::{CostTerm, OcpError, Problem};
use nalgebra::{DMatrix, DVector, Vector3};
use rbd_core::{
    integrate_step, integrate_step_generic, inverse_dynamics_split, Control, Dual, Model, State,
    StateLayout,
};
use std::io::Write;

/// Continuity defect `s(x_k, u_k) - x_{k+1}` with quaternions differenced
/// componentwise (both sides carry unit-norm constraints).
pub fn continuity_defect(
    model: &Model,
    x_k: &State,
    u_k: &Control,
    x_next: &State,
) -> Result<DVector<f64>, OcpError> {
    let dt = u_k
        .dt
        .ok_or_else(|| OcpError::Invalid("control needs a step size".into()))?;
    let pred = integrate_step(model, x_k, u_k, dt)?;
    let nq = model.nq();
    let nv = model.nv();
    let mut out = DVector::zeros(nq + nv);
    for i in 0..nq {
        out[i] = pred.q[i] - x_next.q[i];
    }
    for i in 0..nv {
        out[nq + i] = pred.nu[i] - x_next.nu[i];
    }
    Ok(out)
}

/// One constraint block of the transcription, with the decision-vector
/// ranges it depends on (the sparsity hints used for derivative assembly).
#[derive(Debug, Clone)]
pub enum BlockKind {
    /// `s(x_k, u_k) - x_{k+1} = 0`.
    Continuity { k: usize },
    /// `|rho_k|^2 - 1 = 0`.
    QuatNorm { k: usize },
    /// Underactuated rows (= 0) stacked over torque rows (boxed).
    Dynamics { k: usize },
    /// `n·p_c(q_k) + d = 0`.
    Surface { contact: usize, node: usize, surface: usize },
    /// `J_c(q_k) nu_k = 0`.
    NoSlip { contact: usize, node: usize },
    /// `p_c(q_{k+1}) - p_c(q_k) = 0` across a stance interval.
    StanceAnchor { contact: usize, node: usize },
    /// Linearized friction rows on the interval force, `>= 0`.
    Friction { contact: usize, interval: usize, surface: usize },
    /// `p_c(q_k)` inside the contact workspace box.
    Workspace { contact: usize, node: usize },
    /// `x_0 - x_{N_s} = 0`.
    Periodicity,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub kind: BlockKind,
    pub row_start: usize,
    pub rows: usize,
    /// Column ranges of z this block depends on.
    pub cols: Vec<std::ops::Range<usize>>,
}

/// Finite-dimensional image of a [`Problem`] under Direct Multiple
/// Shooting. Implements [`nlp_solver::NlpProblem`].
pub struct TranscribedNlp {
    pub problem: Problem,
    pub blocks: Vec<Block>,
    dim_x: usize,
    dim_u: usize,
    n_z: usize,
    n_rows: usize,
    cl: DVector<f64>,
    cu: DVector<f64>,
    lb: DVector<f64>,
    ub: DVector<f64>,
    layout: StateLayout,
}

/// Build the DMS transcription of a validated problem.
pub fn transcribe(problem: Problem) -> Result<TranscribedNlp, OcpError> {
    problem.validate()?;
    let model = &problem.model;
    let n_s = problem.n_intervals;
    let nq = model.nq();
    let nv = model.nv();
    let n_c = model.contacts().len();
    let n_act = model.n_actuated();
    let dim_x = nq + nv;
    let dim_u = nv + 3 * n_c + 1;
    let n_z = (n_s + 1) * dim_x + n_s * dim_u;
    let x_off = |k: usize| k * dim_x;
    let u_off = |k: usize| (n_s + 1) * dim_x + k * dim_u;

    // ----- constraint blocks -----
    let mut blocks = Vec::new();
    let mut cl = Vec::new();
    let mut cu = Vec::new();
    let mut row = 0usize;
    let push = |blocks: &mut Vec<Block>,
                    cl: &mut Vec<f64>,
                    cu: &mut Vec<f64>,
                    row: &mut usize,
                    kind: BlockKind,
                    rows: usize,
                    cols: Vec<std::ops::Range<usize>>,
                    lo: &[f64],
                    hi: &[f64]| {
        blocks.push(Block {
            kind,
            row_start: *row,
            rows,
            cols,
        });
        cl.extend_from_slice(lo);
        cu.extend_from_slice(hi);
        *row += rows;
    };

    for k in 0..n_s {
        // Continuity: depends on x_k, the accelerations and dt of u_k, and
        // (analytically, -I) on x_{k+1}.
        push(
            &mut blocks,
            &mut cl,
            &mut cu,
            &mut row,
            BlockKind::Continuity { k },
            dim_x,
            vec![
                x_off(k)..x_off(k) + dim_x,
                u_off(k)..u_off(k) + nv,
                u_off(k) + dim_u - 1..u_off(k) + dim_u,
                x_off(k + 1)..x_off(k + 1) + dim_x,
            ],
            &vec![0.0; dim_x],
            &vec![0.0; dim_x],
        );
    }
    if model.has_floating_base() {
        for k in 0..=n_s {
            push(
                &mut blocks,
                &mut cl,
                &mut cu,
                &mut row,
                BlockKind::QuatNorm { k },
                1,
                vec![x_off(k) + 3..x_off(k) + 7],
                &[0.0],
                &[0.0],
            );
        }
    }
    for k in 0..n_s {
        let rows = if model.has_floating_base() { 6 + n_act } else { n_act };
        let mut lo = Vec::with_capacity(rows);
        let mut hi = Vec::with_capacity(rows);
        if model.has_floating_base() {
            lo.extend_from_slice(&[0.0; 6]);
            hi.extend_from_slice(&[0.0; 6]);
        }
        for j in 0..n_act {
            lo.push(problem.bounds.tau_lower[j]);
            hi.push(problem.bounds.tau_upper[j]);
        }
        push(
            &mut blocks,
            &mut cl,
            &mut cu,
            &mut row,
            BlockKind::Dynamics { k },
            rows,
            vec![
                x_off(k)..x_off(k) + dim_x,
                u_off(k)..u_off(k) + nv + 3 * n_c,
            ],
            &lo,
            &hi,
        );
    }
    for c in 0..n_c {
        let nodes = problem.schedule.active_nodes(c);
        for &(k, s) in &nodes {
            push(
                &mut blocks,
                &mut cl,
                &mut cu,
                &mut row,
                BlockKind::Surface { contact: c, node: k, surface: s },
                1,
                vec![x_off(k)..x_off(k) + nq],
                &[0.0],
                &[0.0],
            );
            push(
                &mut blocks,
                &mut cl,
                &mut cu,
                &mut row,
                BlockKind::NoSlip { contact: c, node: k },
                3,
                vec![x_off(k)..x_off(k) + dim_x],
                &[0.0; 3],
                &[0.0; 3],
            );
        }
        // Anchor consecutive active nodes on the same surface so stance
        // feet stay put at position level, not just in velocity.
        for w in nodes.windows(2) {
            let ((k, s), (k2, s2)) = (w[0], w[1]);
            if k2 == k + 1 && s == s2 {
                push(
                    &mut blocks,
                    &mut cl,
                    &mut cu,
                    &mut row,
                    BlockKind::StanceAnchor { contact: c, node: k },
                    3,
                    vec![x_off(k)..x_off(k) + nq, x_off(k + 1)..x_off(k + 1) + nq],
                    &[0.0; 3],
                    &[0.0; 3],
                );
            }
        }
        for (k, slot) in problem.schedule.active[c].iter().enumerate() {
            if let Some(s) = slot {
                let f0 = u_off(k) + nv + 3 * c;
                push(
                    &mut blocks,
                    &mut cl,
                    &mut cu,
                    &mut row,
                    BlockKind::Friction { contact: c, interval: k, surface: *s },
                    5,
                    vec![f0..f0 + 3],
                    &[0.0; 5],
                    &[f64::INFINITY; 5],
                );
            }
        }
        for k in 0..=n_s {
            let (lo, hi) = &problem.bounds.workspace[c];
            push(
                &mut blocks,
                &mut cl,
                &mut cu,
                &mut row,
                BlockKind::Workspace { contact: c, node: k },
                3,
                vec![x_off(k)..x_off(k) + nq],
                &[lo.x, lo.y, lo.z],
                &[hi.x, hi.y, hi.z],
            );
        }
    }
    if problem.periodic {
        push(
            &mut blocks,
            &mut cl,
            &mut cu,
            &mut row,
            BlockKind::Periodicity,
            dim_x,
            vec![x_off(0)..x_off(0) + dim_x, x_off(n_s)..x_off(n_s) + dim_x],
            &vec![0.0; dim_x],
            &vec![0.0; dim_x],
        );
    }
    let n_rows = row;

    // ----- variable bounds -----
    let mut lb = DVector::from_element(n_z, f64::NEG_INFINITY);
    let mut ub = DVector::from_element(n_z, f64::INFINITY);
    if !problem.periodic {
        for i in 0..dim_x {
            let v = if i < nq {
                problem.x_init.q[i]
            } else {
                problem.x_init.nu[i - nq]
            };
            lb[x_off(0) + i] = v;
            ub[x_off(0) + i] = v;
        }
    }
    if let Some(goal) = &problem.x_goal {
        for i in 0..dim_x {
            let v = if i < nq { goal.q[i] } else { goal.nu[i - nq] };
            lb[x_off(n_s) + i] = v;
            ub[x_off(n_s) + i] = v;
        }
    }
    for k in 0..=n_s {
        if let (Some(ql), Some(qu)) = (&problem.bounds.q_lower, &problem.bounds.q_upper) {
            for i in 0..nq {
                lb[x_off(k) + i] = lb[x_off(k) + i].max(ql[i]);
                ub[x_off(k) + i] = ub[x_off(k) + i].min(qu[i]);
            }
        }
        if let (Some(nl), Some(nu_b)) = (&problem.bounds.nu_lower, &problem.bounds.nu_upper) {
            for i in 0..nv {
                lb[x_off(k) + nq + i] = lb[x_off(k) + nq + i].max(nl[i]);
                ub[x_off(k) + nq + i] = ub[x_off(k) + nq + i].min(nu_b[i]);
            }
        }
    }
    for k in 0..n_s {
        // Flight-interval forces are pinned to zero by equal bounds.
        for c in 0..n_c {
            if problem.schedule.active[c][k].is_none() {
                for i in 0..3 {
                    lb[u_off(k) + nv + 3 * c + i] = 0.0;
                    ub[u_off(k) + nv + 3 * c + i] = 0.0;
                }
            }
        }
        lb[u_off(k) + dim_u - 1] = problem.bounds.dt.0;
        ub[u_off(k) + dim_u - 1] = problem.bounds.dt.1;
    }

    let layout = StateLayout::of(model);
    Ok(TranscribedNlp {
        problem,
        blocks,
        dim_x,
        dim_u,
        n_z,
        n_rows,
        cl: DVector::from_vec(cl),
        cu: DVector::from_vec(cu),
        lb,
        ub,
        layout,
    })
}

impl TranscribedNlp {
    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_u(&self) -> usize {
        self.dim_u
    }

    pub fn num_vars(&self) -> usize {
        self.n_z
    }

    pub fn x_offset(&self, k: usize) -> usize {
        k * self.dim_x
    }

    pub fn u_offset(&self, k: usize) -> usize {
        (self.problem.n_intervals + 1) * self.dim_x + k * self.dim_u
    }

    /// Standing start: states held at `x_init`, zero accelerations, step
    /// sizes at the midpoint of their bounds, and the total weight shared
    /// over the active contacts along their surface normals. Exactly
    /// feasible for statics and cheap to build.
    pub fn default_initial_guess(&self) -> DVector<f64> {
        let model = &self.problem.model;
        let n_s = self.problem.n_intervals;
        let states = vec![self.problem.x_init.clone(); n_s + 1];
        let weight = model.total_mass() * model.gravity().norm();
        let controls: Vec<Control> = (0..n_s)
            .map(|k| {
                let mut u = Control::zero(model);
                u.dt = Some(0.5 * (self.problem.bounds.dt.0 + self.problem.bounds.dt.1));
                let active: Vec<usize> = (0..model.contacts().len())
                    .filter(|&c| self.problem.schedule.active[c][k].is_some())
                    .collect();
                if !active.is_empty() {
                    let share = weight / active.len() as f64;
                    for &c in &active {
                        let s = self.problem.schedule.active[c][k].unwrap();
                        u.forces[c] = share * self.problem.surfaces[s].normal;
                    }
                }
                u
            })
            .collect();
        self.pack(&states, &controls)
    }

    /// Pack node states and interval controls into a decision vector.
    pub fn pack(&self, states: &[State], controls: &[Control]) -> DVector<f64> {
        let nq = self.problem.model.nq();
        let nv = self.problem.model.nv();
        let n_c = self.problem.model.contacts().len();
        let mut z = DVector::zeros(self.n_z);
        for (k, x) in states.iter().enumerate() {
            let off = self.x_offset(k);
            for i in 0..nq {
                z[off + i] = x.q[i];
            }
            for i in 0..nv {
                z[off + nq + i] = x.nu[i];
            }
        }
        for (k, u) in controls.iter().enumerate() {
            let off = self.u_offset(k);
            for i in 0..nv {
                z[off + i] = u.nu_dot[i];
            }
            for c in 0..n_c {
                for i in 0..3 {
                    z[off + nv + 3 * c + i] = u.forces[c][i];
                }
            }
            z[off + self.dim_u - 1] = u.dt.unwrap_or(self.problem.bounds.dt.0);
        }
        z
    }

    pub fn unpack_state(&self, z: &DVector<f64>, k: usize) -> State {
        let nq = self.problem.model.nq();
        let nv = self.problem.model.nv();
        let off = self.x_offset(k);
        State::new(
            DVector::from_fn(nq, |i, _| z[off + i]),
            DVector::from_fn(nv, |i, _| z[off + nq + i]),
        )
    }

    pub fn unpack_control(&self, z: &DVector<f64>, k: usize) -> Control {
        let nv = self.problem.model.nv();
        let n_c = self.problem.model.contacts().len();
        let off = self.u_offset(k);
        Control {
            nu_dot: DVector::from_fn(nv, |i, _| z[off + i]),
            forces: (0..n_c)
                .map(|c| {
                    Vector3::new(
                        z[off + nv + 3 * c],
                        z[off + nv + 3 * c + 1],
                        z[off + nv + 3 * c + 2],
                    )
                })
                .collect(),
            dt: Some(z[off + self.dim_u - 1]),
        }
    }

    fn contact_position(&self, z: &DVector<f64>, contact: usize, node: usize) -> Vector3<f64> {
        let x = self.unpack_state(z, node);
        rbd_core::fk_contact(&self.problem.model, &x.q, contact)
            .expect("contact ids validated at transcription")
    }

    fn eval_block(&self, kind: &BlockKind, z: &DVector<f64>, out: &mut [f64]) {
        let model = &self.problem.model;
        let nq = model.nq();
        let nv = model.nv();
        match kind {
            BlockKind::Continuity { k } => {
                let off = self.x_offset(*k);
                let uoff = self.u_offset(*k);
                let q: Vec<f64> = (0..nq).map(|i| z[off + i]).collect();
                let nu: Vec<f64> = (0..nv).map(|i| z[off + nq + i]).collect();
                let nudot: Vec<f64> = (0..nv).map(|i| z[uoff + i]).collect();
                let dt = z[uoff + self.dim_u - 1];
                let (q1, nu1) = integrate_step_generic(&self.layout, &q, &nu, &nudot, dt);
                let noff = self.x_offset(k + 1);
                for i in 0..nq {
                    out[i] = q1[i] - z[noff + i];
                }
                for i in 0..nv {
                    out[nq + i] = nu1[i] - z[noff + nq + i];
                }
            }
            BlockKind::QuatNorm { k } => {
                let off = self.x_offset(*k) + 3;
                out[0] = z[off] * z[off]
                    + z[off + 1] * z[off + 1]
                    + z[off + 2] * z[off + 2]
                    + z[off + 3] * z[off + 3]
                    - 1.0;
            }
            BlockKind::Dynamics { k } => {
                let x = self.unpack_state(z, *k);
                let u = self.unpack_control(z, *k);
                let (tau_u, tau_a) =
                    inverse_dynamics_split(model, &x.q, &x.nu, &u.nu_dot, &u.forces)
                        .expect("dimensions fixed by transcription");
                let n_u = tau_u.len();
                for i in 0..n_u {
                    out[i] = tau_u[i];
                }
                for i in 0..tau_a.len() {
                    out[n_u + i] = tau_a[i];
                }
            }
            BlockKind::Surface { contact, node, surface } => {
                let p = self.contact_position(z, *contact, *node);
                let s = &self.problem.surfaces[*surface];
                out[0] = crate::constraints::surface_residual(&p, s);
            }
            BlockKind::NoSlip { contact, node } => {
                let x = self.unpack_state(z, *node);
                let jac = rbd_core::contact_jacobian(model, &x.q, *contact)
                    .expect("contact ids validated");
                let v = jac * &x.nu;
                out[..3].copy_from_slice(v.as_slice());
            }
            BlockKind::StanceAnchor { contact, node } => {
                let p0 = self.contact_position(z, *contact, *node);
                let p1 = self.contact_position(z, *contact, *node + 1);
                for i in 0..3 {
                    out[i] = p1[i] - p0[i];
                }
            }
            BlockKind::Friction { contact, interval, surface } => {
                let u = self.unpack_control(z, *interval);
                let r = friction_pyramid(&u.forces[*contact], &self.problem.surfaces[*surface]);
                out[..5].copy_from_slice(&r);
            }
            BlockKind::Workspace { contact, node } => {
                let p = self.contact_position(z, *contact, *node);
                for i in 0..3 {
                    out[i] = p[i];
                }
            }
            BlockKind::Periodicity => {
                let o0 = self.x_offset(0);
                let on = self.x_offset(self.problem.n_intervals);
                for i in 0..self.dim_x {
                    out[i] = z[o0 + i] - z[on + i];
                }
            }
        }
    }

    /// Analytic or dual-number Jacobian of one block written into the dense
    /// Jacobian; finite differences over the block's own columns otherwise.
    fn jac_block(&self, block: &Block, z: &DVector<f64>, jac: &mut DMatrix<f64>) {
        let model = &self.problem.model;
        let nq = model.nq();
        let nv = model.nv();
        let r0 = block.row_start;
        match &block.kind {
            BlockKind::Continuity { k } => {
                // Dual-number sweep over (x_k, nu_dot_k, dt_k).
                let off = self.x_offset(*k);
                let uoff = self.u_offset(*k);
                let q: Vec<f64> = (0..nq).map(|i| z[off + i]).collect();
                let nu: Vec<f64> = (0..nv).map(|i| z[off + nq + i]).collect();
                let nudot: Vec<f64> = (0..nv).map(|i| z[uoff + i]).collect();
                let dt = z[uoff + self.dim_u - 1];
                let n_inputs = nq + nv + nv + 1;
                for col in 0..n_inputs {
                    let seed = |v: f64, idx: usize| Dual::new(v, if idx == col { 1.0 } else { 0.0 });
                    let qd: Vec<Dual> = q.iter().enumerate().map(|(i, &v)| seed(v, i)).collect();
                    let nud: Vec<Dual> =
                        nu.iter().enumerate().map(|(i, &v)| seed(v, nq + i)).collect();
                    let ndd: Vec<Dual> = nudot
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| seed(v, nq + nv + i))
                        .collect();
                    let dtd = seed(dt, nq + nv + nv);
                    let (q1, nu1) = integrate_step_generic(&self.layout, &qd, &nud, &ndd, dtd);
                    let zcol = if col < nq + nv {
                        off + col
                    } else if col < nq + nv + nv {
                        uoff + (col - nq - nv)
                    } else {
                        uoff + self.dim_u - 1
                    };
                    for i in 0..nq {
                        jac[(r0 + i, zcol)] = q1[i].du;
                    }
                    for i in 0..nv {
                        jac[(r0 + nq + i, zcol)] = nu1[i].du;
                    }
                }
                let noff = self.x_offset(k + 1);
                for i in 0..self.dim_x {
                    jac[(r0 + i, noff + i)] = -1.0;
                }
            }
            BlockKind::QuatNorm { k } => {
                let off = self.x_offset(*k) + 3;
                for i in 0..4 {
                    jac[(r0, off + i)] = 2.0 * z[off + i];
                }
            }
            BlockKind::Friction { contact, interval, surface } => {
                let s = &self.problem.surfaces[*surface];
                let (t1, t2) = tangent_basis(&s.normal);
                let mu = s.friction / std::f64::consts::SQRT_2;
                let f0 = self.u_offset(*interval) + nv + 3 * contact;
                for i in 0..3 {
                    jac[(r0, f0 + i)] = s.normal[i];
                    jac[(r0 + 1, f0 + i)] = mu * s.normal[i] - t1[i];
                    jac[(r0 + 2, f0 + i)] = mu * s.normal[i] + t1[i];
                    jac[(r0 + 3, f0 + i)] = mu * s.normal[i] - t2[i];
                    jac[(r0 + 4, f0 + i)] = mu * s.normal[i] + t2[i];
                }
            }
            BlockKind::Periodicity => {
                let o0 = self.x_offset(0);
                let on = self.x_offset(self.problem.n_intervals);
                for i in 0..self.dim_x {
                    jac[(r0 + i, o0 + i)] = 1.0;
                    jac[(r0 + i, on + i)] = -1.0;
                }
            }
            _ => {
                // Stage-local central differences over the block's columns.
                let mut zp = z.clone();
                let mut fp = vec![0.0; block.rows];
                let mut fm = vec![0.0; block.rows];
                for range in &block.cols {
                    for j in range.clone() {
                        let h = 1e-6 * (1.0 + z[j].abs());
                        zp[j] = z[j] + h;
                        self.eval_block(&block.kind, &zp, &mut fp);
                        zp[j] = z[j] - h;
                        self.eval_block(&block.kind, &zp, &mut fm);
                        zp[j] = z[j];
                        for i in 0..block.rows {
                            jac[(r0 + i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                        }
                    }
                }
            }
        }
    }

    /// Worst defects per shooting node, for debugging dumps.
    pub fn defect_report(&self, z: &DVector<f64>) -> Vec<NodeDefect> {
        let mut rows = DVector::zeros(self.n_rows);
        self.eval_rows(z, &mut rows);
        let mut per_node = vec![
            NodeDefect {
                node: 0,
                continuity: 0.0,
                quat_norm: 0.0,
                underactuation: 0.0,
                surface: 0.0,
                no_slip: 0.0,
            };
            self.problem.n_intervals + 1
        ];
        for (i, d) in per_node.iter_mut().enumerate() {
            d.node = i;
        }
        for b in &self.blocks {
            let vals = rows.rows(b.row_start, b.rows);
            let with_bounds_violation = |lo: &DVector<f64>, hi: &DVector<f64>| -> f64 {
                let mut m = 0.0f64;
                for i in 0..b.rows {
                    let v = vals[i];
                    m = m
                        .max(lo[b.row_start + i] - v)
                        .max(v - hi[b.row_start + i]);
                }
                m.max(0.0)
            };
            let viol = with_bounds_violation(&self.cl, &self.cu);
            match b.kind {
                BlockKind::Continuity { k } => {
                    per_node[k + 1].continuity = per_node[k + 1].continuity.max(viol)
                }
                BlockKind::QuatNorm { k } => per_node[k].quat_norm = viol,
                BlockKind::Dynamics { k } => {
                    per_node[k].underactuation = per_node[k].underactuation.max(viol)
                }
                BlockKind::Surface { node, .. } => {
                    per_node[node].surface = per_node[node].surface.max(viol)
                }
                BlockKind::NoSlip { node, .. } => {
                    per_node[node].no_slip = per_node[node].no_slip.max(viol)
                }
                _ => {}
            }
        }
        per_node
    }

    /// Debugging dump: one CSV row of worst defects per node.
    pub fn write_defect_csv(&self, z: &DVector<f64>, path: &std::path::Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "node,continuity,quat_norm,underactuation,surface,no_slip")?;
        for d in self.defect_report(z) {
            writeln!(
                f,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                d.node, d.continuity, d.quat_norm, d.underactuation, d.surface, d.no_slip
            )?;
        }
        Ok(())
    }

    fn eval_rows(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        let mut buf = vec![0.0; self.dim_x.max(8)];
        for b in &self.blocks {
            self.eval_block(&b.kind, z, &mut buf[..b.rows]);
            for i in 0..b.rows {
                out[b.row_start + i] = buf[i];
            }
        }
    }

}

/// Worst constraint violations at one shooting node.
#[derive(Debug, Clone, Copy)]
pub struct NodeDefect {
    pub node: usize,
    pub continuity: f64,
    pub quat_norm: f64,
    pub underactuation: f64,
    pub surface: f64,
    pub no_slip: f64,
}

impl nlp_solver::NlpProblem for TranscribedNlp {
    fn num_vars(&self) -> usize {
        self.n_z
    }

    fn num_constraints(&self) -> usize {
        self.n_rows
    }

    fn var_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (self.lb.clone(), self.ub.clone())
    }

    fn constraint_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (self.cl.clone(), self.cu.clone())
    }

    fn objective(&self, z: &DVector<f64>) -> f64 {
        let mut f = 0.0;
        for term in &self.problem.cost {
            match term {
                CostTerm::StateQuad { nodes, idx, target, weight } => {
                    for &k in nodes {
                        let off = self.x_offset(k);
                        for (i, &j) in idx.iter().enumerate() {
                            let d = z[off + j] - target[i];
                            f += weight * d * d;
                        }
                    }
                }
                CostTerm::ControlDiffQuad { first, last, idx, weight } => {
                    for k in *first..=*last {
                        let o0 = self.u_offset(k);
                        let o1 = self.u_offset(k + 1);
                        for &j in idx {
                            let d = z[o1 + j] - z[o0 + j];
                            f += weight * d * d;
                        }
                    }
                }
                CostTerm::AngularMomentumAlong { direction, weight } => {
                    for k in 0..=self.problem.n_intervals {
                        let x = self.unpack_state(z, k);
                        let h = centroidal::momentum_about(
                            &self.problem.model,
                            &x.q,
                            &x.nu,
                            &Vector3::zeros(),
                        )
                        .expect("momentum of validated model");
                        let h_ang = Vector3::new(h[3], h[4], h[5]);
                        f -= weight * h_ang.dot(direction);
                    }
                }
            }
        }
        f
    }

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n_z);
        for term in &self.problem.cost {
            match term {
                CostTerm::StateQuad { nodes, idx, target, weight } => {
                    for &k in nodes {
                        let off = self.x_offset(k);
                        for (i, &j) in idx.iter().enumerate() {
                            g[off + j] += 2.0 * weight * (z[off + j] - target[i]);
                        }
                    }
                }
                CostTerm::ControlDiffQuad { first, last, idx, weight } => {
                    for k in *first..=*last {
                        let o0 = self.u_offset(k);
                        let o1 = self.u_offset(k + 1);
                        for &j in idx {
                            let d = z[o1 + j] - z[o0 + j];
                            g[o1 + j] += 2.0 * weight * d;
                            g[o0 + j] -= 2.0 * weight * d;
                        }
                    }
                }
                CostTerm::AngularMomentumAlong { direction, weight } => {
                    // Central differences over each node's state block.
                    let dim_x = self.dim_x;
                    let mut zp = z.clone();
                    for k in 0..=self.problem.n_intervals {
                        let off = self.x_offset(k);
                        for j in off..off + dim_x {
                            let h = 1e-6 * (1.0 + z[j].abs());
                            zp[j] = z[j] + h;
                            let fp = angmom_term(self, &zp, k, direction);
                            zp[j] = z[j] - h;
                            let fm = angmom_term(self, &zp, k, direction);
                            zp[j] = z[j];
                            g[j] -= weight * (fp - fm) / (2.0 * h);
                        }
                    }
                }
            }
        }
        g
    }

    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        self.eval_rows(z, out);
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.n_rows, self.n_z);
        for b in &self.blocks {
            self.jac_block(b, z, &mut jac);
        }
        jac
    }

    fn var_scales(&self) -> DVector<f64> {
        let mut d = DVector::from_element(self.n_z, 1.0);
        let nv = self.problem.model.nv();
        let n_c = self.problem.model.contacts().len();
        let force_scale = self.problem.model.total_mass() * self.problem.model.gravity().norm();
        for k in 0..self.problem.n_intervals {
            let off = self.u_offset(k);
            for c in 0..n_c {
                for i in 0..3 {
                    d[off + nv + 3 * c + i] = force_scale.max(1.0);
                }
            }
            d[off + self.dim_u - 1] = self.problem.bounds.dt.1;
        }
        d
    }

    fn objective_hessian(&self) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.n_z, self.n_z);
        for term in &self.problem.cost {
            match term {
                CostTerm::StateQuad { nodes, idx, weight, .. } => {
                    for &k in nodes {
                        let off = self.x_offset(k);
                        for &j in idx {
                            h[(off + j, off + j)] += 2.0 * weight;
                        }
                    }
                }
                CostTerm::ControlDiffQuad { first, last, idx, weight } => {
                    for k in *first..=*last {
                        let o0 = self.u_offset(k);
                        let o1 = self.u_offset(k + 1);
                        for &j in idx {
                            h[(o0 + j, o0 + j)] += 2.0 * weight;
                            h[(o1 + j, o1 + j)] += 2.0 * weight;
                            h[(o0 + j, o1 + j)] -= 2.0 * weight;
                            h[(o1 + j, o0 + j)] -= 2.0 * weight;
                        }
                    }
                }
                CostTerm::AngularMomentumAlong { .. } => {}
            }
        }
        Some(h)
    }
}

fn angmom_term(nlp: &TranscribedNlp, z: &DVector<f64>, k: usize, dir: &Vector3<f64>) -> f64 {
    let x = nlp.unpack_state(z, k);
    let h = centroidal::momentum_about(&nlp.problem.model, &x.q, &x.nu, &Vector3::zeros())
        .expect("momentum of validated model");
    Vector3::new(h[3], h[4], h[5]).dot(dir)
}
