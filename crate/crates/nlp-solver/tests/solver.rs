//! Solver checks against analytic optima and an exhaustive active-set
//! enumeration oracle on small convex QPs.

use nalgebra::{DMatrix, DVector};
use nlp_solver::{
    fd_jacobian, kkt_report, qp_solve, solve, NlpProblem, Qp, QpOptions, SolveOptions,
    SolveStatus,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// min ||z||^2 s.t. z1 = 1.
struct Projection {
    n: usize,
}

impl NlpProblem for Projection {
    fn num_vars(&self) -> usize {
        self.n
    }
    fn num_constraints(&self) -> usize {
        1
    }
    fn constraint_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0]))
    }
    fn objective(&self, z: &DVector<f64>) -> f64 {
        z.dot(z)
    }
    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        out[0] = z[0];
    }
}

struct Rosenbrock;

impl NlpProblem for Rosenbrock {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_constraints(&self) -> usize {
        0
    }
    fn constraint_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::zeros(0), DVector::zeros(0))
    }
    fn objective(&self, z: &DVector<f64>) -> f64 {
        let (x, y) = (z[0], z[1]);
        (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
    }
    fn constraints(&self, _z: &DVector<f64>, _out: &mut DVector<f64>) {}
}

/// Convex QP posed as an NLP: min 1/2 z'Hz + g'z with box bounds and one
/// linear inequality.
struct BoxQp {
    h: DMatrix<f64>,
    g: DVector<f64>,
    lb: DVector<f64>,
    ub: DVector<f64>,
    a: DVector<f64>,
    b: f64,
}

impl NlpProblem for BoxQp {
    fn num_vars(&self) -> usize {
        self.g.len()
    }
    fn num_constraints(&self) -> usize {
        1
    }
    fn var_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (self.lb.clone(), self.ub.clone())
    }
    fn constraint_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_vec(vec![self.b]),
            DVector::from_vec(vec![f64::INFINITY]),
        )
    }
    fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.g.dot(z)
    }
    fn constraints(&self, z: &DVector<f64>, out: &mut DVector<f64>) {
        out[0] = self.a.dot(z);
    }
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * (0.5 + rng.random::<f64>())
}

/// Exhaustive KKT enumeration for box-bounded QPs with one inequality:
/// tries every active set, solves the equality KKT system and checks
/// feasibility plus multiplier signs.
fn enumeration_oracle(p: &BoxQp) -> DVector<f64> {
    let n = p.g.len();
    // Active-set encoding per variable: 0 free, 1 at lower, 2 at upper;
    // plus the inequality active or not.
    let mut best: Option<(f64, DVector<f64>)> = None;
    let combos = 3usize.pow(n as u32);
    for mask in 0..combos {
        for ineq_active in [false, true] {
            let mut kinds = Vec::with_capacity(n);
            let mut m = mask;
            for _ in 0..n {
                kinds.push(m % 3);
                m /= 3;
            }
            // Build KKT: minimize over free vars with fixed actives.
            let fixed: Vec<Option<f64>> = kinds
                .iter()
                .enumerate()
                .map(|(j, &k)| match k {
                    1 => Some(p.lb[j]),
                    2 => Some(p.ub[j]),
                    _ => None,
                })
                .collect();
            let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
            let nf = free.len();
            let rows = nf + usize::from(ineq_active);
            // Unknowns: free vars + inequality multiplier.
            let mut a = DMatrix::zeros(rows, rows);
            let mut rhs = DVector::zeros(rows);
            for (r, &jr) in free.iter().enumerate() {
                for (cix, &jc) in free.iter().enumerate() {
                    a[(r, cix)] = p.h[(jr, jc)];
                }
                if ineq_active {
                    a[(r, nf)] = -p.a[jr];
                }
                let mut s = p.g[jr];
                for j in 0..n {
                    if let Some(v) = fixed[j] {
                        s += p.h[(jr, j)] * v;
                    }
                }
                rhs[r] = -s;
            }
            if ineq_active {
                for (cix, &jc) in free.iter().enumerate() {
                    a[(nf, cix)] = p.a[jc];
                }
                let mut s = p.b;
                for j in 0..n {
                    if let Some(v) = fixed[j] {
                        s -= p.a[j] * v;
                    }
                }
                rhs[nf] = s;
            }
            let sol = if rows == 0 {
                DVector::zeros(0)
            } else {
                match a.lu().solve(&rhs) {
                    Some(s) => s,
                    None => continue,
                }
            };
            let mut z = DVector::zeros(n);
            for (k, &j) in free.iter().enumerate() {
                z[j] = sol[k];
            }
            for j in 0..n {
                if let Some(v) = fixed[j] {
                    z[j] = v;
                }
            }
            // Feasibility.
            let mut ok = true;
            for j in 0..n {
                ok &= z[j] >= p.lb[j] - 1e-9 && z[j] <= p.ub[j] + 1e-9;
            }
            ok &= p.a.dot(&z) >= p.b - 1e-9;
            if !ok {
                continue;
            }
            // Multiplier signs.
            let grad = &p.h * &z + &p.g;
            let lam_in = if ineq_active { sol[nf] } else { 0.0 };
            if lam_in < -1e-9 {
                continue;
            }
            let mut sign_ok = true;
            for j in 0..n {
                let mu = grad[j] - lam_in * p.a[j];
                match kinds[j] {
                    1 => sign_ok &= mu >= -1e-9,
                    2 => sign_ok &= mu <= 1e-9,
                    _ => {}
                }
            }
            if !sign_ok {
                continue;
            }
            let val = 0.5 * z.dot(&(&p.h * &z)) + p.g.dot(&z);
            if best.as_ref().map_or(true, |(bv, _)| val < *bv - 1e-12) {
                best = Some((val, z));
            }
        }
    }
    best.expect("oracle found no KKT point").1
}

#[test]
fn projection_problem_reaches_the_analytic_optimum() {
    let p = Projection { n: 6 };
    let z0 = DVector::from_element(6, 3.0);
    let sol = solve(&p, &z0, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.z[0] - 1.0).abs() < 1e-9);
    for j in 1..6 {
        assert!(sol.z[j].abs() < 1e-9);
    }
}

#[test]
fn rosenbrock_converges_to_the_global_minimum() {
    let sol = solve(
        &Rosenbrock,
        &DVector::from_vec(vec![-1.2, 1.0]),
        &SolveOptions::default(),
    )
    .unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    assert!((sol.z[0] - 1.0).abs() < 1e-6, "x = {}", sol.z[0]);
    assert!((sol.z[1] - 1.0).abs() < 1e-6, "y = {}", sol.z[1]);
}

#[test]
fn random_box_qps_match_the_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(271);
    for case in 0..30 {
        let n = rng.random_range(2..=5);
        let h = random_spd(n, &mut rng);
        let g = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let lb = DVector::from_fn(n, |_, _| rng.random_range(-1.5..-0.1));
        let ub = DVector::from_fn(n, |_, _| rng.random_range(0.1..1.5));
        let a = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let p = BoxQp {
            h,
            g,
            lb,
            ub,
            a,
            b: -0.25,
        };
        let oracle = enumeration_oracle(&p);
        let z0 = DVector::zeros(n);
        // Tight stop so the primal answer is comparable at 1e-8.
        let opts = SolveOptions {
            tol: 1e-10,
            feas_tol: 1e-11,
            ..SolveOptions::default()
        };
        let sol = solve(&p, &z0, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged, "case {case}");
        assert!(
            (&sol.z - &oracle).abs().max() < 1e-8,
            "case {case}: sqp {:?} oracle {:?}",
            sol.z.as_slice(),
            oracle.as_slice()
        );

        // The standalone QP entry point must agree as well.
        let a_in = DMatrix::from_fn(1, n, |_, j| p.a[j]);
        let b_in = DVector::from_vec(vec![p.b]);
        let (a_eq, b_eq) = (DMatrix::zeros(0, n), DVector::zeros(0));
        let qp = Qp {
            g: &p.g,
            a_eq: &a_eq,
            b_eq: &b_eq,
            a_in: &a_in,
            b_in: &b_in,
            lb: &p.lb,
            ub: &p.ub,
        };
        let qsol = qp_solve(&p.h, &qp, &QpOptions::default()).unwrap();
        assert!(
            (&qsol.x - &oracle).abs().max() < 1e-8,
            "case {case}: qp direct"
        );
    }
}

#[test]
fn converged_kkt_is_reproducible_from_multipliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 4;
    let p = BoxQp {
        h: random_spd(n, &mut rng),
        g: DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
        lb: DVector::from_element(n, -1.0),
        ub: DVector::from_element(n, 1.0),
        a: DVector::from_element(n, 1.0),
        b: 0.5,
    };
    let sol = solve(&p, &DVector::zeros(n), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Converged);
    let report = kkt_report(&p, &sol.z, &sol.lam_rows, &sol.lam_bounds);
    assert!(report.stationarity <= 1e-6, "stat {}", report.stationarity);
    assert!(report.violation <= 1e-8);
    assert!(report.complementarity <= 1e-6);
}

#[test]
fn merit_is_non_increasing_across_accepted_steps() {
    let p = Projection { n: 8 };
    let z0 = DVector::from_element(8, -4.0);
    let sol = solve(&p, &z0, &SolveOptions::default()).unwrap();
    for (pre, post) in &sol.merit_history {
        assert!(post <= &(pre + 1e-10 * (1.0 + pre.abs())), "{pre} -> {post}");
    }
}

#[test]
fn identical_inputs_give_bit_identical_iterates() {
    let run = || {
        let p = BoxQp {
            h: DMatrix::identity(3, 3),
            g: DVector::from_vec(vec![-1.0, 0.3, 0.2]),
            lb: DVector::from_element(3, -0.8),
            ub: DVector::from_element(3, 0.8),
            a: DVector::from_vec(vec![1.0, 1.0, 0.0]),
            b: -0.1,
        };
        solve(&p, &DVector::zeros(3), &SolveOptions::default()).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.z.as_slice(), b.z.as_slice());
    assert_eq!(a.lam_rows.as_slice(), b.lam_rows.as_slice());
}

#[test]
fn fd_jacobian_matches_dual_number_derivatives() {
    // Forward-mode dual numbers on a smooth nonlinear map.
    use rbd_like_dual::eval_with_duals;
    let f = |z: &DVector<f64>, out: &mut DVector<f64>| {
        out[0] = z[0].sin() * z[1] + z[2] * z[2];
        out[1] = z[0] * z[1] * z[2];
    };
    let z = DVector::from_vec(vec![0.4, -1.3, 0.7]);
    let jac_fd = fd_jacobian(&f, &z, 2);
    let jac_dual = eval_with_duals(&z);
    assert!((jac_fd - jac_dual).abs().max() < 1e-6);
}

/// Tiny hand-rolled dual-number evaluation of the same test map, giving an
/// independent derivative route for the cross-check above.
mod rbd_like_dual {
    use nalgebra::{DMatrix, DVector};

    #[derive(Clone, Copy)]
    struct D {
        re: f64,
        du: f64,
    }

    impl D {
        fn new(re: f64, du: f64) -> Self {
            Self { re, du }
        }
        fn sin(self) -> Self {
            D::new(self.re.sin(), self.du * self.re.cos())
        }
        fn mul(self, o: D) -> Self {
            D::new(self.re * o.re, self.re * o.du + self.du * o.re)
        }
        fn add(self, o: D) -> Self {
            D::new(self.re + o.re, self.du + o.du)
        }
    }

    pub fn eval_with_duals(z: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(2, 3);
        for j in 0..3 {
            let v: Vec<D> = (0..3)
                .map(|k| D::new(z[k], if k == j { 1.0 } else { 0.0 }))
                .collect();
            let f0 = v[0].sin().mul(v[1]).add(v[2].mul(v[2]));
            let f1 = v[0].mul(v[1]).mul(v[2]);
            jac[(0, j)] = f0.du;
            jac[(1, j)] = f1.du;
        }
        jac
    }
}
