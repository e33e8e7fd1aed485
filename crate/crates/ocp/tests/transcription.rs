//! Transcription checks: layout arithmetic, defect consistency with the
//! integrator, derivative cross-validation and interpolation contracts.

use nalgebra::{DMatrix, DVector, Vector3};
use nlp_solver::{fd_jacobian, NlpProblem};
use ocp::{
    continuity_defect, friction_cone_check, friction_pyramid, interpolate_trajectory, transcribe,
    Bounds, ContactSchedule, CostTerm, Problem, Surface, Trajectory,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rbd_core::{integrate_step, Control, State};
use template_model::{build_centaur_template, home_state, TemplateParams};

fn ground() -> Surface {
    Surface {
        normal: Vector3::z(),
        offset: 0.0,
        friction: 0.5,
        force_threshold: 10.0,
    }
}

/// Stance-only problem on the full template with `n_s` intervals.
fn stance_problem(n_s: usize) -> Problem {
    let params = TemplateParams::default();
    let model = build_centaur_template(&params).unwrap();
    let x_init = home_state(&model, &params);
    let n_act = model.n_actuated();
    let feet: Vec<Vector3<f64>> = (0..4)
        .map(|c| rbd_core::fk_contact(&model, &x_init.q, c).unwrap())
        .collect();
    Problem {
        schedule: ContactSchedule {
            active: vec![vec![Some(0); n_s]; 4],
            take_off: n_s,
            landing: n_s,
        },
        surfaces: vec![ground()],
        x_init,
        x_goal: None,
        periodic: false,
        bounds: Bounds {
            tau_lower: DVector::from_element(n_act, -500.0),
            tau_upper: DVector::from_element(n_act, 500.0),
            dt: (0.03, 0.25),
            workspace: feet
                .iter()
                .map(|p| {
                    (
                        p + Vector3::new(-0.4, -0.4, -0.05),
                        p + Vector3::new(0.4, 0.4, 0.8),
                    )
                })
                .collect(),
            q_lower: None,
            q_upper: None,
            nu_lower: None,
            nu_upper: None,
        },
        cost: vec![CostTerm::StateQuad {
            nodes: (0..=n_s).collect(),
            idx: (model.nq()..model.nq() + model.nv()).collect(),
            target: vec![0.0; model.nv()],
            weight: 1.0,
        }],
        n_intervals: n_s,
        model,
    }
}

#[test]
fn decision_variable_count_matches_the_layout_arithmetic() {
    let nlp = transcribe(stance_problem(30)).unwrap();
    assert_eq!(nlp.dim_x(), 37);
    assert_eq!(nlp.dim_u(), 31);
    assert_eq!(nlp.num_vars(), 31 * 37 + 30 * 31);
}

#[test]
fn inactive_contacts_pin_force_variables_to_zero() {
    let mut p = stance_problem(4);
    // Flight on intervals 1 and 2 for every contact.
    for c in 0..4 {
        p.schedule.active[c][1] = None;
        p.schedule.active[c][2] = None;
    }
    let nlp = transcribe(p).unwrap();
    let (lb, ub) = nlp.var_bounds();
    let nv = 18;
    for k in [1usize, 2] {
        let off = nlp.u_offset(k);
        for i in 0..12 {
            assert_eq!(lb[off + nv + i], 0.0);
            assert_eq!(ub[off + nv + i], 0.0);
        }
    }
    // Stance intervals stay free.
    let off = nlp.u_offset(0);
    assert!(lb[off + nv].is_infinite());
}

#[test]
fn defects_vanish_along_an_integrated_trajectory() {
    let p = stance_problem(5);
    let model = p.model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut states = vec![p.x_init.clone()];
    let mut controls = Vec::new();
    for _ in 0..5 {
        let mut u = Control::zero(&model);
        u.nu_dot = DVector::from_fn(model.nv(), |_, _| rng.random_range(-0.5..0.5));
        u.dt = Some(0.1);
        u.forces = (0..4)
            .map(|_| Vector3::new(0.0, 0.0, rng.random_range(50.0..300.0)))
            .collect();
        let next = integrate_step(&model, states.last().unwrap(), &u, 0.1).unwrap();
        states.push(next);
        controls.push(u);
    }
    let nlp = transcribe(p).unwrap();
    let z = nlp.pack(&states, &controls);
    let mut c = DVector::zeros(nlp.num_constraints());
    nlp.constraints(&z, &mut c);
    // Continuity rows are the first 5 * 37.
    let max_defect = c.rows(0, 5 * 37).abs().max();
    assert!(max_defect < 1e-10, "max continuity defect {max_defect}");
}

#[test]
fn continuity_defect_is_zero_on_the_integrator_image_and_linear_in_shift() {
    let p = stance_problem(3);
    let model = &p.model;
    let x = p.x_init.clone();
    let mut u = Control::zero(model);
    u.nu_dot = DVector::from_element(model.nv(), 0.3);
    u.dt = Some(0.11);
    let next = integrate_step(model, &x, &u, 0.11).unwrap();
    let d0 = continuity_defect(model, &x, &u, &next).unwrap();
    assert!(d0.abs().max() < 1e-14);

    let mut shifted = next.clone();
    shifted.q[0] += 1e-3;
    let d1 = continuity_defect(model, &x, &u, &shifted).unwrap();
    assert!((d1[0] + 1e-3).abs() < 1e-14);
    for i in 1..d1.len() {
        assert!(d1[i].abs() < 1e-14);
    }
}

#[test]
fn transcription_jacobian_matches_finite_differences() {
    let mut p = stance_problem(2);
    // Exercise flight bounds and friction rows together.
    p.schedule.active[2][1] = None;
    let nlp = transcribe(p).unwrap();
    let n = nlp.num_vars();
    let m = nlp.num_constraints();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    // A consistent-ish point: home states with noise, forces, dt midpoints.
    let mut z = DVector::zeros(n);
    for k in 0..=2 {
        let off = nlp.x_offset(k);
        for i in 0..37 {
            let base = if i < 19 {
                nlp.problem.x_init.q[i]
            } else {
                0.0
            };
            z[off + i] = base + rng.random_range(-0.02..0.02);
        }
    }
    for k in 0..2 {
        let off = nlp.u_offset(k);
        for i in 0..18 {
            z[off + i] = rng.random_range(-0.5..0.5);
        }
        for i in 18..30 {
            z[off + i] = rng.random_range(0.0..200.0);
        }
        z[off + 30] = 0.1;
    }
    let analytic = nlp.jacobian(&z);
    let fd = fd_jacobian(&|p, out| nlp.constraints(p, out), &z, m);
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            let denom = 1.0 + fd[(i, j)].abs();
            worst = worst.max((analytic[(i, j)] - fd[(i, j)]).abs() / denom);
        }
    }
    assert!(worst < 1e-4, "worst relative Jacobian error {worst}");
}

#[test]
fn pyramid_acceptance_implies_exact_cone_acceptance() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let surfaces = [
        ground(),
        Surface {
            normal: Vector3::new(1.0, 0.0, 0.0),
            offset: 0.6,
            friction: 0.8,
            force_threshold: 5.0,
        },
        Surface {
            normal: Vector3::new(0.0, -0.6, 0.8).normalize(),
            offset: 0.1,
            friction: 0.3,
            force_threshold: 0.0,
        },
    ];
    let mut accepted = 0usize;
    for _ in 0..100_000 {
        let f = Vector3::new(
            rng.random_range(-120.0..120.0),
            rng.random_range(-120.0..120.0),
            rng.random_range(-120.0..220.0),
        );
        let s = &surfaces[rng.random_range(0..surfaces.len())];
        if friction_pyramid(&f, s).iter().all(|&r| r >= 0.0) {
            accepted += 1;
            assert!(
                friction_cone_check(&f, s),
                "pyramid accepted but cone rejected: {f:?}"
            );
        }
    }
    assert!(accepted > 1000, "sampling too thin: {accepted}");
}

#[test]
fn interpolation_reproduces_knots_and_zeroes_flight_forces() {
    let mut p = stance_problem(4);
    for c in 0..4 {
        p.schedule.active[c][2] = None;
    }
    let model = p.model.clone();
    let mut states = vec![p.x_init.clone()];
    let mut controls = Vec::new();
    let dt_k = 0.12;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..4 {
        let mut u = Control::zero(&model);
        u.nu_dot = DVector::from_fn(model.nv(), |_, _| rng.random_range(-0.4..0.4));
        u.dt = Some(dt_k);
        if k != 2 {
            u.forces = (0..4)
                .map(|_| Vector3::new(0.0, 0.0, 225.0))
                .collect();
        }
        states.push(integrate_step(&model, states.last().unwrap(), &u, dt_k).unwrap());
        controls.push(u);
    }
    let nlp = transcribe(p).unwrap();
    let z = nlp.pack(&states, &controls);

    // Same output step as the plan: the integrator is called identically,
    // so knot states are reproduced.
    let coarse = interpolate_trajectory(&nlp, &z, dt_k).unwrap();
    for k in 0..=4 {
        let x = coarse.state_at(k);
        for i in 0..model.nq() {
            assert!(
                (x.q[i] - states[k].q[i]).abs() < 1e-10,
                "knot {k} q[{i}]"
            );
        }
    }

    let traj = interpolate_trajectory(&nlp, &z, 1e-3).unwrap();
    // Duration within one output step.
    assert!((traj.duration() - 4.0 * dt_k).abs() < 1e-3 + 1e-9);

    // Flight samples carry exactly zero force.
    for s in &traj.samples {
        if s.t >= 2.0 * dt_k - 1e-9 && s.t < 3.0 * dt_k - 1e-9 {
            for f in &s.forces {
                assert_eq!(f, &[0.0, 0.0, 0.0]);
            }
        }
    }

    // CSV round trip preserves the samples bit-exactly.
    let dir = std::env::temp_dir().join("ocp_traj_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("traj.csv");
    traj.write_csv(&path).unwrap();
    let back = Trajectory::read_csv(&path).unwrap();
    assert_eq!(back.samples.len(), traj.samples.len());
    for (a, b) in traj.samples.iter().zip(&back.samples) {
        assert_eq!(a.q, b.q);
        assert_eq!(a.tau, b.tau);
    }
}

#[test]
fn interpolation_rejects_bad_output_steps() {
    let p = stance_problem(2);
    let nlp = transcribe(p).unwrap();
    let z = DVector::zeros(nlp.num_vars());
    assert!(interpolate_trajectory(&nlp, &z, 0.0).is_err());
    assert!(interpolate_trajectory(&nlp, &z, -0.5).is_err());
}

#[test]
fn problem_json_round_trip() {
    let p = stance_problem(3);
    let text = p.to_json();
    let back = Problem::from_json(&text).unwrap();
    assert_eq!(back.n_intervals, 3);
    assert_eq!(back.model.nq(), p.model.nq());
    assert_eq!(back.surfaces.len(), 1);
    let nlp_a = transcribe(p).unwrap();
    let nlp_b = transcribe(back).unwrap();
    assert_eq!(nlp_a.num_vars(), nlp_b.num_vars());
    assert_eq!(nlp_a.num_constraints(), nlp_b.num_constraints());
}

#[test]
fn empty_schedule_is_rejected() {
    let mut p = stance_problem(3);
    for c in 0..4 {
        for k in 0..3 {
            p.schedule.active[c][k] = None;
        }
    }
    assert!(transcribe(p).is_err());
}
