//! Hierarchical IK checks: exactness on square tasks, priority preservation
//! on random stacks, velocity-limit scaling, and the angular-momentum stack
//! structure.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use stabilizers::{angmom_tasks, hik_solve, AngMomGains, Task, TaskLevel, TaskStack};
use template_model::{build_centaur_with_arms, home_state, TemplateParams};

fn plain_stack(levels: Vec<TaskLevel>, nv: usize) -> TaskStack {
    TaskStack {
        levels,
        vel_limit: DVector::from_element(nv, f64::INFINITY),
        pos_lower: None,
        pos_upper: None,
    }
}

fn extended_model() -> (rbd_core::Model, rbd_core::State) {
    let params = TemplateParams::default();
    let model = build_centaur_with_arms(&params).unwrap();
    let x = home_state(&model, &params);
    (model, x)
}

#[test]
fn square_full_rank_task_is_achieved_exactly() {
    let (model, x) = extended_model();
    let nv = model.nv();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Well-conditioned by construction: dominant diagonal.
    let jac = DMatrix::from_fn(nv, nv, |_, _| rng.random_range(-0.1..0.1))
        + DMatrix::identity(nv, nv) * 3.0;
    let desired = DVector::from_fn(nv, |_, _| rng.random_range(-1.0..1.0));
    let stack = plain_stack(
        vec![TaskLevel {
            tasks: vec![Task {
                jacobian: jac.clone(),
                desired: desired.clone(),
                weight: 1.0,
            }],
        }],
        nv,
    );
    let qdot = hik_solve(&model, &stack, &x.q, 1e-3).unwrap();
    // Damping lambda = 1e-3 leaves a residual of order lambda^2.
    assert!((jac * qdot - desired).abs().max() < 1e-5);
}

#[test]
fn orthogonal_row_spaces_are_both_achieved() {
    let (model, x) = extended_model();
    let nv = model.nv();
    let mut j1 = DMatrix::zeros(3, nv);
    let mut j2 = DMatrix::zeros(3, nv);
    for k in 0..3 {
        j1[(k, k)] = 2.0;
        j2[(k, 8 + k)] = 1.5;
    }
    let v1 = DVector::from_vec(vec![0.4, -0.2, 0.9]);
    let v2 = DVector::from_vec(vec![-1.0, 0.3, 0.5]);
    let stack = plain_stack(
        vec![
            TaskLevel {
                tasks: vec![Task {
                    jacobian: j1.clone(),
                    desired: v1.clone(),
                    weight: 1.0,
                }],
            },
            TaskLevel {
                tasks: vec![Task {
                    jacobian: j2.clone(),
                    desired: v2.clone(),
                    weight: 1.0,
                }],
            },
        ],
        nv,
    );
    let qdot = hik_solve(&model, &stack, &x.q, 1e-3).unwrap();
    assert!((&j1 * &qdot - v1).abs().max() < 1e-5);
    assert!((&j2 * &qdot - v2).abs().max() < 1e-5);
}

#[test]
fn lower_priority_tasks_never_disturb_higher_ones() {
    let (model, x) = extended_model();
    let nv = model.nv();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m1 = rng.random_range(2..5);
        let j1 = DMatrix::from_fn(m1, nv, |_, _| rng.random_range(-1.0..1.0));
        let v1 = DVector::from_fn(m1, |_, _| rng.random_range(-1.0..1.0));
        let top = TaskLevel {
            tasks: vec![Task {
                jacobian: j1.clone(),
                desired: v1.clone(),
                weight: 1.0,
            }],
        };
        let stack_single = plain_stack(vec![top.clone()], nv);
        let q1 = hik_solve(&model, &stack_single, &x.q, 1e-3).unwrap();
        let res_single = (&j1 * &q1 - &v1).norm();

        let m2 = rng.random_range(2..6);
        let j2 = DMatrix::from_fn(m2, nv, |_, _| rng.random_range(-1.0..1.0));
        let v2 = DVector::from_fn(m2, |_, _| rng.random_range(-1.0..1.0));
        let stack_two = plain_stack(
            vec![
                top,
                TaskLevel {
                    tasks: vec![Task {
                        jacobian: j2,
                        desired: v2,
                        weight: 1.0,
                    }],
                },
            ],
            nv,
        );
        let q2 = hik_solve(&model, &stack_two, &x.q, 1e-3).unwrap();
        let res_two = (&j1 * &q2 - &v1).norm();
        assert!(
            res_two <= res_single + 1e-9,
            "priority violated: {res_single} -> {res_two}"
        );
    }
}

#[test]
fn velocity_limits_are_respected_exactly_by_uniform_scaling() {
    let (model, x) = extended_model();
    let nv = model.nv();
    let jac = DMatrix::identity(nv, nv);
    let desired = DVector::from_element(nv, 10.0);
    let mut stack = plain_stack(
        vec![TaskLevel {
            tasks: vec![Task {
                jacobian: jac,
                desired,
                weight: 1.0,
            }],
        }],
        nv,
    );
    stack.vel_limit = DVector::from_element(nv, 2.0);
    let qdot = hik_solve(&model, &stack, &x.q, 1e-3).unwrap();
    let max = qdot.abs().max();
    assert!(max <= 2.0 + 1e-12, "limit exceeded: {max}");
    assert!(max > 2.0 - 1e-9, "scaling should be tight");
    // Direction preserved: all components equal.
    for j in 1..nv {
        assert!((qdot[j] - qdot[0]).abs() < 1e-9);
    }
}

#[test]
fn angmom_stack_level3_jacobian_is_the_bottom_of_the_cmm() {
    let (model, x) = extended_model();
    let stack = angmom_tasks(
        &model,
        &x.q,
        &Vector3::zeros(),
        &x.q,
        &AngMomGains::default(),
    )
    .unwrap();
    assert_eq!(stack.levels.len(), 3);
    let a = centroidal::cmm(&model, &x.q).unwrap();
    let task = &stack.levels[2].tasks[0];
    for r in 0..3 {
        for c in 0..model.nv() {
            assert!((task.jacobian[(r, c)] - a[(r + 3, c)]).abs() < 1e-12);
        }
    }
}

#[test]
fn angmom_stack_desired_velocities_vanish_at_rest() {
    let (model, x) = extended_model();
    let stack = angmom_tasks(
        &model,
        &x.q,
        &Vector3::zeros(),
        &x.q,
        &AngMomGains::default(),
    )
    .unwrap();
    for level in &stack.levels {
        for task in &level.tasks {
            assert!(task.desired.abs().max() < 1e-12);
        }
    }
}

#[test]
fn spinning_base_recruits_arms_against_the_momentum() {
    let (model, x) = extended_model();
    // Base pitching forward at 1 rad/s; measured by the IMU.
    let omega = Vector3::new(0.0, 1.0, 0.0);
    let mut nu = DVector::zeros(model.nv());
    nu[4] = omega.y;
    let h_now = centroidal::centroidal_momentum(&model, &x.q, &nu).unwrap();
    let h_ang = Vector3::new(h_now[3], h_now[4], h_now[5]);
    assert!(h_ang.norm() > 0.1);

    let stack = angmom_tasks(&model, &x.q, &omega, &x.q, &AngMomGains::default()).unwrap();
    let qdot = hik_solve(&model, &stack, &x.q, 1e-3).unwrap();
    // Flywheel absorption: the arms windmill so their momentum aligns with
    // the body's current angular momentum (taking it over), which is what
    // slows the trunk down. The solution's total momentum moves toward
    // zero via the counter-rotation of the pinned pelvis rows.
    let arm_idx = template_model::arm_joint_indices(&model);
    let a = centroidal::cmm(&model, &x.q).unwrap();
    let mut h_arms = Vector3::zeros();
    for &j in &arm_idx {
        for r in 0..3 {
            h_arms[r] += a[(r + 3, j)] * qdot[j];
        }
    }
    assert!(
        h_arms.dot(&h_ang) > 0.0,
        "arm momentum {h_arms:?} does not absorb {h_ang:?}"
    );
    // And the solution velocity as a whole counteracts the measured spin.
    let h_sol = &a * &qdot;
    let h_sol_ang = Vector3::new(h_sol[3], h_sol[4], h_sol[5]);
    assert!(h_sol_ang.dot(&h_ang) < 0.0);
}
