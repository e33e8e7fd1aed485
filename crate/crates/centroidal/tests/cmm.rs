//! Cross-validation of the CMM against the link-momenta oracle, the
//! elementary momentum sum, finite differences and conservation laws.

use centroidal::{
    centroidal_momentum, centroidal_residual, cmm, cmm_bias, cmm_oracle, com_velocity,
    gravity_wrench, momentum_about,
};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rbd_core::{
    bias_terms, com, contact_jacobian, forward_dynamics_full, integrate_step, Body,
    Control, Joint, JointKind, Model, Quaternion, State,
};
use template_model::{build_centaur_template, home_state, TemplateParams};

fn free_body(com: Vector3<f64>, inertia: Vector3<f64>) -> Model {
    Model::new(
        vec![Body {
            name: "blob".into(),
            mass: 4.0,
            com,
            inertia: Matrix3::from_diagonal(&inertia),
            parent: None,
            joint: Joint {
                name: "free".into(),
                kind: JointKind::Floating,
                origin: Vector3::zeros(),
            },
        }],
        vec![],
        Vector3::new(0.0, 0.0, -9.81),
    )
    .unwrap()
}

fn three_body_chain(distal_mass: f64) -> Model {
    Model::new(
        vec![
            Body {
                name: "base".into(),
                mass: 3.0,
                com: Vector3::new(0.05, -0.02, 0.1),
                inertia: Matrix3::from_diagonal(&Vector3::new(0.1, 0.12, 0.09)),
                parent: None,
                joint: Joint {
                    name: "free".into(),
                    kind: JointKind::Floating,
                    origin: Vector3::zeros(),
                },
            },
            Body {
                name: "mid".into(),
                mass: 1.0,
                com: Vector3::new(0.0, 0.0, -0.1),
                inertia: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.004)),
                parent: Some(0),
                joint: Joint {
                    name: "pitch".into(),
                    kind: JointKind::Revolute { axis: Vector3::y() },
                    origin: Vector3::new(0.2, 0.0, 0.0),
                },
            },
            Body {
                name: "tip".into(),
                mass: distal_mass,
                com: Vector3::new(0.0, 0.0, -0.08),
                inertia: Matrix3::from_diagonal(
                    &(Vector3::new(0.005, 0.005, 0.002) * if distal_mass == 0.0 { 0.0 } else { 1.0 }),
                ),
                parent: Some(1),
                joint: Joint {
                    name: "slide".into(),
                    kind: JointKind::Prismatic {
                        axis: Vector3::new(0.0, 0.0, 1.0),
                    },
                    origin: Vector3::new(0.0, 0.0, -0.25),
                },
            },
        ],
        vec![],
        Vector3::new(0.0, 0.0, -9.81),
    )
    .unwrap()
}

fn random_state(model: &Model, rng: &mut ChaCha8Rng) -> State {
    let mut q = model.neutral_q();
    for k in 0..3 {
        q[k] = rng.random_range(-1.0..1.0);
    }
    let quat = Quaternion::from_axis_angle(
        &Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ),
        rng.random_range(-2.5..2.5),
    );
    q[3] = quat.eps.x;
    q[4] = quat.eps.y;
    q[5] = quat.eps.z;
    q[6] = quat.eta;
    for j in 7..model.nq() {
        q[j] = rng.random_range(-0.4..0.4);
    }
    let nu = DVector::from_fn(model.nv(), |_, _| rng.random_range(-1.2..1.2));
    State::new(q, nu)
}

#[test]
fn one_body_cmm_is_block_diagonal_at_its_com() {
    // Base frame placed at the body's CoM: A = blkdiag(m I, I_rot).
    let inertia = Vector3::new(0.2, 0.3, 0.4);
    let model = free_body(Vector3::zeros(), inertia);
    let q = model.neutral_q();
    let a = cmm(&model, &q).unwrap();
    let mut expected = DMatrix::zeros(6, 6);
    for k in 0..3 {
        expected[(k, k)] = 4.0;
        expected[(k + 3, k + 3)] = inertia[k];
    }
    assert!((a - expected).abs().max() < 1e-12);
}

#[test]
fn cmm_matches_oracle_on_100_template_states() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..100 {
        let x = random_state(&model, &mut rng);
        let a = cmm(&model, &x.q).unwrap();
        let oracle = cmm_oracle(&model, &x.q).unwrap();
        let diff = (&a - &oracle).abs().max();
        assert!(diff < 1e-9, "max diff {diff}");
    }
}

#[test]
fn cmm_matches_oracle_on_three_body_chain() {
    let model = three_body_chain(0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let x = random_state(&model, &mut rng);
        let diff = (cmm(&model, &x.q).unwrap() - cmm_oracle(&model, &x.q).unwrap())
            .abs()
            .max();
        assert!(diff < 1e-9);
    }
}

#[test]
fn zero_mass_distal_body_contributes_nothing() {
    let with = three_body_chain(0.0);
    let without = Model::new(
        with.bodies()[..2].to_vec(),
        vec![],
        Vector3::new(0.0, 0.0, -9.81),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_state(&with, &mut rng);
    let a_with = cmm_oracle(&with, &x.q).unwrap();
    let q_short = DVector::from_fn(without.nq(), |i, _| x.q[i]);
    let a_without = cmm_oracle(&without, &q_short).unwrap();
    // Shared columns agree; the extra column is identically zero.
    for r in 0..6 {
        for c in 0..without.nv() {
            assert!((a_with[(r, c)] - a_without[(r, c)]).abs() < 1e-12);
        }
        assert_eq!(a_with[(r, with.nv() - 1)], 0.0);
    }
}

#[test]
fn linear_rows_give_total_mass_times_com_velocity() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let x = random_state(&model, &mut rng);
        let h = centroidal_momentum(&model, &x.q, &x.nu).unwrap();
        let v_com = com_velocity(&model, &x.q, &x.nu).unwrap();
        let expect = model.total_mass() * v_com;
        for k in 0..3 {
            let rel = (h[k] - expect[k]).abs() / (1.0 + expect[k].abs());
            assert!(rel < 1e-12, "component {k}: rel {rel}");
        }
    }
}

#[test]
fn momentum_about_com_agrees_with_cmm_product() {
    // Third independent route: elementary body-velocity momentum sum.
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let x = random_state(&model, &mut rng);
        let h = centroidal_momentum(&model, &x.q, &x.nu).unwrap();
        let (c, _) = com(&model, &x.q).unwrap();
        let h_elem = momentum_about(&model, &x.q, &x.nu, &c).unwrap();
        assert!((h - h_elem).abs().max() < 1e-9);
    }
}

#[test]
fn bias_is_zero_at_rest_and_quartic_under_scaling() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = random_state(&model, &mut rng);
    let zero = cmm_bias(&model, &x.q, &DVector::zeros(model.nv())).unwrap();
    assert!(zero.abs().max() < 1e-12);

    let b1 = cmm_bias(&model, &x.q, &x.nu).unwrap();
    let b2 = cmm_bias(&model, &x.q, &(2.0 * &x.nu)).unwrap();
    assert!((b2 - 4.0 * b1).abs().max() < 1e-9);
}

#[test]
fn bias_matches_finite_difference_of_cmm_product() {
    // d/dt [A(q(t)) nu] with nu held fixed equals Adot nu.
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10 {
        let x = random_state(&model, &mut rng);
        let delta = 1e-6;
        let u = Control::zero(&model);
        let fwd = integrate_step(&model, &x, &u, delta).unwrap();
        let back = {
            let rev = State::new(x.q.clone(), -&x.nu);
            integrate_step(&model, &rev, &u, delta).unwrap()
        };
        let a_fwd = cmm(&model, &fwd.q).unwrap();
        let a_back = cmm(&model, &back.q).unwrap();
        let fd = (&a_fwd * &x.nu - &a_back * &x.nu) / (2.0 * delta);
        let bias = cmm_bias(&model, &x.q, &x.nu).unwrap();
        for k in 0..6 {
            let rel = (fd[k] - bias[k]).abs() / (1.0 + bias[k].abs());
            assert!(rel < 1e-4, "row {k}: fd {} vs bias {}", fd[k], bias[k]);
        }
    }
}

#[test]
fn gravity_wrench_is_total_weight_through_the_com() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let x = random_state(&model, &mut rng);
        let g = gravity_wrench(&model, &x.q).unwrap();
        let expect = -model.total_mass() * model.gravity();
        for k in 0..3 {
            assert!((g[k] - expect[k]).abs() < 1e-9);
        }
        let ang = Vector3::new(g[3], g[4], g[5]);
        assert!(ang.norm() < 1e-10, "angular part {}", ang.norm());
    }

    let zero_g = Model::new(
        model.bodies().to_vec(),
        model.contacts().to_vec(),
        Vector3::zeros(),
    )
    .unwrap();
    let x = random_state(&zero_g, &mut rng);
    assert!(gravity_wrench(&zero_g, &x.q).unwrap().abs().max() < 1e-14);
}

#[test]
fn momentum_of_pure_base_translation() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let params = TemplateParams::default();
    let mut x = home_state(&model, &params);
    let v = Vector3::new(0.3, -0.1, 0.9);
    x.nu[0] = v.x;
    x.nu[1] = v.y;
    x.nu[2] = v.z;
    let h = centroidal_momentum(&model, &x.q, &x.nu).unwrap();
    for k in 0..3 {
        assert!((h[k] - model.total_mass() * v[k]).abs() < 1e-10);
    }
    assert!(Vector3::new(h[3], h[4], h[5]).norm() < 1e-10);

    x.nu.fill(0.0);
    assert!(centroidal_momentum(&model, &x.q, &x.nu).unwrap().abs().max() == 0.0);
}

#[test]
fn angular_momentum_conserved_in_free_fall() {
    // RK4 on the full unforced dynamics (accelerations re-evaluated at the
    // stages, not held piecewise constant).
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut x = random_state(&model, &mut rng);
    let h0 = centroidal_momentum(&model, &x.q, &x.nu).unwrap();
    let nq = model.nq();
    let nv = model.nv();
    let rate = |q: &DVector<f64>, nu: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let mut qd = DVector::zeros(nq);
        qd[0] = nu[0];
        qd[1] = nu[1];
        qd[2] = nu[2];
        let rho = Quaternion::from_parts(q[3], q[4], q[5], q[6]);
        let rd = rho.propagate(&Vector3::new(nu[3], nu[4], nu[5]));
        for k in 0..4 {
            qd[3 + k] = rd[k];
        }
        for j in 6..nv {
            qd[j + 1] = nu[j];
        }
        let nudot = forward_dynamics_full(
            &model,
            q,
            nu,
            &DVector::zeros(nv),
            &[Vector3::zeros(); 4],
        )
        .unwrap();
        (qd, nudot)
    };
    let dt = 1e-3;
    for _ in 0..1000 {
        let (k1q, k1v) = rate(&x.q, &x.nu);
        let (k2q, k2v) = rate(&(&x.q + 0.5 * dt * &k1q), &(&x.nu + 0.5 * dt * &k1v));
        let (k3q, k3v) = rate(&(&x.q + 0.5 * dt * &k2q), &(&x.nu + 0.5 * dt * &k2v));
        let (k4q, k4v) = rate(&(&x.q + dt * &k3q), &(&x.nu + dt * &k3v));
        x.q += dt / 6.0 * (&k1q + 2.0 * &k2q + 2.0 * &k3q + &k4q);
        x.nu += dt / 6.0 * (&k1v + 2.0 * &k2v + 2.0 * &k3v + &k4v);
        let n = x.base_quaternion().norm();
        for k in 3..7 {
            x.q[k] /= n;
        }
    }
    let h1 = centroidal_momentum(&model, &x.q, &x.nu).unwrap();
    for k in 3..6 {
        assert!(
            (h1[k] - h0[k]).abs() < 1e-6,
            "h_ang[{k}] drifted {} -> {}",
            h0[k],
            h1[k]
        );
    }
}

#[test]
fn residual_vanishes_in_free_fall() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let x = random_state(&model, &mut rng);
        let nudot = forward_dynamics_full(
            &model,
            &x.q,
            &x.nu,
            &DVector::zeros(model.nv()),
            &[Vector3::zeros(); 4],
        )
        .unwrap();
        let r = centroidal_residual(&model, &x.q, &x.nu, &nudot, &Vector6::zeros()).unwrap();
        assert!(r.abs().max() < 1e-8, "residual {}", r.abs().max());
    }
}

#[test]
fn residual_vanishes_in_static_equilibrium() {
    let params = TemplateParams::default();
    let model = build_centaur_template(&params).unwrap();
    let x = home_state(&model, &params);
    // Min-norm contact forces balancing the underactuated gravity rows.
    let h_u = bias_terms(&model, &x.q, &x.nu).unwrap().rows(0, 6).clone_owned();
    let mut a = DMatrix::zeros(6, 12);
    for c in 0..4 {
        let jac = contact_jacobian(&model, &x.q, c).unwrap();
        a.view_mut((0, 3 * c), (6, 3))
            .copy_from(&jac.columns(0, 6).transpose());
    }
    let f = a.clone().svd(true, true).solve(&h_u, 1e-12).unwrap();
    assert!((&a * &f - &h_u).norm() < 1e-9);

    // Transport the contact forces to the CoM.
    let (c_pos, _) = com(&model, &x.q).unwrap();
    let mut f_com = Vector6::zeros();
    for c in 0..4 {
        let force = Vector3::new(f[3 * c], f[3 * c + 1], f[3 * c + 2]);
        let p = rbd_core::fk_contact(&model, &x.q, c).unwrap();
        let n = (p - c_pos).cross(&force);
        for k in 0..3 {
            f_com[k] += force[k];
            f_com[k + 3] += n[k];
        }
    }
    let r = centroidal_residual(&model, &x.q, &x.nu, &DVector::zeros(model.nv()), &f_com)
        .unwrap();
    assert!(r.abs().max() < 1e-8, "residual {}", r.abs().max());
}

#[test]
fn residual_is_linear_in_accelerations() {
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let x = random_state(&model, &mut rng);
    let nudot = DVector::from_fn(model.nv(), |_, _| rng.random_range(-2.0..2.0));
    let f = Vector6::zeros();
    let r1 = centroidal_residual(&model, &x.q, &x.nu, &nudot, &f).unwrap();
    let r2 = centroidal_residual(&model, &x.q, &x.nu, &(2.0 * &nudot), &f).unwrap();
    let a = cmm(&model, &x.q).unwrap();
    let a_nudot = &a * &nudot;
    for k in 0..6 {
        assert!((r2[k] - r1[k] - a_nudot[k]).abs() < 1e-9);
    }
}

#[test]
fn virtual_torques_equal_floating_rows_of_contact_forces() {
    // Gamma = J_fb,c^T F equals the first six rows of J_C^T F.
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let x = random_state(&model, &mut rng);
    let forces: Vec<Vector3<f64>> = (0..4)
        .map(|_| {
            Vector3::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(0.0..200.0),
            )
        })
        .collect();
    let mut full = DVector::zeros(model.nv());
    let mut fb_only = Vector6::zeros();
    for c in 0..4 {
        let jac = contact_jacobian(&model, &x.q, c).unwrap();
        full += jac.transpose() * forces[c];
        let fb = jac.columns(0, 6).transpose() * forces[c];
        fb_only += Vector6::from_fn(|r, _| fb[r]);
    }
    for k in 0..6 {
        assert!((full[k] - fb_only[k]).abs() < 1e-12);
    }
}

#[test]
fn momentum_rate_matches_bias_plus_acceleration_along_trajectories() {
    // Central difference of h = A nu along an integrated trajectory against
    // A nu_dot + Adot nu.
    let model = build_centaur_template(&TemplateParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..10 {
        let x = random_state(&model, &mut rng);
        let mut u = Control::zero(&model);
        u.nu_dot = DVector::from_fn(model.nv(), |_, _| rng.random_range(-3.0..3.0));
        let delta = 1e-5;
        let fwd = integrate_step(&model, &x, &u, delta).unwrap();
        let back = {
            let rev = State::new(x.q.clone(), -&x.nu);
            let mut u_rev = u.clone();
            u_rev.nu_dot = u.nu_dot.clone();
            let s = integrate_step(&model, &rev, &u_rev, delta).unwrap();
            State::new(s.q, -&s.nu)
        };
        let h_fwd = centroidal_momentum(&model, &fwd.q, &fwd.nu).unwrap();
        let h_back = centroidal_momentum(&model, &back.q, &back.nu).unwrap();
        let fd = (h_fwd - h_back) / (2.0 * delta);
        let a = cmm(&model, &x.q).unwrap();
        let rate = &a * &u.nu_dot;
        let rate = Vector6::from_fn(|r, _| rate[r]) + cmm_bias(&model, &x.q, &x.nu).unwrap();
        for k in 0..6 {
            let rel = (fd[k] - rate[k]).abs() / (1.0 + rate[k].abs());
            assert!(rel < 1e-4, "row {k}: fd {} vs rate {}", fd[k], rate[k]);
        }
    }
}

#[test]
fn fixed_base_models_are_rejected() {
    let model = template_model::build_arm_model(&TemplateParams::default()).unwrap();
    let q = model.neutral_q();
    assert!(cmm(&model, &q).is_err());
}
