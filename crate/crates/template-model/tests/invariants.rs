//! Built models must satisfy the core dynamics invariants.

use nalgebra::{DVector, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rbd_core::{contact_jacobian, fk_contact, integrate_step, mass_matrix, Control, Model, Quaternion, State};
use template_model::{build_arm_model, build_centaur_template, build_centaur_with_arms, TemplateParams};

fn random_state(model: &Model, rng: &mut ChaCha8Rng) -> State {
    let mut q = model.neutral_q();
    if model.has_floating_base() {
        for k in 0..3 {
            q[k] = rng.random_range(-1.0..1.0);
        }
        let quat = Quaternion::from_axis_angle(
            &Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
            rng.random_range(-2.0..2.0),
        );
        q[3] = quat.eps.x;
        q[4] = quat.eps.y;
        q[5] = quat.eps.z;
        q[6] = quat.eta;
        for j in 7..model.nq() {
            q[j] = rng.random_range(-0.5..0.5);
        }
    } else {
        for j in 0..model.nq() {
            q[j] = rng.random_range(-1.5..1.5);
        }
    }
    let nu = DVector::from_fn(model.nv(), |_, _| rng.random_range(-1.0..1.0));
    State::new(q, nu)
}

fn displace(model: &Model, q: &DVector<f64>, dir: &DVector<f64>, eps: f64) -> DVector<f64> {
    let x = State::new(q.clone(), dir.clone());
    integrate_step(model, &x, &Control::zero(model), eps).unwrap().q
}

#[test]
fn all_built_models_have_spd_mass_matrices() {
    let params = TemplateParams::default();
    let models = [
        build_centaur_template(&params).unwrap(),
        build_centaur_with_arms(&params).unwrap(),
        build_arm_model(&params).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for model in &models {
        for _ in 0..100 {
            let x = random_state(model, &mut rng);
            let b = mass_matrix(model, &x.q).unwrap();
            assert!((&b - b.transpose()).abs().max() < 1e-12);
            assert!(b.symmetric_eigenvalues().min() > 0.0);
        }
    }
}

#[test]
fn template_contact_jacobians_match_finite_differences() {
    let params = TemplateParams::default();
    let model = build_centaur_template(&params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..5 {
        let x = random_state(&model, &mut rng);
        for c in 0..model.contacts().len() {
            let jac = contact_jacobian(&model, &x.q, c).unwrap();
            let eps = 1e-6;
            for j in 0..model.nv() {
                let mut dir = DVector::zeros(model.nv());
                dir[j] = 1.0;
                let qp = displace(&model, &x.q, &dir, eps);
                let qm = displace(&model, &x.q, &(-&dir), eps);
                let fd = (fk_contact(&model, &qp, c).unwrap()
                    - fk_contact(&model, &qm, c).unwrap())
                    / (2.0 * eps);
                let col = Vector3::new(jac[(0, j)], jac[(1, j)], jac[(2, j)]);
                assert!(
                    (fd - col).norm() / (1.0 + col.norm()) < 1e-5,
                    "contact {c} col {j}"
                );
            }
        }
    }
}
