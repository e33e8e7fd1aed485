//! Builders for the quadrupedal 5-mass template model (floating waist plus
//! four prismatic legs), the fixed-base flywheel arm, and the extended
//! replay model carrying two upper-body arms.
//!
//! The default inertial values are artifact choices sized so the template
//! totals 92 kg; every number is overridable through [`TemplateParams`].

use nalgebra::{DVector, Matrix3, Vector3};
use rbd_core::{Body, ContactFrame, Joint, JointKind, Model, RbdError, State};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("invalid template parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Rbd(#[from] RbdError),
}

/// Leg order used everywhere: front-left, front-right, rear-left, rear-right.
pub const LEG_NAMES: [&str; 4] = ["fl", "fr", "rl", "rr"];

/// Parameters of the 5-mass template and its upper-body extensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateParams {
    /// Waist (trunk) mass, kg.
    pub waist_mass: f64,
    /// Waist inertia diagonal about its CoM, kg m^2.
    pub waist_inertia: [f64; 3],
    /// Forward shift of the waist CoM modelling the upper body, m.
    pub waist_forward_shift: f64,
    /// One mass per leg, kg.
    pub leg_masses: [f64; 4],
    /// Leg inertia diagonal about the leg CoM, kg m^2.
    pub leg_inertia: [f64; 3],
    /// Leg CoM height above the foot point, m.
    pub leg_com_height: f64,
    /// Hip mounting offsets in the waist frame, m (front-left, front-right,
    /// rear-left, rear-right).
    pub hip_offsets: [[f64; 3]; 4],
    /// Prismatic travel bounds of each leg joint triplet, m.
    pub travel_lower: [f64; 3],
    pub travel_upper: [f64; 3],
    /// Leg extension at the home pose, m.
    pub home_extension: [f64; 3],
    /// Waist height at the home pose, m.
    pub base_home_height: f64,
    /// Upper-body arm parameters (stabilizer extension).
    pub arm: ArmParams,
}

/// Two-link pitch-plane arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmParams {
    pub link_masses: Vec<f64>,
    pub link_lengths: Vec<f64>,
    /// Pitch-axis inertia of each link about its CoM, kg m^2.
    pub link_inertias: Vec<f64>,
    /// Shoulder mount in the waist frame (y mirrored for the right arm), m.
    pub shoulder_offset: [f64; 3],
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            link_masses: vec![2.5, 1.5],
            link_lengths: vec![0.30, 0.30],
            link_inertias: vec![0.02, 0.012],
            shoulder_offset: [0.15, 0.25, 0.25],
        }
    }
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self {
            waist_mass: 60.0,
            waist_inertia: [1.25, 2.25, 2.6],
            waist_forward_shift: 0.1,
            leg_masses: [8.0; 4],
            leg_inertia: [0.05, 0.05, 0.02],
            leg_com_height: 0.25,
            hip_offsets: [
                [0.35, 0.25, -0.05],
                [0.35, -0.25, -0.05],
                [-0.35, 0.25, -0.05],
                [-0.35, -0.25, -0.05],
            ],
            travel_lower: [-0.30, -0.30, -0.75],
            travel_upper: [0.30, 0.30, -0.35],
            home_extension: [0.0, 0.0, -0.60],
            base_home_height: 0.65,
            arm: ArmParams::default(),
        }
    }
}

impl TemplateParams {
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.waist_mass <= 0.0 || self.leg_masses.iter().any(|&m| m <= 0.0) {
            return Err(TemplateError::BadParams("all masses must be positive".into()));
        }
        for k in 0..3 {
            if self.travel_lower[k] >= self.travel_upper[k] {
                return Err(TemplateError::BadParams(format!(
                    "degenerate travel bounds on axis {k}"
                )));
            }
            if self.home_extension[k] < self.travel_lower[k]
                || self.home_extension[k] > self.travel_upper[k]
            {
                return Err(TemplateError::BadParams(format!(
                    "home extension outside travel bounds on axis {k}"
                )));
            }
        }
        let a = &self.arm;
        if a.link_masses.len() != a.link_lengths.len()
            || a.link_masses.len() != a.link_inertias.len()
            || a.link_masses.is_empty()
        {
            return Err(TemplateError::BadParams(
                "arm link arrays must be non-empty and of equal length".into(),
            ));
        }
        if a.link_masses.iter().any(|&m| m <= 0.0) || a.link_lengths.iter().any(|&l| l <= 0.0) {
            return Err(TemplateError::BadParams(
                "arm link masses and lengths must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Total mass of the lower-body template.
    pub fn template_mass(&self) -> f64 {
        self.waist_mass + self.leg_masses.iter().sum::<f64>()
    }
}

fn waist_body(params: &TemplateParams) -> Body {
    Body {
        name: "waist".into(),
        mass: params.waist_mass,
        com: Vector3::new(params.waist_forward_shift, 0.0, 0.0),
        inertia: Matrix3::from_diagonal(&Vector3::from(params.waist_inertia)),
        parent: None,
        joint: Joint {
            name: "floating_base".into(),
            kind: JointKind::Floating,
            origin: Vector3::zeros(),
        },
    }
}

/// Append one leg (x, y, z prismatic chain; the two proximal links are
/// massless, the distal link carries the leg mass) and its point contact.
fn push_leg(
    bodies: &mut Vec<Body>,
    contacts: &mut Vec<ContactFrame>,
    params: &TemplateParams,
    leg: usize,
) {
    let name = LEG_NAMES[leg];
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let axis_names = ["x", "y", "z"];
    let waist_idx = 0;
    for k in 0..3 {
        let distal = k == 2;
        bodies.push(Body {
            name: if distal {
                format!("{name}_leg")
            } else {
                format!("{name}_link_{}", axis_names[k])
            },
            mass: if distal { params.leg_masses[leg] } else { 0.0 },
            com: if distal {
                Vector3::new(0.0, 0.0, params.leg_com_height)
            } else {
                Vector3::zeros()
            },
            inertia: if distal {
                Matrix3::from_diagonal(&Vector3::from(params.leg_inertia))
            } else {
                Matrix3::zeros()
            },
            parent: Some(if k == 0 { waist_idx } else { bodies.len() - 1 }),
            joint: Joint {
                name: format!("{name}_{}", axis_names[k]),
                kind: JointKind::Prismatic { axis: axes[k] },
                origin: if k == 0 {
                    Vector3::from(params.hip_offsets[leg])
                } else {
                    Vector3::zeros()
                },
            },
        });
    }
    contacts.push(ContactFrame {
        name: format!("{name}_foot"),
        body: bodies.len() - 1,
        offset: Vector3::zeros(),
    });
}

fn push_arm(bodies: &mut Vec<Body>, params: &TemplateParams, side: &str, mirror_y: f64) {
    let a = &params.arm;
    let mut offset = Vector3::from(a.shoulder_offset);
    offset.y *= mirror_y;
    for (k, ((&m, &l), &i)) in a
        .link_masses
        .iter()
        .zip(&a.link_lengths)
        .zip(&a.link_inertias)
        .enumerate()
    {
        bodies.push(Body {
            name: format!("{side}_arm_{k}"),
            mass: m,
            com: Vector3::new(0.0, 0.0, -l / 2.0),
            inertia: Matrix3::from_diagonal(&Vector3::new(i, i, i * 0.1)),
            parent: Some(if k == 0 { 0 } else { bodies.len() - 1 }),
            joint: Joint {
                name: if k == 0 {
                    format!("{side}_shoulder_pitch")
                } else if k == 1 {
                    format!("{side}_elbow_pitch")
                } else {
                    format!("{side}_arm_pitch_{k}")
                },
                kind: JointKind::Revolute { axis: Vector3::y() },
                origin: if k == 0 {
                    offset
                } else {
                    Vector3::new(0.0, 0.0, -a.link_lengths[k - 1])
                },
            },
        });
    }
}

/// The 5-mass quadrupedal template: floating waist plus four legs of three
/// orthogonal prismatic joints each, one point contact per leg.
///
/// `dim(q) = 19`, `dim(nu) = 18`, 12 actuated DoF.
pub fn build_centaur_template(params: &TemplateParams) -> Result<Model, TemplateError> {
    params.validate()?;
    let mut bodies = vec![waist_body(params)];
    let mut contacts = Vec::new();
    for leg in 0..4 {
        push_leg(&mut bodies, &mut contacts, params, leg);
    }
    Ok(Model::new(
        bodies,
        contacts,
        Vector3::new(0.0, 0.0, -rbd_core::STANDARD_GRAVITY),
    )?)
}

/// Template extended with two mirrored pitch-plane arms for the replay
/// simulator. Actuated order: 12 leg joints, then left arm, then right arm.
pub fn build_centaur_with_arms(params: &TemplateParams) -> Result<Model, TemplateError> {
    params.validate()?;
    let mut bodies = vec![waist_body(params)];
    let mut contacts = Vec::new();
    for leg in 0..4 {
        push_leg(&mut bodies, &mut contacts, params, leg);
    }
    push_arm(&mut bodies, params, "left", 1.0);
    push_arm(&mut bodies, params, "right", -1.0);
    Ok(Model::new(
        bodies,
        contacts,
        Vector3::new(0.0, 0.0, -rbd_core::STANDARD_GRAVITY),
    )?)
}

/// Fixed-base single arm used by the flywheel problem: revolute pitch
/// joints hanging along -z at the zero configuration, with an `ee` contact
/// frame at the tip for workspace constraints.
pub fn build_arm_model(params: &TemplateParams) -> Result<Model, TemplateError> {
    params.validate()?;
    let a = &params.arm;
    let mut bodies = Vec::new();
    for (k, ((&m, &l), &i)) in a
        .link_masses
        .iter()
        .zip(&a.link_lengths)
        .zip(&a.link_inertias)
        .enumerate()
    {
        bodies.push(Body {
            name: format!("arm_{k}"),
            mass: m,
            com: Vector3::new(0.0, 0.0, -l / 2.0),
            inertia: Matrix3::from_diagonal(&Vector3::new(i, i, i * 0.1)),
            parent: if k == 0 { None } else { Some(k - 1) },
            joint: Joint {
                name: if k == 0 {
                    "shoulder_pitch".into()
                } else if k == 1 {
                    "elbow_pitch".into()
                } else {
                    format!("arm_pitch_{k}")
                },
                kind: JointKind::Revolute { axis: Vector3::y() },
                origin: if k == 0 {
                    Vector3::zeros()
                } else {
                    Vector3::new(0.0, 0.0, -a.link_lengths[k - 1])
                },
            },
        });
    }
    let contacts = vec![ContactFrame {
        name: "ee".into(),
        body: bodies.len() - 1,
        offset: Vector3::new(0.0, 0.0, -*a.link_lengths.last().unwrap()),
    }];
    Ok(Model::new(
        bodies,
        contacts,
        Vector3::new(0.0, 0.0, -rbd_core::STANDARD_GRAVITY),
    )?)
}

/// Home pose: waist at its nominal height, legs at the home extension,
/// arms (when present) hanging, all velocities zero.
pub fn home_state(model: &Model, params: &TemplateParams) -> State {
    let mut q = model.neutral_q();
    if model.has_floating_base() {
        q[2] = params.base_home_height;
        for leg in 0..4 {
            for k in 0..3 {
                q[7 + 3 * leg + k] = params.home_extension[k];
            }
        }
    }
    State::new(q, DVector::zeros(model.nv()))
}

/// Velocity-space indices of the arm joints in the extended replay model.
pub fn arm_joint_indices(model: &Model) -> Vec<usize> {
    model
        .bodies()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.joint.name.contains("shoulder_pitch") || b.joint.name.contains("elbow_pitch"))
        .map(|(i, _)| model.v_offset(i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_dimensions() {
        let model = build_centaur_template(&TemplateParams::default()).unwrap();
        assert_eq!(model.nq(), 19);
        assert_eq!(model.nv(), 18);
        assert_eq!(model.n_actuated(), 12);
        assert_eq!(model.n_unactuated(), 7);
        assert_eq!(model.contacts().len(), 4);
    }

    #[test]
    fn template_total_mass_is_sum_of_five_masses() {
        let params = TemplateParams::default();
        let model = build_centaur_template(&params).unwrap();
        assert!((model.total_mass() - params.template_mass()).abs() < 1e-12);
        assert!((model.total_mass() - 92.0).abs() < 1e-12);
    }

    #[test]
    fn zero_forward_shift_centres_the_com() {
        let params = TemplateParams {
            waist_forward_shift: 0.0,
            ..TemplateParams::default()
        };
        let model = build_centaur_template(&params).unwrap();
        let x = home_state(&model, &params);
        let (c, _) = rbd_core::com(&model, &x.q).unwrap();
        assert!(c.x.abs() < 1e-12);
        assert!(c.y.abs() < 1e-12);
    }

    #[test]
    fn home_pose_feet_on_ground_and_com_inside_support() {
        let params = TemplateParams::default();
        let model = build_centaur_template(&params).unwrap();
        let x = home_state(&model, &params);
        for c in 0..4 {
            let p = rbd_core::fk_contact(&model, &x.q, c).unwrap();
            assert!(p.z.abs() < 1e-12, "foot {c} at z={}", p.z);
        }
        let (com, _) = rbd_core::com(&model, &x.q).unwrap();
        let feet: Vec<_> = (0..4)
            .map(|c| rbd_core::fk_contact(&model, &x.q, c).unwrap())
            .collect();
        let min_x = feet.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let max_x = feet.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        assert!(com.x > min_x && com.x < max_x);
    }

    #[test]
    fn arm_model_dimensions_and_tip_position() {
        let params = TemplateParams::default();
        let model = build_arm_model(&params).unwrap();
        assert_eq!(model.nq(), 2);
        assert_eq!(model.nv(), 2);
        assert!(!model.has_floating_base());
        let q = model.neutral_q();
        let tip = rbd_core::fk_contact(&model, &q, 0).unwrap();
        let total_len: f64 = params.arm.link_lengths.iter().sum();
        assert!((tip - Vector3::new(0.0, 0.0, -total_len)).norm() < 1e-14);
    }

    #[test]
    fn arm_gravity_torque_matches_two_link_statics() {
        let params = TemplateParams::default();
        let model = build_arm_model(&params).unwrap();
        // Stretch the arm horizontally along +x: shoulder pitch -pi/2.
        let mut q = model.neutral_q();
        q[0] = -std::f64::consts::FRAC_PI_2;
        q[1] = 0.0;
        let h = rbd_core::bias_terms(&model, &q, &DVector::zeros(2)).unwrap();
        let a = &params.arm;
        let g = rbd_core::STANDARD_GRAVITY;
        let (m1, m2) = (a.link_masses[0], a.link_masses[1]);
        let (l1, l2) = (a.link_lengths[0], a.link_lengths[1]);
        // Gravity torque to HOLD the pose appears with a positive sign in
        // h for levers along +x and the +y pitch axis.
        let shoulder = m1 * g * l1 / 2.0 + m2 * g * (l1 + l2 / 2.0);
        let elbow = m2 * g * l2 / 2.0;
        assert!(
            (h[0].abs() - shoulder).abs() < 1e-10,
            "shoulder {} vs {}",
            h[0],
            shoulder
        );
        assert!((h[1].abs() - elbow).abs() < 1e-10);
    }

    #[test]
    fn extended_model_has_four_arm_joints() {
        let params = TemplateParams::default();
        let model = build_centaur_with_arms(&params).unwrap();
        assert_eq!(model.nv(), 22);
        assert_eq!(model.nq(), 23);
        let arms = arm_joint_indices(&model);
        assert_eq!(arms.len(), 4);
        assert!((model.total_mass() - (92.0 + 2.0 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = TemplateParams::default();
        p.leg_masses[2] = -1.0;
        assert!(build_centaur_template(&p).is_err());
        let mut p = TemplateParams::default();
        p.travel_lower[0] = 1.0;
        assert!(build_centaur_template(&p).is_err());
    }
}
