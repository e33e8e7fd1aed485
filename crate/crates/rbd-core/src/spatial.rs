use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

/// 6D spatial vector in Plücker coordinates, block order (angular, linear).
pub type Vec6 = Vector6<f64>;

pub fn spatial_vec(ang: &Vector3<f64>, lin: &Vector3<f64>) -> Vec6 {
    Vec6::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

pub fn angular(v: &Vec6) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

pub fn linear(v: &Vec6) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Motion cross product `v ×m w`.
pub fn cross_motion(v: &Vec6, w: &Vec6) -> Vec6 {
    let (wv, vv) = (angular(v), linear(v));
    let (ww, vw) = (angular(w), linear(w));
    spatial_vec(&wv.cross(&ww), &(wv.cross(&vw) + vv.cross(&ww)))
}

/// Force cross product `v ×f f` (dual of the motion cross product).
pub fn cross_force(v: &Vec6, f: &Vec6) -> Vec6 {
    let (wv, vv) = (angular(v), linear(v));
    let (nf, ff) = (angular(f), linear(f));
    spatial_vec(&(wv.cross(&nf) + vv.cross(&ff)), &wv.cross(&ff))
}

/// Spatial inertia of a rigid body expressed at the world origin, given its
/// world-frame CoM position and rotational inertia about that CoM.
///
/// In (angular, linear) block order:
/// `[ I_c + m cx cx^T, m cx; m cx^T, m I ]` with `cx = skew(com)`.
pub fn spatial_inertia_at_origin(
    mass: f64,
    com: &Vector3<f64>,
    inertia_about_com: &Matrix3<f64>,
) -> Matrix6<f64> {
    let cx = skew(com);
    let m_cx = cx * mass;
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(inertia_about_com + m_cx * cx.transpose()));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&m_cx);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&m_cx.transpose());
    out.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * mass));
    out
}

/// Rigid placement with separate motion and force (adjoint) mappings.
///
/// `rotation` maps child coordinates to parent coordinates and `translation`
/// is the child origin expressed in the parent frame.
#[derive(Debug, Clone, Copy)]
pub struct SpatialTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SpatialTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Pure translation of the application point (world-aligned frames).
    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Map a motion vector (angular, linear at child origin) into the parent
    /// frame with the linear part referred to the parent origin.
    pub fn apply_motion(&self, m: &Vec6) -> Vec6 {
        let w = self.rotation * angular(m);
        let v = self.rotation * linear(m) + self.translation.cross(&w);
        spatial_vec(&w, &v)
    }

    /// Map a force vector (moment about child origin, force) into the parent
    /// frame with the moment referred to the parent origin.
    pub fn apply_force(&self, f: &Vec6) -> Vec6 {
        let fo = self.rotation * linear(f);
        let n = self.rotation * angular(f) + self.translation.cross(&fo);
        spatial_vec(&n, &fo)
    }

    /// 6x6 adjoint acting on motion vectors.
    pub fn motion_matrix(&self) -> Matrix6<f64> {
        let mut x = Matrix6::zeros();
        x.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        x.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(skew(&self.translation) * self.rotation));
        x.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        x
    }

    /// 6x6 adjoint acting on force vectors.
    pub fn force_matrix(&self) -> Matrix6<f64> {
        let mut x = Matrix6::zeros();
        x.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        x.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(skew(&self.translation) * self.rotation));
        x.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        x
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn force_adjoint_preserves_power() {
        // <X_f f, X_m v> = <f, v> for any rigid placement.
        let r = crate::Quaternion::from_axis_angle(&Vector3::new(0.3, -1.0, 0.4), 1.1)
            .rotation_matrix();
        let x = SpatialTransform::new(r, Vector3::new(0.5, -0.2, 1.4));
        let f = spatial_vec(&Vector3::new(1.0, 2.0, -0.5), &Vector3::new(0.3, -0.7, 2.0));
        let v = spatial_vec(&Vector3::new(-0.4, 0.8, 0.1), &Vector3::new(1.5, 0.2, -0.9));
        let lhs = x.apply_force(&f).dot(&x.apply_motion(&v));
        assert_abs_diff_eq!(lhs, f.dot(&v), epsilon = 1e-12);
    }

    #[test]
    fn adjoint_matrices_match_apply() {
        let r = crate::Quaternion::from_axis_angle(&Vector3::new(1.0, 0.2, -0.3), -0.8)
            .rotation_matrix();
        let x = SpatialTransform::new(r, Vector3::new(-1.0, 0.4, 0.2));
        let v = spatial_vec(&Vector3::new(0.1, -0.2, 0.3), &Vector3::new(-0.4, 0.5, -0.6));
        assert_abs_diff_eq!(x.motion_matrix() * v, x.apply_motion(&v), epsilon = 1e-14);
        assert_abs_diff_eq!(x.force_matrix() * v, x.apply_force(&v), epsilon = 1e-14);
    }

    #[test]
    fn spatial_inertia_is_symmetric() {
        let i = spatial_inertia_at_origin(
            3.5,
            &Vector3::new(0.2, -0.1, 0.7),
            &Matrix3::new(0.4, 0.01, 0.0, 0.01, 0.3, -0.02, 0.0, -0.02, 0.5),
        );
        assert!((i - i.transpose()).norm() < 1e-14);
    }
}
