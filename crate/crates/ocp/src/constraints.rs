use crate::problem::Surface;
use nalgebra::Vector3;

/// Deterministic orthonormal tangent basis `(t1, t2)` for a unit normal.
pub fn tangent_basis(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    // Seed with the coordinate axis least aligned with the normal.
    let abs = normal.abs();
    let seed = if abs.x <= abs.y && abs.x <= abs.z {
        Vector3::x()
    } else if abs.y <= abs.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let t1 = seed.cross(normal).normalize();
    let t2 = normal.cross(&t1);
    (t1, t2)
}

/// Margin subtracted from the force threshold inside the pyramid. Makes the
/// linearized pyramid a strict inner approximation of the cone on the
/// threshold face as well, so pyramid acceptance implies the exact cone
/// test for every input.
pub const THRESHOLD_MARGIN: f64 = 1e-3;

/// Linearized friction residuals, all required `>= 0` for a force inside
/// the inner pyramid:
/// `[F·n - F_thr, mu~ F·n ± F·t1, mu~ F·n ± F·t2]` with `mu~ = mu / sqrt(2)`.
pub fn friction_pyramid(force: &Vector3<f64>, s: &Surface) -> [f64; 5] {
    let n = force.dot(&s.normal);
    let (t1, t2) = tangent_basis(&s.normal);
    let mu = s.friction / std::f64::consts::SQRT_2;
    let f1 = force.dot(&t1);
    let f2 = force.dot(&t2);
    [
        n - s.force_threshold - THRESHOLD_MARGIN,
        mu * n - f1,
        mu * n + f1,
        mu * n - f2,
        mu * n + f2,
    ]
}

/// Exact second-order friction cone membership: strictly positive loading
/// above the threshold and tangential force within `mu` times the normal
/// component.
pub fn friction_cone_check(force: &Vector3<f64>, s: &Surface) -> bool {
    let n = force.dot(&s.normal);
    if n <= s.force_threshold {
        return false;
    }
    let tangential = force - n * s.normal;
    tangential.norm() <= s.friction * n
}

/// Signed distance numerator of the plane equation `n·p + d = 0`.
pub fn surface_residual(p: &Vector3<f64>, s: &Surface) -> f64 {
    s.normal.dot(p) + s.offset
}
