use nalgebra::{DMatrix, DVector};

/// Central-difference step for coordinate `i`: `1e-6 * (1 + |z_i|)`.
fn step(z: f64) -> f64 {
    1e-6 * (1.0 + z.abs())
}

/// Central-difference Jacobian of a vector function with `m` outputs.
///
/// Panics on non-finite samples; derivative suppliers must be total on the
/// evaluation neighbourhood.
pub fn fd_jacobian(
    f: &dyn Fn(&DVector<f64>, &mut DVector<f64>),
    z: &DVector<f64>,
    m: usize,
) -> DMatrix<f64> {
    let n = z.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut zp = z.clone();
    let mut fp = DVector::zeros(m);
    let mut fm = DVector::zeros(m);
    for j in 0..n {
        let h = step(z[j]);
        zp[j] = z[j] + h;
        f(&zp, &mut fp);
        zp[j] = z[j] - h;
        f(&zp, &mut fm);
        zp[j] = z[j];
        for i in 0..m {
            let d = (fp[i] - fm[i]) / (2.0 * h);
            assert!(d.is_finite(), "non-finite sample in fd_jacobian at column {j}");
            jac[(i, j)] = d;
        }
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient(f: &dyn Fn(&DVector<f64>) -> f64, z: &DVector<f64>) -> DVector<f64> {
    let n = z.len();
    let mut g = DVector::zeros(n);
    let mut zp = z.clone();
    for j in 0..n {
        let h = step(z[j]);
        zp[j] = z[j] + h;
        let fp = f(&zp);
        zp[j] = z[j] - h;
        let fm = f(&zp);
        zp[j] = z[j];
        g[j] = (fp - fm) / (2.0 * h);
        assert!(g[j].is_finite(), "non-finite sample in fd_gradient at column {j}");
    }
    g
}
