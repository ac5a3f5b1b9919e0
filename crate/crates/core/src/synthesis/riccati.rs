use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, riccati_from_hamiltonian};

/// Stabilizing solution of `A^T X + X A - X B R^-1 B^T X + Q = 0`.
///
/// Built from the ordered Schur form of the Hamiltonian
/// `[A, -B R^-1 B^T; -Q, -A^T]`; the returned `X` makes
/// `A - B R^-1 B^T X` Hurwitz.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::Dimension("CARE: A, B, Q, R do not conform".into()));
    }
    if (q - q.transpose()).norm() > 1e-12 * q.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument("CARE: Q must be symmetric".into()));
    }
    if (r - r.transpose()).norm() > 1e-12 * r.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument("CARE: R must be symmetric".into()));
    }
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("CARE: R must be positive definite".into()))?;
    let s = b * chol.solve(&b.transpose());
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let x = riccati_from_hamiltonian(&h)?;
    let closed = a - &s * &x;
    let abscissa = eigenvalues(&closed)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::NoStabilizingSolution(format!(
            "closed-loop matrix not Hurwitz (largest real part {:e})",
            abscissa
        )));
    }
    Ok(x)
}

/// Frobenius norm of the CARE residual.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> f64 {
    let rinv_bt = r.clone().lu().solve(&b.transpose()).expect("R invertible");
    (a.transpose() * x + x * a - x * b * rinv_bt * x + q).norm()
}
