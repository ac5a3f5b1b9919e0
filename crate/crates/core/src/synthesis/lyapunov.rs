use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{complex_schur, symmetrize, to_complex};

/// Solves `A P + P A^T + Q = 0` for Hurwitz `A` and symmetric `Q`.
///
/// Complex Schur form of `A` followed by back-substitution on the
/// triangular equation `T P~ + P~ T^H = -Q~`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::Dimension(
            "Lyapunov: A and Q must be square and conformable".into(),
        ));
    }
    if (q - q.transpose()).norm() > 1e-12 * q.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(
            "Lyapunov: Q must be symmetric".into(),
        ));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (u, t) = complex_schur(a)?;
    let abscissa = (0..n)
        .map(|i| t[(i, i)].re)
        .fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz(abscissa));
    }
    let qt = u.adjoint() * to_complex(q) * &u;
    let mut p = DMatrix::<Complex64>::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = -qt[(i, j)];
            for k in i + 1..n {
                rhs -= t[(i, k)] * p[(k, j)];
            }
            for k in j + 1..n {
                rhs -= p[(i, k)] * t[(j, k)].conj();
            }
            p[(i, j)] = rhs / (t[(i, i)] + t[(j, j)].conj());
        }
    }
    let full = &u * p * u.adjoint();
    Ok(symmetrize(&full.map(|z| z.re)))
}

/// Controllability gramian `Wc` with `A Wc + Wc A^T + B B^T = 0`.
pub fn controllability_gramian(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_lyapunov(a, &(b * b.transpose()))
}

/// Observability gramian `Wo` with `A^T Wo + Wo A + C^T C = 0`.
pub fn observability_gramian(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_lyapunov(&a.transpose(), &(c.transpose() * c))
}

/// Frobenius norm of `A P + P A^T + Q`.
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a * p + p * a.transpose() + q).norm()
}
