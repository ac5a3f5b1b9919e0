//! Dense double-precision helpers shared by the synthesis engines.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Complex Schur form `m = q t q^H` with `t` upper triangular.
pub fn complex_schur(m: &DMatrix<f64>) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let s =
        Schur::try_new(to_complex(m), f64::EPSILON, 200 * n.max(10)).ok_or(Error::NoConvergence)?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Swaps the adjacent diagonal entries `k`, `k+1` of the triangular factor
/// with a Givens rotation, updating the Schur vectors.
fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let c = t[(k, k + 1)];
    // eigenvector of the 2x2 block for eigenvalue b
    let x1 = c;
    let x2 = b - a;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (g11, g21) = (x1 / nrm, x2 / nrm);
    let (g12, g22) = (-g21.conj(), g11.conj());
    // rows: t <- G^H t
    for j in 0..n {
        let (r0, r1) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = g11.conj() * r0 + g21.conj() * r1;
        t[(k + 1, j)] = g12.conj() * r0 + g22.conj() * r1;
    }
    // columns: t <- t G, q <- q G
    for i in 0..n {
        let (c0, c1) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = c0 * g11 + c1 * g21;
        t[(i, k + 1)] = c0 * g12 + c1 * g22;
        let (c0, c1) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = c0 * g11 + c1 * g21;
        q[(i, k + 1)] = c0 * g12 + c1 * g22;
    }
    t[(k + 1, k)] = Complex64::new(0.0, 0.0);
}

/// Reorders a complex Schur form so that eigenvalues accepted by `select`
/// come first. Returns how many were selected.
pub fn reorder_schur(
    q: &mut CMatrix,
    t: &mut CMatrix,
    select: impl Fn(Complex64) -> bool,
) -> usize {
    let n = t.nrows();
    let mut placed = 0;
    for j in 0..n {
        if select(t[(j, j)]) {
            let mut k = j;
            while k > placed {
                swap_adjacent(q, t, k - 1);
                k -= 1;
            }
            placed += 1;
        }
    }
    placed
}

/// True when `lambda` is on the imaginary axis to within rounding of a
/// matrix with Frobenius norm `scale`.
pub fn near_imaginary_axis(lambda: Complex64, scale: f64) -> bool {
    lambda.re.abs() <= 1e-9 * lambda.norm() + 1e-13 * scale
}

/// Stabilizing solution of the Riccati equation encoded by the Hamiltonian
/// `h` (size `2n`): the `X` with `Im [I; X]` equal to the stable invariant
/// subspace of `h`.
pub fn riccati_from_hamiltonian(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n2 = h.nrows();
    if !n2.is_multiple_of(2) || h.ncols() != n2 {
        return Err(Error::Dimension(
            "Hamiltonian must be square with even size".into(),
        ));
    }
    let n = n2 / 2;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let scale = h.norm();
    let (mut q, mut t) = complex_schur(h)?;
    if (0..n2).any(|i| near_imaginary_axis(t[(i, i)], scale)) {
        return Err(Error::NoStabilizingSolution(
            "Hamiltonian has imaginary-axis eigenvalues".into(),
        ));
    }
    let k = reorder_schur(&mut q, &mut t, |l| l.re < 0.0);
    if k != n {
        return Err(Error::NoStabilizingSolution(format!(
            "stable subspace has dimension {} instead of {}",
            k, n
        )));
    }
    let u1 = q.view((0, 0), (n, n)).clone_owned();
    let u2 = q.view((n, 0), (n, n)).clone_owned();
    let svd = u1.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-13 * smax.max(1e-300) {
        return Err(Error::NoStabilizingSolution(
            "stable subspace is not complementary to the graph subspace".into(),
        ));
    }
    // X = U2 U1^-1, computed as the solution of U1^T X^T = U2^T
    let xt = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or_else(|| Error::NoStabilizingSolution("singular stable-subspace basis".into()))?;
    let xc = xt.transpose();
    let x = xc.map(|z| z.re);
    Ok(symmetrize(&x))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_singular_value(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn max_singular_value_real(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn min_eigenvalue_symmetric(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Symmetric square-root factor `L` with `m = L L^T` for positive
/// semidefinite `m` (negative eigenvalues from rounding are clipped).
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut l = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for i in 0..l.nrows() {
            l[(i, j)] *= s;
        }
    }
    l
}

/// Orthonormal completion: returns `[q_perp, q]` orthogonal, where `q` has
/// orthonormal columns.
pub fn complete_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = q.shape();
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    let existing: Vec<nalgebra::DVector<f64>> = (0..k).map(|j| q.column(j).clone_owned()).collect();
    for e in 0..n {
        if basis.len() == n - k {
            break;
        }
        let mut v = nalgebra::DVector::<f64>::zeros(n);
        v[e] = 1.0;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for u in existing.iter().chain(basis.iter()) {
                let p = u.dot(&v);
                v -= u * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            basis.push(v / nv);
        }
    }
    let mut out = DMatrix::zeros(n, n);
    for (j, v) in basis.iter().enumerate() {
        out.set_column(j, v);
    }
    for j in 0..k {
        out.set_column(n - k + j, &q.column(j));
    }
    out
}
