use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::norm::hinf_norm;
use crate::error::{Error, Result};
use crate::linalg::{
    complete_basis, max_singular_value, max_singular_value_real, min_eigenvalue_symmetric,
    riccati_from_hamiltonian, spectral_radius, to_complex,
};
use crate::StateSpace;

/// Partitioned plant for H-infinity synthesis.
///
/// Inputs are ordered `[w_delta, w, u]` and outputs `[z_delta, z, y]`.
/// The synthesis objective covers the full `[w_delta, w] -> [z_delta, z]`
/// block.
#[derive(Clone, Debug)]
pub struct GeneralizedPlant {
    pub sys: StateSpace,
    pub n_wd: usize,
    pub n_w: usize,
    pub n_u: usize,
    pub n_zd: usize,
    pub n_z: usize,
    pub n_y: usize,
}

impl GeneralizedPlant {
    pub fn new(
        sys: StateSpace,
        (n_wd, n_w, n_u): (usize, usize, usize),
        (n_zd, n_z, n_y): (usize, usize, usize),
    ) -> Result<Self> {
        if sys.inputs() != n_wd + n_w + n_u || sys.outputs() != n_zd + n_z + n_y {
            return Err(Error::Dimension(format!(
                "generalized plant has {} inputs / {} outputs, partition says {} / {}",
                sys.inputs(),
                sys.outputs(),
                n_wd + n_w + n_u,
                n_zd + n_z + n_y
            )));
        }
        if n_u == 0 || n_y == 0 {
            return Err(Error::Dimension(
                "generalized plant needs control and measurement channels".into(),
            ));
        }
        Ok(Self {
            sys,
            n_wd,
            n_w,
            n_u,
            n_zd,
            n_z,
            n_y,
        })
    }

    pub fn n_exogenous(&self) -> usize {
        self.n_wd + self.n_w
    }

    pub fn n_performance(&self) -> usize {
        self.n_zd + self.n_z
    }

    /// Checks stabilizability of `(A, B2)` and detectability of `(C2, A)`
    /// with a PBH rank test on the closed right half-plane eigenvalues.
    pub fn check_stabilizable_detectable(&self) -> Result<()> {
        let a = self.sys.a();
        let n = a.nrows();
        let m1 = self.n_exogenous();
        let p1 = self.n_performance();
        let b2 = self.sys.b().columns(m1, self.n_u).clone_owned();
        let c2 = self.sys.c().rows(p1, self.n_y).clone_owned();
        let scale = a.norm() + b2.norm() + c2.norm();
        for lam in self.sys.poles() {
            if lam.re < 0.0 {
                continue;
            }
            let mut shifted = to_complex(a);
            for i in 0..n {
                shifted[(i, i)] -= lam;
            }
            let mut ctrb = DMatrix::<Complex64>::zeros(n, n + self.n_u);
            ctrb.view_mut((0, 0), (n, n)).copy_from(&shifted);
            ctrb.view_mut((0, n), (n, self.n_u))
                .copy_from(&to_complex(&b2));
            if min_singular(&ctrb) <= 1e-10 * scale {
                return Err(Error::InvalidArgument(format!(
                    "(A, B2) not stabilizable: mode {} is uncontrollable",
                    lam
                )));
            }
            let mut obsv = DMatrix::<Complex64>::zeros(n + self.n_y, n);
            obsv.view_mut((0, 0), (n, n)).copy_from(&shifted);
            obsv.view_mut((n, 0), (self.n_y, n))
                .copy_from(&to_complex(&c2));
            if min_singular(&obsv) <= 1e-10 * scale {
                return Err(Error::InvalidArgument(format!(
                    "(C2, A) not detectable: mode {} is unobservable",
                    lam
                )));
            }
        }
        Ok(())
    }

    /// Closed loop `[w_delta, w] -> [z_delta, z]` with controller `k`.
    pub fn close_loop(&self, k: &StateSpace) -> Result<StateSpace> {
        if k.inputs() != self.n_y || k.outputs() != self.n_u {
            return Err(Error::Dimension(format!(
                "controller is {}x{}, plant expects {}x{}",
                k.outputs(),
                k.inputs(),
                self.n_u,
                self.n_y
            )));
        }
        self.sys.lft_lower(k)
    }
}

fn min_singular(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisOptions {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Relative bisection tolerance on gamma.
    pub tol: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            gamma_min: 0.1,
            gamma_max: 100.0,
            tol: 1e-3,
        }
    }
}

/// One probe of the gamma iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaProbe {
    pub gamma: f64,
    pub feasible: bool,
    /// Which condition failed, when infeasible.
    pub reason: Option<String>,
}

/// Full-order result of [`hinfsyn`].
#[derive(Clone, Debug)]
pub struct HinfSolution {
    pub controller: StateSpace,
    pub gamma: f64,
    /// Closed-loop norm recomputed from scratch with the returned controller.
    pub closed_loop_norm: f64,
    pub history: Vec<GammaProbe>,
    /// Description of any virtual channels added to make `D12`/`D21` full rank.
    pub regularization: Option<String>,
}

/// Plant data in the normalized coordinates `D12 = [0; I]`, `D21 = [0, I]`.
struct Normalized {
    a: DMatrix<f64>,
    b1: DMatrix<f64>,
    b2: DMatrix<f64>,
    c1: DMatrix<f64>,
    c2: DMatrix<f64>,
    d11: DMatrix<f64>,
    /// `u = u_scale * u_normalized`
    u_scale: DMatrix<f64>,
    /// `y_normalized = y_scale * y`
    y_scale: DMatrix<f64>,
    d22: DMatrix<f64>,
}

impl Normalized {
    fn dims(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.a.nrows(),
            self.b1.ncols(),
            self.b2.ncols(),
            self.c1.nrows(),
            self.c2.nrows(),
        )
    }
}

const REGULARIZATION_EPS: f64 = 1e-6;

fn normalize(p: &GeneralizedPlant) -> Result<(Normalized, Option<String>)> {
    let sys = &p.sys;
    let m1 = p.n_exogenous();
    let m2 = p.n_u;
    let p1 = p.n_performance();
    let p2 = p.n_y;
    let a = sys.a().clone();
    let mut b1 = sys.b().columns(0, m1).clone_owned();
    let b2 = sys.b().columns(m1, m2).clone_owned();
    let mut c1 = sys.c().rows(0, p1).clone_owned();
    let c2 = sys.c().rows(p1, p2).clone_owned();
    let mut d11 = sys.d().view((0, 0), (p1, m1)).clone_owned();
    let mut d12 = sys.d().view((0, m1), (p1, m2)).clone_owned();
    let mut d21 = sys.d().view((p1, 0), (p2, m1)).clone_owned();
    let d22 = sys.d().view((p1, m1), (p2, m2)).clone_owned();
    let n = a.nrows();

    let mut notes = Vec::new();
    let scale12 = max_singular_value_real(&d12).max(1.0);
    if p1 < m2 || d12.clone().svd(false, false).singular_values.min() <= 1e-9 * scale12 {
        let eps = REGULARIZATION_EPS * scale12;
        let rows = d12.nrows();
        d12 = d12.insert_rows(rows, m2, 0.0);
        d12.view_mut((rows, 0), (m2, m2)).fill_with_identity();
        d12.view_mut((rows, 0), (m2, m2)).scale_mut(eps);
        c1 = c1.insert_rows(rows, m2, 0.0);
        d11 = d11.insert_rows(rows, m2, 0.0);
        notes.push(format!(
            "D12 rank deficient: added {} control penalty channel(s) with weight {:e}",
            m2, eps
        ));
    }
    let scale21 = max_singular_value_real(&d21).max(1.0);
    if m1 < p2 || d21.clone().svd(false, false).singular_values.min() <= 1e-9 * scale21 {
        let eps = REGULARIZATION_EPS * scale21;
        let cols = d21.ncols();
        d21 = d21.insert_columns(cols, p2, 0.0);
        d21.view_mut((0, cols), (p2, p2)).fill_with_identity();
        d21.view_mut((0, cols), (p2, p2)).scale_mut(eps);
        b1 = b1.insert_columns(cols, p2, 0.0);
        d11 = d11.insert_columns(cols, p2, 0.0);
        notes.push(format!(
            "D21 rank deficient: added {} sensor noise channel(s) with weight {:e}",
            p2, eps
        ));
    }
    let p1 = d12.nrows();
    let m1 = d21.ncols();

    // D12 = Q1 R  ->  z~ = [Qperp Q1]^T z, u = R^-1 u~
    let qr12 = d12.clone().qr();
    let (q1, r12) = (qr12.q(), qr12.r());
    let theta = complete_basis(&q1);
    let r12_inv = r12
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("D12 is not full column rank".into()))?;
    // D21^T = Q2 R2  ->  w = [Wperp Q2] w~, y~ = R2^-T y
    let qr21 = d21.transpose().qr();
    let (q2, r21) = (qr21.q(), qr21.r());
    let w = complete_basis(&q2);
    let y_scale = r21
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("D21 is not full row rank".into()))?;

    let b1n = &b1 * &w;
    let b2n = &b2 * &r12_inv;
    let c1n = theta.transpose() * &c1;
    let c2n = &y_scale * &c2;
    let d11n = theta.transpose() * &d11 * &w;
    debug_assert_eq!(b1n.nrows(), n);
    let _ = m1;
    let _ = p1;
    Ok((
        Normalized {
            a,
            b1: b1n,
            b2: b2n,
            c1: c1n,
            c2: c2n,
            d11: d11n,
            u_scale: r12_inv,
            y_scale,
            d22,
        },
        if notes.is_empty() {
            None
        } else {
            Some(notes.join("; "))
        },
    ))
}

/// Riccati solutions at an admissible gamma.
struct Feasible {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

fn d11_bound(np: &Normalized) -> f64 {
    let (_, m1, m2, p1, p2) = np.dims();
    let d = &np.d11;
    let top = d.view((0, 0), (p1 - m2, m1)).clone_owned();
    let left = d.view((0, 0), (p1, m1 - p2)).clone_owned();
    max_singular_value_real(&top).max(max_singular_value_real(&left))
}

fn riccati_pair(np: &Normalized, gamma: f64) -> std::result::Result<Feasible, String> {
    let (n, m1, m2, p1, p2) = np.dims();
    let g2 = gamma * gamma;
    let bound = d11_bound(np);
    if gamma <= bound * (1.0 + 1e-12) {
        return Err(format!("gamma below direct-feedthrough bound {:.6}", bound));
    }
    let mut d1 = DMatrix::zeros(p1, m1 + m2);
    d1.view_mut((0, 0), (p1, m1)).copy_from(&np.d11);
    d1.view_mut((p1 - m2, m1), (m2, m2)).fill_with_identity();
    let mut dd1 = DMatrix::zeros(p1 + p2, m1);
    dd1.view_mut((0, 0), (p1, m1)).copy_from(&np.d11);
    dd1.view_mut((p1, m1 - p2), (p2, p2)).fill_with_identity();
    let mut b = DMatrix::zeros(n, m1 + m2);
    b.view_mut((0, 0), (n, m1)).copy_from(&np.b1);
    b.view_mut((0, m1), (n, m2)).copy_from(&np.b2);
    let mut c = DMatrix::zeros(p1 + p2, n);
    c.view_mut((0, 0), (p1, n)).copy_from(&np.c1);
    c.view_mut((p1, 0), (p2, n)).copy_from(&np.c2);

    let mut r = d1.transpose() * &d1;
    for i in 0..m1 {
        r[(i, i)] -= g2;
    }
    let mut rt = &dd1 * dd1.transpose();
    for i in 0..p1 {
        rt[(i, i)] -= g2;
    }
    let r_lu = r.lu();
    let rt_lu = rt.lu();

    let rinv_d1t_c1 = r_lu.solve(&(d1.transpose() * &np.c1)).ok_or("R singular")?;
    let rinv_bt = r_lu.solve(&b.transpose()).ok_or("R singular")?;
    let ax = &np.a - &b * &rinv_d1t_c1;
    let mut hx = DMatrix::zeros(2 * n, 2 * n);
    hx.view_mut((0, 0), (n, n)).copy_from(&ax);
    hx.view_mut((0, n), (n, n)).copy_from(&(-&b * &rinv_bt));
    hx.view_mut((n, 0), (n, n))
        .copy_from(&(-np.c1.transpose() * &np.c1 + np.c1.transpose() * &d1 * &rinv_d1t_c1));
    hx.view_mut((n, n), (n, n)).copy_from(&(-ax.transpose()));

    let rtinv_dd1_b1t = rt_lu
        .solve(&(&dd1 * np.b1.transpose()))
        .ok_or("R~ singular")?;
    let rtinv_c = rt_lu.solve(&c).ok_or("R~ singular")?;
    let ay = np.a.transpose() - c.transpose() * &rtinv_dd1_b1t;
    let mut hy = DMatrix::zeros(2 * n, 2 * n);
    hy.view_mut((0, 0), (n, n)).copy_from(&ay);
    hy.view_mut((0, n), (n, n))
        .copy_from(&(-c.transpose() * &rtinv_c));
    hy.view_mut((n, 0), (n, n))
        .copy_from(&(-&np.b1 * np.b1.transpose() + &np.b1 * dd1.transpose() * &rtinv_dd1_b1t));
    hy.view_mut((n, n), (n, n)).copy_from(&(-ay.transpose()));

    let x = riccati_from_hamiltonian(&hx).map_err(|e| format!("X Riccati: {}", e))?;
    let y = riccati_from_hamiltonian(&hy).map_err(|e| format!("Y Riccati: {}", e))?;
    let xmin = min_eigenvalue_symmetric(&x);
    if xmin < -1e-8 * x.norm().max(1.0) {
        return Err(format!(
            "X Riccati solution not positive semidefinite (min eigenvalue {:e})",
            xmin
        ));
    }
    let ymin = min_eigenvalue_symmetric(&y);
    if ymin < -1e-8 * y.norm().max(1.0) {
        return Err(format!(
            "Y Riccati solution not positive semidefinite (min eigenvalue {:e})",
            ymin
        ));
    }
    let rho = spectral_radius(&(&x * &y));
    if rho >= g2 {
        return Err(format!(
            "coupling condition violated: rho(XY) = {:.6e} >= gamma^2 = {:.6e}",
            rho, g2
        ));
    }
    Ok(Feasible { x, y })
}

fn lower_cholesky(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, String> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| "feedthrough factor not positive definite".to_string())
}

/// Central controller in normalized coordinates (maps `y~` to `u~`).
fn central_controller(
    np: &Normalized,
    gamma: f64,
    f: &Feasible,
) -> std::result::Result<StateSpace, String> {
    let (n, m1, m2, p1, p2) = np.dims();
    let g2 = gamma * gamma;
    let (x, y) = (&f.x, &f.y);
    let mut d1 = DMatrix::zeros(p1, m1 + m2);
    d1.view_mut((0, 0), (p1, m1)).copy_from(&np.d11);
    d1.view_mut((p1 - m2, m1), (m2, m2)).fill_with_identity();
    let mut dd1 = DMatrix::zeros(p1 + p2, m1);
    dd1.view_mut((0, 0), (p1, m1)).copy_from(&np.d11);
    dd1.view_mut((p1, m1 - p2), (p2, p2)).fill_with_identity();
    let mut b = DMatrix::zeros(n, m1 + m2);
    b.view_mut((0, 0), (n, m1)).copy_from(&np.b1);
    b.view_mut((0, m1), (n, m2)).copy_from(&np.b2);
    let mut c = DMatrix::zeros(p1 + p2, n);
    c.view_mut((0, 0), (p1, n)).copy_from(&np.c1);
    c.view_mut((p1, 0), (p2, n)).copy_from(&np.c2);
    let mut r = d1.transpose() * &d1;
    for i in 0..m1 {
        r[(i, i)] -= g2;
    }
    let mut rt = &dd1 * dd1.transpose();
    for i in 0..p1 {
        rt[(i, i)] -= g2;
    }

    let fm = -r
        .lu()
        .solve(&(d1.transpose() * &np.c1 + b.transpose() * x))
        .ok_or("R singular")?;
    let lm = -rt
        .lu()
        .solve(&(&dd1 * np.b1.transpose() + &c * y))
        .ok_or("R~ singular")?
        .transpose();

    let (q1, r1) = (p1 - m2, m1 - p2);
    let f12 = fm.rows(r1, p2).clone_owned();
    let f2 = fm.rows(m1, m2).clone_owned();
    let l12 = lm.columns(q1, m2).clone_owned();
    let l2 = lm.columns(p1, p2).clone_owned();
    let d1111 = np.d11.view((0, 0), (q1, r1)).clone_owned();
    let d1112 = np.d11.view((0, r1), (q1, p2)).clone_owned();
    let d1121 = np.d11.view((q1, 0), (m2, r1)).clone_owned();
    let d1122 = np.d11.view((q1, r1), (m2, p2)).clone_owned();

    let mut left = -&d1111 * d1111.transpose();
    for i in 0..q1 {
        left[(i, i)] += g2;
    }
    let mut right = -d1111.transpose() * &d1111;
    for i in 0..r1 {
        right[(i, i)] += g2;
    }
    let left_inv = if q1 > 0 {
        left.try_inverse().ok_or("singular D1111 factor")?
    } else {
        left
    };
    let right_inv = if r1 > 0 {
        right.try_inverse().ok_or("singular D1111 factor")?
    } else {
        right
    };

    let dh11 = -&d1121 * d1111.transpose() * &left_inv * &d1112 - &d1122;
    let dh12 =
        lower_cholesky(&(DMatrix::identity(m2, m2) - &d1121 * &right_inv * d1121.transpose()))?;
    let dh21 =
        lower_cholesky(&(DMatrix::identity(p2, p2) - d1112.transpose() * &left_inv * &d1112))?
            .transpose();
    let dh12_inv = dh12.clone().try_inverse().ok_or("D^12 singular")?;
    let dh21_inv = dh21.clone().try_inverse().ok_or("D^21 singular")?;

    let zinv = DMatrix::identity(n, n) - y * x / g2;
    let z = zinv.try_inverse().ok_or("I - YX/gamma^2 singular")?;

    let bh2 = &z * (&np.b2 + &l12) * &dh12;
    let ch2 = -&dh21 * (&np.c2 + &f12);
    let bh1 = -&z * &l2 + &bh2 * &dh12_inv * &dh11;
    let ch1 = &f2 + &dh11 * &dh21_inv * &ch2;
    let ah = &np.a + &b * &fm + &bh1 * &dh21_inv * &ch2;
    StateSpace::new(ah, bh1, ch1, dh11).map_err(|e| e.to_string())
}

/// Maps a normalized-coordinate controller back to the plant's `y -> u`.
fn denormalize(np: &Normalized, k: &StateSpace) -> Result<StateSpace> {
    let k = k.scaled(&np.u_scale, &np.y_scale)?;
    if np.d22.iter().all(|v| *v == 0.0) {
        return Ok(k);
    }
    // plant with D22: u = K (y - D22 u)
    let d22 = StateSpace::gain(np.d22.clone());
    k.feedback(&d22, -1.0)
}

/// Diagonal state scaling that evens out row and column norms of
/// `[A B; C 0]`; the transfer function is unchanged.
pub fn balance_realization(sys: &StateSpace) -> StateSpace {
    let n = sys.order();
    if n == 0 {
        return sys.clone();
    }
    let (a, b, c) = (sys.a(), sys.b(), sys.c());
    let mut d = vec![1.0f64; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for k in 0..n {
                if k != i {
                    col += (a[(k, i)] * d[i] / d[k]).abs();
                    row += (a[(i, k)] * d[k] / d[i]).abs();
                }
            }
            for k in 0..c.nrows() {
                col += (c[(k, i)] * d[i]).abs();
            }
            for k in 0..b.ncols() {
                row += (b[(i, k)] / d[i]).abs();
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let total = col + row;
            let (mut cc, mut rr) = (col, row);
            while cc < rr / 2.0 {
                f *= 2.0;
                cc *= 2.0;
                rr /= 2.0;
            }
            while cc >= rr * 2.0 {
                f /= 2.0;
                cc /= 2.0;
                rr *= 2.0;
            }
            if cc + rr < 0.95 * total {
                d[i] *= f;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let t = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    sys.similarity(&t).unwrap_or_else(|_| sys.clone())
}

/// Gamma-iteration H-infinity synthesis with the two-Riccati central controller.
///
/// Bisects geometrically on gamma over `[gamma_min, gamma_max]` until the
/// bracket is within `tol` relative, then builds the central controller at
/// the smallest feasible level. If the recomputed closed loop does not
/// confirm that level (possible right at the optimum), gamma is relaxed by
/// `tol` steps until it does.
pub fn hinfsyn(p: &GeneralizedPlant, opts: &SynthesisOptions) -> Result<HinfSolution> {
    if !(opts.gamma_min > 0.0) || !(opts.gamma_max > opts.gamma_min) || !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(
            "gamma bracket must satisfy 0 < min < max and tol > 0".into(),
        ));
    }
    p.check_stabilizable_detectable()?;
    let balanced = GeneralizedPlant {
        sys: balance_realization(&p.sys),
        ..p.clone()
    };
    let (np, regularization) = normalize(&balanced)?;

    let mut history = Vec::new();
    let probe = |gamma: f64, history: &mut Vec<GammaProbe>| -> Option<Feasible> {
        match riccati_pair(&np, gamma) {
            Ok(f) => {
                history.push(GammaProbe {
                    gamma,
                    feasible: true,
                    reason: None,
                });
                Some(f)
            }
            Err(reason) => {
                history.push(GammaProbe {
                    gamma,
                    feasible: false,
                    reason: Some(reason),
                });
                None
            }
        }
    };

    if probe(opts.gamma_max, &mut history).is_none() {
        let reason = history
            .last()
            .and_then(|h| h.reason.clone())
            .unwrap_or_default();
        return Err(Error::Infeasible {
            gamma: opts.gamma_max,
            reason: format!("infeasible at gamma upper bound: {}", reason),
        });
    }
    let mut hi = opts.gamma_max;
    let mut lo = opts.gamma_min;
    if probe(lo, &mut history).is_some() {
        hi = lo;
    } else {
        while hi / lo - 1.0 > opts.tol {
            let mid = (hi * lo).sqrt();
            if probe(mid, &mut history).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let mut gamma = hi;
    let mut last_err = String::new();
    for _ in 0..60 {
        if let Some(f) = probe(gamma, &mut history) {
            match central_controller(&np, gamma, &f)
                .map_err(Error::InvalidArgument)
                .and_then(|k| denormalize(&np, &k))
            {
                Ok(k) => {
                    let cl = p.close_loop(&k)?;
                    if cl.is_stable() {
                        let norm = hinf_norm(&cl, 1e-9).value;
                        if norm <= gamma * (1.0 + 1e-6) {
                            return Ok(HinfSolution {
                                controller: k,
                                gamma,
                                closed_loop_norm: norm,
                                history,
                                regularization,
                            });
                        }
                        last_err =
                            format!("closed-loop norm {:.6} exceeds gamma {:.6}", norm, gamma);
                    } else {
                        last_err = format!(
                            "closed loop unstable (abscissa {:e})",
                            cl.spectral_abscissa()
                        );
                    }
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        gamma *= 1.0 + opts.tol;
        if gamma > opts.gamma_max {
            break;
        }
    }
    Err(Error::Infeasible {
        gamma,
        reason: format!("controller construction failed: {}", last_err),
    })
}

/// Largest singular value of the closed loop at one frequency; handy for reports.
pub fn closed_loop_gain_at(cl: &StateSpace, omega: f64) -> f64 {
    cl.eval_jw(omega)
        .map(|g| max_singular_value(&g))
        .unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant_1st_order() -> GeneralizedPlant {
        // x' = -x + w + u ; z = [x; u] ; y = x + w
        let a = DMatrix::from_element(1, 1, -1.0);
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let c = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 1.0]);
        let d = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        GeneralizedPlant::new(StateSpace::new(a, b, c, d).unwrap(), (0, 1, 1), (0, 2, 1)).unwrap()
    }

    #[test]
    fn partition_must_match() {
        let p = plant_1st_order();
        assert!(GeneralizedPlant::new(p.sys.clone(), (1, 1, 1), (0, 2, 1)).is_err());
    }

    #[test]
    fn first_order_synthesis_meets_its_gamma() {
        let p = plant_1st_order();
        let sol = hinfsyn(&p, &SynthesisOptions::default()).unwrap();
        assert!(sol.closed_loop_norm <= sol.gamma * (1.0 + 1e-6));
        assert!(p.close_loop(&sol.controller).unwrap().is_stable());
        // zero controller gives norm 1 (x channel at DC), so the optimum is below 1
        assert!(sol.gamma < 1.0);
    }

    #[test]
    fn infeasible_upper_bound_reported() {
        let p = plant_1st_order();
        let opts = SynthesisOptions {
            gamma_min: 0.01,
            gamma_max: 0.05,
            tol: 1e-3,
        };
        match hinfsyn(&p, &opts) {
            Err(Error::Infeasible { reason, .. }) => assert!(reason.contains("upper bound")),
            other => panic!("expected infeasible, got {:?}", other.map(|s| s.gamma)),
        }
    }

    #[test]
    fn balancing_preserves_response() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1e4, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1e-3, 1.0]);
        let sys = StateSpace::new(a, b, c, DMatrix::zeros(1, 1)).unwrap();
        let bal = balance_realization(&sys);
        for w in [0.1, 1.0, 10.0] {
            let d = sys.eval_jw(w).unwrap()[(0, 0)] - bal.eval_jw(w).unwrap()[(0, 0)];
            assert!(d.norm() < 1e-12);
        }
        assert!(bal.a()[(0, 1)].abs() < 1e4);
    }
}
