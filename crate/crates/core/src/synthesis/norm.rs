use nalgebra::DMatrix;

use crate::linalg::{eigenvalues, max_singular_value, max_singular_value_real};
use crate::lti::logspace;
use crate::StateSpace;

/// Peak gain of a stable system and where it occurs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HinfNorm {
    /// `+inf` when the system is unstable.
    pub value: f64,
    /// Frequency of the peak in rad/s (`inf` when attained as `s -> inf`).
    pub peak_omega: f64,
}

impl HinfNorm {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn sigma_max_at(sys: &StateSpace, omega: f64) -> f64 {
    match sys.eval_jw(omega) {
        Some(g) => max_singular_value(&g),
        None => f64::INFINITY,
    }
}

/// Golden-section search on `log w` for the largest `sigma_max` in `[lo, hi]`.
///
/// Only ever raises `(lower, peak)`, so the bound stays valid even when the
/// bracket misses the true maximum.
fn polish_peak(sys: &StateSpace, lo: f64, hi: f64, lower: &mut f64, peak: &mut f64) {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return;
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let f = |x: f64| sigma_max_at(sys, x.exp());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > *lower {
            *lower = v;
            *peak = x.exp();
        }
    }
}

/// Hamiltonian whose imaginary-axis eigenvalues are the frequencies where
/// `gamma` is a singular value of the system.
fn gain_hamiltonian(sys: &StateSpace, gamma: f64) -> Option<DMatrix<f64>> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = a.nrows();
    let m = b.ncols();
    let p = c.nrows();
    let r = DMatrix::<f64>::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let r_lu = r.lu();
    let rinv_dt_c = r_lu.solve(&(d.transpose() * c))?;
    let rinv_bt = r_lu.solve(&b.transpose())?;
    let ar = a + b * &rinv_dt_c;
    let q = c.transpose() * (DMatrix::<f64>::identity(p, p) + d * r_lu.solve(&d.transpose())?) * c;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&ar);
    h.view_mut((0, n), (n, n)).copy_from(&(b * rinv_bt));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-ar.transpose()));
    Some(h)
}

/// H-infinity norm to relative accuracy `tol`.
///
/// A frequency sweep seeds a lower bound; the level `(1 + tol) * lower` is
/// then tested through the imaginary-axis eigenvalues of the associated
/// Hamiltonian, and any crossing frequencies found raise the lower bound
/// until the test level clears the peak.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> HinfNorm {
    let tol = tol.max(1e-14);
    let dmax = max_singular_value_real(sys.d());
    if sys.order() == 0 {
        return HinfNorm {
            value: dmax,
            peak_omega: 0.0,
        };
    }
    let poles = sys.poles();
    if poles.iter().any(|p| p.re >= 0.0) {
        return HinfNorm {
            value: f64::INFINITY,
            peak_omega: f64::NAN,
        };
    }

    let mut lower = dmax;
    let mut peak = f64::INFINITY;
    let probe = |w: f64, lower: &mut f64, peak: &mut f64| {
        let s = sigma_max_at(sys, w);
        if s > *lower {
            *lower = s;
            *peak = w;
        }
    };
    probe(0.0, &mut lower, &mut peak);
    let mags: Vec<f64> = poles
        .iter()
        .map(|p| p.norm())
        .filter(|m| *m > 0.0)
        .collect();
    for p in &poles {
        if p.im.abs() > 0.0 {
            probe(p.im.abs(), &mut lower, &mut peak);
        }
        if p.norm() > 0.0 {
            probe(p.norm(), &mut lower, &mut peak);
        }
    }
    if let (Some(lo), Some(hi)) = (
        mags.iter().cloned().reduce(f64::min),
        mags.iter().cloned().reduce(f64::max),
    ) {
        // a pair damped near 1/sqrt(2) peaks far below its natural frequency
        let grid = logspace(lo / 1000.0, hi * 10.0, 200);
        let vals: Vec<f64> = grid.iter().map(|&w| sigma_max_at(sys, w)).collect();
        for (&w, &v) in grid.iter().zip(&vals) {
            if v > lower {
                lower = v;
                peak = w;
            }
        }
        for i in 1..grid.len() - 1 {
            if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
                polish_peak(sys, grid[i - 1], grid[i + 1], &mut lower, &mut peak);
            }
        }
    }
    polish_peak(sys, peak * 0.98, peak * 1.02, &mut lower, &mut peak);
    if lower == 0.0 {
        return HinfNorm {
            value: 0.0,
            peak_omega: 0.0,
        };
    }

    for _ in 0..100 {
        let gamma = lower * (1.0 + tol);
        let h = match gain_hamiltonian(sys, gamma) {
            Some(h) => h,
            None => break,
        };
        let scale = h.norm();
        let mut crossings: Vec<f64> = eigenvalues(&h)
            .into_iter()
            .filter(|l| l.re.abs() <= 1e-7 * l.norm() + 1e-13 * scale && l.im >= 0.0)
            .map(|l| l.im)
            .collect();
        if crossings.is_empty() {
            break;
        }
        crossings.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut candidates = crossings.clone();
        for w in crossings.windows(2) {
            candidates.push(0.5 * (w[0] + w[1]));
            if w[0] > 0.0 {
                candidates.push((w[0] * w[1]).sqrt());
            }
        }
        let before = lower;
        for w in candidates {
            probe(w, &mut lower, &mut peak);
        }
        polish_peak(sys, peak * 0.98, peak * 1.02, &mut lower, &mut peak);
        if lower <= before {
            break;
        }
    }
    HinfNorm {
        value: lower,
        peak_omega: peak,
    }
}
