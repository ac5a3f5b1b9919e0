use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lyapunov::{controllability_gramian, observability_gramian};
use crate::error::{Error, Result};
use crate::linalg::{max_singular_value, psd_factor};
use crate::lti::logspace;
use crate::StateSpace;

/// Hankel singular values below this fraction of the largest are always dropped.
pub const HSV_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TruncationTarget {
    Order(usize),
    /// Keep every state whose Hankel singular value exceeds this fraction of the largest.
    HsvTol(f64),
}

#[derive(Clone, Debug)]
pub struct Truncation {
    pub reduced: StateSpace,
    /// Sorted descending, one per state of the input system.
    pub hsv: Vec<f64>,
    /// `2 * sum` of the discarded Hankel singular values.
    pub error_bound: f64,
}

/// Hankel singular values of a stable system, sorted descending.
pub fn hankel_singular_values(sys: &StateSpace) -> Result<Vec<f64>> {
    let (lp, lq) = gramian_factors(sys)?;
    Ok(hsv_from_factors(&lp, &lq).0)
}

fn gramian_factors(sys: &StateSpace) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !sys.is_stable() {
        return Err(Error::NotHurwitz(sys.spectral_abscissa()));
    }
    let wc = controllability_gramian(sys.a(), sys.b())?;
    let wo = observability_gramian(sys.a(), sys.c())?;
    Ok((psd_factor(&wc), psd_factor(&wo)))
}

fn hsv_from_factors(
    lp: &DMatrix<f64>,
    lq: &DMatrix<f64>,
) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let svd = (lq.transpose() * lp).svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    // nalgebra does not promise an order, so sort explicitly
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let hsv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), idx.len(), |r, c| u[(r, idx[c])]);
    let v = DMatrix::from_fn(vt.ncols(), idx.len(), |r, c| vt[(idx[c], r)]);
    (hsv, u, v)
}

/// Square-root balanced truncation.
///
/// The kept order never exceeds the number of Hankel singular values above
/// [`HSV_FLOOR`] relative to the largest, so `Order(n)` on a non-minimal
/// realization still drops the uncontrollable/unobservable part.
pub fn balanced_truncate(sys: &StateSpace, target: TruncationTarget) -> Result<Truncation> {
    let n = sys.order();
    if n == 0 {
        return Ok(Truncation {
            reduced: sys.clone(),
            hsv: Vec::new(),
            error_bound: 0.0,
        });
    }
    let (lp, lq) = gramian_factors(sys)?;
    let (hsv, u, v) = hsv_from_factors(&lp, &lq);
    let top = hsv[0];
    let significant = hsv.iter().filter(|&&s| s > HSV_FLOOR * top).count();
    let k = match target {
        TruncationTarget::Order(k) => {
            if k > n {
                return Err(Error::InvalidArgument(format!(
                    "target order {} exceeds system order {}",
                    k, n
                )));
            }
            k.min(significant)
        }
        TruncationTarget::HsvTol(tol) => {
            if !(tol >= 0.0) {
                return Err(Error::InvalidArgument(
                    "HSV tolerance must be nonnegative".into(),
                ));
            }
            hsv.iter()
                .filter(|&&s| s > tol.max(HSV_FLOOR) * top)
                .count()
        }
    };
    let error_bound = 2.0 * hsv[k..].iter().sum::<f64>();
    let scale = DVector::from_iterator(k, hsv[..k].iter().map(|s| 1.0 / s.sqrt()));
    let sinv = DMatrix::from_diagonal(&scale);
    let t = &lp * v.columns(0, k) * &sinv;
    let ti = &sinv * u.columns(0, k).transpose() * lq.transpose();
    let reduced = StateSpace::new(
        &ti * sys.a() * &t,
        &ti * sys.b(),
        sys.c() * &t,
        sys.d().clone(),
    )?;
    Ok(Truncation {
        reduced,
        hsv,
        error_bound,
    })
}

/// Band-limited truncation rule for controllers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandLimitedRule {
    /// Upper edge of the band in rad/s.
    pub omega_max: f64,
    /// Allowed `sigma_max(K - K_r) / sigma_max(K)` at every grid point.
    pub rel_error: f64,
    pub grid_points: usize,
}

impl Default for BandLimitedRule {
    fn default() -> Self {
        Self {
            omega_max: 2.0 * std::f64::consts::PI * 20e3,
            rel_error: 0.01,
            grid_points: 2000,
        }
    }
}

/// Smallest-order balanced truncation whose worst-case error over the
/// grid up to `rule.omega_max` is within `rule.rel_error` of the largest
/// gain of `sys` over the same grid.
///
/// `accept` gets the final say on each candidate, so callers can add a
/// closed-loop check; orders are tried from the smallest upwards.
pub fn truncate_band_limited(
    sys: &StateSpace,
    rule: &BandLimitedRule,
    mut accept: impl FnMut(&StateSpace) -> bool,
) -> Result<Truncation> {
    let full = balanced_truncate(sys, TruncationTarget::Order(sys.order()))?;
    let grid = logspace(
        rule.omega_max * 1e-5,
        rule.omega_max,
        rule.grid_points.max(2),
    );
    // `full` already rejected unstable input, so nothing is evaluated at a pole
    let reference: Vec<_> = grid
        .iter()
        .map(|&w| sys.eval_jw(w).expect("stable"))
        .collect();
    let budget = rule.rel_error * reference.iter().map(max_singular_value).fold(0.0, f64::max);
    for k in 0..=full.reduced.order() {
        let cand = balanced_truncate(sys, TruncationTarget::Order(k))?;
        let ok = grid
            .iter()
            .zip(&reference)
            .all(|(&w, g)| match cand.reduced.eval_jw(w) {
                Some(r) => max_singular_value(&(g - r)) <= budget,
                None => false,
            });
        if ok && cand.reduced.is_stable() && accept(&cand.reduced) {
            return Ok(cand);
        }
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::hinf_norm;
    use crate::TransferFunction;

    #[test]
    fn full_order_keeps_response() {
        let sys = TransferFunction::new(vec![1.0, 3.0], vec![1.0, 3.0, 2.0, 1.0])
            .unwrap()
            .to_ss();
        let tr = balanced_truncate(&sys, TruncationTarget::Order(3)).unwrap();
        assert_eq!(tr.reduced.order(), 3);
        assert_eq!(tr.error_bound, 0.0);
        for w in [0.01, 0.5, 2.0, 40.0] {
            let d = (sys.eval_jw(w).unwrap() - tr.reduced.eval_jw(w).unwrap()).norm();
            assert!(d < 1e-10, "{}", d);
        }
    }

    #[test]
    fn cancelled_mode_is_dropped() {
        let a = TransferFunction::new(vec![1.0], vec![1.0, 1.0])
            .unwrap()
            .to_ss();
        let b = TransferFunction::new(vec![1.0, 1.0], vec![1.0, 1.0])
            .unwrap()
            .to_ss();
        let b = StateSpace::new(
            b.a().clone(),
            b.b().clone(),
            DMatrix::zeros(1, 1),
            b.d().clone(),
        )
        .unwrap();
        let sys = a.series(&b).unwrap();
        let tr = balanced_truncate(&sys, TruncationTarget::Order(1)).unwrap();
        assert!(tr.hsv[1] < 1e-8);
        for w in [0.1, 1.0, 10.0] {
            let d = (sys.eval_jw(w).unwrap() - tr.reduced.eval_jw(w).unwrap()).norm();
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn bound_holds() {
        let sys = TransferFunction::new(vec![1.0, 2.0, 30.0], vec![1.0, 6.0, 11.0, 6.0, 0.5])
            .unwrap()
            .to_ss();
        for k in 0..4 {
            let tr = balanced_truncate(&sys, TruncationTarget::Order(k)).unwrap();
            let err = sys.parallel(&tr.reduced.negated()).unwrap();
            assert!(hinf_norm(&err, 1e-8).value <= tr.error_bound * (1.0 + 1e-6) + 1e-12);
        }
    }

    #[test]
    fn rejects_unstable() {
        let sys = TransferFunction::new(vec![1.0], vec![1.0, -1.0])
            .unwrap()
            .to_ss();
        assert!(matches!(
            balanced_truncate(&sys, TruncationTarget::Order(1)),
            Err(Error::NotHurwitz(_))
        ));
    }
}
