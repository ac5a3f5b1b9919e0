use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lti::{logspace, FrequencyEval};

/// Stability margins of a SISO loop `L(s)` under negative unity feedback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginReport {
    /// Smallest gain margin over all phase crossovers; `inf` when there is none.
    pub gain_margin_db: f64,
    /// Smallest angular distance of `L(j w_c)` from `-1` over all gain crossovers; `inf` when there is none.
    pub phase_margin_deg: f64,
    /// Crossover that sets the phase margin.
    pub gain_crossover: Option<f64>,
    pub phase_crossover: Option<f64>,
    /// Highest frequency where `|L / (1 + L)|` falls through 3 dB below its
    /// DC value and stays there.
    pub bandwidth: Option<f64>,
    pub no_gain_crossover: bool,
    pub no_phase_crossover: bool,
}

/// Frequency range scanned by [`margins`], rad/s.
pub const MARGIN_RANGE: (f64, f64) = (1e-2, 1e7);
const POINTS_PER_DECADE: usize = 400;

fn siso<S: FrequencyEval<f64> + ?Sized>(sys: &S, w: f64) -> Result<Complex64> {
    sys.eval_at(Complex64::new(0.0, w))
        .map(|m| m[(0, 0)])
        .ok_or(Error::NonFinite("loop response on the imaginary axis"))
}

/// Bisection on `log w` for a sign change of `f` between `lo` and `hi`.
fn refine(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let f_lo = f(lo)?;
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if (f(mid)? > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

fn wrap_deg(x: f64) -> f64 {
    let y = (x + 180.0).rem_euclid(360.0) - 180.0;
    if y == -180.0 {
        180.0
    } else {
        y
    }
}

/// Gain margin, phase margin and closed-loop bandwidth from the frequency
/// response of `sys` between [`MARGIN_RANGE`].
///
/// Closed-loop stability is not inferred; callers check poles separately.
pub fn margins<S: FrequencyEval<f64> + ?Sized>(sys: &S) -> Result<MarginReport> {
    if sys.dims() != (1, 1) {
        return Err(Error::Dimension("margins needs a SISO loop".into()));
    }
    let decades = (MARGIN_RANGE.1 / MARGIN_RANGE.0).log10();
    let grid = logspace(
        MARGIN_RANGE.0,
        MARGIN_RANGE.1,
        (decades * POINTS_PER_DECADE as f64) as usize + 1,
    );
    let vals: Vec<Complex64> = grid.iter().map(|&w| siso(sys, w)).collect::<Result<_>>()?;

    let log_mag = |w: f64| siso(sys, w).map(|l| l.norm().ln());
    let mut pm = f64::INFINITY;
    let mut wc = None;
    for i in 0..grid.len() - 1 {
        let (a, b) = (vals[i].norm().ln(), vals[i + 1].norm().ln());
        if (a > 0.0) != (b > 0.0) {
            let w = refine(grid[i], grid[i + 1], log_mag)?;
            let phase = siso(sys, w)?.arg().to_degrees();
            let m = 180.0 - wrap_deg(phase).abs();
            if m < pm {
                pm = m;
                wc = Some(w);
            }
        }
    }

    // phase crossovers: L crosses the negative real axis
    let im = |w: f64| siso(sys, w).map(|l| l.im);
    let mut gm = f64::INFINITY;
    let mut wpc = None;
    for i in 0..grid.len() - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if (a.im > 0.0) != (b.im > 0.0) && (a.re < 0.0 || b.re < 0.0) {
            let w = refine(grid[i], grid[i + 1], im)?;
            let l = siso(sys, w)?;
            if l.re < 0.0 {
                let g = -20.0 * l.norm().log10();
                if g < gm {
                    gm = g;
                    wpc = Some(w);
                }
            }
        }
    }

    let t_mag = |l: Complex64| (l / (l + 1.0)).norm();
    // a pole at s = 0 means |T(0)| = 1
    let reference = sys
        .eval_at(Complex64::new(0.0, 0.0))
        .map_or(1.0, |m| t_mag(m[(0, 0)]));
    let target = reference / std::f64::consts::SQRT_2;
    // last downward crossing, so notches below the roll-off do not count
    let mut bandwidth = None;
    if t_mag(vals[vals.len() - 1]) < target {
        let last_above = vals.iter().rposition(|&l| t_mag(l) >= target);
        bandwidth = Some(match last_above {
            None => grid[0],
            Some(i) => refine(grid[i], grid[i + 1], |w| {
                siso(sys, w).map(|l| t_mag(l) - target)
            })?,
        });
    }

    Ok(MarginReport {
        gain_margin_db: gm,
        phase_margin_deg: pm,
        gain_crossover: wc,
        phase_crossover: wpc,
        bandwidth,
        no_gain_crossover: wc.is_none(),
        no_phase_crossover: wpc.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TransferFunction;

    #[test]
    fn integrator() {
        let m = margins(&TransferFunction::new(vec![1.0], vec![1.0, 0.0]).unwrap()).unwrap();
        assert!((m.phase_margin_deg - 90.0).abs() < 1e-9);
        assert!((m.gain_crossover.unwrap() - 1.0).abs() < 1e-9);
        assert!(m.gain_margin_db.is_infinite() && m.no_phase_crossover);
        // T = 1/(s+1)
        assert!((m.bandwidth.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scaled_integrator() {
        let m = margins(&TransferFunction::new(vec![10.0], vec![1.0, 0.0]).unwrap()).unwrap();
        assert!((m.gain_crossover.unwrap() - 10.0).abs() < 1e-8);
        assert!((m.phase_margin_deg - 90.0).abs() < 1e-9);
    }

    #[test]
    fn third_order_lag() {
        // L = 4 / (s+1)^3: phase crossover at sqrt(3), |L| = 4/8 there
        let l = TransferFunction::new(vec![4.0], vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        let m = margins(&l).unwrap();
        assert!((m.phase_crossover.unwrap() - 3f64.sqrt()).abs() < 1e-8);
        assert!((m.gain_margin_db - 20.0 * 2f64.log10()).abs() < 1e-8);
        // |L| = 1 at w = sqrt(4^(2/3) - 1)
        let wc = (4f64.powf(2.0 / 3.0) - 1.0).sqrt();
        assert!((m.gain_crossover.unwrap() - wc).abs() < 1e-8);
        let expect = 180.0 - 3.0 * wc.atan().to_degrees();
        assert!((m.phase_margin_deg - expect).abs() < 1e-7);
    }

    #[test]
    fn notch_below_roll_off_is_not_the_bandwidth() {
        // L = 100 (s^2 + 0.2 s + 1) / (s (s + 1)^2) dips near 1 rad/s
        let l = TransferFunction::new(vec![100.0, 20.0, 100.0], vec![1.0, 2.0, 1.0, 0.0]).unwrap();
        let m = margins(&l).unwrap();
        assert!(m.bandwidth.unwrap() > 50.0, "{:?}", m);
    }

    #[test]
    fn loop_below_unity_has_no_crossover() {
        let m = margins(&TransferFunction::new(vec![0.5], vec![1.0, 1.0]).unwrap()).unwrap();
        assert!(m.no_gain_crossover && m.phase_margin_deg.is_infinite());
    }
}
