use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analysis window `[start, end)` in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

/// Sample range of a window that spans a whole number of cycles of `f0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub first: usize,
    pub len: usize,
    pub cycles: usize,
}

const ALIGN_TOL: f64 = 1e-6;

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    /// Checks the window against a series of `samples` at `period` and
    /// resolves it to sample indices.
    pub fn span(&self, period: f64, samples: usize, f0: f64) -> Result<Span> {
        if !(self.end > self.start && self.start >= 0.0) {
            return Err(Error::Window(format!(
                "[{}, {}) is empty or negative",
                self.start, self.end
            )));
        }
        let cycles = (self.end - self.start) * f0;
        let whole = cycles.round();
        if whole < 1.0 || (cycles - whole).abs() > ALIGN_TOL * whole.max(1.0) {
            return Err(Error::Window(format!(
                "[{}, {}) spans {} cycles, not a whole number",
                self.start, self.end, cycles
            )));
        }
        let first = self.start / period;
        let len = (self.end - self.start) / period;
        if (first - first.round()).abs() > ALIGN_TOL || (len - len.round()).abs() > ALIGN_TOL {
            return Err(Error::Window(format!(
                "[{}, {}) does not fall on sample instants",
                self.start, self.end
            )));
        }
        let (first, len) = (first.round() as usize, len.round() as usize);
        if first + len > samples {
            return Err(Error::Window(format!(
                "[{}, {}) runs past the series end at {} s",
                self.start,
                self.end,
                samples as f64 * period
            )));
        }
        Ok(Span {
            first,
            len,
            cycles: whole as usize,
        })
    }
}

/// Peak-amplitude phasor of harmonic `h` over a span covering whole cycles.
///
/// With `x[n] = A sin(h w t_n + phi)` the result is `A e^{j (phi - 90 deg)}`.
pub fn phasor(x: &[f64], span: &Span, h: usize) -> Complex64 {
    let n = span.len as f64;
    let k = (h * span.cycles) as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &v) in x[span.first..span.first + span.len].iter().enumerate() {
        let theta = -2.0 * std::f64::consts::PI * k * i as f64 / n;
        acc += v * Complex64::from_polar(1.0, theta);
    }
    acc * (2.0 / n)
}

/// Magnitudes of harmonics `1..=max_harmonic`.
pub fn harmonic_magnitudes(x: &[f64], span: &Span, max_harmonic: usize) -> Vec<f64> {
    (1..=max_harmonic)
        .map(|h| phasor(x, span, h).norm())
        .collect()
}

/// Total harmonic distortion in percent; `None` when the fundamental is
/// below `1e-9` of the signal range.
pub fn thd(
    x: &[f64],
    period: f64,
    f0: f64,
    max_harmonic: usize,
    window: &Window,
) -> Result<Option<f64>> {
    if max_harmonic < 2 {
        return Err(Error::InvalidArgument(
            "THD needs at least the second harmonic".into(),
        ));
    }
    let span = window.span(period, x.len(), f0)?;
    let mags = harmonic_magnitudes(x, &span, max_harmonic);
    Ok(thd_from_magnitudes(
        &mags,
        range(&x[span.first..span.first + span.len]),
    ))
}

pub(crate) fn range(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    hi - lo
}

pub(crate) fn thd_from_magnitudes(mags: &[f64], range: f64) -> Option<f64> {
    let v1 = mags[0];
    if !(v1 > 1e-9 * range) || v1 == 0.0 {
        return None;
    }
    let rss = mags[1..].iter().map(|m| m * m).sum::<f64>().sqrt();
    Some(100.0 * rss / v1)
}

/// How phase error is expressed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseUnit {
    /// Percent of a full cycle.
    #[default]
    PercentOfCycle,
    Degrees,
}

/// Fundamental magnitude error in percent and phase lag of `v_c` behind
/// `v_ref`, wrapped to `(-180, 180]` degrees and expressed in `unit`.
pub fn tracking_error(
    v_c: &[f64],
    v_ref: &[f64],
    period: f64,
    f0: f64,
    window: &Window,
    unit: PhaseUnit,
) -> Result<(f64, f64)> {
    if v_c.len() != v_ref.len() {
        return Err(Error::Dimension(
            "tracking error needs equal-length channels".into(),
        ));
    }
    let span = window.span(period, v_c.len(), f0)?;
    let c = phasor(v_c, &span, 1);
    let r = phasor(v_ref, &span, 1);
    if !(r.norm() > 1e-9 * range(&v_ref[span.first..span.first + span.len])) || r.norm() == 0.0 {
        return Err(Error::Window(
            "reference has no fundamental in the window".into(),
        ));
    }
    let mag = 100.0 * (c.norm() - r.norm()) / r.norm();
    let lag = wrap_deg((r.arg() - c.arg()).to_degrees());
    let phase = match unit {
        PhaseUnit::PercentOfCycle => 100.0 * lag / 360.0,
        PhaseUnit::Degrees => lag,
    };
    Ok((mag, phase))
}

fn wrap_deg(x: f64) -> f64 {
    let y = (x + 180.0).rem_euclid(360.0) - 180.0;
    if y == -180.0 {
        180.0
    } else {
        y
    }
}
