use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;

use super::ss::StateSpace;
use super::tf::{Cascade, TransferFunction};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that can be evaluated on the complex plane as a matrix transfer function.
pub trait FrequencyEval<T: Scalar> {
    fn dims(&self) -> (usize, usize);
    /// `None` marks a point on (or numerically at) a pole.
    fn eval_at(&self, s: Complex<T>) -> Option<DMatrix<Complex<T>>>;
}

impl<T: Scalar> FrequencyEval<T> for StateSpace<T> {
    fn dims(&self) -> (usize, usize) {
        (self.outputs(), self.inputs())
    }
    fn eval_at(&self, s: Complex<T>) -> Option<DMatrix<Complex<T>>> {
        self.eval(s)
    }
}

impl<T: Scalar> FrequencyEval<T> for TransferFunction<T> {
    fn dims(&self) -> (usize, usize) {
        (1, 1)
    }
    fn eval_at(&self, s: Complex<T>) -> Option<DMatrix<Complex<T>>> {
        let den = self.den().eval(s);
        if den.re == T::zero() && den.im == T::zero() {
            return None;
        }
        Some(DMatrix::from_element(1, 1, self.num().eval(s) / den))
    }
}

impl<T: Scalar> FrequencyEval<T> for Cascade<T> {
    fn dims(&self) -> (usize, usize) {
        (1, 1)
    }
    fn eval_at(&self, s: Complex<T>) -> Option<DMatrix<Complex<T>>> {
        let mut acc = Complex::new(T::one(), T::zero());
        for f in self.factors() {
            acc *= f.eval_at(s)?[(0, 0)];
        }
        Some(DMatrix::from_element(1, 1, acc))
    }
}

/// Sampled frequency response on a strictly increasing grid (rad/s).
#[derive(Clone, Debug)]
pub struct FrequencyResponse<T: Scalar> {
    pub omega: Vec<T>,
    /// One `outputs x inputs` matrix per frequency; flagged samples hold infinities.
    pub values: Vec<DMatrix<Complex<T>>>,
    /// Indices of samples that landed on an imaginary-axis pole.
    pub flagged: Vec<usize>,
}

impl<T: Scalar> FrequencyResponse<T> {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn siso(&self, out: usize, inp: usize) -> Vec<Complex<T>> {
        self.values.iter().map(|m| m[(out, inp)]).collect()
    }

    pub fn magnitude(&self, out: usize, inp: usize) -> Vec<T> {
        self.values
            .iter()
            .map(|m| m[(out, inp)].modulus())
            .collect()
    }

    pub fn magnitude_db(&self, out: usize, inp: usize) -> Vec<T> {
        self.magnitude(out, inp)
            .into_iter()
            .map(|m| T::lit(20.0) * m.log10())
            .collect()
    }

    /// Phase in degrees, unwrapped along the grid.
    pub fn phase_deg(&self, out: usize, inp: usize) -> Vec<T> {
        unwrap_degrees(
            self.values
                .iter()
                .map(|m| m[(out, inp)].argument() * T::lit(180.0) / T::pi()),
        )
    }
}

/// Removes 360-degree jumps from a phase sequence.
pub fn unwrap_degrees<T: Scalar>(raw: impl IntoIterator<Item = T>) -> Vec<T> {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut out: Vec<T> = Vec::new();
    let mut offset = T::zero();
    for p in raw {
        if let Some(&prev) = out.last() {
            if p.is_finite() && prev.is_finite() {
                let mut cand = p + offset;
                while cand - prev > half {
                    offset -= full;
                    cand -= full;
                }
                while cand - prev < -half {
                    offset += full;
                    cand += full;
                }
            }
        }
        out.push(p + offset);
    }
    out
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| T::lit(10.0).powf(a + (b - a) * T::lit(i as f64) / T::lit((n - 1) as f64)))
        .collect()
}

pub fn freq_response<T: Scalar, S: FrequencyEval<T> + ?Sized>(
    sys: &S,
    grid: &[T],
) -> Result<FrequencyResponse<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("frequency grid is empty".into()));
    }
    if grid.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
        return Err(Error::InvalidArgument(
            "frequency grid must be positive and finite".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "frequency grid must be strictly increasing".into(),
        ));
    }
    let (p, m) = sys.dims();
    let inf = Complex::new(T::lit(f64::INFINITY), T::zero());
    let mut values = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for (i, &w) in grid.iter().enumerate() {
        match sys.eval_at(Complex::new(T::zero(), w)) {
            Some(v) => values.push(v),
            None => {
                flagged.push(i);
                values.push(DMatrix::from_element(p, m, inf));
            }
        }
    }
    Ok(FrequencyResponse {
        omega: grid.to_vec(),
        values,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        let g = TransferFunction::<f64>::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(freq_response(&g, &[]).is_err());
        assert!(freq_response(&g, &[1.0, -1.0]).is_err());
        assert!(freq_response(&g, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn flags_pole_on_axis() {
        let g = TransferFunction::<f64>::new(vec![1.0], vec![1.0, 0.0, 4.0]).unwrap();
        let r = freq_response(&g, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.flagged, vec![1]);
        assert!(r.magnitude(0, 0)[1].is_infinite());
    }

    #[test]
    fn first_order_bode_point() {
        let g = TransferFunction::<f64>::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let r = freq_response(&g, &[1.0]).unwrap();
        assert!((r.magnitude_db(0, 0)[0] + 3.010299956639812).abs() < 1e-12);
        assert!((r.phase_deg(0, 0)[0] + 45.0).abs() < 1e-12);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let u = unwrap_degrees(vec![170.0, -170.0, -150.0, 175.0]);
        assert_eq!(u, vec![170.0, 190.0, 210.0, 175.0]);
    }
}
