use nalgebra::DMatrix;
use num_complex::Complex;

use super::ss::StateSpace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Discrete-time realization `x[k+1] = A x[k] + B u[k]`, `y[k] = C x[k] + D u[k]`.
#[derive(Clone, PartialEq, Debug)]
pub struct DiscreteStateSpace<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    pub period: T,
}

impl<T: Scalar> DiscreteStateSpace<T> {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Output for the current input, then advances `state`.
    pub fn step(&self, state: &mut DMatrix<T>, input: &DMatrix<T>) -> DMatrix<T> {
        let y = &self.c * &*state + &self.d * input;
        *state = &self.a * &*state + &self.b * input;
        y
    }

    /// `C (zI - A)^-1 B + D`.
    pub fn eval_z(&self, z: Complex<T>) -> Option<DMatrix<Complex<T>>> {
        let n = self.order();
        let dc = self.d.map(|x| Complex::new(x, T::zero()));
        if n == 0 {
            return Some(dc);
        }
        let mut m = self.a.map(|x| Complex::new(-x, T::zero()));
        for i in 0..n {
            m[(i, i)] += z;
        }
        let x = m.lu().solve(&self.b.map(|x| Complex::new(x, T::zero())))?;
        Some(self.c.map(|x| Complex::new(x, T::zero())) * x + dc)
    }
}

/// Bilinear (Tustin) map `s = (2/T) (z - 1) / (z + 1)`.
///
/// With `M = (I - A T/2)^-1`: `Ad = M (I + A T/2)`, `Bd = M B T`,
/// `Cd = C M`, `Dd = D + C M B T/2`.
pub fn c2d_tustin<T: Scalar>(sys: &StateSpace<T>, period: T) -> Result<DiscreteStateSpace<T>> {
    if !(period > T::zero()) || !period.is_finite() {
        return Err(Error::InvalidArgument(
            "sample period must be positive".into(),
        ));
    }
    let n = sys.order();
    let half = period / T::lit(2.0);
    let eye = DMatrix::<T>::identity(n, n);
    let left = &eye - sys.a() * half;
    let lu = left.lu();
    if n > 0 {
        let u = lu.u();
        let umax = (0..n)
            .map(|i| u[(i, i)].abs())
            .fold(T::zero(), |a, b| a.max(b));
        let umin = (0..n).map(|i| u[(i, i)].abs()).fold(umax, |a, b| a.min(b));
        if umin <= umax * T::default_epsilon() * T::lit(n as f64) {
            return Err(Error::TustinSingular);
        }
    }
    let m = lu.try_inverse().ok_or(Error::TustinSingular)?;
    let a = &m * (&eye + sys.a() * half);
    let b = &m * sys.b() * period;
    let c = sys.c() * &m;
    let d = sys.d() + sys.c() * &m * sys.b() * half;
    Ok(DiscreteStateSpace { a, b, c, d, period })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;

    #[test]
    fn static_gain_unchanged() {
        let k = StateSpace::<f64>::gain(DMatrix::from_element(1, 1, 3.5));
        let d = c2d_tustin(&k, 1e-3).unwrap();
        assert_eq!(d.d[(0, 0)], 3.5);
        assert_eq!(d.order(), 0);
    }

    #[test]
    fn dc_gain_preserved() {
        let g = TransferFunction::<f64>::new(vec![1.0], vec![1.0, 1.0])
            .unwrap()
            .to_ss();
        let d = c2d_tustin(&g, 1e-3).unwrap();
        let dc = d.eval_z(Complex::new(1.0, 0.0)).unwrap()[(0, 0)];
        assert!((dc - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn integrator_becomes_trapezoidal_sum() {
        let g = TransferFunction::<f64>::new(vec![1.0], vec![1.0, 0.0])
            .unwrap()
            .to_ss();
        let t = 0.01;
        let d = c2d_tustin(&g, t).unwrap();
        assert!((d.a[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((d.b[(0, 0)] * d.c[(0, 0)] - t).abs() < 1e-15);
        assert!((d.d[(0, 0)] - t / 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_map_rejected() {
        // pole at s = 2/T makes I - A T/2 singular
        let g = TransferFunction::<f64>::new(vec![1.0], vec![1.0, -2000.0])
            .unwrap()
            .to_ss();
        assert_eq!(c2d_tustin(&g, 1e-3), Err(Error::TustinSingular));
        assert!(c2d_tustin(&g, 0.0).is_err());
    }
}
