use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest degree accepted for polynomial arithmetic. Companion-form
/// conditioning degrades quickly beyond this.
pub const MAX_DEGREE: usize = 30;

/// Real polynomial in `s`, coefficients stored in descending powers.
///
/// `[1, 2, 3]` is `s^2 + 2 s + 3`. Leading zeros are stripped on
/// construction; the zero polynomial is stored as `[0]`.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial<T: Scalar> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(coeffs: impl Into<Vec<T>>) -> Result<Self> {
        let mut coeffs: Vec<T> = coeffs.into();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients"));
        }
        let first = coeffs.iter().position(|c| *c != T::zero());
        match first {
            Some(i) => {
                coeffs.drain(..i);
            }
            None => coeffs = vec![T::zero()],
        }
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// `s - root` for a real root.
    pub fn monic_linear(root: T) -> Self {
        Self {
            coeffs: vec![T::one(), -root],
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == T::zero()
    }

    pub fn leading(&self) -> T {
        self.coeffs[0]
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| {
                acc * s + Complex::new(c, T::zero())
            })
    }

    pub fn eval_real(&self, x: T) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![T::zero(); n];
        for (i, c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += *c;
        }
        for (i, c) in other.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += *c;
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.degree() + other.degree() > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(self.degree() + other.degree()));
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += *a * *b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, k: T) -> Self {
        if k == T::zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|c| *c * k).collect(),
        }
    }

    /// Roots as eigenvalues of the companion matrix, with multiplicity.
    pub fn roots(&self) -> Vec<Complex<T>> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut comp = DMatrix::<T>::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -self.coeffs[j + 1] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = T::one();
        }
        comp.complex_eigenvalues().iter().copied().collect()
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == T::zero() && n > 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match n - i {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{} s", c)?,
                p => write!(f, "{} s^{}", c, p)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_leading_zeros() {
        let p = Polynomial::new(vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 2.0]);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::<f64>::new(vec![0.0, 0.0]).unwrap().is_zero());
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::new(vec![1.0, 1.0]).unwrap();
        let b = Polynomial::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(a.mul(&b).unwrap().coeffs(), &[1.0, 3.0, 2.0]);
        assert_eq!(a.add(&b).unwrap().coeffs(), &[2.0, 3.0]);
        assert_eq!(a.sub(&a).unwrap().coeffs(), &[0.0]);
    }

    #[test]
    fn rejects_high_degree() {
        let big = vec![1.0; 32];
        assert_eq!(Polynomial::<f64>::new(big), Err(Error::DegreeTooHigh(31)));
        let p = Polynomial::new(vec![1.0; 17]).unwrap();
        assert!(matches!(p.mul(&p), Err(Error::DegreeTooHigh(32))));
    }

    #[test]
    fn roots_of_quadratic() {
        let p = Polynomial::new(vec![1.0, 0.0, 4.0]).unwrap();
        let mut r = p.roots();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - Complex::new(0.0, -2.0)).norm() < 1e-12);
        assert!((r[1] - Complex::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let p = Polynomial::<f32>::new(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(p.eval_real(1.0), 6.0);
    }
}
