use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;

use super::poly::Polynomial;
use super::ss::StateSpace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Proper SISO rational transfer function `num(s) / den(s)`.
///
/// Coefficients are in descending powers of `s`. No pole/zero
/// cancellation is ever performed.
#[derive(Clone, PartialEq, Debug)]
pub struct TransferFunction<T: Scalar> {
    num: Polynomial<T>,
    den: Polynomial<T>,
}

impl<T: Scalar> TransferFunction<T> {
    pub fn new(num: impl Into<Vec<T>>, den: impl Into<Vec<T>>) -> Result<Self> {
        Self::from_polys(Polynomial::new(num)?, Polynomial::new(den)?)
    }

    pub fn from_polys(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if !num.is_zero() && num.degree() > den.degree() {
            return Err(Error::Improper {
                num: num.degree(),
                den: den.degree(),
            });
        }
        Ok(Self { num, den })
    }

    pub fn gain(k: T) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.num.eval(s) / self.den.eval(s)
    }

    pub fn eval_jw(&self, omega: T) -> Complex<T> {
        self.eval(Complex::new(T::zero(), omega))
    }

    /// Value at `s = 0`; infinite for an integrator.
    pub fn dc_gain(&self) -> T {
        self.num.eval_real(T::zero()) / self.den.eval_real(T::zero())
    }

    pub fn poles(&self) -> Vec<Complex<T>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex<T>> {
        if self.num.is_zero() {
            Vec::new()
        } else {
            self.num.roots()
        }
    }

    /// Same transfer function with a monic denominator.
    pub fn normalized(&self) -> Self {
        let lead = self.den.leading();
        Self {
            num: self.num.scale(T::one() / lead),
            den: self.den.scale(T::one() / lead),
        }
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Product `self * other` (series connection).
    pub fn series(&self, other: &Self) -> Result<Self> {
        Self::from_polys(self.num.mul(&other.num)?, self.den.mul(&other.den)?)
    }

    pub fn parallel(&self, other: &Self) -> Result<Self> {
        let num = self.num.mul(&other.den)?.add(&other.num.mul(&self.den)?)?;
        Self::from_polys(num, self.den.mul(&other.den)?)
    }

    /// Negative feedback `self / (1 + self * h)`.
    pub fn feedback(&self, h: &Self) -> Result<Self> {
        let num = self.num.mul(&h.den)?;
        let den = self.den.mul(&h.den)?.add(&self.num.mul(&h.num)?)?;
        if den.is_zero()
            || T::one() + self.high_frequency_gain() * h.high_frequency_gain() == T::zero()
        {
            return Err(Error::IllPosed);
        }
        Self::from_polys(num, den)
    }

    /// Limit of the response as `s -> infinity` (the realization's `D`).
    pub fn high_frequency_gain(&self) -> T {
        if self.is_strictly_proper() {
            T::zero()
        } else {
            self.num.leading() / self.den.leading()
        }
    }

    /// Controllable companion realization.
    ///
    /// With `den = s^n + a1 s^(n-1) + ... + an` (after normalization) and
    /// `num = b0 s^n + ... + bn`: `A` has `-a1..-an` on its first row and
    /// ones on the subdiagonal, `B = e1`, `C = [b1 - b0 a1, ..., bn - b0 an]`,
    /// `D = b0`.
    pub fn to_ss(&self) -> StateSpace<T> {
        let n = self.den.degree();
        let lead = self.den.leading();
        let a: Vec<T> = self.den.coeffs().iter().map(|c| *c / lead).collect();
        let mut b = vec![T::zero(); n + 1];
        let nc = self.num.coeffs();
        for (i, c) in nc.iter().enumerate() {
            b[n + 1 - nc.len() + i] = *c / lead;
        }
        let d = b[0];
        let mut am = DMatrix::<T>::zeros(n, n);
        let mut bm = DMatrix::<T>::zeros(n, 1);
        let mut cm = DMatrix::<T>::zeros(1, n);
        for j in 0..n {
            am[(0, j)] = -a[j + 1];
            cm[(0, j)] = b[j + 1] - d * a[j + 1];
        }
        for i in 1..n {
            am[(i, i - 1)] = T::one();
        }
        if n > 0 {
            bm[(0, 0)] = T::one();
        }
        StateSpace::new(am, bm, cm, DMatrix::from_element(1, 1, d))
            .expect("companion realization is conformable")
    }
}

impl<T: Scalar> fmt::Display for TransferFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

/// Product of transfer-function factors kept unexpanded.
///
/// High-order weights (a product of seven biquads, say) are badly
/// conditioned once multiplied out; evaluating and realizing the
/// factors one at a time avoids that.
#[derive(Clone, PartialEq, Debug)]
pub struct Cascade<T: Scalar> {
    factors: Vec<TransferFunction<T>>,
}

impl<T: Scalar> Cascade<T> {
    pub fn new(factors: Vec<TransferFunction<T>>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[TransferFunction<T>] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.iter().map(|f| f.order()).sum()
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.factors
            .iter()
            .fold(Complex::new(T::one(), T::zero()), |acc, f| acc * f.eval(s))
    }

    pub fn eval_jw(&self, omega: T) -> Complex<T> {
        self.eval(Complex::new(T::zero(), omega))
    }

    /// Multiplied-out form. Fails past the polynomial degree limit.
    pub fn to_tf(&self) -> Result<TransferFunction<T>> {
        let mut acc = TransferFunction::gain(T::one());
        for f in &self.factors {
            acc = acc.series(f)?;
        }
        Ok(acc)
    }

    /// Series cascade of the factors' companion realizations.
    pub fn to_ss(&self) -> StateSpace<T> {
        let mut acc = StateSpace::gain(DMatrix::from_element(1, 1, T::one()));
        for f in &self.factors {
            acc = acc.series(&f.to_ss()).expect("SISO cascade is conformable");
        }
        acc
    }
}

impl<T: Scalar> From<TransferFunction<T>> for Cascade<T> {
    fn from(tf: TransferFunction<T>) -> Self {
        Self { factors: vec![tf] }
    }
}
