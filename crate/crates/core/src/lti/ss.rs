use std::fmt;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Continuous-time state-space realization `x' = A x + B u`, `y = C x + D u`.
#[derive(Clone, PartialEq, Debug)]
pub struct StateSpace<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
}

/// Kind of two-system composition accepted by [`interconnect`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interconnection {
    /// Output of the first system drives the second.
    Series,
    /// Shared input, summed outputs.
    Parallel,
    /// Negative feedback with the second system in the return path.
    Feedback,
}

pub fn interconnect<T: Scalar>(
    kind: Interconnection,
    a: &StateSpace<T>,
    b: &StateSpace<T>,
) -> Result<StateSpace<T>> {
    match kind {
        Interconnection::Series => a.series(b),
        Interconnection::Parallel => a.parallel(b),
        Interconnection::Feedback => a.feedback(b, -T::one()),
    }
}

impl<T: Scalar> StateSpace<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, expected square",
                n,
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "B is {}x{}, C is {}x{} for {} states",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                n
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Static gain with no states.
    pub fn gain(d: DMatrix<T>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn into_parts(self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `C (sI - A)^-1 B + D`, or `None` when `sI - A` is numerically singular.
    pub fn eval(&self, s: Complex<T>) -> Option<DMatrix<Complex<T>>> {
        let n = self.order();
        let dc = self.d.map(|x| Complex::new(x, T::zero()));
        if n == 0 {
            return Some(dc);
        }
        let mut m = self.a.map(|x| Complex::new(-x, T::zero()));
        for i in 0..n {
            m[(i, i)] += s;
        }
        let lu = m.lu();
        let u = lu.u();
        let mut umax = T::zero();
        let mut umin = T::max_value().unwrap_or(T::lit(f64::MAX));
        for i in 0..n {
            let v = u[(i, i)].modulus();
            umax = umax.max(v);
            umin = umin.min(v);
        }
        if umax == T::zero() || umin <= umax * T::default_epsilon() * T::lit(n as f64) {
            return None;
        }
        let bc = self.b.map(|x| Complex::new(x, T::zero()));
        let x = lu.solve(&bc)?;
        let cc = self.c.map(|x| Complex::new(x, T::zero()));
        let out = cc * x + dc;
        if out.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Some(out)
        } else {
            None
        }
    }

    pub fn eval_jw(&self, omega: T) -> Option<DMatrix<Complex<T>>> {
        self.eval(Complex::new(T::zero(), omega))
    }

    /// Eigenvalues of `A`, with multiplicity.
    pub fn poles(&self) -> Vec<Complex<T>> {
        if self.order() == 0 {
            return Vec::new();
        }
        self.a
            .clone()
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    }

    /// Largest real part of the poles (`-inf` for a static system).
    pub fn spectral_abscissa(&self) -> T {
        self.poles()
            .iter()
            .map(|p| p.re)
            .fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b))
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_abscissa() < T::zero()
    }

    pub fn dc_gain(&self) -> Option<DMatrix<T>> {
        self.eval(Complex::new(T::zero(), T::zero()))
            .map(|m| m.map(|z| z.re))
    }

    /// Block-diagonal stacking: inputs and outputs of `other` follow those of `self`.
    pub fn append(&self, other: &Self) -> Self {
        let (n1, n2) = (self.order(), other.order());
        let (m1, m2) = (self.inputs(), other.inputs());
        let (p1, p2) = (self.outputs(), other.outputs());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DMatrix::zeros(n1 + n2, m1 + m2);
        b.view_mut((0, 0), (n1, m1)).copy_from(&self.b);
        b.view_mut((n1, m1), (n2, m2)).copy_from(&other.b);
        let mut c = DMatrix::zeros(p1 + p2, n1 + n2);
        c.view_mut((0, 0), (p1, n1)).copy_from(&self.c);
        c.view_mut((p1, n1), (p2, n2)).copy_from(&other.c);
        let mut d = DMatrix::zeros(p1 + p2, m1 + m2);
        d.view_mut((0, 0), (p1, m1)).copy_from(&self.d);
        d.view_mut((p1, m1), (p2, m2)).copy_from(&other.d);
        Self { a, b, c, d }
    }

    /// Closes static wiring around this (typically block-diagonal) system.
    ///
    /// With internal inputs `u`, internal outputs `y`, external inputs `r`
    /// and external outputs `z`:
    /// `u = feedback * y + input_map * r`, `z = output_map * y + feedthrough * r`.
    pub fn connect(
        &self,
        feedback: &DMatrix<T>,
        input_map: &DMatrix<T>,
        output_map: &DMatrix<T>,
        feedthrough: &DMatrix<T>,
    ) -> Result<Self> {
        let (m, p) = (self.inputs(), self.outputs());
        let r = input_map.ncols();
        let q = output_map.nrows();
        if feedback.shape() != (m, p)
            || input_map.nrows() != m
            || output_map.ncols() != p
            || feedthrough.shape() != (q, r)
        {
            return Err(Error::Dimension(
                "connect: wiring matrices do not conform".into(),
            ));
        }
        let loop_m = DMatrix::<T>::identity(p, p) - &self.d * feedback;
        let e = loop_m.try_inverse().ok_or(Error::IllPosed)?;
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::IllPosed);
        }
        let ec = &e * &self.c;
        let edg = &e * &self.d * input_map;
        let bf = &self.b * feedback;
        let a = &self.a + &bf * &ec;
        let b = &bf * &edg + &self.b * input_map;
        let c = output_map * &ec;
        let d = output_map * &edg + feedthrough;
        Self::new(a, b, c, d)
    }

    /// `other` driven by the output of `self`.
    pub fn series(&self, other: &Self) -> Result<Self> {
        if self.outputs() != other.inputs() {
            return Err(Error::Dimension(format!(
                "series: {} outputs feed {} inputs",
                self.outputs(),
                other.inputs()
            )));
        }
        let blk = self.append(other);
        let (m1, p1) = (self.inputs(), self.outputs());
        let (m2, p2) = (other.inputs(), other.outputs());
        let mut f = DMatrix::zeros(m1 + m2, p1 + p2);
        f.view_mut((m1, 0), (m2, p1)).fill_with_identity();
        let mut g = DMatrix::zeros(m1 + m2, m1);
        g.view_mut((0, 0), (m1, m1)).fill_with_identity();
        let mut h = DMatrix::zeros(p2, p1 + p2);
        h.view_mut((0, p1), (p2, p2)).fill_with_identity();
        blk.connect(&f, &g, &h, &DMatrix::zeros(p2, m1))
    }

    pub fn parallel(&self, other: &Self) -> Result<Self> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::Dimension(
                "parallel: input/output counts differ".into(),
            ));
        }
        let (m, p) = (self.inputs(), self.outputs());
        let blk = self.append(other);
        let mut g = DMatrix::zeros(2 * m, m);
        g.view_mut((0, 0), (m, m)).fill_with_identity();
        g.view_mut((m, 0), (m, m)).fill_with_identity();
        let mut h = DMatrix::zeros(p, 2 * p);
        h.view_mut((0, 0), (p, p)).fill_with_identity();
        h.view_mut((0, p), (p, p)).fill_with_identity();
        blk.connect(&DMatrix::zeros(2 * m, 2 * p), &g, &h, &DMatrix::zeros(p, m))
    }

    /// Feedback loop `u_self = r + sign * y_other`, `u_other = y_self`; output `y_self`.
    /// `sign = -1` is the usual negative feedback.
    pub fn feedback(&self, other: &Self, sign: T) -> Result<Self> {
        let (m1, p1) = (self.inputs(), self.outputs());
        let (m2, p2) = (other.inputs(), other.outputs());
        if m2 != p1 || p2 != m1 {
            return Err(Error::Dimension(
                "feedback: return path does not conform".into(),
            ));
        }
        let blk = self.append(other);
        let mut f = DMatrix::zeros(m1 + m2, p1 + p2);
        f.view_mut((0, p1), (m1, p2))
            .copy_from(&(DMatrix::<T>::identity(m1, p2) * sign));
        f.view_mut((m1, 0), (m2, p1)).fill_with_identity();
        let mut g = DMatrix::zeros(m1 + m2, m1);
        g.view_mut((0, 0), (m1, m1)).fill_with_identity();
        let mut h = DMatrix::zeros(p1, p1 + p2);
        h.view_mut((0, 0), (p1, p1)).fill_with_identity();
        blk.connect(&f, &g, &h, &DMatrix::zeros(p1, m1))
    }

    /// Lower LFT: the last `k.outputs()` inputs of `self` are driven by `k`,
    /// which reads the last `k.inputs()` outputs of `self`.
    pub fn lft_lower(&self, k: &Self) -> Result<Self> {
        let (nu, ny) = (k.outputs(), k.inputs());
        let (m, p) = (self.inputs(), self.outputs());
        if nu > m || ny > p {
            return Err(Error::Dimension(
                "lower LFT: controller larger than plant".into(),
            ));
        }
        let (m1, p1) = (m - nu, p - ny);
        let blk = self.append(k);
        let mut f = DMatrix::zeros(m + ny, p + nu);
        f.view_mut((m1, p), (nu, nu)).fill_with_identity();
        f.view_mut((m, p1), (ny, ny)).fill_with_identity();
        let mut g = DMatrix::zeros(m + ny, m1);
        g.view_mut((0, 0), (m1, m1)).fill_with_identity();
        let mut h = DMatrix::zeros(p1, p + nu);
        h.view_mut((0, 0), (p1, p1)).fill_with_identity();
        blk.connect(&f, &g, &h, &DMatrix::zeros(p1, m1))
    }

    /// Upper LFT: the first `delta.outputs()` inputs of `self` are driven by
    /// `delta`, which reads the first `delta.inputs()` outputs of `self`.
    pub fn lft_upper(&self, delta: &Self) -> Result<Self> {
        let (nw, nz) = (delta.outputs(), delta.inputs());
        let (m, p) = (self.inputs(), self.outputs());
        if nw > m || nz > p {
            return Err(Error::Dimension(
                "upper LFT: uncertainty larger than plant".into(),
            ));
        }
        let blk = self.append(delta);
        let mut f = DMatrix::zeros(m + nz, p + nw);
        f.view_mut((0, p), (nw, nw)).fill_with_identity();
        f.view_mut((m, 0), (nz, nz)).fill_with_identity();
        let mut g = DMatrix::zeros(m + nz, m - nw);
        g.view_mut((nw, 0), (m - nw, m - nw)).fill_with_identity();
        let mut h = DMatrix::zeros(p - nz, p + nw);
        h.view_mut((0, nz), (p - nz, p - nz)).fill_with_identity();
        blk.connect(&f, &g, &h, &DMatrix::zeros(p - nz, m - nw))
    }

    /// Selects outputs `rows` and inputs `cols` (in the given order).
    pub fn subsystem(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.iter().any(|&r| r >= self.outputs()) || cols.iter().any(|&c| c >= self.inputs()) {
            return Err(Error::Dimension(
                "subsystem: channel index out of range".into(),
            ));
        }
        let b = DMatrix::from_fn(self.order(), cols.len(), |i, j| self.b[(i, cols[j])]);
        let c = DMatrix::from_fn(rows.len(), self.order(), |i, j| self.c[(rows[i], j)]);
        let d = DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.d[(rows[i], cols[j])]);
        Self::new(self.a.clone(), b, c, d)
    }

    /// Pre- and post-multiplies by static matrices: `out_map * G * in_map`.
    pub fn scaled(&self, out_map: &DMatrix<T>, in_map: &DMatrix<T>) -> Result<Self> {
        if out_map.ncols() != self.outputs() || in_map.nrows() != self.inputs() {
            return Err(Error::Dimension("scaled: maps do not conform".into()));
        }
        Self::new(
            self.a.clone(),
            &self.b * in_map,
            out_map * &self.c,
            out_map * &self.d * in_map,
        )
    }

    /// Change of state coordinates `x = t * x_new`.
    pub fn similarity(&self, t: &DMatrix<T>) -> Result<Self> {
        let ti = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("similarity transform is singular".into()))?;
        Self::new(
            &ti * &self.a * t,
            &ti * &self.b,
            &self.c * t,
            self.d.clone(),
        )
    }

    pub fn negated(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: -&self.c,
            d: -&self.d,
        }
    }
}

impl<T: Scalar> fmt::Display for StateSpace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "StateSpace: {} states, {} inputs, {} outputs",
            self.order(),
            self.inputs(),
            self.outputs()
        )?;
        write!(
            f,
            "A = {}B = {}C = {}D = {}",
            self.a, self.b, self.c, self.d
        )
    }
}
