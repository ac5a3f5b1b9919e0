use nalgebra::RealField;

/// Real scalar usable by the LTI algebra. Implemented for `f32` and `f64`.
pub trait Scalar: RealField + Copy {
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn as_f64(self) -> f64 {
        nalgebra::try_convert(self).unwrap_or(f64::NAN)
    }
}

impl<T: RealField + Copy> Scalar for T {}
