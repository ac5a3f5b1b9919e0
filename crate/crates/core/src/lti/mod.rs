//! Continuous-time LTI models: polynomials, transfer functions,
//! state-space realizations, interconnection, frequency response and
//! bilinear discretization.

mod discrete;
mod freq;
mod poly;
mod ss;
mod tf;

pub use discrete::{c2d_tustin, DiscreteStateSpace};
pub use freq::{freq_response, logspace, unwrap_degrees, FrequencyEval, FrequencyResponse};
pub use poly::{Polynomial, MAX_DEGREE};
pub use ss::{interconnect, Interconnection, StateSpace};
pub use tf::{Cascade, TransferFunction};

/// Realizes a proper transfer function in controllable companion form.
pub fn tf_to_ss<T: crate::Scalar>(tf: &TransferFunction<T>) -> StateSpace<T> {
    tf.to_ss()
}
