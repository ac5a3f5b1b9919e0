//! Robust single-loop voltage control for single-phase grid-forming
//! inverters: LTI algebra, Riccati-based H-infinity synthesis, balanced
//! truncation, the averaged inverter model with uncertain load, a
//! PR+PI multi-loop baseline, time-domain co-simulation and power
//! quality metrics.

// `!(x > 0.0)` style guards are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod error;
mod linalg;
pub mod lti;
mod scalar;
pub mod sim;
pub mod synthesis;
pub mod vsi;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Polynomial = lti::Polynomial<f64>;
pub type TransferFunction = lti::TransferFunction<f64>;
pub type StateSpace = lti::StateSpace<f64>;
pub type Cascade = lti::Cascade<f64>;
pub type FrequencyResponse = lti::FrequencyResponse<f64>;
pub type DiscreteStateSpace = lti::DiscreteStateSpace<f64>;

pub type TransferFunction32 = lti::TransferFunction<f32>;
pub type StateSpace32 = lti::StateSpace<f32>;
