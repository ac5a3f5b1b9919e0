//! Closed-loop time-domain simulation of the averaged inverter with a
//! sampled controller, scheduled load events and harmonic current sources.

mod engine;
mod scenario;
mod series;

pub use engine::{error_feedback, simulate, simulate_discrete, DIVERGENCE_LIMIT};
pub use scenario::{
    default_event_schedule, default_harmonic_bank, harmonic_bank_current, schedule_with, Action,
    Event, RlLoad, Scenario, ScheduleOptions,
};
pub use series::{fmt_sig, TimeSeries, CSV_HEADER};
