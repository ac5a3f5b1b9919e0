//! Power-quality metrics on simulated traces (THD, fundamental tracking
//! error), Bode tables and side-by-side controller comparison.

mod bode;
mod report;
mod spectrum;

pub use bode::{bode_export, BodeTable};
pub use report::{
    compare_controllers, metrics, metrics_csv, steady_state_windows, Comparison, ControllerMetrics,
    MetricsReport, Verdict, MAX_HARMONIC, WINDOW_CYCLES,
};
pub use spectrum::{harmonic_magnitudes, phasor, thd, tracking_error, PhaseUnit, Span, Window};
