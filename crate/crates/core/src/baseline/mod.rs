//! Conventional multi-loop baseline: inner PI current loop and outer PR
//! voltage loop with odd-harmonic resonators, tuned on a grid to margin
//! and bandwidth requirements.

mod design;
mod margins;

pub use design::{
    baseline_tracking_error, current_loop_plant, design_baseline, design_inner_pi, design_outer_pr,
    outer_loop_plant, output_impedance, verify_baseline, BaselineDesign, BaselineSearch,
    BaselineSpec, GridAxis, InnerDesign, LoopSpec, MultiLoopController, OuterDesign,
};
pub use margins::{margins, MarginReport, MARGIN_RANGE};
