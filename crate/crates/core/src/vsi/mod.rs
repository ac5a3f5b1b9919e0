//! Averaged single-phase inverter with LC filter, uncertain RL load,
//! weighting functions and the generalized plant used for synthesis.

mod design;
mod params;
mod plant;
mod weights;

pub use design::{
    calibrate, synthesize, Calibration, CalibrationBounds, CalibrationStep, SynthesisReport,
    TargetSpec,
};
pub use params::{validate_bank, HarmonicCurrent, LoadModel, VsiParameters};
pub use plant::{
    assemble_generalized_plant, build_plant, closed_loop, closed_loop_targets, nominal_load,
    perturbed_plant, physical_plant, resonant_peak, PerturbedPlant, TargetReport,
};
pub use weights::{biquad, build_weights, ChannelScaling, WeightConfig, Weights, HARMONICS};
