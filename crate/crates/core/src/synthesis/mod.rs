//! Riccati-based H-infinity machinery: Lyapunov and algebraic Riccati
//! solvers, the H-infinity norm, gamma-iteration synthesis, balanced
//! truncation and the sampled robust-stability check.

mod hinfsyn;
mod lyapunov;
mod norm;
mod reduce;
mod riccati;
mod robust;

pub use hinfsyn::{
    balance_realization, closed_loop_gain_at, hinfsyn, GammaProbe, GeneralizedPlant, HinfSolution,
    SynthesisOptions,
};
pub use lyapunov::{
    controllability_gramian, lyapunov_residual, observability_gramian, solve_lyapunov,
};
pub use norm::{hinf_norm, HinfNorm};
pub use reduce::{
    balanced_truncate, hankel_singular_values, truncate_band_limited, BandLimitedRule, Truncation,
    TruncationTarget, HSV_FLOOR,
};
pub use riccati::{care_residual, solve_care};
pub use robust::{
    default_delta_samples, robust_stability_check, DeltaSample, RobustVerdict, SampleOutcome,
    STABILITY_MARGIN,
};
