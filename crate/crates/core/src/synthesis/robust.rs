use nalgebra::DMatrix;
use serde::Serialize;

use super::hinfsyn::GeneralizedPlant;
use super::norm::hinf_norm;
use crate::error::Result;
use crate::{StateSpace, TransferFunction};

/// Poles must sit at least this far left of the imaginary axis (rad/s).
pub const STABILITY_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct DeltaSample {
    pub label: String,
    pub sys: StateSpace,
}

impl DeltaSample {
    pub fn real(value: f64) -> Self {
        Self {
            label: format!("real {:+.3}", value),
            sys: StateSpace::gain(DMatrix::from_element(1, 1, value)),
        }
    }

    /// First-order all-pass `(a - s) / (a + s)`.
    pub fn all_pass(a: f64) -> Self {
        let tf =
            TransferFunction::new(vec![-1.0, a], vec![1.0, a]).expect("proper by construction");
        Self {
            label: format!("all-pass a={:e}", a),
            sys: tf.to_ss(),
        }
    }
}

/// Nine real values spread over `[-1, 1]` and all-pass factors at
/// 10, 1e3 and 1e5 rad/s.
pub fn default_delta_samples() -> Vec<DeltaSample> {
    let mut out: Vec<_> = (0..9)
        .map(|i| DeltaSample::real(-1.0 + 0.25 * i as f64))
        .collect();
    out.extend([10.0, 1e3, 1e5].into_iter().map(DeltaSample::all_pass));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleOutcome {
    pub label: String,
    /// Largest pole real part of the perturbed closed loop (rad/s).
    pub abscissa: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustVerdict {
    pub robust: bool,
    /// Norm of the full closed loop `[w_delta, w] -> [z_delta, z]`.
    pub performance_norm: f64,
    /// `1 / ||T_{z_delta w_delta}||`; above 1 means small-gain robust.
    pub margin: f64,
    pub samples: Vec<SampleOutcome>,
    pub failing: Option<String>,
}

/// Small-gain verdict plus an explicit sweep over sampled uncertainties.
pub fn robust_stability_check(
    p: &GeneralizedPlant,
    k: &StateSpace,
    samples: &[DeltaSample],
) -> Result<RobustVerdict> {
    let cl_full = p.sys.lft_lower(k)?;
    let cl = p.close_loop(k)?;
    let performance_norm = hinf_norm(&cl, 1e-6).value;
    let delta_rows: Vec<usize> = (0..p.n_zd).collect();
    let delta_cols: Vec<usize> = (0..p.n_wd).collect();
    let t_delta = cl.subsystem(&delta_rows, &delta_cols)?;
    let margin = if p.n_wd == 0 {
        f64::INFINITY
    } else {
        1.0 / hinf_norm(&t_delta, 1e-6).value
    };

    let mut outcomes = Vec::with_capacity(samples.len());
    let mut failing = None;
    for s in samples {
        let perturbed = cl_full.lft_upper(&s.sys)?;
        let abscissa = perturbed.spectral_abscissa();
        let stable = abscissa < -STABILITY_MARGIN;
        if !stable && failing.is_none() {
            failing = Some(s.label.clone());
        }
        outcomes.push(SampleOutcome {
            label: s.label.clone(),
            abscissa,
            stable,
        });
    }
    let robust = performance_norm < 1.0 && failing.is_none();
    Ok(RobustVerdict {
        robust,
        performance_norm,
        margin,
        samples: outcomes,
        failing,
    })
}
