use serde::{Deserialize, Serialize};

use super::params::{LoadModel, VsiParameters};
use super::plant::{assemble_generalized_plant, closed_loop_targets, TargetReport};
use super::weights::{build_weights, WeightConfig};
use crate::error::{Error, Result};
use crate::synthesis::{
    default_delta_samples, hinf_norm, hinfsyn, robust_stability_check, truncate_band_limited,
    BandLimitedRule, GammaProbe, GeneralizedPlant, RobustVerdict, SynthesisOptions,
};
use crate::StateSpace;

/// Closed-loop acceptance thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSpec {
    /// Bound on `|G(j w_o) - 1|`.
    pub g_tol: f64,
    /// Bound on `|Z(j h w_o)|` in ohms.
    pub z_max: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            g_tol: 0.01,
            z_max: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisReport {
    pub plant: GeneralizedPlant,
    pub controller: StateSpace,
    pub gamma: f64,
    pub closed_loop_norm: f64,
    pub history: Vec<GammaProbe>,
    pub regularization: Option<String>,
    /// Empty when the full controller is unstable and was kept as is.
    pub hsv: Vec<f64>,
    pub reduced: StateSpace,
    pub error_bound: f64,
    /// Closed-loop norm of the generalized plant with the reduced controller.
    pub reduced_norm: f64,
    pub targets: TargetReport,
    pub reduced_targets: TargetReport,
    /// Evaluated on the reduced controller.
    pub robust: RobustVerdict,
}

impl SynthesisReport {
    pub fn meets(&self, spec: &TargetSpec) -> bool {
        self.gamma < 1.0
            && self.reduced_norm <= 1.0
            && self.targets.passes(spec.g_tol, spec.z_max)
            && self.reduced_targets.passes(spec.g_tol, spec.z_max)
    }
}

/// Synthesis, band-limited reduction and verification in one pass.
///
/// A reduced candidate is accepted only if it keeps the closed-loop norm at
/// or below 1.
pub fn synthesize(
    p: &VsiParameters,
    load: &LoadModel,
    weights: &WeightConfig,
    opts: &SynthesisOptions,
    rule: &BandLimitedRule,
) -> Result<SynthesisReport> {
    p.validate()?;
    load.validate()?;
    let w = build_weights(p, weights)?;
    let plant = assemble_generalized_plant(p, load, &w)?;
    let sol = hinfsyn(&plant, opts)?;
    let targets = closed_loop_targets(p, load, &sol.controller)?;
    let closes_within_one = |k: &StateSpace| {
        plant
            .close_loop(k)
            .map(|cl| cl.is_stable() && hinf_norm(&cl, 1e-6).value <= 1.0)
            .unwrap_or(false)
    };
    let (hsv, reduced, error_bound) = if sol.controller.is_stable() {
        let t = truncate_band_limited(&sol.controller, rule, closes_within_one)?;
        (t.hsv, t.reduced, t.error_bound)
    } else {
        (Vec::new(), sol.controller.clone(), 0.0)
    };
    let reduced_cl = plant.close_loop(&reduced)?;
    let reduced_norm = if reduced_cl.is_stable() {
        hinf_norm(&reduced_cl, 1e-6).value
    } else {
        f64::INFINITY
    };
    let reduced_targets = closed_loop_targets(p, load, &reduced)?;
    let robust = robust_stability_check(&plant, &reduced, &default_delta_samples())?;
    Ok(SynthesisReport {
        plant,
        controller: sol.controller,
        gamma: sol.gamma,
        closed_loop_norm: sol.closed_loop_norm,
        history: sol.history,
        regularization: sol.regularization,
        hsv,
        reduced,
        error_bound,
        reduced_norm,
        targets,
        reduced_targets,
        robust,
    })
}

/// Search limits for [`calibrate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationBounds {
    /// Each gain stays within `[start / max_factor, start * max_factor]`.
    pub max_factor: f64,
    /// Initial multiplicative step; halved in log scale after a sweep without progress.
    pub initial_step: f64,
    /// Search stops once the step falls below this factor.
    pub min_step: f64,
    pub max_evaluations: usize,
    /// Required `gamma`.
    pub gamma_target: f64,
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        Self {
            max_factor: 100.0,
            initial_step: 2.0,
            min_step: 1.05,
            max_evaluations: 400,
            gamma_target: 0.95,
        }
    }
}

impl CalibrationBounds {
    fn validate(&self) -> Result<()> {
        if !(self.max_factor >= 1.0 && self.initial_step > 1.0 && self.min_step > 1.0) {
            return Err(Error::InvalidArgument(
                "calibration needs max_factor >= 1 and steps above 1".into(),
            ));
        }
        if !(self.gamma_target > 0.0) {
            return Err(Error::InvalidArgument(
                "gamma target must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationStep {
    pub parameter: String,
    pub value: f64,
    /// `None` when synthesis failed for this candidate.
    pub gamma: Option<f64>,
    pub score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub config: WeightConfig,
    pub gamma: Option<f64>,
    pub targets: Option<TargetReport>,
    pub feasible: bool,
    pub evaluations: usize,
    pub trace: Vec<CalibrationStep>,
}

struct Probe {
    gamma: Option<f64>,
    targets: Option<TargetReport>,
    score: f64,
    feasible: bool,
}

fn probe(
    p: &VsiParameters,
    load: &LoadModel,
    cfg: &WeightConfig,
    opts: &SynthesisOptions,
    spec: &TargetSpec,
    b: &CalibrationBounds,
) -> Probe {
    let run = || -> Result<(f64, TargetReport)> {
        let w = build_weights(p, cfg)?;
        let plant = assemble_generalized_plant(p, load, &w)?;
        let sol = hinfsyn(&plant, opts)?;
        Ok((sol.gamma, closed_loop_targets(p, load, &sol.controller)?))
    };
    match run() {
        Ok((gamma, t)) => {
            let z = t.z_mag.iter().map(|(_, z)| *z).fold(0.0, f64::max);
            let score = (gamma / b.gamma_target)
                .max(t.g_error / spec.g_tol)
                .max(z / spec.z_max);
            let feasible = gamma < b.gamma_target && t.passes(spec.g_tol, spec.z_max);
            Probe {
                gamma: Some(gamma),
                targets: Some(t),
                score,
                feasible,
            }
        }
        Err(_) => Probe {
            gamma: None,
            targets: None,
            score: f64::INFINITY,
            feasible: false,
        },
    }
}

#[derive(Clone, Copy)]
enum Knob {
    KS1,
    KS2,
    KS3,
    Kd(u32),
}

impl Knob {
    fn name(self) -> String {
        match self {
            Knob::KS1 => "k_s1".into(),
            Knob::KS2 => "k_s2".into(),
            Knob::KS3 => "k_s3".into(),
            Knob::Kd(h) => format!("k_d[{}]", h),
        }
    }

    fn get(self, c: &WeightConfig) -> f64 {
        match self {
            Knob::KS1 => c.k_s1,
            Knob::KS2 => c.k_s2,
            Knob::KS3 => c.k_s3,
            Knob::Kd(h) => c.k_d[&h],
        }
    }

    fn set(self, c: &mut WeightConfig, v: f64) {
        match self {
            Knob::KS1 => c.k_s1 = v,
            Knob::KS2 => c.k_s2 = v,
            Knob::KS3 => c.k_s3 = v,
            Knob::Kd(h) => {
                c.k_d.insert(h, v);
            }
        }
    }
}

/// Coordinate search over `k_s1`, `k_s2`, `k_s3` and then each `k_d` entry
/// in ascending harmonic order.
///
/// Each candidate is scored by the worst ratio of `gamma`, `|G - 1|` and
/// `max |Z|` to their thresholds; a move is kept only on strict improvement.
/// A start that already meets the thresholds is returned unchanged.
pub fn calibrate(
    p: &VsiParameters,
    load: &LoadModel,
    start: &WeightConfig,
    opts: &SynthesisOptions,
    spec: &TargetSpec,
    bounds: &CalibrationBounds,
) -> Result<Calibration> {
    start.validate()?;
    bounds.validate()?;
    let mut knobs = vec![Knob::KS1, Knob::KS2, Knob::KS3];
    knobs.extend(start.k_d.keys().map(|&h| Knob::Kd(h)));

    let mut best_cfg = start.clone();
    let mut best = probe(p, load, &best_cfg, opts, spec, bounds);
    let mut evaluations = 1;
    let mut trace = vec![CalibrationStep {
        parameter: "start".into(),
        value: f64::NAN,
        gamma: best.gamma,
        score: best.score,
    }];
    let mut step = bounds.initial_step;
    'search: while !best.feasible && step >= bounds.min_step {
        let mut improved = false;
        for &knob in &knobs {
            let origin = knob.get(start);
            for factor in [step, 1.0 / step] {
                if evaluations >= bounds.max_evaluations {
                    break 'search;
                }
                let value = knob.get(&best_cfg) * factor;
                let ratio = value / origin;
                if ratio > bounds.max_factor * (1.0 + 1e-12)
                    || ratio < (1.0 - 1e-12) / bounds.max_factor
                {
                    continue;
                }
                let mut cand = best_cfg.clone();
                knob.set(&mut cand, value);
                if cand.validate().is_err() {
                    continue;
                }
                let r = probe(p, load, &cand, opts, spec, bounds);
                evaluations += 1;
                trace.push(CalibrationStep {
                    parameter: knob.name(),
                    value,
                    gamma: r.gamma,
                    score: r.score,
                });
                if r.score < best.score {
                    best = r;
                    best_cfg = cand;
                    improved = true;
                    if best.feasible {
                        break 'search;
                    }
                    break;
                }
            }
        }
        if !improved {
            step = step.sqrt();
        }
    }
    Ok(Calibration {
        config: best_cfg,
        gamma: best.gamma,
        targets: best.targets,
        feasible: best.feasible,
        evaluations,
        trace,
    })
}
