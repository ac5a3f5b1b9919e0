use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vsi::{validate_bank, HarmonicCurrent, VsiParameters};

/// Linear part of the load: resistor and inductor branches in parallel
/// across the capacitor. A `None` branch is open.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlLoad {
    pub r: Option<f64>,
    pub l: Option<f64>,
}

impl RlLoad {
    pub const NONE: RlLoad = RlLoad { r: None, l: None };

    /// Branches that draw rated P and Q at rated voltage.
    pub fn rated(p: &VsiParameters) -> Self {
        Self {
            r: Some(p.r_load_nominal()),
            l: p.l_load_nominal(),
        }
    }

    fn validate(&self) -> Result<()> {
        for v in [self.r, self.l].into_iter().flatten() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Scenario(format!(
                    "load branch value {} must be positive",
                    v
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    SetRlLoad(RlLoad),
    SetHarmonicBank(Vec<HarmonicCurrent>),
    /// Multiplies the rated reference amplitude from this instant on.
    ScaleVref(f64),
}

impl Action {
    fn category(&self) -> u8 {
        match self {
            Action::SetRlLoad(_) => 0,
            Action::SetHarmonicBank(_) => 1,
            Action::ScaleVref(_) => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Action::SetRlLoad(l) => l.validate(),
            Action::SetHarmonicBank(b) => {
                validate_bank(b).map_err(|e| Error::Scenario(e.to_string()))
            }
            Action::ScaleVref(f) if f.is_finite() => Ok(()),
            Action::ScaleVref(f) => Err(Error::Scenario(format!(
                "reference factor {} is not finite",
                f
            ))),
        }
    }
}

/// Everything that happens at one instant; at most one action per category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub time: f64,
    pub actions: Vec<Action>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: VsiParameters,
    pub initial_load: RlLoad,
    #[serde(default)]
    pub initial_bank: Vec<HarmonicCurrent>,
    pub initial_vref_factor: f64,
    pub events: Vec<Event>,
    pub end_time: f64,
    /// RK4 steps per controller period.
    pub oversample: usize,
    /// Fundamental cycles simulated under the initial conditions and
    /// discarded before `t = 0`.
    #[serde(default)]
    pub pre_roll_cycles: u32,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.initial_load.validate()?;
        validate_bank(&self.initial_bank).map_err(|e| Error::Scenario(e.to_string()))?;
        if !(self.end_time > 0.0 && self.end_time.is_finite()) {
            return Err(Error::Scenario("end time must be positive".into()));
        }
        if self.oversample == 0 {
            return Err(Error::Scenario(
                "oversample factor must be at least 1".into(),
            ));
        }
        if !self.initial_vref_factor.is_finite() {
            return Err(Error::Scenario(
                "initial reference factor is not finite".into(),
            ));
        }
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.time > last) {
                return Err(Error::Scenario(format!(
                    "event at {} s is not after the previous one",
                    e.time
                )));
            }
            if !(e.time >= 0.0 && e.time <= self.end_time) {
                return Err(Error::Scenario(format!(
                    "event at {} s lies outside [0, {}]",
                    e.time, self.end_time
                )));
            }
            let mut seen = [false; 3];
            for a in &e.actions {
                a.validate()?;
                let c = a.category() as usize;
                if seen[c] {
                    return Err(Error::Scenario(format!(
                        "two actions of one kind at {} s",
                        e.time
                    )));
                }
                seen[c] = true;
            }
            last = e.time;
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        1.0 / (self.params.f_sw * self.oversample as f64)
    }
}

/// Load and reference profile knobs for [`default_event_schedule`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleOptions {
    /// Resistance multiplier at the combined step.
    pub combined_r_factor: f64,
    /// Reference amplitude factor from `t = 0`.
    pub initial_vref_factor: f64,
    /// Reference amplitude factor from the 0.2 s event on.
    pub vref_factor: f64,
    /// Harmonic bank connected with the load and dropped at the final no-load step.
    pub harmonic_bank: Vec<HarmonicCurrent>,
    pub oversample: usize,
    pub pre_roll_cycles: u32,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            combined_r_factor: 0.5,
            initial_vref_factor: 1.0,
            vref_factor: 0.8,
            harmonic_bank: Vec::new(),
            oversample: 20,
            pre_roll_cycles: 0,
        }
    }
}

/// No load until 0.05 s, rated `R || L` until 0.1 s, resistive only until
/// 0.15 s, then `R` scaled with `L` restored, reference scaled at 0.2 s and
/// no load from 0.25 s to the end at 0.3 s.
pub fn default_event_schedule(p: &VsiParameters) -> Scenario {
    schedule_with(p, &ScheduleOptions::default())
}

pub fn schedule_with(p: &VsiParameters, o: &ScheduleOptions) -> Scenario {
    let rated = RlLoad::rated(p);
    let mut connect = vec![Action::SetRlLoad(rated)];
    let mut disconnect = vec![Action::SetRlLoad(RlLoad::NONE)];
    if !o.harmonic_bank.is_empty() {
        connect.push(Action::SetHarmonicBank(o.harmonic_bank.clone()));
        disconnect.push(Action::SetHarmonicBank(Vec::new()));
    }
    let events = vec![
        Event {
            time: 0.05,
            actions: connect,
        },
        Event {
            time: 0.1,
            actions: vec![Action::SetRlLoad(RlLoad {
                r: rated.r,
                l: None,
            })],
        },
        Event {
            time: 0.15,
            actions: vec![Action::SetRlLoad(RlLoad {
                r: rated.r.map(|r| r * o.combined_r_factor),
                l: rated.l,
            })],
        },
        Event {
            time: 0.2,
            actions: vec![Action::ScaleVref(o.vref_factor)],
        },
        Event {
            time: 0.25,
            actions: disconnect,
        },
    ];
    Scenario {
        params: p.clone(),
        initial_load: RlLoad::NONE,
        initial_bank: Vec::new(),
        initial_vref_factor: o.initial_vref_factor,
        events,
        end_time: 0.3,
        oversample: o.oversample,
        pre_roll_cycles: o.pre_roll_cycles,
    }
}

/// Rectifier-like bank: rated current at the fundamental plus
/// 20, 12, 8, 5, 4 and 3 % at harmonics 3 to 13, all in phase.
pub fn default_harmonic_bank(p: &VsiParameters) -> Vec<HarmonicCurrent> {
    let fundamental = std::f64::consts::SQRT_2 * p.s_rated / p.v_rated;
    [
        (1, 1.0),
        (3, 0.2),
        (5, 0.12),
        (7, 0.08),
        (9, 0.05),
        (11, 0.04),
        (13, 0.03),
    ]
    .into_iter()
    .map(|(order, frac)| HarmonicCurrent {
        order,
        amplitude: fundamental * frac,
        phase: 0.0,
    })
    .collect()
}

/// `sum_h A_h sin(h w_o t + phi_h)`.
pub fn harmonic_bank_current(bank: &[HarmonicCurrent], t: f64, omega_o: f64) -> f64 {
    bank.iter()
        .map(|h| h.amplitude * (h.order as f64 * omega_o * t + h.phase).sin())
        .sum()
}
