use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratings and filter constants of the single-phase inverter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VsiParameters {
    /// Rated output voltage, volts RMS.
    pub v_rated: f64,
    /// Nominal angular frequency, rad/s.
    pub omega_o: f64,
    pub v_dc: f64,
    /// Switching (and controller sampling) frequency, Hz.
    pub f_sw: f64,
    pub l_f: f64,
    pub c_f: f64,
    /// Series resistance of the filter inductor.
    pub r_f: f64,
    pub s_rated: f64,
    pub p_rated: f64,
    pub q_rated: f64,
}

impl Default for VsiParameters {
    fn default() -> Self {
        Self {
            v_rated: 220.0,
            omega_o: 2.0 * std::f64::consts::PI * 60.0,
            v_dc: 500.0,
            f_sw: 20e3,
            l_f: 2e-3,
            c_f: 20e-6,
            r_f: 0.05,
            s_rated: 2000.0,
            p_rated: 1600.0,
            q_rated: 1200.0,
        }
    }
}

impl VsiParameters {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_rated", self.v_rated),
            ("omega_o", self.omega_o),
            ("v_dc", self.v_dc),
            ("f_sw", self.f_sw),
            ("l_f", self.l_f),
            ("c_f", self.c_f),
            ("r_f", self.r_f),
            ("s_rated", self.s_rated),
            ("p_rated", self.p_rated),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{} must be positive and finite, got {}",
                    name, v
                )));
            }
        }
        if !(self.q_rated.is_finite() && self.q_rated >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "q_rated must be nonnegative, got {}",
                self.q_rated
            )));
        }
        let apparent = self.p_rated.hypot(self.q_rated);
        if apparent > self.s_rated * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "P and Q ratings give {:.3} VA, above the {:.3} VA rating",
                apparent, self.s_rated
            )));
        }
        Ok(())
    }

    /// LC resonance `1 / sqrt(L_f C_f)` in rad/s.
    pub fn omega_res(&self) -> f64 {
        1.0 / (self.l_f * self.c_f).sqrt()
    }

    pub fn f0(&self) -> f64 {
        self.omega_o / (2.0 * std::f64::consts::PI)
    }

    /// Peak of the rated sinusoidal reference.
    pub fn v_peak(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.v_rated
    }

    /// Nominal load resistance `V^2 / P`.
    pub fn r_load_nominal(&self) -> f64 {
        self.v_rated * self.v_rated / self.p_rated
    }

    /// Nominal load inductance `V^2 / (omega_o Q)`; `None` for a purely resistive rating.
    pub fn l_load_nominal(&self) -> Option<f64> {
        (self.q_rated > 0.0).then(|| self.v_rated * self.v_rated / (self.omega_o * self.q_rated))
    }
}

/// One odd harmonic of the current-source part of the load.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicCurrent {
    pub order: u32,
    /// Peak amplitude, amps.
    pub amplitude: f64,
    /// Phase, rad.
    pub phase: f64,
}

pub fn validate_bank(bank: &[HarmonicCurrent]) -> Result<()> {
    let mut seen = Vec::new();
    for h in bank {
        if h.order % 2 == 0 || h.order > 13 || h.order == 0 {
            return Err(Error::InvalidArgument(format!(
                "harmonic order {} must be odd and within 1..=13",
                h.order
            )));
        }
        if seen.contains(&h.order) {
            return Err(Error::InvalidArgument(format!(
                "harmonic order {} listed twice",
                h.order
            )));
        }
        if !h.amplitude.is_finite() || !h.phase.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "harmonic {} has a non-finite entry",
                h.order
            )));
        }
        seen.push(h.order);
    }
    Ok(())
}

/// Nominal RL admittance plus harmonic current bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadModel {
    pub r_nominal: f64,
    /// `None` when the reactive rating is zero.
    pub l_nominal: Option<f64>,
    #[serde(default)]
    pub harmonic_bank: Vec<HarmonicCurrent>,
}

impl LoadModel {
    pub fn nominal(p: &VsiParameters) -> Self {
        Self {
            r_nominal: p.r_load_nominal(),
            l_nominal: p.l_load_nominal(),
            harmonic_bank: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_nominal.is_finite() && self.r_nominal > 0.0) {
            return Err(Error::InvalidArgument(
                "nominal load resistance must be positive".into(),
            ));
        }
        if let Some(l) = self.l_nominal {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidArgument(
                    "nominal load inductance must be positive".into(),
                ));
            }
        }
        validate_bank(&self.harmonic_bank)
    }
}
