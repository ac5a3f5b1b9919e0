use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::params::VsiParameters;
use crate::error::{Error, Result};
use crate::{Cascade, TransferFunction};

pub const HARMONICS: [u32; 7] = [1, 3, 5, 7, 9, 11, 13];

/// Units of the synthesis channels.
///
/// Per-unit divides voltages by `V_rated` and currents by `S_rated / V_rated`.
/// The voltage-to-voltage controller path is unaffected, so the resulting
/// controller is the same object in either case; only the relative weight
/// of current and voltage channels inside the norm changes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelScaling {
    Si,
    #[default]
    PerUnit,
}

/// Weighting-function constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightConfig {
    pub k_s1: f64,
    pub k_s2: f64,
    pub k_s3: f64,
    pub zeta: f64,
    /// Damping of the disturbance weight; falls back to `zeta`.
    pub zeta_d: Option<f64>,
    pub k_cs1: f64,
    pub k_cs2: f64,
    /// Peak gain of the disturbance weight per odd harmonic.
    pub k_d: BTreeMap<u32, f64>,
    pub k_b: f64,
    /// Bandwidth of the target response, rad/s.
    pub omega_b: f64,
    pub scaling: ChannelScaling,
}

/// Calibrated profile: meets the closed-loop targets with `gamma` near 0.9
/// on the default inverter.
///
/// The disturbance weight has no fundamental factor because `W_S` already
/// peaks there, and its harmonic gains fall off roughly as `1 / h^2` to track
/// the control effort needed against the LC filter. The narrow `zeta_d`
/// still leaves each resonance wide enough to survive Tustin warping of the
/// upper harmonics at a 20 kHz controller rate.
impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            k_s1: 0.2,
            k_s2: 500.0,
            k_s3: 10.0,
            zeta: 0.01,
            zeta_d: Some(4e-4),
            k_cs1: 1.0,
            k_cs2: 333.0,
            k_d: [3, 5, 7, 9, 11, 13]
                .into_iter()
                .zip([500.0, 300.0, 150.0, 110.0, 75.0, 55.0])
                .collect(),
            k_b: 1.0,
            omega_b: 1e4,
            scaling: ChannelScaling::PerUnit,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        let gains = [
            ("k_s1", self.k_s1),
            ("k_s2", self.k_s2),
            ("k_s3", self.k_s3),
            ("k_cs1", self.k_cs1),
            ("k_cs2", self.k_cs2),
            ("k_b", self.k_b),
            ("omega_b", self.omega_b),
        ];
        for (name, v) in gains {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{} must be positive, got {}",
                    name, v
                )));
            }
        }
        if self.k_d.is_empty() {
            return Err(Error::InvalidArgument(
                "k_d needs at least one harmonic".into(),
            ));
        }
        for (name, z) in [("zeta", Some(self.zeta)), ("zeta_d", self.zeta_d)] {
            if let Some(z) = z {
                if !(z > 0.0 && z < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "{} must lie in (0, 1), got {}",
                        name, z
                    )));
                }
            }
        }
        if self.k_cs1 > self.k_cs2 / 10.0 {
            return Err(Error::InvalidArgument(format!(
                "k_cs1 = {} must be at most a tenth of k_cs2 = {}",
                self.k_cs1, self.k_cs2
            )));
        }
        for (h, k) in &self.k_d {
            if !HARMONICS.contains(h) {
                return Err(Error::InvalidArgument(format!(
                    "k_d harmonic {} must be odd and within 1..=13",
                    h
                )));
            }
            if !(k.is_finite() && *k > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "k_d[{}] must be positive, got {}",
                    h, k
                )));
            }
        }
        Ok(())
    }

    pub fn zeta_d(&self) -> f64 {
        self.zeta_d.unwrap_or(self.zeta)
    }
}

/// `(s^2 + 2 k zeta w s + w^2) / (s^2 + 2 zeta w s + w^2)`: unity at DC and
/// infinity, magnitude exactly `k` at `s = jw`.
pub fn biquad(omega: f64, k: f64, zeta: f64) -> TransferFunction {
    TransferFunction::new(
        vec![1.0, 2.0 * k * zeta * omega, omega * omega],
        vec![1.0, 2.0 * zeta * omega, omega * omega],
    )
    .expect("monic denominator")
}

#[derive(Clone, Debug)]
pub struct Weights {
    pub w_s: Cascade,
    pub w_cs: TransferFunction,
    pub w_d: Cascade,
    pub t_des: TransferFunction,
    pub scaling: ChannelScaling,
}

pub fn build_weights(p: &VsiParameters, cfg: &WeightConfig) -> Result<Weights> {
    cfg.validate()?;
    let w_s = Cascade::new(vec![
        TransferFunction::gain(cfg.k_s1),
        biquad(p.omega_o, cfg.k_s2, cfg.zeta),
        biquad(p.omega_res(), cfg.k_s3, cfg.zeta),
    ]);
    let w_cs = TransferFunction::new(
        vec![1.0, cfg.k_cs1 * p.omega_o],
        vec![1.0, cfg.k_cs2 * p.omega_o],
    )?;
    let w_d = Cascade::new(
        cfg.k_d
            .iter()
            .map(|(&h, &k)| biquad(h as f64 * p.omega_o, k, cfg.zeta_d()))
            .collect(),
    );
    let t_des = TransferFunction::new(vec![cfg.k_b * cfg.omega_b], vec![1.0, cfg.omega_b])?;
    Ok(Weights {
        w_s,
        w_cs,
        w_d,
        t_des,
        scaling: cfg.scaling,
    })
}
