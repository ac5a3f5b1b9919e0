use std::path::{Path, PathBuf};

use gfm_core::analysis::PhaseUnit;
use gfm_core::baseline::{BaselineSearch, BaselineSpec};
use gfm_core::sim::{default_harmonic_bank, schedule_with, Scenario, ScheduleOptions};
use gfm_core::synthesis::{BandLimitedRule, SynthesisOptions};
use gfm_core::vsi::{CalibrationBounds, LoadModel, TargetSpec, VsiParameters, WeightConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Pre-roll applied by the default schedule, in fundamental cycles.
pub const DEFAULT_PRE_ROLL: u32 = 6;

/// Everything a command needs. Absent fields take the documented defaults;
/// unknown fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectConfig {
    pub schema_version: u32,
    pub params: VsiParameters,
    pub weights: WeightConfig,
    /// Synthesis load; rated `R || L` of `params` when absent.
    pub load: Option<LoadModel>,
    /// Event schedule knobs; the default harmonic bank and a
    /// `DEFAULT_PRE_ROLL`-cycle pre-roll when absent.
    pub schedule: Option<ScheduleOptions>,
    pub synthesis: SynthesisOptions,
    pub truncation: BandLimitedRule,
    pub targets: TargetSpec,
    pub calibration: CalibrationBounds,
    pub baseline: BaselineSpec,
    pub baseline_search: BaselineSearch,
    pub phase_unit: PhaseUnit,
    /// Recorded with every report. Every search in the pipeline is a fixed-order
    /// sweep, so no output depends on it yet.
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: VsiParameters::default(),
            weights: WeightConfig::default(),
            load: None,
            schedule: None,
            synthesis: SynthesisOptions::default(),
            truncation: BandLimitedRule::default(),
            targets: TargetSpec::default(),
            calibration: CalibrationBounds::default(),
            baseline: BaselineSpec::default(),
            baseline_search: BaselineSearch::default(),
            phase_unit: PhaseUnit::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ProjectConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        let core = |e: gfm_core::Error| CliError::Config(e.to_string());
        self.params.validate().map_err(core)?;
        self.weights.validate().map_err(core)?;
        self.load_model().validate().map_err(core)?;
        self.scenario().validate().map_err(core)?;
        Ok(())
    }

    pub fn load_model(&self) -> LoadModel {
        self.load
            .clone()
            .unwrap_or_else(|| LoadModel::nominal(&self.params))
    }

    pub fn schedule(&self) -> ScheduleOptions {
        self.schedule.clone().unwrap_or_else(|| ScheduleOptions {
            harmonic_bank: default_harmonic_bank(&self.params),
            pre_roll_cycles: DEFAULT_PRE_ROLL,
            ..Default::default()
        })
    }

    pub fn scenario(&self) -> Scenario {
        schedule_with(&self.params, &self.schedule())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(
            ProjectConfig::from_json("{}").unwrap(),
            ProjectConfig::default()
        );
    }

    #[test]
    fn round_trips() {
        let mut cfg = ProjectConfig::default();
        cfg.seed = 17;
        cfg.schedule = Some(cfg.schedule());
        cfg.weights.k_s2 = 2f64.sqrt() * 100.0;
        let back = ProjectConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        assert!(matches!(
            ProjectConfig::from_json(r#"{"sed": 1}"#),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ProjectConfig::from_json(r#"{"weights": {"k_s9": 1}}"#),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ProjectConfig::from_json(r#"{"schema_version": 2}"#),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ProjectConfig::from_json(r#"{"params": {"l_f": -1}}"#),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn default_schedule_carries_bank_and_pre_roll() {
        let s = ProjectConfig::default().scenario();
        assert_eq!(s.pre_roll_cycles, DEFAULT_PRE_ROLL);
        assert!(s.events[0].actions.len() == 2);
    }
}
