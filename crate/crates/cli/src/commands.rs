use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gfm_core::analysis::{bode_export, metrics_csv, Comparison, ControllerMetrics};
use gfm_core::baseline::{design_baseline, BaselineDesign, BaselineSpec, LoopSpec, MarginReport};
use gfm_core::lti::{logspace, DiscreteStateSpace, FrequencyEval};
use gfm_core::sim::{error_feedback, simulate, simulate_discrete, Scenario, TimeSeries};
use gfm_core::vsi::{build_plant, calibrate, closed_loop, synthesize, SynthesisReport};
use gfm_core::StateSpace;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::ProjectConfig;
use crate::controller_file::{ControllerFile, LoadedController};
use crate::output::OutDir;
use crate::CliError;

/// Bode grid of `cmd_bode`, rad/s.
pub const BODE_RANGE: (f64, f64, usize) = (1.0, 1e6, 601);

/// Files written by a command and a short human-readable summary.
#[derive(Clone, Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Which controller `simulate` runs.
#[derive(Clone, Debug, PartialEq)]
pub enum ControllerChoice {
    Hinf,
    Baseline,
    File(PathBuf),
}

impl ControllerChoice {
    /// `hinf`, `baseline`, or a path to a controller file.
    pub fn parse(s: &str) -> Self {
        match s {
            "hinf" => ControllerChoice::Hinf,
            "baseline" => ControllerChoice::Baseline,
            path => ControllerChoice::File(PathBuf::from(path)),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ControllerChoice::Hinf => "hinf",
            ControllerChoice::Baseline => "baseline",
            ControllerChoice::File(_) => "external",
        }
    }
}

#[derive(Serialize)]
struct SynthSummary<'a> {
    status: &'a str,
    diagnostic: Option<String>,
    gamma: Option<f64>,
    closed_loop_norm: Option<f64>,
    full_order: Option<usize>,
    reduced_order: Option<usize>,
    reduced_norm: Option<f64>,
    error_bound: Option<f64>,
    regularization: Option<String>,
    meets_targets: Option<bool>,
    robust: Option<bool>,
    seed: u64,
}

fn run_synthesis(cfg: &ProjectConfig) -> Result<SynthesisReport, CliError> {
    Ok(synthesize(
        &cfg.params,
        &cfg.load_model(),
        &cfg.weights,
        &cfg.synthesis,
        &cfg.truncation,
    )?)
}

/// Synthesizes, reduces and verifies the H-infinity controller.
///
/// Writes `controller_full.json`, `controller_reduced.json`, `gamma_log.csv`,
/// `hsv.csv`, `targets.json`, `robust.json` and `synthesis_report.json`. An
/// infeasible synthesis still writes the report with its diagnostic.
pub fn cmd_synth(cfg: &ProjectConfig) -> Result<Report, CliError> {
    let mut out = OutDir::create(&cfg.out_dir)?;
    let r = match run_synthesis(cfg) {
        Ok(r) => r,
        Err(e) => {
            out.write_json(
                "synthesis_report.json",
                &SynthSummary {
                    status: "infeasible",
                    diagnostic: Some(e.to_string()),
                    gamma: None,
                    closed_loop_norm: None,
                    full_order: None,
                    reduced_order: None,
                    reduced_norm: None,
                    error_bound: None,
                    regularization: None,
                    meets_targets: None,
                    robust: None,
                    seed: cfg.seed,
                },
            )?;
            return Err(e);
        }
    };
    out.write(
        "controller_full.json",
        ControllerFile::from_continuous(&r.controller)
            .to_json()
            .as_bytes(),
    )?;
    out.write(
        "controller_reduced.json",
        ControllerFile::from_continuous(&r.reduced)
            .to_json()
            .as_bytes(),
    )?;

    let mut log = String::from("gamma,feasible,reason\n");
    for h in &r.history {
        let reason = h.reason.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(log, "{:.17e},{},{}", h.gamma, h.feasible, reason);
    }
    out.write("gamma_log.csv", log.as_bytes())?;
    let mut hsv = String::from("index,hankel_singular_value\n");
    for (i, v) in r.hsv.iter().enumerate() {
        let _ = writeln!(hsv, "{},{:.17e}", i + 1, v);
    }
    out.write("hsv.csv", hsv.as_bytes())?;

    #[derive(Serialize)]
    struct Targets<'a> {
        g_tol: f64,
        z_max: f64,
        full: &'a gfm_core::vsi::TargetReport,
        reduced: &'a gfm_core::vsi::TargetReport,
    }
    out.write_json(
        "targets.json",
        &Targets {
            g_tol: cfg.targets.g_tol,
            z_max: cfg.targets.z_max,
            full: &r.targets,
            reduced: &r.reduced_targets,
        },
    )?;
    out.write_json("robust.json", &r.robust)?;

    let meets = r.meets(&cfg.targets);
    let status = if meets { "ok" } else { "targets_missed" };
    out.write_json(
        "synthesis_report.json",
        &SynthSummary {
            status,
            diagnostic: None,
            gamma: Some(r.gamma),
            closed_loop_norm: Some(r.closed_loop_norm),
            full_order: Some(r.controller.order()),
            reduced_order: Some(r.reduced.order()),
            reduced_norm: Some(r.reduced_norm),
            error_bound: Some(r.error_bound),
            regularization: r.regularization.clone(),
            meets_targets: Some(meets),
            robust: Some(r.robust.robust),
            seed: cfg.seed,
        },
    )?;
    let summary = format!(
        "gamma {:.4}, closed-loop norm {:.4}, controller order {} reduced to {} (norm {:.4}), robust {}",
        r.gamma,
        r.closed_loop_norm,
        r.controller.order(),
        r.reduced.order(),
        r.reduced_norm,
        r.robust.robust
    );
    if !meets {
        return Err(CliError::Infeasible(format!(
            "closed-loop targets not met: {}",
            summary
        )));
    }
    Ok(Report {
        files: out.written,
        summary,
    })
}

/// Coordinate search over the weight gains; writes `weights_calibrated.json`,
/// `calibration_trace.csv` and `calibration.json`.
pub fn cmd_calibrate(cfg: &ProjectConfig) -> Result<Report, CliError> {
    let mut out = OutDir::create(&cfg.out_dir)?;
    let c = calibrate(
        &cfg.params,
        &cfg.load_model(),
        &cfg.weights,
        &cfg.synthesis,
        &cfg.targets,
        &cfg.calibration,
    )?;
    out.write_json("weights_calibrated.json", &c.config)?;
    let mut trace = String::from("parameter,value,gamma,score\n");
    for s in &c.trace {
        let gamma = s
            .gamma
            .map_or("undefined".to_string(), |g| format!("{:.17e}", g));
        let _ = writeln!(
            trace,
            "{},{:.17e},{},{:.17e}",
            s.parameter, s.value, gamma, s.score
        );
    }
    out.write("calibration_trace.csv", trace.as_bytes())?;
    out.write_json("calibration.json", &c)?;
    let summary = format!(
        "{} after {} evaluations, gamma {}",
        if c.feasible { "feasible" } else { "infeasible" },
        c.evaluations,
        c.gamma.map_or("undefined".into(), |g| format!("{:.4}", g))
    );
    if !c.feasible {
        return Err(CliError::Infeasible(format!(
            "no feasible weights within bounds; best candidate: {}",
            summary
        )));
    }
    Ok(Report {
        files: out.written,
        summary,
    })
}

/// A controller on `[v_ref, v_C, i_inv]`, continuous or already sampled.
enum SimController {
    Continuous(StateSpace),
    Discrete(DiscreteStateSpace<f64>),
}

impl SimController {
    fn run(&self, scenario: &Scenario) -> Result<TimeSeries, CliError> {
        Ok(match self {
            SimController::Continuous(k) => simulate(scenario, k)?,
            SimController::Discrete(k) => simulate_discrete(scenario, k)?,
        })
    }
}

/// Error-feedback (`1 x 1`) controllers are lifted; `1 x 3` ones are used as is.
fn lift(loaded: LoadedController) -> Result<SimController, CliError> {
    let map = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
    match loaded {
        LoadedController::Continuous(k) if k.inputs() == 1 && k.outputs() == 1 => {
            Ok(SimController::Continuous(error_feedback(&k)?))
        }
        LoadedController::Continuous(k) if k.inputs() == 3 && k.outputs() == 1 => {
            Ok(SimController::Continuous(k))
        }
        LoadedController::Discrete(k) if k.inputs() == 1 && k.outputs() == 1 => {
            Ok(SimController::Discrete(DiscreteStateSpace {
                b: &k.b * &map,
                d: &k.d * &map,
                ..k
            }))
        }
        LoadedController::Discrete(k) if k.inputs() == 3 && k.outputs() == 1 => {
            Ok(SimController::Discrete(k))
        }
        _ => Err(CliError::Config(
            "controller must be 1x1 (error feedback) or 1x3 ([v_ref, v_C, i_inv])".into(),
        )),
    }
}

fn read_controller(path: &Path) -> Result<LoadedController, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
    ControllerFile::from_json(&text)?.into_controller()
}

fn hinf_reduced(cfg: &ProjectConfig) -> Result<StateSpace, CliError> {
    let r = run_synthesis(cfg)?;
    if !r.meets(&cfg.targets) {
        return Err(CliError::Infeasible(format!(
            "H-infinity design misses its targets (gamma {:.4}, reduced norm {:.4})",
            r.gamma, r.reduced_norm
        )));
    }
    Ok(r.reduced)
}

fn baseline(cfg: &ProjectConfig) -> Result<BaselineDesign, CliError> {
    Ok(design_baseline(
        &cfg.params,
        &cfg.load_model(),
        &cfg.baseline,
        &cfg.baseline_search,
    )?)
}

fn resolve(cfg: &ProjectConfig, choice: &ControllerChoice) -> Result<SimController, CliError> {
    match choice {
        ControllerChoice::Hinf => Ok(SimController::Continuous(error_feedback(&hinf_reduced(
            cfg,
        )?)?)),
        ControllerChoice::Baseline => Ok(SimController::Continuous(
            baseline(cfg)?.controller.to_state_space()?,
        )),
        ControllerChoice::File(path) => lift(read_controller(path)?),
    }
}

/// Runs the configured event schedule; writes `timeseries.csv`,
/// `metrics.csv` and `metrics.json`.
pub fn cmd_simulate(cfg: &ProjectConfig, choice: &ControllerChoice) -> Result<Report, CliError> {
    let k = resolve(cfg, choice)?;
    let scenario = cfg.scenario();
    let ts = k.run(&scenario)?;
    let m = ControllerMetrics::from_series(choice.name(), &ts, &scenario, cfg.phase_unit)?;
    let mut out = OutDir::create(&cfg.out_dir)?;
    let mut csv = Vec::new();
    ts.write_csv(&mut csv)?;
    out.write("timeseries.csv", &csv)?;
    out.write("metrics.csv", metrics_csv(&m).as_bytes())?;
    out.write_json("metrics.json", &m)?;
    let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{:.4}", x));
    let pct = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{:.4} %", x));
    let summary = format!(
        "{}: worst THD {}, magnitude error {}, phase error {}",
        m.name,
        pct(m.worst_thd),
        pct(m.worst_magnitude_error),
        opt(m.worst_phase_error)
    );
    Ok(Report {
        files: out.written,
        summary,
    })
}

fn spec_notes(
    which: &str,
    spec: &LoopSpec,
    reference: &LoopSpec,
    achieved: &MarginReport,
) -> Vec<String> {
    let mut notes = Vec::new();
    let below = |what: &str, got: f64, want: f64, unit: &str| {
        format!(
            "{} loop {} requirement {:.2} {} is below the reference {:.2} {}",
            which, what, got, unit, want, unit
        )
    };
    if spec.phase_margin_deg < reference.phase_margin_deg {
        notes.push(below(
            "phase margin",
            spec.phase_margin_deg,
            reference.phase_margin_deg,
            "deg",
        ));
    }
    if spec.gain_margin_db < reference.gain_margin_db {
        notes.push(below(
            "gain margin",
            spec.gain_margin_db,
            reference.gain_margin_db,
            "dB",
        ));
    }
    if spec.bandwidth < reference.bandwidth {
        notes.push(below(
            "bandwidth",
            spec.bandwidth,
            reference.bandwidth,
            "rad/s",
        ));
    }
    if let Err(why) = reference.check(achieved) {
        notes.push(format!(
            "{} loop misses the reference requirement: {}",
            which, why
        ));
    }
    notes
}

#[derive(Serialize)]
struct CompareFile<'a> {
    comparison: &'a Comparison,
    baseline: Option<&'a BaselineDesign>,
    notes: &'a [String],
    seed: u64,
}

/// H-infinity against the baseline (or an external controller file) on the
/// configured schedule; writes `comparison.txt`, `comparison.csv` and
/// `comparison.json`. Fails with the verdict code unless H-infinity wins
/// THD and both tracking metrics.
pub fn cmd_compare(cfg: &ProjectConfig, external: Option<&Path>) -> Result<Report, CliError> {
    let hinf = SimController::Continuous(error_feedback(&hinf_reduced(cfg)?)?);
    let (other_name, other, design) = match external {
        Some(path) => ("external", lift(read_controller(path)?)?, None),
        None => {
            let d = baseline(cfg)?;
            let k = SimController::Continuous(d.controller.to_state_space()?);
            ("baseline", k, Some(d))
        }
    };
    let mut notes = Vec::new();
    if let Some(d) = &design {
        let reference = BaselineSpec::default();
        notes.extend(spec_notes(
            "inner",
            &cfg.baseline.inner,
            &reference.inner,
            &d.inner,
        ));
        notes.extend(spec_notes(
            "outer",
            &cfg.baseline.outer,
            &reference.outer,
            &d.outer,
        ));
    }
    let scenario = cfg.scenario();
    let mut rows = Vec::new();
    for (name, k) in [("hinf", &hinf), (other_name, &other)] {
        let attach = |e: CliError| match e {
            CliError::Divergence(m) => CliError::Divergence(format!("controller {}: {}", name, m)),
            e => e,
        };
        let ts = k.run(&scenario).map_err(attach)?;
        rows.push(ControllerMetrics::from_series(
            name,
            &ts,
            &scenario,
            cfg.phase_unit,
        )?);
    }
    let cmp = Comparison::new(rows);

    let mut text = cmp.render_text();
    if let Some(d) = &design {
        let bw = |b: Option<f64>| b.map_or("none".to_string(), |w| format!("{:.1} rad/s", w));
        let _ = writeln!(
            text,
            "\nbaseline gains: k_pc {:.6}, k_ic {:.6}, k_p {:.6}, k_r {:?}",
            d.controller.k_pc, d.controller.k_ic, d.controller.k_p, d.controller.k_r
        );
        for (which, m) in [("inner", &d.inner), ("outer", &d.outer)] {
            let _ = writeln!(
                text,
                "baseline {} loop: PM {:.2} deg, GM {:.2} dB, bandwidth {}",
                which,
                m.phase_margin_deg,
                m.gain_margin_db,
                bw(m.bandwidth)
            );
        }
    }
    for n in &notes {
        let _ = writeln!(text, "note: {}", n);
    }
    let mut out = OutDir::create(&cfg.out_dir)?;
    out.write("comparison.txt", text.as_bytes())?;
    out.write("comparison.csv", cmp.to_csv().as_bytes())?;
    out.write_json(
        "comparison.json",
        &CompareFile {
            comparison: &cmp,
            baseline: design.as_ref(),
            notes: &notes,
            seed: cfg.seed,
        },
    )?;
    let name = |w: &Option<String>| w.clone().unwrap_or_else(|| "tie".into());
    let v = &cmp.verdict;
    let summary = format!(
        "verdict: THD {}, magnitude error {}, phase error {}",
        name(&v.thd),
        name(&v.magnitude_error),
        name(&v.phase_error)
    );
    if !cmp.sweeps("hinf") {
        return Err(CliError::Verdict(summary));
    }
    Ok(Report {
        files: out.written,
        summary,
    })
}

/// Open-loop plant, controller, loop gain, tracking response and output
/// impedance of the H-infinity design (or a continuous error-feedback
/// controller file); writes `bode.csv`.
pub fn cmd_bode(cfg: &ProjectConfig, controller: Option<&Path>) -> Result<Report, CliError> {
    let k = match controller {
        None => hinf_reduced(cfg)?,
        Some(path) => match read_controller(path)? {
            LoadedController::Continuous(k) if k.inputs() == 1 && k.outputs() == 1 => k,
            _ => {
                return Err(CliError::Config(
                    "bode needs a continuous 1x1 error-feedback controller".into(),
                ))
            }
        },
    };
    let load = cfg.load_model();
    let plant =
        gfm_core::vsi::perturbed_plant(&cfg.params, &load, &gfm_core::TransferFunction::gain(0.0))?
            .g_v;
    let loop_gain = k.series(&plant.to_ss())?;
    let cl = closed_loop(
        &cfg.params,
        &load,
        &k,
        &StateSpace::gain(DMatrix::zeros(1, 1)),
    )?;
    let tracking = cl.subsystem(&[0], &[0])?;
    let impedance = cl.subsystem(&[0], &[1])?.negated();
    let (g_inv, _) = build_plant(&cfg.params);
    let systems: [(&str, &dyn FrequencyEval<f64>); 6] = [
        ("filter", &g_inv),
        ("plant", &plant),
        ("controller", &k),
        ("loop", &loop_gain),
        ("tracking", &tracking),
        ("impedance", &impedance),
    ];
    let table = bode_export(
        &systems,
        &logspace(BODE_RANGE.0, BODE_RANGE.1, BODE_RANGE.2),
    )?;
    let mut out = OutDir::create(&cfg.out_dir)?;
    out.write("bode.csv", table.to_csv().as_bytes())?;
    Ok(Report {
        files: out.written,
        summary: format!("{} frequencies x {} systems", BODE_RANGE.2, systems.len()),
    })
}
