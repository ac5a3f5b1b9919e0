use serde::Serialize;

use super::spectrum::{
    harmonic_magnitudes, range, thd_from_magnitudes, tracking_error, PhaseUnit, Window,
};
use crate::error::{Error, Result};
use crate::sim::{fmt_sig, simulate, Scenario, TimeSeries};
use crate::StateSpace;

/// Highest harmonic included in THD.
pub const MAX_HARMONIC: usize = 13;
/// Cycles analysed before each event.
pub const WINDOW_CYCLES: u32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Percent of the fundamental; `None` when the fundamental vanishes.
    pub thd: Option<f64>,
    /// Percent; `None` when the reference vanishes.
    pub magnitude_error: Option<f64>,
    pub phase_error: Option<f64>,
    /// `v_C` peak magnitudes of harmonics `1..=MAX_HARMONIC`, volts.
    pub harmonics: Vec<f64>,
    pub window: Window,
}

/// Power-quality metrics of `v_C` against `v_ref` over one window.
pub fn metrics(
    ts: &TimeSeries,
    f0: f64,
    window: &Window,
    unit: PhaseUnit,
) -> Result<MetricsReport> {
    let span = window.span(ts.period, ts.len(), f0)?;
    let harmonics = harmonic_magnitudes(&ts.v_c, &span, MAX_HARMONIC);
    let thd = thd_from_magnitudes(
        &harmonics,
        range(&ts.v_c[span.first..span.first + span.len]),
    );
    let (magnitude_error, phase_error) =
        match tracking_error(&ts.v_c, &ts.v_ref, ts.period, f0, window, unit) {
            Ok((m, p)) => (Some(m), Some(p)),
            Err(Error::Window(_)) => (None, None),
            Err(e) => return Err(e),
        };
    Ok(MetricsReport {
        thd,
        magnitude_error,
        phase_error,
        harmonics,
        window: *window,
    })
}

/// The last `WINDOW_CYCLES` whole cycles before each event and before the end.
pub fn steady_state_windows(scenario: &Scenario) -> Vec<Window> {
    let span = WINDOW_CYCLES as f64 / scenario.params.f0();
    let h = scenario.step_size();
    scenario
        .events
        .iter()
        .map(|e| e.time)
        .chain(std::iter::once(scenario.end_time))
        .filter(|&t| t - span >= -1e-12)
        .map(|t| {
            // snap to the integration grid so the span resolves exactly
            let end = (t / h).round() * h;
            let start = ((t - span) / h).round() * h;
            Window::new(start.max(0.0), end)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ControllerMetrics {
    pub name: String,
    pub windows: Vec<MetricsReport>,
    pub worst_thd: Option<f64>,
    pub worst_magnitude_error: Option<f64>,
    pub worst_phase_error: Option<f64>,
}

fn worst(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values
        .flatten()
        .fold(None, |acc: Option<f64>, v| match acc {
            Some(a) if a.abs() >= v.abs() => Some(a),
            _ => Some(v),
        })
}

impl ControllerMetrics {
    pub fn from_series(
        name: &str,
        ts: &TimeSeries,
        scenario: &Scenario,
        unit: PhaseUnit,
    ) -> Result<Self> {
        let f0 = scenario.params.f0();
        let windows = steady_state_windows(scenario)
            .iter()
            .map(|w| metrics(ts, f0, w, unit))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.to_string(),
            worst_thd: worst(windows.iter().map(|m| m.thd)),
            worst_magnitude_error: worst(windows.iter().map(|m| m.magnitude_error)),
            worst_phase_error: worst(windows.iter().map(|m| m.phase_error)),
            windows,
        })
    }
}

/// Winner per metric by worst-case magnitude; `None` for a tie.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub thd: Option<String>,
    pub magnitude_error: Option<String>,
    pub phase_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub controllers: Vec<ControllerMetrics>,
    pub verdict: Verdict,
}

fn winner(
    rows: &[ControllerMetrics],
    pick: impl Fn(&ControllerMetrics) -> Option<f64>,
) -> Option<String> {
    let scored: Vec<(f64, &str)> = rows
        .iter()
        .map(|r| (pick(r).map_or(f64::INFINITY, f64::abs), r.name.as_str()))
        .collect();
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let leaders: Vec<&str> = scored.iter().filter(|s| s.0 == best).map(|s| s.1).collect();
    match leaders.as_slice() {
        [one] if best.is_finite() => Some(one.to_string()),
        _ => None,
    }
}

impl Comparison {
    pub fn new(controllers: Vec<ControllerMetrics>) -> Self {
        let verdict = Verdict {
            thd: winner(&controllers, |c| c.worst_thd),
            magnitude_error: winner(&controllers, |c| c.worst_magnitude_error),
            phase_error: winner(&controllers, |c| c.worst_phase_error),
        };
        Self {
            controllers,
            verdict,
        }
    }

    /// True when `name` wins THD and both tracking metrics.
    pub fn sweeps(&self, name: &str) -> bool {
        let v = &self.verdict;
        [&v.thd, &v.magnitude_error, &v.phase_error]
            .iter()
            .all(|w| w.as_deref() == Some(name))
    }

    fn rows(&self) -> Vec<[String; 6]> {
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{:.4}", x));
        let mut rows = vec![[
            "controller".to_string(),
            "window_s".to_string(),
            "thd_pct".to_string(),
            "magnitude_error_pct".to_string(),
            "phase_error".to_string(),
            "v1_peak_v".to_string(),
        ]];
        for c in &self.controllers {
            for m in &c.windows {
                rows.push([
                    c.name.clone(),
                    format!("{:.4}-{:.4}", m.window.start, m.window.end),
                    opt(m.thd),
                    opt(m.magnitude_error),
                    opt(m.phase_error),
                    format!("{:.4}", m.harmonics[0]),
                ]);
            }
            rows.push([
                c.name.clone(),
                "worst".to_string(),
                opt(c.worst_thd),
                opt(c.worst_magnitude_error),
                opt(c.worst_phase_error),
                String::new(),
            ]);
        }
        let name = |w: &Option<String>| w.clone().unwrap_or_else(|| "tie".to_string());
        rows.push([
            "verdict".to_string(),
            String::new(),
            name(&self.verdict.thd),
            name(&self.verdict.magnitude_error),
            name(&self.verdict.phase_error),
            String::new(),
        ]);
        rows
    }

    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let rows = self.rows();
        let widths: Vec<usize> = (0..6)
            .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{:<w$}", c, w = *w))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        self.rows().iter().map(|r| r.join(",") + "\n").collect()
    }
}

/// Simulates every controller on the same scenario and tabulates the
/// per-window metrics with a verdict row.
pub fn compare_controllers(
    scenario: &Scenario,
    controllers: &[(String, StateSpace)],
    unit: PhaseUnit,
) -> Result<Comparison> {
    let mut out = Vec::with_capacity(controllers.len());
    for (name, k) in controllers {
        let attach = |e: Error| Error::Controller {
            name: name.clone(),
            source: Box::new(e),
        };
        let ts = simulate(scenario, k).map_err(attach)?;
        out.push(ControllerMetrics::from_series(name, &ts, scenario, unit).map_err(attach)?);
    }
    Ok(Comparison::new(out))
}

/// One line per window: `start,end,thd,magnitude_error,phase_error`.
pub fn metrics_csv(m: &ControllerMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or("undefined".to_string(), fmt_sig);
    let mut out =
        String::from("window_start_s,window_end_s,thd_pct,magnitude_error_pct,phase_error\n");
    for w in &m.windows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(w.window.start),
            fmt_sig(w.window.end),
            opt(w.thd),
            opt(w.magnitude_error),
            opt(w.phase_error)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::default_event_schedule;
    use crate::vsi::VsiParameters;

    #[test]
    fn windows_end_at_events() {
        let s = default_event_schedule(&VsiParameters::default());
        let w = steady_state_windows(&s);
        assert_eq!(w.len(), 6);
        for (win, t) in w.iter().zip([0.05, 0.1, 0.15, 0.2, 0.25, 0.3]) {
            assert!((win.end - t).abs() < 1e-12);
            assert!(((win.end - win.start) * 60.0 - 3.0).abs() < 1e-9);
        }
    }

    fn fake(name: &str, thd: f64, mag: f64, ph: f64) -> ControllerMetrics {
        ControllerMetrics {
            name: name.into(),
            windows: Vec::new(),
            worst_thd: Some(thd),
            worst_magnitude_error: Some(mag),
            worst_phase_error: Some(ph),
        }
    }

    #[test]
    fn verdicts() {
        let c = Comparison::new(vec![fake("a", 0.4, -0.5, 1.0), fake("b", 1.4, 0.3, -2.0)]);
        assert_eq!(c.verdict.thd.as_deref(), Some("a"));
        assert_eq!(c.verdict.magnitude_error.as_deref(), Some("b"));
        assert_eq!(c.verdict.phase_error.as_deref(), Some("a"));
        assert!(!c.sweeps("a"));
        let same = Comparison::new(vec![fake("a", 0.4, 0.1, 0.1), fake("a2", 0.4, 0.1, 0.1)]);
        assert_eq!(
            same.verdict,
            Verdict {
                thd: None,
                magnitude_error: None,
                phase_error: None
            }
        );
        assert!(same.render_text().lines().last().unwrap().contains("tie"));
    }

    #[test]
    fn worst_keeps_sign() {
        assert_eq!(
            worst([Some(0.2), Some(-0.7), None, Some(0.5)].into_iter()),
            Some(-0.7)
        );
        assert_eq!(worst([None, None].into_iter()), None);
    }
}
