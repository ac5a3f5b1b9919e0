use nalgebra::DMatrix;

use super::scenario::{harmonic_bank_current, Action, RlLoad, Scenario};
use super::series::TimeSeries;
use crate::error::{Error, Result};
use crate::lti::c2d_tustin;
use crate::vsi::{HarmonicCurrent, VsiParameters};
use crate::{DiscreteStateSpace, StateSpace};

/// Any plant or controller state magnitude above this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Lifts a controller acting on `e = v_ref - v_C` to the simulator's
/// measurement vector `[v_ref, v_C, i_inv]`.
pub fn error_feedback(k: &StateSpace) -> Result<StateSpace> {
    if k.inputs() != 1 || k.outputs() != 1 {
        return Err(Error::Dimension(
            "error-feedback controller must be SISO".into(),
        ));
    }
    k.scaled(
        &DMatrix::identity(1, 1),
        &DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]),
    )
}

struct Plant<'a> {
    p: &'a VsiParameters,
    load: RlLoad,
    bank: Vec<HarmonicCurrent>,
}

impl Plant<'_> {
    fn load_current(&self, x: &[f64; 3], t: f64) -> f64 {
        let r = self.load.r.map_or(0.0, |r| x[1] / r);
        r + x[2] + harmonic_bank_current(&self.bank, t, self.p.omega_o)
    }

    fn deriv(&self, x: &[f64; 3], t: f64, v_inv: f64) -> [f64; 3] {
        let p = self.p;
        let di = (v_inv - p.r_f * x[0] - x[1]) / p.l_f;
        let dv = (x[0] - self.load_current(x, t)) / p.c_f;
        let dl = self.load.l.map_or(0.0, |l| x[1] / l);
        [di, dv, dl]
    }

    fn rk4(&self, x: &[f64; 3], t: f64, h: f64, u: f64) -> [f64; 3] {
        let add = |a: &[f64; 3], k: &[f64; 3], s: f64| {
            [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]]
        };
        let k1 = self.deriv(x, t, u);
        let k2 = self.deriv(&add(x, &k1, h / 2.0), t + h / 2.0, u);
        let k3 = self.deriv(&add(x, &k2, h / 2.0), t + h / 2.0, u);
        let k4 = self.deriv(&add(x, &k3, h), t + h, u);
        let mut out = *x;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

/// Averaged inverter under a sampled controller with inputs
/// `[v_ref, v_C, i_inv]` and output `v_inv`.
///
/// The plant is integrated by RK4 at `1 / (oversample f_sw)`; the
/// controller is Tustin-discretized at `1 / f_sw` and its output held
/// between updates and clamped to `[-V_dc, V_dc]`. Events take effect at
/// the nearest integration step, before the controller samples.
pub fn simulate(scenario: &Scenario, controller: &StateSpace) -> Result<TimeSeries> {
    scenario.validate()?;
    check_shape(controller.inputs(), controller.outputs())?;
    let kd = c2d_tustin(controller, 1.0 / scenario.params.f_sw)?;
    simulate_discrete(scenario, &kd)
}

fn check_shape(inputs: usize, outputs: usize) -> Result<()> {
    if inputs != 3 || outputs != 1 {
        return Err(Error::Dimension(format!(
            "controller must map [v_ref, v_C, i_inv] to v_inv, got {}x{}",
            outputs, inputs
        )));
    }
    Ok(())
}

/// [`simulate`] with a controller already sampled at `1 / f_sw`.
pub fn simulate_discrete(scenario: &Scenario, kd: &DiscreteStateSpace) -> Result<TimeSeries> {
    scenario.validate()?;
    check_shape(kd.inputs(), kd.outputs())?;
    let p = &scenario.params;
    let expected = 1.0 / p.f_sw;
    if (kd.period - expected).abs() > 1e-12 * expected {
        return Err(Error::InvalidArgument(format!(
            "controller sample period {} s differs from 1 / f_sw = {} s",
            kd.period, expected
        )));
    }
    let h = scenario.step_size();
    let ratio = scenario.oversample;
    let steps = (scenario.end_time / h).round() as usize;
    let event_steps: Vec<usize> = scenario
        .events
        .iter()
        .map(|e| (e.time / h).round() as usize)
        .collect();

    let mut plant = Plant {
        p,
        load: scenario.initial_load,
        bank: scenario.initial_bank.clone(),
    };
    let mut factor = scenario.initial_vref_factor;
    let mut x = [0.0; 3];
    let mut xc = DMatrix::zeros(kd.order(), 1);
    let mut u = 0.0;
    let amplitude = p.v_peak();
    let v_ref = |t: f64, f: f64| amplitude * f * (p.omega_o * t).sin();

    let pre_steps = (scenario.pre_roll_cycles as f64 * 2.0 * std::f64::consts::PI / p.omega_o / h)
        .round() as usize;
    // pre-roll keeps the controller phase aligned with t = 0
    let pre_steps = pre_steps - pre_steps % ratio;

    let mut out = TimeSeries::with_capacity(h, steps + 1);
    let mut next_event = 0;
    for n in 0..=(pre_steps + steps) {
        let recording = n >= pre_steps;
        let k = n as i64 - pre_steps as i64;
        let t = k as f64 * h;
        while recording && next_event < event_steps.len() && event_steps[next_event] == k as usize {
            for a in &scenario.events[next_event].actions {
                match a {
                    Action::SetRlLoad(l) => {
                        if l.l.is_none() || plant.load.l.is_none() {
                            x[2] = 0.0;
                        }
                        plant.load = *l;
                    }
                    Action::SetHarmonicBank(b) => plant.bank = b.clone(),
                    Action::ScaleVref(f) => factor = *f,
                }
            }
            next_event += 1;
        }
        let vr = v_ref(t, factor);
        if n % ratio == 0 {
            let y = DMatrix::from_column_slice(3, 1, &[vr, x[1], x[0]]);
            u = kd.step(&mut xc, &y)[(0, 0)].clamp(-p.v_dc, p.v_dc);
            if !u.is_finite()
                || xc
                    .iter()
                    .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
            {
                return Err(Error::Divergence {
                    time: t,
                    last_good: t - h,
                });
            }
        }
        if recording {
            out.push(vr, x[1], x[0], plant.load_current(&x, t), u);
        }
        if k as usize == steps && recording {
            break;
        }
        let next = plant.rk4(&x, t, h, u);
        if next
            .iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Divergence {
                time: t + h,
                last_good: t,
            });
        }
        x = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{default_event_schedule, Event};

    fn short(p: &VsiParameters) -> Scenario {
        let mut s = default_event_schedule(p);
        s.events.retain(|e| e.time < 0.02);
        s.end_time = 0.02;
        s
    }

    fn static_gain(row: [f64; 3]) -> StateSpace {
        StateSpace::gain(DMatrix::from_row_slice(1, 3, &row))
    }

    #[test]
    fn zero_reference_gives_zero_traces() {
        let p = VsiParameters::default();
        let mut s = short(&p);
        s.initial_vref_factor = 0.0;
        let ts = simulate(&s, &static_gain([1.0, -1.0, -5.0])).unwrap();
        for ch in [&ts.v_ref, &ts.v_c, &ts.i_inv, &ts.i_grid, &ts.v_inv] {
            assert!(ch.iter().all(|&v| v == 0.0));
        }
        assert_eq!(ts.len(), (0.02 / s.step_size()).round() as usize + 1);
    }

    #[test]
    fn drive_is_clamped() {
        let p = VsiParameters::default();
        let ts = simulate(&short(&p), &static_gain([1e3, -1.0, 0.0])).unwrap();
        assert!(ts.v_inv.iter().all(|v| v.abs() <= p.v_dc));
        assert!(ts.v_inv.iter().any(|v| v.abs() == p.v_dc));
    }

    #[test]
    fn output_is_held_between_updates() {
        let p = VsiParameters::default();
        let s = short(&p);
        let ts = simulate(&s, &static_gain([1.0, 0.0, 0.0])).unwrap();
        for (k, w) in ts.v_inv.chunks(s.oversample).enumerate() {
            assert!(w.iter().all(|&v| v == w[0]), "chunk {}", k);
        }
    }

    #[test]
    fn unstable_controller_aborts() {
        let p = VsiParameters::default();
        let k = crate::TransferFunction::new(vec![1.0], vec![1.0, -2000.0])
            .unwrap()
            .to_ss();
        let err = simulate(&short(&p), &error_feedback(&k).unwrap()).unwrap_err();
        match err {
            Error::Divergence { time, last_good } => assert!(last_good < time && time < 0.02),
            e => panic!("{}", e),
        }
    }

    #[test]
    fn wrong_shape_rejected() {
        let p = VsiParameters::default();
        let k = StateSpace::gain(DMatrix::from_element(1, 1, 1.0));
        assert!(matches!(simulate(&short(&p), &k), Err(Error::Dimension(_))));
        assert!(error_feedback(&static_gain([1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn events_switch_the_load() {
        let p = VsiParameters::default();
        let mut s = short(&p);
        s.events = vec![Event {
            time: 0.01,
            actions: vec![Action::SetRlLoad(RlLoad {
                r: Some(10.0),
                l: None,
            })],
        }];
        let ts = simulate(&s, &static_gain([1.0, 0.0, 0.0])).unwrap();
        let at = ts.index_of(0.01);
        assert!((ts.i_grid[at - 1]).abs() < 1e-12);
        assert!((ts.i_grid[at + 10] - ts.v_c[at + 10] / 10.0).abs() < 1e-12);
    }
}
