use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::margins::{margins, MarginReport};
use crate::error::{Error, Result};
use crate::lti::logspace;
use crate::vsi::{LoadModel, VsiParameters, HARMONICS};
use crate::{Polynomial, StateSpace, TransferFunction};

/// Margin and bandwidth requirements for one loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub phase_margin_deg: f64,
    pub gain_margin_db: f64,
    /// Minimum closed-loop bandwidth, rad/s.
    pub bandwidth: f64,
}

impl LoopSpec {
    pub fn check(&self, m: &MarginReport) -> std::result::Result<(), String> {
        if !(m.phase_margin_deg >= self.phase_margin_deg) {
            return Err(format!(
                "phase margin {:.2} deg below {:.2} deg",
                m.phase_margin_deg, self.phase_margin_deg
            ));
        }
        if !(m.gain_margin_db >= self.gain_margin_db) {
            return Err(format!(
                "gain margin {:.2} dB below {:.2} dB",
                m.gain_margin_db, self.gain_margin_db
            ));
        }
        match m.bandwidth {
            Some(bw) if bw >= self.bandwidth => Ok(()),
            Some(bw) => Err(format!(
                "bandwidth {:.1} rad/s below {:.1} rad/s",
                bw, self.bandwidth
            )),
            None => Err("closed loop has no -3 dB point in range".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSpec {
    pub inner: LoopSpec,
    pub outer: LoopSpec,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        let bandwidth = 2.0 * std::f64::consts::PI * 5000.0;
        Self {
            inner: LoopSpec {
                phase_margin_deg: 60.0,
                gain_margin_db: 40.0,
                bandwidth,
            },
            outer: LoopSpec {
                phase_margin_deg: 45.0,
                gain_margin_db: 40.0,
                bandwidth,
            },
        }
    }
}

/// Log-spaced search axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi >= self.lo && self.points >= 1) {
            return Err(Error::InvalidArgument(format!(
                "bad search axis {:?}",
                self
            )));
        }
        Ok(logspace(self.lo, self.hi, self.points))
    }
}

/// Search grids for the baseline tuning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSearch {
    pub k_pc: GridAxis,
    pub k_ic: GridAxis,
    pub k_p: GridAxis,
    /// Common resonant gain of every compensated harmonic.
    pub k_r: GridAxis,
    pub omega_c: Vec<f64>,
    pub harmonics: Vec<u32>,
}

impl Default for BaselineSearch {
    fn default() -> Self {
        Self {
            k_pc: GridAxis {
                lo: 1.0,
                hi: 100.0,
                points: 21,
            },
            k_ic: GridAxis {
                lo: 10.0,
                hi: 1e5,
                points: 13,
            },
            k_p: GridAxis {
                lo: 0.01,
                hi: 10.0,
                points: 31,
            },
            k_r: GridAxis {
                lo: 1.0,
                hi: 1000.0,
                points: 13,
            },
            omega_c: vec![2.0 * std::f64::consts::PI],
            harmonics: HARMONICS.to_vec(),
        }
    }
}

/// Outer PR voltage loop around an inner PI current loop.
///
/// `v_inv = PI(i_ref - i_inv)` with `i_ref = PR(v_ref - v_C)`, where
/// `PR(s) = k_p + sum_h k_r[h] 2 w_c s / (s^2 + 2 w_c s + (h w_o)^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiLoopController {
    pub k_pc: f64,
    /// 1/s.
    pub k_ic: f64,
    pub k_p: f64,
    pub k_r: BTreeMap<u32, f64>,
    pub omega_c: f64,
    pub omega_o: f64,
}

impl MultiLoopController {
    pub fn validate(&self) -> Result<()> {
        let gains = [self.k_pc, self.k_ic, self.k_p]
            .into_iter()
            .chain(self.k_r.values().copied());
        for g in gains {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "controller gain {} must be nonnegative",
                    g
                )));
            }
        }
        if !(self.omega_c > 0.0 && self.omega_o > 0.0) {
            return Err(Error::InvalidArgument(
                "omega_c and omega_o must be positive".into(),
            ));
        }
        if !self.k_r.contains_key(&1) {
            return Err(Error::InvalidArgument(
                "the fundamental resonant term is required".into(),
            ));
        }
        Ok(())
    }

    pub fn pi(&self) -> TransferFunction {
        TransferFunction::new(vec![self.k_pc, self.k_ic], vec![1.0, 0.0]).expect("proper")
    }

    pub fn resonator(&self, h: u32) -> TransferFunction {
        let w = h as f64 * self.omega_o;
        let k = self.k_r.get(&h).copied().unwrap_or(0.0);
        TransferFunction::new(
            vec![2.0 * k * self.omega_c, 0.0],
            vec![1.0, 2.0 * self.omega_c, w * w],
        )
        .expect("proper")
    }

    /// PR stage as a parallel connection of second-order sections.
    pub fn pr(&self) -> StateSpace {
        let mut acc = StateSpace::gain(DMatrix::from_element(1, 1, self.k_p));
        for &h in self.k_r.keys() {
            acc = acc.parallel(&self.resonator(h).to_ss()).expect("siso");
        }
        acc
    }

    /// Two-stage controller with inputs `[v_ref, v_C, i_inv]` and output `v_inv`.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        let pr = self.pr();
        let pi = self.pi().to_ss();
        let blk = pr.append(&pi);
        // u = [pr_in, pi_in], y = [i_ref, v_inv]; r = [v_ref, v_C, i_inv]
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let g = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 0.0, -1.0]);
        let h = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        blk.connect(&f, &g, &h, &DMatrix::zeros(1, 3))
    }
}

fn load_impedance(load: &LoadModel) -> Polynomial {
    match load.l_nominal {
        Some(l) => Polynomial::new(vec![l, load.r_nominal]).expect("finite"),
        None => Polynomial::constant(load.r_nominal),
    }
}

/// `v_inv -> i_inv` with the capacitor and nominal load closed.
pub fn current_loop_plant(p: &VsiParameters, load: &LoadModel) -> Result<TransferFunction> {
    let z_l = load_impedance(load);
    let cap = Polynomial::new(vec![p.c_f, 0.0])?;
    let num = cap.mul(&z_l)?.add(&Polynomial::one())?;
    let den = Polynomial::new(vec![p.l_f, p.r_f])?.mul(&num)?.add(&z_l)?;
    TransferFunction::from_polys(num, den)
}

/// `i_inv -> v_C`: capacitor in parallel with the nominal load.
pub fn output_impedance(p: &VsiParameters, load: &LoadModel) -> Result<TransferFunction> {
    let z_l = load_impedance(load);
    let den = Polynomial::new(vec![p.c_f, 0.0])?
        .mul(&z_l)?
        .add(&Polynomial::one())?;
    TransferFunction::from_polys(z_l, den)
}

/// `i_ref -> v_C` with the inner loop closed.
pub fn outer_loop_plant(
    p: &VsiParameters,
    load: &LoadModel,
    k_pc: f64,
    k_ic: f64,
) -> Result<StateSpace> {
    let pi = TransferFunction::new(vec![k_pc, k_ic], vec![1.0, 0.0])?;
    let inner = pi
        .series(&current_loop_plant(p, load)?)?
        .feedback(&TransferFunction::gain(1.0))?;
    inner.to_ss().series(&output_impedance(p, load)?.to_ss())
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerDesign {
    pub k_pc: f64,
    pub k_ic: f64,
    pub margins: MarginReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct OuterDesign {
    pub k_p: f64,
    pub k_r: BTreeMap<u32, f64>,
    pub omega_c: f64,
    pub margins: MarginReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineDesign {
    pub controller: MultiLoopController,
    pub inner: MarginReport,
    pub outer: MarginReport,
}

/// Picks the widest bandwidth; candidates within 0.1% of it are ranked by `tie`.
fn select<T>(cands: Vec<(f64, f64, T)>) -> Option<T> {
    let best_bw = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    cands
        .into_iter()
        .filter(|c| c.0 >= best_bw * 0.999)
        .fold(None::<(f64, T)>, |acc, (_, tie, t)| match acc {
            Some((best_tie, _)) if best_tie >= tie => acc,
            _ => Some((tie, t)),
        })
        .map(|(_, t)| t)
}

fn infeasible(best: Option<(String, MarginReport)>, what: &str) -> Error {
    match best {
        Some((why, m)) => Error::BaselineInfeasible(format!(
            "{}: no grid point meets the spec; closest has {} (PM {:.2} deg, GM {:.2} dB, BW {:?} rad/s)",
            what, why, m.phase_margin_deg, m.gain_margin_db, m.bandwidth
        )),
        None => Error::BaselineInfeasible(format!("{}: no stabilizing grid point", what)),
    }
}

/// Grid search over `(k_pc, k_ic)` maximizing bandwidth under `spec`;
/// ties go to the larger integral gain.
pub fn design_inner_pi(
    plant: &TransferFunction,
    spec: &LoopSpec,
    k_pc: &GridAxis,
    k_ic: &GridAxis,
) -> Result<InnerDesign> {
    let mut feasible = Vec::new();
    let mut closest: Option<(f64, String, MarginReport)> = None;
    for &kp in &k_pc.values()? {
        for &ki in &k_ic.values()? {
            let pi = TransferFunction::new(vec![kp, ki], vec![1.0, 0.0])?;
            let l = pi.series(plant)?;
            if !l
                .feedback(&TransferFunction::gain(1.0))?
                .poles()
                .iter()
                .all(|z| z.re < 0.0)
            {
                continue;
            }
            let m = margins(&l)?;
            match spec.check(&m) {
                Ok(()) => feasible.push((
                    m.bandwidth.unwrap_or(0.0),
                    ki,
                    InnerDesign {
                        k_pc: kp,
                        k_ic: ki,
                        margins: m,
                    },
                )),
                Err(why) => {
                    let pm = m.phase_margin_deg.min(180.0);
                    if closest.as_ref().is_none_or(|c| pm > c.0) {
                        closest = Some((pm, why, m));
                    }
                }
            }
        }
    }
    select(feasible).ok_or_else(|| infeasible(closest.map(|c| (c.1, c.2)), "inner PI loop"))
}

/// Grid search over `(k_p, k_r, omega_c)` for the PR stage on the
/// inner-closed plant, maximizing bandwidth; ties go to the larger resonant gain.
pub fn design_outer_pr(
    plant: &StateSpace,
    omega_o: f64,
    spec: &LoopSpec,
    search: &BaselineSearch,
) -> Result<OuterDesign> {
    if search.harmonics.is_empty() || !search.harmonics.contains(&1) || search.omega_c.is_empty() {
        return Err(Error::InvalidArgument(
            "PR search needs the fundamental and at least one omega_c".into(),
        ));
    }
    let mut feasible = Vec::new();
    let mut closest: Option<(f64, String, MarginReport)> = None;
    for &omega_c in &search.omega_c {
        for &kp in &search.k_p.values()? {
            for &kr in &search.k_r.values()? {
                let ctrl = MultiLoopController {
                    k_pc: 0.0,
                    k_ic: 0.0,
                    k_p: kp,
                    k_r: search.harmonics.iter().map(|&h| (h, kr)).collect(),
                    omega_c,
                    omega_o,
                };
                let l = ctrl.pr().series(plant)?;
                let cl = l.feedback(&StateSpace::gain(DMatrix::from_element(1, 1, 1.0)), -1.0)?;
                if !cl.is_stable() {
                    continue;
                }
                let m = margins(&l)?;
                match spec.check(&m) {
                    Ok(()) => feasible.push((
                        m.bandwidth.unwrap_or(0.0),
                        kr,
                        OuterDesign {
                            k_p: kp,
                            k_r: ctrl.k_r,
                            omega_c,
                            margins: m,
                        },
                    )),
                    Err(why) => {
                        let pm = m.phase_margin_deg.min(180.0);
                        if closest.as_ref().is_none_or(|c| pm > c.0) {
                            closest = Some((pm, why, m));
                        }
                    }
                }
            }
        }
    }
    select(feasible).ok_or_else(|| infeasible(closest.map(|c| (c.1, c.2)), "outer PR loop"))
}

/// Inner loop first, then the outer loop on the inner-closed plant; both
/// re-verified from scratch before returning.
pub fn design_baseline(
    p: &VsiParameters,
    load: &LoadModel,
    spec: &BaselineSpec,
    search: &BaselineSearch,
) -> Result<BaselineDesign> {
    p.validate()?;
    load.validate()?;
    let g_ii = current_loop_plant(p, load)?;
    let inner = design_inner_pi(&g_ii, &spec.inner, &search.k_pc, &search.k_ic)?;
    let plant = outer_loop_plant(p, load, inner.k_pc, inner.k_ic)?;
    let outer = design_outer_pr(&plant, p.omega_o, &spec.outer, search)?;
    let controller = MultiLoopController {
        k_pc: inner.k_pc,
        k_ic: inner.k_ic,
        k_p: outer.k_p,
        k_r: outer.k_r,
        omega_c: outer.omega_c,
        omega_o: p.omega_o,
    };
    let (inner_m, outer_m) = verify_baseline(p, load, &controller)?;
    spec.inner
        .check(&inner_m)
        .map_err(|e| Error::BaselineInfeasible(format!("inner re-check: {}", e)))?;
    spec.outer
        .check(&outer_m)
        .map_err(|e| Error::BaselineInfeasible(format!("outer re-check: {}", e)))?;
    Ok(BaselineDesign {
        controller,
        inner: inner_m,
        outer: outer_m,
    })
}

/// Inner and outer loop margins of `c` on the nominal plant, computed from scratch.
pub fn verify_baseline(
    p: &VsiParameters,
    load: &LoadModel,
    c: &MultiLoopController,
) -> Result<(MarginReport, MarginReport)> {
    c.validate()?;
    let inner = margins(&c.pi().series(&current_loop_plant(p, load)?)?)?;
    let outer = margins(&c.pr().series(&outer_loop_plant(p, load, c.k_pc, c.k_ic)?)?)?;
    Ok((inner, outer))
}

/// `|1 - G(j w_o)|` of the voltage loop with `c` on the nominal plant.
pub fn baseline_tracking_error(
    p: &VsiParameters,
    load: &LoadModel,
    c: &MultiLoopController,
) -> Result<f64> {
    let l = c.pr().series(&outer_loop_plant(p, load, c.k_pc, c.k_ic)?)?;
    let v = l
        .eval_jw(p.omega_o)
        .ok_or(Error::NonFinite("loop response"))?[(0, 0)];
    Ok((Complex64::new(1.0, 0.0) - v / (v + 1.0)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (VsiParameters, LoadModel) {
        let p = VsiParameters::default();
        let l = LoadModel::nominal(&p);
        (p, l)
    }

    #[test]
    fn current_plant_limits() {
        let (p, l) = setup();
        let g = current_loop_plant(&p, &l).unwrap();
        assert!((g.dc_gain() - 1.0 / (p.r_f + l.r_nominal)).abs() < 1e-12);
        // inductor dominates far above resonance
        let w = 1e6;
        assert!((g.eval_jw(w).norm() * p.l_f * w - 1.0).abs() < 1e-3);
    }

    #[test]
    fn state_space_matches_cascade() {
        let (p, _) = setup();
        let c = MultiLoopController {
            k_pc: 20.0,
            k_ic: 1000.0,
            k_p: 0.5,
            k_r: [(1, 50.0), (3, 20.0)].into_iter().collect(),
            omega_c: 6.0,
            omega_o: p.omega_o,
        };
        let ss = c.to_state_space().unwrap();
        for w in [10.0, 377.0, 1131.0, 4e4] {
            let m = ss.eval_jw(w).unwrap();
            let pr = c.pr().eval_jw(w).unwrap()[(0, 0)];
            let pi = c.pi().eval_jw(w);
            assert!((m[(0, 0)] - pi * pr).norm() < 1e-9 * (pi * pr).norm());
            assert!((m[(0, 1)] + pi * pr).norm() < 1e-9 * (pi * pr).norm());
            assert!((m[(0, 2)] + pi).norm() < 1e-9 * pi.norm());
        }
    }

    #[test]
    fn resonator_peaks_at_harmonics() {
        let (p, _) = setup();
        let c = MultiLoopController {
            k_pc: 1.0,
            k_ic: 1.0,
            k_p: 0.1,
            k_r: HARMONICS.iter().map(|&h| (h, 30.0)).collect(),
            omega_c: 2.0 * std::f64::consts::PI,
            omega_o: p.omega_o,
        };
        let pr = c.pr();
        for h in HARMONICS {
            let w0 = h as f64 * p.omega_o;
            let grid = logspace(w0 * 0.99, w0 * 1.01, 2001);
            let peak = grid
                .iter()
                .map(|&w| (w, pr.eval_jw(w).unwrap()[(0, 0)].norm()))
                .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            assert!((peak.0 / w0 - 1.0).abs() < 1e-3, "h = {}", h);
            // resonant term dominates the proportional part by 20 dB
            assert!(c.resonator(h).eval_jw(w0).norm() >= 10.0 * c.k_p);
        }
    }

    #[test]
    fn loose_spec_accepts_and_reports_true_margins() {
        let (p, l) = setup();
        let g = current_loop_plant(&p, &l).unwrap();
        let loose = LoopSpec {
            phase_margin_deg: 0.0,
            gain_margin_db: f64::NEG_INFINITY,
            bandwidth: 0.0,
        };
        let axis = GridAxis {
            lo: 5.0,
            hi: 5.0,
            points: 1,
        };
        let d = design_inner_pi(
            &g,
            &loose,
            &axis,
            &GridAxis {
                lo: 100.0,
                hi: 100.0,
                points: 1,
            },
        )
        .unwrap();
        let fresh = margins(
            &TransferFunction::new(vec![d.k_pc, d.k_ic], vec![1.0, 0.0])
                .unwrap()
                .series(&g)
                .unwrap(),
        )
        .unwrap();
        assert_eq!(fresh, d.margins);
    }
}
