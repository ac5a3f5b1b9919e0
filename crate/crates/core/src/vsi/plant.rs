use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::params::{LoadModel, VsiParameters};
use super::weights::{ChannelScaling, Weights, HARMONICS};
use crate::error::{Error, Result};
use crate::synthesis::{hinf_norm, GeneralizedPlant};
use crate::{StateSpace, TransferFunction};

/// `(G_inv, G_i)`: filter voltage response to the bridge voltage and to the
/// load current.
pub fn build_plant(p: &VsiParameters) -> (TransferFunction, TransferFunction) {
    let den = vec![p.l_f * p.c_f, p.r_f * p.c_f, 1.0];
    (
        TransferFunction::new(vec![1.0], den.clone()).expect("valid parameters"),
        TransferFunction::new(vec![p.l_f, p.r_f], den).expect("valid parameters"),
    )
}

/// Nominal load admittance `1 / (L s + R)`, or `1 / R` without inductance.
pub fn nominal_load(load: &LoadModel) -> TransferFunction {
    match load.l_nominal {
        Some(l) => TransferFunction::new(vec![1.0], vec![l, load.r_nominal]),
        None => TransferFunction::new(vec![1.0], vec![load.r_nominal]),
    }
    .expect("validated load")
}

#[derive(Clone, Debug)]
pub struct PerturbedPlant {
    pub g_v: TransferFunction,
    pub z_d: TransferFunction,
    /// `||delta||_inf`, infinite for an unstable delta.
    pub delta_norm: f64,
    pub admissible: bool,
}

/// Plant with the load admittance `(1 + delta) Y_N` closed around the filter.
pub fn perturbed_plant(
    p: &VsiParameters,
    load: &LoadModel,
    delta: &TransferFunction,
) -> Result<PerturbedPlant> {
    let delta_norm = hinf_norm(&delta.to_ss(), 1e-9).value;
    let admissible = delta_norm <= 1.0 + 1e-9;
    let (g_inv, g_i) = build_plant(p);
    // delta = -1 is the open circuit; skip the arithmetic so the result is exact
    if delta.order() == 0 && delta.dc_gain() == -1.0 {
        return Ok(PerturbedPlant {
            g_v: g_inv,
            z_d: g_i,
            delta_norm,
            admissible,
        });
    }
    let y_n = nominal_load(load);
    // Y_L = nn / dd
    let nn = delta.den().add(delta.num())?.mul(y_n.num())?;
    let dd = delta.den().mul(y_n.den())?;
    let filt_den = g_inv.den();
    let den = filt_den.mul(&dd)?.add(&g_i.num().mul(&nn)?)?;
    let g_v = TransferFunction::from_polys(dd.clone(), den.clone())?;
    let z_d = TransferFunction::from_polys(g_i.num().mul(&dd)?, den)?;
    Ok(PerturbedPlant {
        g_v,
        z_d,
        delta_norm,
        admissible,
    })
}

/// Unweighted plant with inputs `[w_delta, v_ref, i_d, v_inv]` and outputs
/// `[z_delta, v_C, e]`, where `i_grid = Y_N v_C + w_delta + i_d`,
/// `z_delta = Y_N v_C` and `e = v_ref - v_C`.
///
/// States are `[i_inv, v_C]` followed by the load inductor current.
pub fn physical_plant(p: &VsiParameters, load: &LoadModel) -> Result<StateSpace> {
    let filter = StateSpace::new(
        DMatrix::from_row_slice(2, 2, &[-p.r_f / p.l_f, -1.0 / p.l_f, 1.0 / p.c_f, 0.0]),
        DMatrix::from_row_slice(2, 2, &[1.0 / p.l_f, 0.0, 0.0, -1.0 / p.c_f]),
        DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        DMatrix::zeros(1, 2),
    )?;
    let y_n = nominal_load(load).to_ss();
    let blk = filter.append(&y_n);
    // u = [v_inv, i_grid, v_C into Y_N], y = [v_C, i_N], r = [w_delta, v_ref, i_d, v_inv]
    let f = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    let g = DMatrix::from_row_slice(
        3,
        4,
        &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    );
    let h = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, -1.0, 0.0]);
    let dd = DMatrix::from_row_slice(
        3,
        4,
        &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    );
    blk.connect(&f, &g, &h, &dd)
}

/// Weighted plant for synthesis: inputs `[w_delta, v_ref, i_d_hat, v_inv]`,
/// outputs `[z_delta, z_S, z_CS, e_o, e]` with `z_S = W_S e`,
/// `z_CS = W_CS v_inv`, `e_o = v_C - T_des v_ref` and the disturbance
/// current `W_d i_d_hat`.
///
/// Channels are scaled per `w.scaling`; the current-valued signals are
/// `w_delta`, `i_d_hat` and `z_delta`.
pub fn assemble_generalized_plant(
    p: &VsiParameters,
    load: &LoadModel,
    w: &Weights,
) -> Result<GeneralizedPlant> {
    let phys = physical_plant(p, load)?;
    let blk = phys
        .append(&w.w_d.to_ss())
        .append(&w.w_s.to_ss())
        .append(&w.w_cs.to_ss())
        .append(&w.t_des.to_ss());
    // u = [w_delta, v_ref, i_d, v_inv | W_d in | W_S in | W_CS in | T_des in]
    // y = [z_delta, v_C, e | d | z_S | z_CS | t]
    let mut f = DMatrix::zeros(8, 7);
    f[(2, 3)] = 1.0;
    f[(5, 2)] = 1.0;
    let mut g = DMatrix::zeros(8, 4);
    g[(0, 0)] = 1.0;
    g[(1, 1)] = 1.0;
    g[(3, 3)] = 1.0;
    g[(4, 2)] = 1.0;
    g[(6, 3)] = 1.0;
    g[(7, 1)] = 1.0;
    let mut h = DMatrix::zeros(5, 7);
    h[(0, 0)] = 1.0;
    h[(1, 4)] = 1.0;
    h[(2, 5)] = 1.0;
    h[(3, 1)] = 1.0;
    h[(3, 6)] = -1.0;
    h[(4, 2)] = 1.0;
    let sys = blk.connect(&f, &g, &h, &DMatrix::zeros(5, 4))?;
    let sys = match w.scaling {
        ChannelScaling::Si => sys,
        ChannelScaling::PerUnit => {
            let (vb, ib) = (p.v_rated, p.s_rated / p.v_rated);
            let inputs = DMatrix::from_diagonal(&DVector::from_vec(vec![ib, vb, ib, vb]));
            let outputs = DMatrix::from_diagonal(&DVector::from_vec(vec![
                1.0 / ib,
                1.0 / vb,
                1.0 / vb,
                1.0 / vb,
                1.0 / vb,
            ]));
            sys.scaled(&outputs, &inputs)?
        }
    };
    GeneralizedPlant::new(sys, (1, 2, 1), (1, 3, 1))
}

/// Physical closed loop `[v_ref, i_d] -> v_C` for the single-loop
/// controller `v_inv = K (v_ref - v_C)` and uncertainty `delta`.
///
/// Output is `G v_ref - Z i_d`.
pub fn closed_loop(
    p: &VsiParameters,
    load: &LoadModel,
    k: &StateSpace,
    delta: &StateSpace,
) -> Result<StateSpace> {
    let phys = physical_plant(p, load)?;
    let with_k = phys.lft_lower(k)?;
    let cl = with_k.lft_upper(delta)?;
    Ok(cl)
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetReport {
    pub g_mag: f64,
    pub g_phase_deg: f64,
    /// `|G(j w_o) - 1|`
    pub g_error: f64,
    /// `(h, |Z(j h w_o)|)` in ohms.
    pub z_mag: Vec<(u32, f64)>,
}

impl TargetReport {
    pub fn passes(&self, g_tol: f64, z_max: f64) -> bool {
        self.g_error <= g_tol && self.z_mag.iter().all(|(_, z)| *z <= z_max)
    }
}

/// Evaluates the nominal tracking and output-impedance targets.
pub fn closed_loop_targets(
    p: &VsiParameters,
    load: &LoadModel,
    k: &StateSpace,
) -> Result<TargetReport> {
    let zero = StateSpace::gain(DMatrix::zeros(1, 1));
    let cl = closed_loop(p, load, k, &zero)?;
    if !cl.is_stable() {
        return Err(Error::UnstableClosedLoop(
            cl.poles().into_iter().filter(|l| l.re >= 0.0).collect(),
        ));
    }
    let at = |w: f64| -> Result<(Complex64, Complex64)> {
        let m = cl
            .eval_jw(w)
            .ok_or(Error::NonFinite("closed-loop response"))?;
        Ok((m[(0, 0)], -m[(0, 1)]))
    };
    let (g, _) = at(p.omega_o)?;
    let mut z_mag = Vec::new();
    for h in HARMONICS {
        z_mag.push((h, at(h as f64 * p.omega_o)?.1.norm()));
    }
    Ok(TargetReport {
        g_mag: g.norm(),
        g_phase_deg: g.arg().to_degrees(),
        g_error: (g - Complex64::new(1.0, 0.0)).norm(),
        z_mag,
    })
}

/// Frequency of the largest `|G_v|` on a log grid between `lo` and `hi`.
pub fn resonant_peak(g: &TransferFunction, lo: f64, hi: f64, points: usize) -> f64 {
    crate::lti::logspace(lo, hi, points)
        .into_iter()
        .map(|w| (w, g.eval_jw(w).norm()))
        .fold((lo, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsi::{build_weights, WeightConfig};

    fn setup() -> (VsiParameters, LoadModel) {
        let p = VsiParameters::default();
        let l = LoadModel::nominal(&p);
        (p, l)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn filter_landmarks() {
        let (p, _) = setup();
        let (g_inv, g_i) = build_plant(&p);
        assert_eq!(g_inv.dc_gain(), 1.0);
        assert!((g_i.dc_gain() - p.r_f).abs() < 1e-15);
        assert!((g_inv.eval_jw(5000.0).norm() - 200.0).abs() < 1e-6);
        for pole in g_inv.poles() {
            assert!((pole.re + p.r_f / (2.0 * p.l_f)).abs() < 1e-6);
        }
    }

    #[test]
    fn perturbed_extremes() {
        let (p, l) = setup();
        let zero = perturbed_plant(&p, &l, &TransferFunction::gain(0.0)).unwrap();
        assert!((zero.g_v.dc_gain() - 1.0 / (1.0 + p.r_f / l.r_nominal)).abs() < 1e-12);
        let open = perturbed_plant(&p, &l, &TransferFunction::gain(-1.0)).unwrap();
        assert_eq!(open.g_v, build_plant(&p).0);
        let big = perturbed_plant(&p, &l, &TransferFunction::gain(2.0)).unwrap();
        assert!(!big.admissible);
    }

    #[test]
    fn generalized_plant_reproduces_perturbed_plant() {
        let (p, l) = setup();
        let cfg = WeightConfig {
            scaling: ChannelScaling::Si,
            ..Default::default()
        };
        let w = build_weights(&p, &cfg).unwrap();
        let gp = assemble_generalized_plant(&p, &l, &w).unwrap();
        // D(v_ref -> e) = 1
        assert_eq!(gp.sys.d()[(4, 1)], 1.0);
        let phys = physical_plant(&p, &l).unwrap();
        for d in [-0.7, 0.0, 0.6] {
            let delta = TransferFunction::gain(d);
            let pp = perturbed_plant(&p, &l, &delta).unwrap();
            let open = phys.lft_upper(&delta.to_ss()).unwrap();
            for wv in crate::lti::logspace(1.0, 1e5, 50) {
                let m = open.eval_jw(wv).unwrap();
                assert!(rel(m[(0, 2)], pp.g_v.eval_jw(wv)) < 1e-8);
                assert!(rel(-m[(0, 1)], pp.z_d.eval_jw(wv)) < 1e-8);
            }
        }
        // K = 0: i_d_hat -> e_o equals -Z_d W_d
        let none = gp
            .sys
            .lft_lower(&StateSpace::gain(DMatrix::zeros(1, 1)))
            .unwrap();
        let closed = none
            .lft_upper(&StateSpace::gain(DMatrix::zeros(1, 1)))
            .unwrap();
        let z0 = perturbed_plant(&p, &l, &TransferFunction::gain(0.0))
            .unwrap()
            .z_d;
        for wv in [10.0, 377.0, 5000.0] {
            let got = closed.eval_jw(wv).unwrap()[(2, 1)];
            assert!(rel(got, -z0.eval_jw(wv) * w.w_d.eval_jw(wv)) < 1e-8);
        }
    }

    #[test]
    fn per_unit_scales_current_channels_only() {
        let (p, l) = setup();
        let si = build_weights(
            &p,
            &WeightConfig {
                scaling: ChannelScaling::Si,
                ..Default::default()
            },
        )
        .unwrap();
        let pu = build_weights(&p, &WeightConfig::default()).unwrap();
        let a = assemble_generalized_plant(&p, &l, &si).unwrap().sys;
        let b = assemble_generalized_plant(&p, &l, &pu).unwrap().sys;
        let ib = p.s_rated / p.v_rated;
        let ma = a.eval_jw(3.0 * p.omega_o).unwrap();
        let mb = b.eval_jw(3.0 * p.omega_o).unwrap();
        // v_ref -> e and v_inv -> e are voltage to voltage
        assert!(rel(mb[(4, 1)], ma[(4, 1)]) < 1e-12);
        assert!(rel(mb[(4, 3)], ma[(4, 3)]) < 1e-12);
        // i_d_hat -> e_o picks up I_b / V_b, w_delta -> z_delta is unchanged
        assert!(rel(mb[(3, 2)], ma[(3, 2)] * ib / p.v_rated) < 1e-12);
        assert!(rel(mb[(0, 0)], ma[(0, 0)]) < 1e-12);
    }

    #[test]
    fn closure_matches_tracking_formula() {
        // with delta = 0 and K closed, v_ref -> v_C is G_vC / (1 + G_vC), G_vC = K G_v
        let (p, l) = setup();
        let k = TransferFunction::new(vec![30.0, 3000.0], vec![1.0, 10.0]).unwrap();
        let g_v = perturbed_plant(&p, &l, &TransferFunction::gain(0.0))
            .unwrap()
            .g_v;
        let cl = closed_loop(&p, &l, &k.to_ss(), &StateSpace::gain(DMatrix::zeros(1, 1))).unwrap();
        for wv in crate::lti::logspace(1.0, 1e5, 100) {
            let gvc = k.eval_jw(wv) * g_v.eval_jw(wv);
            let expect = gvc / (gvc + 1.0);
            assert!(rel(cl.eval_jw(wv).unwrap()[(0, 0)], expect) < 1e-8);
        }
    }

    #[test]
    fn resonant_peak_moves_with_load() {
        let (p, l) = setup();
        let peaks: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|&d| {
                let g = perturbed_plant(&p, &l, &TransferFunction::gain(d))
                    .unwrap()
                    .g_v;
                resonant_peak(&g, 1e3, 2e4, 4000)
            })
            .collect();
        assert!(peaks.windows(2).all(|w| w[1] >= w[0]), "{:?}", peaks);
        assert!(peaks[4] > peaks[0]);
    }

    #[test]
    fn targets_of_zero_controller() {
        let (p, l) = setup();
        let r = closed_loop_targets(&p, &l, &StateSpace::gain(DMatrix::zeros(1, 1))).unwrap();
        assert_eq!(r.g_mag, 0.0);
        let z0 = perturbed_plant(&p, &l, &TransferFunction::gain(0.0))
            .unwrap()
            .z_d;
        assert!((r.z_mag[0].1 - z0.eval_jw(p.omega_o).norm()).abs() < 1e-9);
    }

    #[test]
    fn high_gain_controller_tracks() {
        let (p, l) = setup();
        let r = closed_loop_targets(&p, &l, &StateSpace::gain(DMatrix::from_element(1, 1, 50.0)))
            .unwrap();
        assert!(r.g_error < 0.05, "{:?}", r);
    }
}
