use crate::error::{Error, Result};
use crate::lti::{freq_response, unwrap_degrees, FrequencyEval};
use crate::sim::fmt_sig;

/// Magnitude (dB) and unwrapped phase (deg) columns per named SISO system.
pub struct BodeTable {
    pub omega: Vec<f64>,
    pub names: Vec<String>,
    pub magnitude_db: Vec<Vec<f64>>,
    pub phase_deg: Vec<Vec<f64>>,
}

impl BodeTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_rad_s");
        for n in &self.names {
            out.push_str(&format!(",{}_mag_db,{}_phase_deg", n, n));
        }
        out.push('\n');
        for (i, w) in self.omega.iter().enumerate() {
            out.push_str(&fmt_sig(*w));
            for j in 0..self.names.len() {
                out.push(',');
                out.push_str(&fmt_sig(self.magnitude_db[j][i]));
                out.push(',');
                out.push_str(&fmt_sig(self.phase_deg[j][i]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn bode_export(systems: &[(&str, &dyn FrequencyEval<f64>)], grid: &[f64]) -> Result<BodeTable> {
    let mut table = BodeTable {
        omega: grid.to_vec(),
        names: Vec::new(),
        magnitude_db: Vec::new(),
        phase_deg: Vec::new(),
    };
    for (name, sys) in systems {
        if sys.dims() != (1, 1) {
            return Err(Error::Dimension(format!("{} is not SISO", name)));
        }
        if name.contains(',') || name.contains('\n') {
            return Err(Error::InvalidArgument(format!(
                "column name {:?} is not CSV-safe",
                name
            )));
        }
        let fr = freq_response(*sys, grid)?;
        table.names.push(name.to_string());
        table.magnitude_db.push(fr.magnitude_db(0, 0));
        table.phase_deg.push(unwrap_degrees(
            fr.values.iter().map(|m| m[(0, 0)].arg().to_degrees()),
        ));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::logspace;
    use crate::TransferFunction;

    #[test]
    fn first_order_point() {
        let g = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let t = bode_export(&[("g", &g)], &[1.0]).unwrap();
        assert!((t.magnitude_db[0][0] + 3.010299956639812).abs() < 1e-9);
        assert!((t.phase_deg[0][0] + 45.0).abs() < 1e-9);
        assert!(t.to_csv().starts_with("omega_rad_s,g_mag_db,g_phase_deg\n"));
    }

    #[test]
    fn static_gain_is_flat_and_phase_unwraps() {
        let k = TransferFunction::gain(4.0);
        // triple lag passes through -180 deg
        let lag = TransferFunction::new(vec![1.0], vec![1.0, 3.0, 3.0, 1.0]).unwrap();
        let grid = logspace(0.01, 100.0, 200);
        let t = bode_export(&[("k", &k), ("lag", &lag)], &grid).unwrap();
        assert!(t.magnitude_db[0]
            .iter()
            .all(|&m| (m - t.magnitude_db[0][0]).abs() < 1e-12));
        assert!(t.phase_deg[1].windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(*t.phase_deg[1].last().unwrap() < -260.0);
    }
}
