use std::io::{self, Write};

use serde::Serialize;

/// Uniformly sampled traces starting at `t = 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimeSeries {
    pub period: f64,
    pub v_ref: Vec<f64>,
    pub v_c: Vec<f64>,
    pub i_inv: Vec<f64>,
    pub i_grid: Vec<f64>,
    pub v_inv: Vec<f64>,
}

pub const CSV_HEADER: &str = "t,v_ref,v_C,i_inv,i_grid,v_inv";

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    format!("{:.11e}", x)
}

impl TimeSeries {
    pub fn with_capacity(period: f64, n: usize) -> Self {
        Self {
            period,
            v_ref: Vec::with_capacity(n),
            v_c: Vec::with_capacity(n),
            i_inv: Vec::with_capacity(n),
            i_grid: Vec::with_capacity(n),
            v_inv: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, v_ref: f64, v_c: f64, i_inv: f64, i_grid: f64, v_inv: f64) {
        self.v_ref.push(v_ref);
        self.v_c.push(v_c);
        self.i_inv.push(i_inv);
        self.i_grid.push(i_grid);
        self.v_inv.push(v_inv);
    }

    pub fn len(&self) -> usize {
        self.v_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_c.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.period
    }

    /// Index of the sample nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        (t / self.period).round() as usize
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", CSV_HEADER)?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_sig(self.time(i)),
                fmt_sig(self.v_ref[i]),
                fmt_sig(self.v_c[i]),
                fmt_sig(self.i_inv[i]),
                fmt_sig(self.i_grid[i]),
                fmt_sig(self.v_inv[i])
            )?;
        }
        Ok(())
    }
}
