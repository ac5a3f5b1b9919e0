//! State-space interchange: `{"A": [[..]], "B": .., "C": .., "D": .., "sample_period": ..}`
//! with every number written as a decimal string of 17 significant digits.

use gfm_core::lti::DiscreteStateSpace;
use gfm_core::StateSpace;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Value(f64),
}

impl Number {
    fn value(&self) -> Result<f64, CliError> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("controller entry {:?} is not a number", s))),
        }
    }
}

fn encode(x: f64) -> Number {
    Number::Text(format!("{:.16e}", x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    #[serde(rename = "A")]
    a: Vec<Vec<Number>>,
    #[serde(rename = "B")]
    b: Vec<Vec<Number>>,
    #[serde(rename = "C")]
    c: Vec<Vec<Number>>,
    #[serde(rename = "D")]
    d: Vec<Vec<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_period: Option<Number>,
}

/// A controller read from disk.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedController {
    Continuous(StateSpace),
    Discrete(DiscreteStateSpace<f64>),
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<Number>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| encode(m[(i, j)])).collect())
        .collect()
}

/// `cols` fixes the width of a matrix with no rows.
fn matrix(
    name: &str,
    rows: &[Vec<Number>],
    nrows: usize,
    cols: usize,
) -> Result<DMatrix<f64>, CliError> {
    if cols == 0 && rows.is_empty() {
        return Ok(DMatrix::zeros(nrows, 0));
    }
    if rows.len() != nrows || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config(format!(
            "controller matrix {} must be {}x{}",
            name, nrows, cols
        )));
    }
    let mut m = DMatrix::zeros(nrows, cols);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            m[(i, j)] = v.value()?;
        }
    }
    Ok(m)
}

impl ControllerFile {
    pub fn from_continuous(sys: &StateSpace) -> Self {
        Self {
            a: rows(sys.a()),
            b: rows(sys.b()),
            c: rows(sys.c()),
            d: rows(sys.d()),
            sample_period: None,
        }
    }

    pub fn from_discrete(sys: &DiscreteStateSpace<f64>) -> Self {
        Self {
            a: rows(&sys.a),
            b: rows(&sys.b),
            c: rows(&sys.c),
            d: rows(&sys.d),
            sample_period: Some(encode(sys.period)),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("controller is always serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("controller file: {}", e)))
    }

    pub fn into_controller(self) -> Result<LoadedController, CliError> {
        let n = self.a.len();
        let m = self
            .d
            .first()
            .map_or(self.b.first().map_or(0, Vec::len), Vec::len);
        let p = self.d.len();
        let a = matrix("A", &self.a, n, n)?;
        let b = matrix("B", &self.b, n, m)?;
        let c = matrix("C", &self.c, p, n)?;
        let d = matrix("D", &self.d, p, m)?;
        match self.sample_period {
            None => StateSpace::new(a, b, c, d)
                .map(LoadedController::Continuous)
                .map_err(|e| CliError::Config(format!("controller file: {}", e))),
            Some(t) => {
                let period = t.value()?;
                if !(period > 0.0 && period.is_finite()) {
                    return Err(CliError::Config(format!(
                        "sample_period {} must be positive",
                        period
                    )));
                }
                Ok(LoadedController::Discrete(DiscreteStateSpace {
                    a,
                    b,
                    c,
                    d,
                    period,
                }))
            }
        }
    }
}
