//! JSON files for bodies, measures and solver reports.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same `f64`, so a write followed by a read is bit-exact.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::body::Body;
use crate::continuation::SolveReport;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::measure::MeasureDensity;
use crate::variational::VariationalReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub n: u32,
    pub grid: usize,
    pub support: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub grid: usize,
    pub density: Vec<f64>,
    pub even: bool,
}

/// Report of either solver. Fields that do not apply to a solver are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub mode: String,
    pub p: f64,
    pub support: Vec<f64>,
    pub residual_linf: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub homotopy_steps: Option<usize>,
    pub newton_iters: Option<usize>,
    pub iterations: Option<usize>,
}

impl BodyFile {
    pub fn from_body(body: &Body) -> Self {
        Self {
            n: 2,
            grid: body.grid().size(),
            support: body.support().values().to_vec(),
        }
    }

    pub fn into_body(self) -> Result<Body> {
        if self.n != 2 {
            return Err(Error::Format(format!("dimension n = {} is not supported", self.n)));
        }
        Body::new(field(self.grid, self.support)?)
    }
}

impl MeasureFile {
    pub fn from_measure(m: &MeasureDensity) -> Self {
        Self {
            grid: m.grid().size(),
            density: m.values().to_vec(),
            even: m.is_even(),
        }
    }

    pub fn into_measure(self) -> Result<MeasureDensity> {
        MeasureDensity::new(field(self.grid, self.density)?, self.even)
    }
}

impl ReportFile {
    pub fn from_continuation(p: f64, r: &SolveReport) -> Self {
        Self {
            mode: "continuation".into(),
            p,
            support: r.body.support().values().to_vec(),
            residual_linf: Some(r.residual_linf),
            kkt_residual: None,
            gamma: r.gamma,
            lambda: None,
            homotopy_steps: Some(r.homotopy_steps_used),
            newton_iters: Some(r.newton_iterations_total),
            iterations: None,
        }
    }

    pub fn from_variational(r: &VariationalReport) -> Self {
        Self {
            mode: "variational".into(),
            p: r.p,
            support: r.body.support().values().to_vec(),
            residual_linf: None,
            kkt_residual: Some(r.kkt_residual),
            gamma: r.gamma,
            lambda: Some(r.lambda),
            homotopy_steps: None,
            newton_iters: None,
            iterations: Some(r.iterations),
        }
    }

    pub fn body(&self) -> Result<Body> {
        let n = self.support.len();
        Body::new(field(n, self.support.clone())?)
    }
}

fn field(grid: usize, values: Vec<f64>) -> Result<ScalarField> {
    if values.len() != grid {
        return Err(Error::Format(format!(
            "grid is {grid} but {} values were given",
            values.len()
        )));
    }
    ScalarField::new(Grid::new(grid)?, values)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_body(path: &Path) -> Result<Body> {
    read_json::<BodyFile>(path)?.into_body()
}

pub fn write_body(path: &Path, body: &Body) -> Result<()> {
    write_json(path, &BodyFile::from_body(body))
}

pub fn read_measure(path: &Path) -> Result<MeasureDensity> {
    read_json::<MeasureFile>(path)?.into_measure()
}

pub fn write_measure(path: &Path, m: &MeasureDensity) -> Result<()> {
    write_json(path, &MeasureFile::from_measure(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_round_trip_is_bit_exact() {
        let g = Grid::new(64).unwrap();
        let b = Body::new(ScalarField::from_fn(g, |t| {
            1.0 / 3.0 + 0.1 * (2.0 * t).cos() / 7.0 + 1e-17 * t
        }))
        .unwrap();
        let text = to_json(&BodyFile::from_body(&b)).unwrap();
        let back = from_json::<BodyFile>(&text).unwrap().into_body().unwrap();
        for (a, c) in b.support().values().iter().zip(back.support().values()) {
            assert_eq!(a.to_bits(), c.to_bits());
        }
    }

    #[test]
    fn rejects_other_dimensions_and_bad_lengths() {
        let text = r#"{"n": 3, "grid": 16, "support": [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1]}"#;
        let err = from_json::<BodyFile>(text).unwrap().into_body().unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let text = r#"{"n": 2, "grid": 16, "support": [1, 1]}"#;
        assert!(from_json::<BodyFile>(text).unwrap().into_body().is_err());
        assert!(from_json::<BodyFile>("{").is_err());
    }

    #[test]
    fn measure_round_trip_keeps_evenness() {
        let g = Grid::new(32).unwrap();
        let m = MeasureDensity::even_from_fn(g, |t| 0.1 + (2.0 * t).cos().powi(2) / 3.0).unwrap();
        let back = from_json::<MeasureFile>(&to_json(&MeasureFile::from_measure(&m)).unwrap())
            .unwrap()
            .into_measure()
            .unwrap();
        assert_eq!(back, m);
    }
}
