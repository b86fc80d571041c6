//! Target measures given by a nonnegative density on the grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDensity {
    density: ScalarField,
    even: bool,
}

impl MeasureDensity {
    /// With `even` set, the density must satisfy `f_i = f_{i+N/2}` exactly.
    pub fn new(density: ScalarField, even: bool) -> Result<Self> {
        if let Some((i, v)) = density
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0))
        {
            return Err(Error::InvalidMeasure(format!(
                "negative density {v} at node {i}"
            )));
        }
        if !(density.integrate() > 0.0) {
            return Err(Error::InvalidMeasure("zero total mass".into()));
        }
        let m = Self { density, even };
        if even && !m.is_symmetric() {
            return Err(Error::MeasureNotEven);
        }
        Ok(m)
    }

    /// Constant density with total mass `mass`.
    pub fn uniform(grid: Grid, mass: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid, mass / (2.0 * PI)), true)
    }

    /// Samples `f` at every node (no evenness claimed).
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(ScalarField::from_fn(grid, f), false)
    }

    /// Samples `f` on the first half of the grid and mirrors it, so the
    /// result is even bit-for-bit.
    pub fn even_from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let half = grid.size() / 2;
        let first: Vec<f64> = (0..half).map(|i| f(grid.node(i))).collect();
        let values = first.iter().chain(first.iter()).copied().collect();
        Self::new(ScalarField::new(grid, values)?, true)
    }

    pub fn grid(&self) -> Grid {
        self.density.grid()
    }

    pub fn density(&self) -> &ScalarField {
        &self.density
    }

    pub fn values(&self) -> &[f64] {
        self.density.values()
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn mass(&self) -> f64 {
        self.density.integrate()
    }

    fn is_symmetric(&self) -> bool {
        is_symmetric(&self.density)
    }

    /// Smallest eigenvalue of `∫ u uᵀ f du`.
    pub fn spread(&self) -> f64 {
        let w = self.grid().weight();
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (t, f) in self.grid().nodes().zip(self.values()) {
            let (s, co) = t.sin_cos();
            a += co * co * f * w;
            b += co * s * f * w;
            c += s * s * f * w;
        }
        let mean = 0.5 * (a + c);
        let dev = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        mean - dev
    }

    /// Rejects measures that (numerically) live on a pair of antipodal points.
    pub fn check_spread(&self, eps: f64) -> Result<()> {
        let s = self.spread();
        if s > eps {
            Ok(())
        } else {
            Err(Error::MeasureConcentrated(s))
        }
    }

    /// Same shape, total mass rescaled.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let k = mass / self.mass();
        Self::new(self.density.map(|v| v * k), self.even)
    }
}

fn is_symmetric(f: &ScalarField) -> bool {
    let g = f.grid();
    let v = f.values();
    (0..g.size()).all(|i| v[i] == v[g.antipode(i)])
}
