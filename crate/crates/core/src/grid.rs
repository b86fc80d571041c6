//! Uniform periodic grid on the unit circle and sampled fields.
//!
//! All calculus here is spectral: a field of `N` samples is identified with
//! its unique trigonometric interpolant of degree `N/2` (the Nyquist mode
//! carried as a pure cosine), and integrals use the periodic trapezoid rule,
//! which is exact for trigonometric polynomials of degree below `N`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest supported grid.
pub const MIN_NODES: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// `N` equispaced nodes `θ_i = 2πi/N` with equal weights `2π/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    size: usize,
}

impl Grid {
    pub fn new(size: usize) -> Result<Self> {
        if size < MIN_NODES || !size.is_multiple_of(2) {
            return Err(Error::InvalidGrid(size));
        }
        Ok(Self { size })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.size as f64
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.size).map(move |i| self.node(i))
    }

    /// Index of the antipodal node, `θ_i + π`.
    #[inline]
    pub fn antipode(&self, i: usize) -> usize {
        (i + self.size / 2) % self.size
    }

    /// Signed wavenumber stored at FFT index `j`.
    #[inline]
    fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.size / 2 {
            j as i64
        } else {
            j as i64 - self.size as i64
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.size != other.size {
            return Err(Error::GridMismatch(self.size, other.size));
        }
        Ok(())
    }
}

/// Convenience wrapper for [`Grid::new`].
pub fn make_grid(size: usize) -> Result<Grid> {
    Grid::new(size)
}

/// A real function sampled at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::LengthMismatch {
                len: values.len(),
                grid: grid.size(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node. Panics if `f` produces a non-finite value.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().map(f).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "from_fn produced a non-finite sample"
        );
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.size());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        argext(&self.values, |a, b| a > b)
    }

    pub fn argmin(&self) -> usize {
        argext(&self.values, |a, b| a < b)
    }

    pub fn integrate(&self) -> f64 {
        integrate(self)
    }

    pub fn differentiate(&self, order: u32) -> Self {
        differentiate(self, order)
    }
}

fn argext(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

/// Periodic trapezoid rule.
pub fn integrate(field: &ScalarField) -> f64 {
    field.grid.weight() * field.values.iter().sum::<f64>()
}

fn spectrum(values: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward_plan(buf.len()).process(&mut buf);
    buf
}

fn synthesize(mut buf: Vec<Complex<f64>>) -> Vec<f64> {
    let n = buf.len();
    inverse_plan(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Applies a real Fourier multiplier `m(k)` to a sampled periodic function.
/// The Nyquist coefficient is multiplied by `nyquist` instead.
pub(crate) fn fourier_multiply(
    field: &ScalarField,
    m: impl Fn(i64) -> Complex<f64>,
    nyquist: f64,
) -> ScalarField {
    let grid = field.grid;
    let n = grid.size();
    let mut buf = spectrum(&field.values);
    for (j, c) in buf.iter_mut().enumerate() {
        if j == n / 2 {
            *c *= nyquist;
        } else {
            *c *= m(grid.wavenumber(j));
        }
    }
    ScalarField::from_vec_unchecked(grid, synthesize(buf))
}

/// Derivative of the trigonometric interpolant. For odd orders the Nyquist
/// mode is dropped; for even orders it is kept as `(-1)^{m/2} (N/2)^m`.
pub fn differentiate(field: &ScalarField, order: u32) -> ScalarField {
    if order == 0 {
        return field.clone();
    }
    let half = (field.grid.size() / 2) as f64;
    let nyquist = if order % 2 == 1 {
        0.0
    } else {
        let sign = if (order / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * half.powi(order as i32)
    };
    fourier_multiply(
        field,
        |k| Complex::new(0.0, k as f64).powu(order),
        nyquist,
    )
}

/// Trigonometric interpolant coefficients, ready for point evaluation.
#[derive(Debug, Clone)]
pub struct Interpolant {
    /// `c_k / N` for `k = 0..=N/2` (the rest follow from conjugate symmetry).
    coeffs: Vec<Complex<f64>>,
    size: usize,
}

impl Interpolant {
    pub fn new(field: &ScalarField) -> Self {
        let n = field.grid.size();
        let spec = spectrum(&field.values);
        let inv = 1.0 / n as f64;
        let coeffs = spec[..=n / 2].iter().map(|c| c * inv).collect();
        Self { coeffs, size: n }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let half = self.size / 2;
        let step = Complex::new(theta.cos(), theta.sin());
        let mut phase = step;
        let mut acc = self.coeffs[0].re;
        for k in 1..half {
            acc += 2.0 * (self.coeffs[k] * phase).re;
            phase *= step;
        }
        acc + self.coeffs[half].re * (half as f64 * theta).cos()
    }
}

/// Evaluates the trigonometric interpolant of `field` at arbitrary angles.
pub fn resample(field: &ScalarField, angles: &[f64]) -> Vec<f64> {
    let interp = Interpolant::new(field);
    angles.iter().map(|&a| interp.eval(a)).collect()
}

/// Band-limited transfer of a field onto a grid of a different size
/// (zero-padding or truncating the spectrum).
pub fn regrid(field: &ScalarField, target: Grid) -> ScalarField {
    if target == field.grid {
        return field.clone();
    }
    let interp = Interpolant::new(field);
    ScalarField::from_fn(target, |t| interp.eval(t))
}
