//! Gaussian volume, L_p Gaussian surface-area measure and the Gaussian
//! isoperimetric profile.
//!
//! With `ρ² = h² + h'²` the boundary point at normal angle θ has polar angle
//! `u(θ)` and `du/dθ = h (h'' + h) / ρ²`, so the polar-coordinates formula
//! `γ₂(K) = (1/2π) ∫ (1 - e^{-ρ(u)²/2}) du` can be integrated over θ with
//! spectral accuracy instead of re-interpolating ρ on an irregular grid.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Density of `S_{p,γ₂}(K, ·)` against arc length on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct LpDensity {
    pub p: f64,
    pub density: ScalarField,
}

impl LpDensity {
    pub fn grid(&self) -> Grid {
        self.density.grid()
    }

    pub fn total(&self) -> f64 {
        self.density.integrate()
    }
}

pub fn gaussian_volume(body: &Body) -> f64 {
    let h = body.support().values();
    let curv = body.curvature_radius().values();
    let sum: f64 = body
        .radius_squared()
        .iter()
        .enumerate()
        .map(|(i, &r2)| -(-0.5 * r2).exp_m1() * h[i] * curv[i] / r2)
        .sum();
    sum * body.grid().weight() / (2.0 * PI)
}

/// Gaussian volume of `c·K` without rebuilding the body.
pub(crate) struct ScaledVolume {
    radius_sq: Vec<f64>,
    weights: Vec<f64>,
}

impl ScaledVolume {
    pub(crate) fn new(body: &Body) -> Self {
        let h = body.support().values();
        let curv = body.curvature_radius().values();
        let radius_sq = body.radius_squared();
        let w = body.grid().weight() / (2.0 * PI);
        let weights = (0..h.len())
            .map(|i| w * h[i] * curv[i] / radius_sq[i])
            .collect();
        Self { radius_sq, weights }
    }

    pub(crate) fn at(&self, c: f64) -> f64 {
        let c2 = c * c;
        self.radius_sq
            .iter()
            .zip(&self.weights)
            .map(|(r2, w)| -(-0.5 * c2 * r2).exp_m1() * w)
            .sum()
    }
}

/// `(1/2π) h^{1-p} e^{-(h'² + h²)/2} (h'' + h)` at every node.
pub fn lp_density(body: &Body, p: f64) -> LpDensity {
    let h = body.support().values();
    let curv = body.curvature_radius().values();
    let values = body
        .radius_squared()
        .iter()
        .enumerate()
        .map(|(i, &r2)| h[i].powf(1.0 - p) * (-0.5 * r2).exp() * curv[i] / (2.0 * PI))
        .collect();
    LpDensity {
        p,
        density: ScalarField::from_vec_unchecked(body.grid(), values),
    }
}

pub fn lp_total(body: &Body, p: f64) -> f64 {
    lp_density(body, p).total()
}

/// Boundary-integral evaluation of `S_{p,γ₂}(K, S¹)`:
/// `(1/2π) ∮ e^{-|x|²/2} <x, ν>^{1-p} ds`, with the boundary traced through
/// its points `x(θ)` and the arc-length element taken from the spectral
/// derivative of the position components.
pub fn lp_total_boundary_oracle(body: &Body, p: f64) -> f64 {
    let grid = body.grid();
    let pts = body.boundary_points();
    let xs = ScalarField::from_vec_unchecked(grid, pts.iter().map(|b| b.position[0]).collect());
    let ys = ScalarField::from_vec_unchecked(grid, pts.iter().map(|b| b.position[1]).collect());
    let dx = xs.differentiate(1);
    let dy = ys.differentiate(1);
    let sum: f64 = pts
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let (s, c) = b.normal_angle.sin_cos();
            let support = b.position[0] * c + b.position[1] * s;
            let r2 = b.position[0].powi(2) + b.position[1].powi(2);
            let ds = dx.values()[i].hypot(dy.values()[i]);
            (-0.5 * r2).exp() * support.powf(1.0 - p) * ds
        })
        .sum();
    sum * grid.weight() / (2.0 * PI)
}

/// Standard normal density.
pub fn psi(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Standard normal distribution function.
pub fn upsilon(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Quantile of the standard normal: safeguarded Newton with bisection.
pub fn upsilon_inverse(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(alpha));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    let mut x = 0.0f64;
    for _ in 0..200 {
        let fx = upsilon(x) - alpha;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = psi(x);
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-16 * x.abs().max(1.0) || hi - lo <= 1e-300 {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// `(1/4π) ∮ e^{-|x|²/2} ⟨x, ν⟩ ds`, a boundary integral bounded above by
/// the Gaussian volume.
pub fn boundary_gaussian_volume(body: &Body) -> f64 {
    let h = body.support().values();
    let r = body.curvature_radius().values();
    let rho2 = body.radius_squared();
    let sum: f64 = (0..h.len())
        .map(|i| (-0.5 * rho2[i]).exp() * h[i] * r[i])
        .sum();
    sum * body.grid().weight() / (4.0 * PI)
}

/// Both sides of the L_p Gaussian isoperimetric inequality, plus the p = 1
/// Gaussian isoperimetric inequality it generalizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub p: f64,
    pub gamma: f64,
    pub total: f64,
    pub bound: f64,
    pub deficit: f64,
    pub gaussian_perimeter: f64,
    pub perimeter_bound: f64,
    pub perimeter_deficit: f64,
}

/// Right-hand side `n γ (ψ(Υ⁻¹(γ)) / (n γ))^p` for n = 2.
pub fn lp_isoperimetric_bound(gamma: f64, p: f64) -> Result<f64> {
    let profile = psi(upsilon_inverse(gamma)?);
    Ok(2.0 * gamma * (profile / (2.0 * gamma)).powf(p))
}

pub fn isoperimetric_deficit(body: &Body, p: f64) -> Result<IsoperimetricReport> {
    if !(p >= 1.0) {
        return Err(Error::UnsupportedExponent(p));
    }
    let gamma = gaussian_volume(body);
    let total = lp_total(body, p);
    let bound = lp_isoperimetric_bound(gamma, p)?;
    let gaussian_perimeter = lp_total(body, 1.0);
    let perimeter_bound = psi(upsilon_inverse(gamma)?);
    Ok(IsoperimetricReport {
        p,
        gamma,
        total,
        bound,
        deficit: total - bound,
        gaussian_perimeter,
        perimeter_bound,
        perimeter_deficit: gaussian_perimeter - perimeter_bound,
    })
}

/// The constant `(1/√2π)^p (n/2)^{1-p}` for n = 2, i.e. the L_p surface
/// area lower bound at Gaussian volume one half.
pub fn half_volume_bound(p: f64) -> f64 {
    INV_SQRT_2PI.powf(p)
}
