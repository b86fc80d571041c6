//! Even L_p Gaussian Minkowski problem for `p <= 0` by constrained ascent.
//!
//! Maximizes `J(h) = -(1/p) ∫ h^p dμ` (or `E(h) = -∫ log h dμ` at `p = 0`)
//! over even convex bodies with Gaussian volume one half. Each iteration
//! takes a preconditioned gradient step projected onto the tangent space of
//! the volume constraint, restores convexity with the Wulff shape, restores
//! exact evenness, and returns to the constraint by rescaling. At a critical
//! point `μ = λ S_{p,γ₂}(K, ·)` with `λ = μ(S¹) / S_{p,γ₂}(K, S¹)`.

use rustfft::num_complex::Complex;

use crate::body::{self, scale_body, wulff_shape, Body};
use crate::error::{Error, Result};
use crate::gauss::{lp_density, ScaledVolume};
use crate::grid::{fourier_multiply, ScalarField};
use crate::measure::MeasureDensity;

/// Radius of the centred disk with Gaussian volume one half, `√(2 ln 2)`.
pub const HALF_VOLUME_RADIUS: f64 = 1.177_410_022_515_474_6;

/// `𝒥(h) = -(1/p) ∫ h^p dμ` for `p < 0`.
pub fn functional_j(support: &ScalarField, mu: &MeasureDensity, p: f64) -> Result<f64> {
    if !(p < 0.0) {
        return Err(Error::UnsupportedExponent(p));
    }
    support.grid().check_same(&mu.grid())?;
    let w = support.grid().weight();
    let s: f64 = support
        .values()
        .iter()
        .zip(mu.values())
        .map(|(h, f)| h.powf(p) * f)
        .sum();
    Ok(-s * w / p)
}

/// `ℰ(h) = -∫ log h dμ`.
pub fn functional_e(support: &ScalarField, mu: &MeasureDensity) -> Result<f64> {
    support.grid().check_same(&mu.grid())?;
    let w = support.grid().weight();
    let s: f64 = support
        .values()
        .iter()
        .zip(mu.values())
        .map(|(h, f)| h.ln() * f)
        .sum();
    Ok(-s * w)
}

fn objective(support: &ScalarField, mu: &MeasureDensity, p: f64) -> Result<f64> {
    if p == 0.0 {
        functional_e(support, mu)
    } else {
        functional_j(support, mu, p)
    }
}

/// Homothetic copy with Gaussian volume `1/2`, found by bisection on the
/// scale factor.
pub fn rescale_to_half(body: &Body) -> Result<Body> {
    rescale_to(body, 0.5)
}

pub fn rescale_to(body: &Body, target: f64) -> Result<Body> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::DomainError(target));
    }
    let vol = ScaledVolume::new(body);
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while vol.at(lo) > target {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::DomainError(target));
        }
    }
    while vol.at(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::DomainError(target));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if vol.at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = if (vol.at(lo) - target).abs() <= (vol.at(hi) - target).abs() {
        lo
    } else {
        hi
    };
    scale_body(body, c)
}

#[derive(Debug, Clone)]
pub struct VariationalOptions {
    pub max_iter: usize,
    /// Largest trial displacement in sup-norm; `None` means `0.1 · min h`.
    pub step0: Option<f64>,
    pub tol_kkt: f64,
    /// Starting body; defaults to the half-volume disk.
    pub initial: Option<Body>,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            step0: None,
            tol_kkt: 1e-3,
            initial: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariationalReport {
    pub p: f64,
    pub body: Body,
    pub lambda: f64,
    pub kkt_residual: f64,
    pub objective: f64,
    pub gamma: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting with the initial body.
    pub objective_history: Vec<f64>,
}

/// `λ = μ(S¹) / S_{p,γ₂}(K, S¹)` and the pointwise mismatch
/// `max_i |S_i - λ f_i| / (λ f_i)` over nodes where `f_i > 0`.
pub fn kkt_certificate(body: &Body, mu: &MeasureDensity, p: f64) -> (f64, f64) {
    let s = lp_density(body, p);
    let lambda = mu.mass() / s.total();
    let residual = s
        .density
        .values()
        .iter()
        .zip(mu.values())
        .filter(|(_, f)| **f > 0.0)
        .map(|(si, fi)| (lambda * si - fi).abs() / fi)
        .fold(0.0, f64::max);
    (lambda, residual)
}

fn smooth(field: &ScalarField) -> ScalarField {
    fourier_multiply(
        field,
        |k| Complex::new(1.0 / (1.0 + (k * k) as f64), 0.0),
        0.0,
    )
}

fn dot(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

/// Ascent direction tangent to the volume constraint, in the `H¹` metric.
fn ascent_direction(body: &Body, mu: &MeasureDensity, p: f64) -> ScalarField {
    let grid = body.grid();
    let h = body.support().values();
    let grad_obj = ScalarField::from_vec_unchecked(
        grid,
        h.iter()
            .zip(mu.values())
            .map(|(h, f)| -h.powf(p - 1.0) * f)
            .collect(),
    );
    let grad_vol = lp_density(body, 1.0).density;
    let pj = smooth(&grad_obj);
    let pv = smooth(&grad_vol);
    let beta = dot(&grad_vol, &pj) / dot(&grad_vol, &pv);
    ScalarField::from_vec_unchecked(
        grid,
        pj.values()
            .iter()
            .zip(pv.values())
            .map(|(a, b)| a - beta * b)
            .collect(),
    )
}

/// One retraction back onto even convex bodies of Gaussian volume 1/2.
fn retract(field: &ScalarField) -> Result<Body> {
    let even = body::even_part(field);
    let convex = wulff_shape(&even)?;
    let exact = Body::new(body::even_part(convex.support()))?;
    rescale_to_half(&exact)
}

pub fn variational_solve(
    mu: &MeasureDensity,
    p: f64,
    opts: &VariationalOptions,
) -> Result<VariationalReport> {
    if !(p <= 0.0) {
        return Err(Error::UnsupportedExponent(p));
    }
    if !mu.is_even() {
        return Err(Error::MeasureNotEven);
    }
    mu.check_spread(1e-8 * mu.mass())?;
    let grid = mu.grid();
    let start = match &opts.initial {
        Some(b) => {
            grid.check_same(&b.grid())?;
            b.clone()
        }
        None => Body::ball(grid, HALF_VOLUME_RADIUS)?,
    };
    let mut body = retract(start.support())?;
    let mut value = objective(body.support(), mu, p)?;
    let mut history = vec![value];
    let step_max = opts.step0.unwrap_or(0.1 * body.support().min());
    let step_floor = 1e-13 * body.support().max();
    let mut step = step_max;
    let mut iterations = 0;

    loop {
        let (lambda, kkt) = kkt_certificate(&body, mu, p);
        if kkt <= opts.tol_kkt || iterations >= opts.max_iter {
            if kkt > opts.tol_kkt {
                return Err(Error::NoProgress { iterations, kkt });
            }
            let gamma = crate::gauss::gaussian_volume(&body);
            return Ok(VariationalReport {
                p,
                body,
                lambda,
                kkt_residual: kkt,
                objective: value,
                gamma,
                iterations,
                objective_history: history,
            });
        }
        let dir = ascent_direction(&body, mu, p);
        let norm = dir.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm == 0.0 {
            return Err(Error::NoProgress { iterations, kkt });
        }
        let accepted = loop {
            let trial = ScalarField::from_vec_unchecked(
                grid,
                body.support()
                    .values()
                    .iter()
                    .zip(dir.values())
                    .map(|(h, d)| h + step * d / norm)
                    .collect(),
            );
            let candidate = if trial.min() > 0.0 {
                retract(&trial).ok()
            } else {
                None
            };
            if let Some(c) = candidate {
                let v = objective(c.support(), mu, p)?;
                if v > value {
                    value = v;
                    break Some(c);
                }
            }
            step *= 0.5;
            if step < step_floor {
                break None;
            }
        };
        match accepted {
            Some(c) => {
                body = c;
                history.push(value);
                iterations += 1;
                step = (2.0 * step).min(step_max);
            }
            None => return Err(Error::NoProgress { iterations, kkt }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::hausdorff_distance;
    use crate::gauss::gaussian_volume;
    use crate::grid::Grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn unit_uniform(n: usize) -> MeasureDensity {
        MeasureDensity::uniform(Grid::new(n).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn functionals_on_balls() {
        let mu = unit_uniform(64);
        let g = mu.grid();
        let b1 = Body::ball(g, 1.0).unwrap();
        let b2 = Body::ball(g, 2.0).unwrap();
        assert_abs_diff_eq!(functional_j(b1.support(), &mu, -1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(functional_j(b2.support(), &mu, -1.0).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(functional_e(b1.support(), &mu).unwrap(), 0.0, epsilon = 1e-15);
        let be = Body::ball(g, std::f64::consts::E).unwrap();
        assert_abs_diff_eq!(functional_e(be.support(), &mu).unwrap(), -1.0, epsilon = 1e-14);
        assert!(matches!(
            functional_j(b1.support(), &mu, 0.5),
            Err(Error::UnsupportedExponent(_))
        ));
        let other = unit_uniform(32);
        assert_eq!(
            functional_e(b1.support(), &other),
            Err(Error::GridMismatch(64, 32))
        );
    }

    #[test]
    fn log_functional_under_scaling() {
        let mu = MeasureDensity::even_from_fn(Grid::new(64).unwrap(), |t| {
            (2.0 + (2.0 * t).cos()) / 7.0
        })
        .unwrap();
        let k = Body::new(ScalarField::from_fn(mu.grid(), |t| 1.0 + 0.1 * (2.0 * t).sin())).unwrap();
        let c = 1.7f64;
        let scaled = scale_body(&k, c).unwrap();
        assert_abs_diff_eq!(
            functional_e(scaled.support(), &mu).unwrap(),
            functional_e(k.support(), &mu).unwrap() - c.ln() * mu.mass(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn wulff_shape_never_lowers_j() {
        let mu = unit_uniform(128);
        let g = mu.grid();
        let f = ScalarField::from_fn(g, |t| 1.0 + 0.4 * (5.0 * t).cos().abs());
        let w = wulff_shape(&f).unwrap();
        assert!(
            functional_j(w.support(), &mu, -1.0).unwrap() >= functional_j(&f, &mu, -1.0).unwrap()
        );
    }

    #[test]
    fn rescaling() {
        let g = Grid::new(256).unwrap();
        let b = rescale_to_half(&Body::ball(g, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(b.support().values()[0], HALF_VOLUME_RADIUS, epsilon = 1e-12);
        let again = rescale_to_half(&b).unwrap();
        assert_abs_diff_eq!(
            again.support().values()[5] / b.support().values()[5],
            1.0,
            epsilon = 1e-12
        );
        let disk = Body::new(ScalarField::from_fn(g, |t| 1.0 + 0.5 * t.cos())).unwrap();
        let s = rescale_to_half(&body::symmetrize(&disk).unwrap()).unwrap();
        assert_abs_diff_eq!(gaussian_volume(&s), 0.5, epsilon = 1e-12);
        let ell = Body::new(ScalarField::from_fn(g, |t| 1.0 + 0.2 * (2.0 * t).cos())).unwrap();
        assert_abs_diff_eq!(gaussian_volume(&rescale_to_half(&ell).unwrap()), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn uniform_measure_gives_half_volume_disk() {
        let mu = unit_uniform(128);
        for (p, lambda) in [(-1.0, 1.0 / (0.5 * HALF_VOLUME_RADIUS.powi(3))), (0.0, 1.0 / (2f64.ln()))] {
            let rep = variational_solve(&mu, p, &VariationalOptions::default()).unwrap();
            assert!(rep.body.support().values().iter().all(|h| (h - HALF_VOLUME_RADIUS).abs() < 1e-3));
            assert_abs_diff_eq!(rep.lambda, lambda, epsilon = 1e-3);
            assert_abs_diff_eq!(rep.gamma, 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Grid::new(64).unwrap();
        let odd = MeasureDensity::from_fn(g, |t| 1.0 + 0.5 * t.cos()).unwrap();
        assert!(matches!(
            variational_solve(&odd, -1.0, &VariationalOptions::default()),
            Err(Error::MeasureNotEven)
        ));
        let mu = unit_uniform(64);
        assert!(matches!(
            variational_solve(&mu, 0.5, &VariationalOptions::default()),
            Err(Error::UnsupportedExponent(_))
        ));
        let mut v = vec![0.0; 64];
        v[0] = 1.0;
        v[32] = 1.0;
        let atoms = MeasureDensity::new(ScalarField::new(g, v).unwrap(), true).unwrap();
        assert!(matches!(
            variational_solve(&atoms, -1.0, &VariationalOptions::default()),
            Err(Error::MeasureConcentrated(_))
        ));
    }

    #[test]
    fn two_bump_solution_is_even_and_monotone() {
        let g = Grid::new(128).unwrap();
        let mu = MeasureDensity::even_from_fn(g, |t| (1.0 + 0.5 * (2.0 * t).cos()) / (2.0 * PI)).unwrap();
        let rep = variational_solve(&mu, -1.0, &VariationalOptions::default()).unwrap();
        assert!(rep.body.is_even());
        assert!(rep.kkt_residual < 1e-3);
        assert_abs_diff_eq!(rep.gamma, 0.5, epsilon = 1e-10);
        assert!(rep.objective_history.windows(2).all(|w| w[1] >= w[0]));

        let start3 = VariationalOptions {
            initial: Some(Body::ball(g, 3.0).unwrap()),
            tol_kkt: 1e-5,
            ..Default::default()
        };
        let start1 = VariationalOptions {
            initial: Some(Body::ball(g, 1.0).unwrap()),
            tol_kkt: 1e-5,
            ..Default::default()
        };
        let a = variational_solve(&mu, -1.0, &start1).unwrap();
        let b = variational_solve(&mu, -1.0, &start3).unwrap();
        assert!(hausdorff_distance(&a.body, &b.body).unwrap() < 1e-3);
    }
}
