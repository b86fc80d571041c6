//! Smooth solutions of `(1/2π) h^{1-p} e^{-(h'²+h²)/2} (h'' + h) = f` for
//! `p >= 1` by Newton continuation from a constant solution.
//!
//! The equation is solved in the residual form
//! `F(h) = (h'' + h) - 2π h^{p-1} e^{(h'² + h²)/2} f`, tracking
//! `f_t = (1 - t) c₀ + t f` from `t = 0` (where `h ≡ s₀` is known in closed
//! form) to `t = 1` with a tangent predictor and a damped Newton corrector.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::body::{hausdorff_distance, Body};
use crate::error::{Error, Result};
use crate::gauss::{gaussian_volume, half_volume_bound};
use crate::grid::{differentiate, Grid, ScalarField};
use crate::measure::MeasureDensity;

/// Constant `c₀` for the start of the homotopy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartLevel {
    /// Geometric mean of the radii `s(f_i)` solving the constant equation.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct HomotopyConfig {
    pub p: f64,
    pub steps_init: usize,
    pub step_min: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub c0: StartLevel,
    /// Allow `1 <= p <= 2` with mass at or above the sufficient bound.
    pub override_mass_bound: bool,
}

impl HomotopyConfig {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            steps_init: 4,
            step_min: 1e-4,
            newton_tol: 1e-10,
            newton_max: 50,
            c0: StartLevel::Auto,
            override_mass_bound: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::UnsupportedExponent(self.p));
        }
        if !(self.step_min > 0.0) || !(self.newton_tol > 0.0) || self.steps_init == 0 {
            return Err(Error::DomainError(self.step_min.min(self.newton_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub body: Body,
    pub residual_linf: f64,
    pub gamma: f64,
    pub homotopy_steps_used: usize,
    pub newton_iterations_total: usize,
    pub mass: f64,
    pub c0: f64,
    pub s0: f64,
    pub warnings: Vec<String>,
}

/// `(1/2π) s^{2-p} e^{-s²/2}`, the density produced by the disk of radius s.
pub fn disk_density(s: f64, p: f64) -> f64 {
    s.powf(2.0 - p) * (-0.5 * s * s).exp() / (2.0 * PI)
}

/// Mass bound `(1/√2π)^p (n/2)^{1-p}` (n = 2) below which the homotopy is
/// known to stay on the branch with Gaussian volume above one half.
pub fn mass_bound(p: f64) -> f64 {
    half_volume_bound(p)
}

/// Radius `s` with `disk_density(s, p) = c0`. For `p > 2` the root is unique;
/// for `p <= 2` the root on the decreasing branch (`s² > 2 - p`, the larger
/// one) is returned.
pub fn constant_solution(c0: f64, p: f64) -> Result<f64> {
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::DomainError(c0));
    }
    if p == 2.0 {
        let x = 2.0 * PI * c0;
        if x >= 1.0 {
            return Err(Error::NoRoot(c0));
        }
        return Ok((-2.0 * x.ln()).sqrt());
    }
    let mut lo = if p < 2.0 { (2.0 - p).sqrt() } else { 1.0 };
    if p < 2.0 && disk_density(lo, p) <= c0 {
        return Err(Error::NoRoot(c0));
    }
    while disk_density(lo, p) < c0 {
        lo *= 0.5;
    }
    let mut hi = lo.max(1.0);
    while disk_density(hi, p) > c0 {
        hi *= 2.0;
    }
    constant_solution_bracketed(c0, p, lo, hi)
}

/// Root of `disk_density(s, p) = c0` inside a bracket on which the density
/// is monotone decreasing; Newton on the logarithm, safeguarded by bisection.
pub fn constant_solution_bracketed(c0: f64, p: f64, lo: f64, hi: f64) -> Result<f64> {
    let target = c0.ln() + (2.0 * PI).ln();
    // φ(s) = (2 - p) ln s - s²/2 - ln(2π c0), decreasing on the bracket
    let phi = |s: f64| (2.0 - p) * s.ln() - 0.5 * s * s - target;
    let dphi = |s: f64| (2.0 - p) / s - s;
    let (mut lo, mut hi) = (lo, hi);
    if !(phi(lo) >= 0.0 && phi(hi) <= 0.0) {
        return Err(Error::NoRoot(c0));
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = phi(s);
        if v == 0.0 {
            return Ok(s);
        }
        if v > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - v / dphi(s);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - s).abs() <= 2.0 * f64::EPSILON * s {
            return Ok(next);
        }
        s = next;
    }
    Ok(s)
}

/// Eigenvalue of the linearization at `h ≡ s0` on the k-th Fourier mode
/// (n = 2, so the `s0^{n-2}` factor is one).
pub fn constant_spectrum(s0: f64, p: f64, k: u32) -> f64 {
    let k = f64::from(k);
    -k * k + (2.0 - p) - s0 * s0
}

/// First mode `k <= kmax` whose eigenvalue vanishes (to `1e-9`), if any.
pub fn degenerate_mode(s0: f64, p: f64, kmax: u32) -> Option<u32> {
    (0..=kmax).find(|&k| constant_spectrum(s0, p, k).abs() < 1e-9)
}

/// Bounds `[s(max f), s(min f)]` on any solution for `p > 2`, from the
/// maximum principle at the extremal points of `h`.
pub fn apriori_bounds(f: &MeasureDensity, p: f64) -> Option<(f64, f64)> {
    if !(p > 2.0) {
        return None;
    }
    let fmax = f.density().max();
    let fmin = f.density().min();
    if !(fmin > 0.0) {
        return None;
    }
    Some((constant_solution(fmax, p).ok()?, constant_solution(fmin, p).ok()?))
}

struct Derivs {
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn derivs(h: &ScalarField) -> Derivs {
    Derivs {
        d1: differentiate(h, 1).into_values(),
        d2: differentiate(h, 2).into_values(),
    }
}

fn residual_raw(h: &[f64], d: &Derivs, f: &[f64], p: f64) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let e = 0.5 * (d.d1[i] * d.d1[i] + h[i] * h[i]);
            d.d2[i] + h[i] - 2.0 * PI * h[i].powf(p - 1.0) * e.exp() * f[i]
        })
        .collect()
}

// Equivalent form ln(h'' + h) + (1 - p) ln h - (h'² + h²)/2 - ln(2π f), used
// for the Newton iteration. Unlike F it has no spurious root at h = 0, and
// for p > 2 it is monotone in the scale of h.
fn log_residual_raw(h: &[f64], d: &Derivs, f: &[f64], p: f64) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let e = 0.5 * (d.d1[i] * d.d1[i] + h[i] * h[i]);
            (d.d2[i] + h[i]).ln() + (1.0 - p) * h[i].ln() - e - (2.0 * PI * f[i]).ln()
        })
        .collect()
}

fn check_positive(h: &ScalarField) -> Result<()> {
    match h.values().iter().position(|v| !(*v > 0.0)) {
        Some(node) => Err(Error::NonPositiveIterate {
            node,
            value: h.values()[node],
        }),
        None => Ok(()),
    }
}

/// `F(h) = (h'' + h) - 2π h^{p-1} e^{(h'² + h²)/2} f`.
pub fn residual(h: &ScalarField, f: &MeasureDensity, p: f64) -> Result<ScalarField> {
    h.grid().check_same(&f.grid())?;
    check_positive(h)?;
    let d = derivs(h);
    Ok(ScalarField::from_vec_unchecked(
        h.grid(),
        residual_raw(h.values(), &d, f.values(), p),
    ))
}

/// Fréchet derivative of [`residual`] at `h` applied to an additive
/// perturbation `δ`.
pub fn linearized_apply(
    h: &ScalarField,
    delta: &ScalarField,
    f: &MeasureDensity,
    p: f64,
) -> ScalarField {
    let d = derivs(h);
    let dd = derivs(delta);
    let (hv, dv, fv) = (h.values(), delta.values(), f.values());
    ScalarField::from_vec_unchecked(
        h.grid(),
        (0..hv.len())
            .map(|i| {
                let e = (0.5 * (d.d1[i] * d.d1[i] + hv[i] * hv[i])).exp();
                let common = 2.0 * PI * fv[i] * e;
                dd.d2[i] + dv[i]
                    - common
                        * ((p - 1.0) * hv[i].powf(p - 2.0) * dv[i]
                            + hv[i].powf(p - 1.0) * (d.d1[i] * dd.d1[i] + hv[i] * dv[i]))
            })
            .collect(),
    )
}

/// Dense spectral differentiation matrices for one grid.
struct Operators {
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl Operators {
    fn new(grid: Grid) -> Self {
        let n = grid.size();
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let unit = ScalarField::from_vec_unchecked(grid, e.clone());
            let c1 = differentiate(&unit, 1);
            let c2 = differentiate(&unit, 2);
            for i in 0..n {
                d1[(i, j)] = c1.values()[i];
                d2[(i, j)] = c2.values()[i];
            }
            e[j] = 0.0;
        }
        Self { d1, d2 }
    }

    /// Jacobian of the log form at `h`.
    fn jacobian(&self, h: &[f64], d: &Derivs, p: f64) -> DMatrix<f64> {
        let n = h.len();
        let mut jac = self.d2.clone();
        for i in 0..n {
            let inv_r = 1.0 / (d.d2[i] + h[i]);
            for j in 0..n {
                jac[(i, j)] = inv_r * self.d2[(i, j)] - d.d1[i] * self.d1[(i, j)];
            }
            jac[(i, i)] += inv_r + (1.0 - p) / h[i] - h[i];
        }
        jac
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// Line-search merit: the Newton direction is always a descent direction for
// the squared two-norm, unlike the sup norm.
fn merit(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[derive(Debug)]
enum NewtonFailure {
    Singular,
    NonConvex,
    Stalled(f64),
}

impl NewtonFailure {
    fn into_error(self, t: f64) -> Error {
        match self {
            NewtonFailure::Singular => Error::NewtonSingular,
            NewtonFailure::NonConvex => Error::NonConvexIterate(t),
            NewtonFailure::Stalled(r) => Error::NewtonDiverged(r),
        }
    }
}

struct NewtonOutcome {
    h: ScalarField,
    residual: f64,
    iterations: usize,
}

fn admissible(h: &ScalarField, d: &Derivs) -> bool {
    h.values()
        .iter()
        .zip(&d.d2)
        .all(|(v, d2)| *v > 0.0 && v + d2 > 0.0)
}

fn newton(
    ops: &Operators,
    start: ScalarField,
    f: &[f64],
    p: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<NewtonOutcome, (NewtonFailure, usize)> {
    let grid = start.grid();
    let mut h = start;
    let mut d = derivs(&h);
    if !admissible(&h, &d) {
        return Err((NewtonFailure::NonConvex, 0));
    }
    let mut res = log_residual_raw(h.values(), &d, f, p);
    let mut norm = sup(&residual_raw(h.values(), &d, f, p));
    let mut m = merit(&res);
    let mut iterations = 0;
    while norm > tol {
        if iterations >= max_iter {
            return Err((NewtonFailure::Stalled(norm), iterations));
        }
        iterations += 1;
        let jac = ops.jacobian(h.values(), &d, p);
        let rhs = DVector::from_iterator(res.len(), res.iter().map(|r| -r));
        let step = match jac.lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => return Err((NewtonFailure::Singular, iterations)),
        };
        let mut alpha = 1.0;
        let mut rejected_for_shape = false;
        let accepted = loop {
            let trial = ScalarField::from_vec_unchecked(
                grid,
                h.values()
                    .iter()
                    .zip(step.iter())
                    .map(|(a, b)| a + alpha * b)
                    .collect(),
            );
            let td = derivs(&trial);
            if admissible(&trial, &td) {
                let tr = log_residual_raw(trial.values(), &td, f, p);
                let tn = sup(&residual_raw(trial.values(), &td, f, p));
                let tm = merit(&tr);
                if tm < (1.0 - 1e-4 * alpha) * m || tn <= tol {
                    break Some((trial, td, tr, tm, tn));
                }
            } else {
                rejected_for_shape = true;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                break None;
            }
        };
        match accepted {
            Some((nh, nd, nr, nm, nn)) => {
                h = nh;
                d = nd;
                res = nr;
                m = nm;
                norm = nn;
            }
            None if rejected_for_shape => return Err((NewtonFailure::NonConvex, iterations)),
            None => return Err((NewtonFailure::Stalled(norm), iterations)),
        }
    }
    Ok(NewtonOutcome {
        h,
        residual: norm,
        iterations,
    })
}

fn auto_level(f: &MeasureDensity, p: f64) -> Result<f64> {
    let v = f.values();
    if v.iter().all(|x| *x == v[0]) {
        return Ok(v[0]);
    }
    let logs: Vec<f64> = v
        .iter()
        .filter_map(|&fi| constant_solution(fi, p).ok())
        .map(f64::ln)
        .collect();
    if logs.is_empty() {
        return Err(Error::NoRoot(f.density().max()));
    }
    let s = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    Ok(disk_density(s, p))
}

/// Solves the equation for `f` by continuation from a constant solution.
pub fn continuation_solve(f: &MeasureDensity, cfg: &HomotopyConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let p = cfg.p;
    if let Some((i, v)) = f.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::InvalidMeasure(format!(
            "density must be positive, found {v} at node {i}"
        )));
    }
    let mass = f.mass();
    if p <= 2.0 && !cfg.override_mass_bound {
        let bound = mass_bound(p);
        if mass >= bound {
            return Err(Error::MassBoundViolated { mass, bound });
        }
    }
    let grid = f.grid();
    let mut warnings = Vec::new();
    let mut c0 = match cfg.c0 {
        StartLevel::Auto => auto_level(f, p)?,
        StartLevel::Value(c) => c,
    };
    let mut s0 = constant_solution(c0, p)?;
    let kmax = (grid.size() / 2) as u32;
    if let Some(k) = degenerate_mode(s0, p, kmax) {
        c0 *= 1.01;
        s0 = constant_solution(c0, p)?;
        let msg = format!("linearization at s0 has a kernel on mode {k}; c0 perturbed by 1%");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let ops = Operators::new(grid);
    let fv = f.values();
    let level = |t: f64| -> Vec<f64> { fv.iter().map(|fi| (1.0 - t) * c0 + t * fi).collect() };
    let stationary = fv.iter().all(|fi| *fi == c0);

    let mut h = ScalarField::constant(grid, s0);
    let mut newton_total = 0;
    // t = 0: the constant is already a solution; this only certifies it.
    let start = newton(&ops, h.clone(), &level(0.0), p, cfg.newton_tol, cfg.newton_max)
        .map_err(|(e, _)| e.into_error(0.0))?;
    newton_total += start.iterations;
    h = start.h;
    let mut residual_norm = start.residual;

    let mut t = 0.0f64;
    let mut dt = if stationary {
        1.0
    } else {
        1.0 / cfg.steps_init as f64
    };
    let mut steps = 0;
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let target = level(t_next);
        let predicted = tangent_predictor(&ops, &h, &level(t), fv, c0, p, t_next - t);
        let attempt = newton(&ops, predicted, &target, p, cfg.newton_tol, cfg.newton_max)
            .or_else(|_| newton(&ops, h.clone(), &target, p, cfg.newton_tol, cfg.newton_max));
        match attempt {
            Ok(out) => {
                newton_total += out.iterations;
                h = out.h;
                residual_norm = out.residual;
                t = t_next;
                steps += 1;
                dt = (2.0 * dt).min(1.0);
            }
            Err((failure, iters)) => {
                newton_total += iters;
                dt *= 0.5;
                if dt < cfg.step_min {
                    return Err(match failure {
                        NewtonFailure::NonConvex => Error::NonConvexIterate(t),
                        NewtonFailure::Singular => Error::NewtonSingular,
                        NewtonFailure::Stalled(_) => Error::HomotopyStalled { t, step: dt },
                    });
                }
            }
        }
    }
    let body = Body::new(h).map_err(|_| Error::NonConvexIterate(1.0))?;
    if let Some((lo, hi)) = apriori_bounds(f, p) {
        let (hmin, hmax) = (body.support().min(), body.support().max());
        let slack = 1e-8 * hi;
        if hmin < lo - slack || hmax > hi + slack {
            let msg = format!("support range [{hmin}, {hmax}] outside a-priori [{lo}, {hi}]");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let gamma = gaussian_volume(&body);
    if p <= 2.0 && gamma <= 0.5 {
        let msg = format!("gamma = {gamma} <= 1/2 for p = {p}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(SolveReport {
        body,
        residual_linf: residual_norm,
        gamma,
        homotopy_steps_used: steps,
        newton_iterations_total: newton_total,
        mass,
        c0,
        s0,
        warnings,
    })
}

/// Euler predictor `h + Δt · dh/dt` with `J dh/dt = (f - c0) / f_t` for the
/// log form.
fn tangent_predictor(
    ops: &Operators,
    h: &ScalarField,
    f_t: &[f64],
    f: &[f64],
    c0: f64,
    p: f64,
    dt: f64,
) -> ScalarField {
    let d = derivs(h);
    let hv = h.values();
    let jac = ops.jacobian(hv, &d, p);
    let rhs = DVector::from_iterator(hv.len(), (0..hv.len()).map(|i| (f[i] - c0) / f_t[i]));
    match jac.lu().solve(&rhs) {
        Some(v) if v.iter().all(|x| x.is_finite()) => {
            let pred: Vec<f64> = hv.iter().zip(v.iter()).map(|(a, b)| a + dt * b).collect();
            if pred.iter().all(|x| *x > 0.0) {
                ScalarField::from_vec_unchecked(h.grid(), pred)
            } else {
                h.clone()
            }
        }
        _ => h.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub max_distance: f64,
    pub solutions: Vec<Body>,
    /// Starts that did not converge, with the reason.
    pub failures: Vec<(usize, Error)>,
}

/// Damped Newton (no homotopy) from each initial body; reports the largest
/// pairwise Hausdorff distance among the converged solutions.
pub fn uniqueness_probe(
    f: &MeasureDensity,
    p: f64,
    inits: &[Body],
    newton_tol: f64,
    newton_max: usize,
) -> Result<ProbeReport> {
    if !(p > 2.0) {
        return Err(Error::UnsupportedExponent(p));
    }
    let grid = f.grid();
    for b in inits {
        grid.check_same(&b.grid())?;
    }
    let ops = Operators::new(grid);
    let outcomes: Vec<std::result::Result<Body, Error>> = inits
        .par_iter()
        .map(|b| {
            newton(&ops, b.support().clone(), f.values(), p, newton_tol, newton_max)
                .map_err(|(e, _)| e.into_error(1.0))
                .and_then(|o| Body::new(o.h))
        })
        .collect();
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(b) => solutions.push(b),
            Err(e) => {
                log::warn!("uniqueness probe: start {i} excluded: {e}");
                failures.push((i, e));
            }
        }
    }
    if solutions.is_empty() && !inits.is_empty() {
        return Err(failures.remove(0).1);
    }
    let mut max_distance = 0.0f64;
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            max_distance = max_distance.max(hausdorff_distance(&solutions[i], &solutions[j])?);
        }
    }
    Ok(ProbeReport {
        max_distance,
        solutions,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c_unit() -> f64 {
        (-0.5f64).exp() / (2.0 * PI)
    }

    #[test]
    fn residual_at_constants() {
        let g = Grid::new(64).unwrap();
        let f = MeasureDensity::uniform(g, 2.0 * PI * c_unit()).unwrap();
        let r = residual(&ScalarField::constant(g, 1.0), &f, 3.0).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-14));
        assert!(matches!(
            residual(&ScalarField::constant(g, -1.0), &f, 3.0),
            Err(Error::NonPositiveIterate { .. })
        ));
    }

    #[test]
    fn constant_roots() {
        assert_abs_diff_eq!(constant_solution(c_unit(), 3.0).unwrap(), 1.0, epsilon = 1e-14);
        let c = 1.0 / (2.0 * PI * std::f64::consts::E.powi(2));
        assert_abs_diff_eq!(constant_solution(c, 2.0).unwrap(), 2.0, epsilon = 1e-14);
        for (c0, p) in [(0.01, 3.0), (1e-4, 5.0), (0.05, 1.0), (0.02, 1.5), (3.0, 4.0)] {
            let s = constant_solution(c0, p).unwrap();
            assert!((disk_density(s, p) - c0).abs() < 1e-14, "{c0} {p}");
        }
        let a = constant_solution_bracketed(c_unit(), 3.0, 0.1, 5.0).unwrap();
        let b = constant_solution_bracketed(c_unit(), 3.0, 0.9, 1.3).unwrap();
        assert!((a - b).abs() < 1e-14);
        // p = 1: the disk density peaks at s = 1 with e^{-1/2}/(2π)
        assert!(matches!(constant_solution(0.1, 1.0), Err(Error::NoRoot(_))));
        assert!(constant_solution(0.05, 1.0).unwrap() > 1.0);
    }

    #[test]
    fn spectrum_values() {
        assert_eq!(constant_spectrum(1.0, 3.0, 0), -2.0);
        assert_eq!(constant_spectrum(1.0, 3.0, 2), -6.0);
        // (2 - p) - s0² = 1 puts a kernel on k = 1
        assert_eq!(degenerate_mode(0.5, 0.75, 8), Some(1));
        assert_eq!(degenerate_mode(1.0, 3.0, 64), None);
    }

    #[test]
    fn discrete_spectrum_at_constants() {
        let g = Grid::new(128).unwrap();
        for (p, s0) in [(3.0, 1.0), (1.5, 1.3), (5.0, 0.7)] {
            let f = MeasureDensity::uniform(g, 2.0 * PI * disk_density(s0, p)).unwrap();
            let h = ScalarField::constant(g, s0);
            for k in 0..=32u32 {
                let mode = ScalarField::from_fn(g, |t| (f64::from(k) * t).cos());
                let image = linearized_apply(&h, &mode, &f, p);
                let lambda = constant_spectrum(s0, p, k);
                for (a, b) in image.values().iter().zip(mode.values()) {
                    assert!((a - lambda * b).abs() < 1e-6, "p={p} k={k}");
                }
            }
        }
    }

    #[test]
    fn constant_measure_is_reproduced_in_one_step() {
        let g = Grid::new(64).unwrap();
        let f = MeasureDensity::uniform(g, 2.0 * PI * c_unit()).unwrap();
        let rep = continuation_solve(&f, &HomotopyConfig::new(3.0)).unwrap();
        assert_eq!(rep.homotopy_steps_used, 1);
        assert!(rep.body.support().values().iter().all(|h| (h - 1.0).abs() < 1e-14));
        assert_eq!(rep.s0, constant_solution(c_unit(), 3.0).unwrap());
    }

    #[test]
    fn mass_gate() {
        let g = Grid::new(64).unwrap();
        let f = MeasureDensity::uniform(g, 0.4).unwrap();
        assert!(matches!(
            continuation_solve(&f, &HomotopyConfig::new(1.0)),
            Err(Error::MassBoundViolated { .. })
        ));
        let ok = MeasureDensity::uniform(g, 0.3).unwrap();
        let rep = continuation_solve(&ok, &HomotopyConfig::new(1.0)).unwrap();
        assert!(rep.gamma > 0.5);
        assert!(matches!(
            continuation_solve(&ok, &HomotopyConfig::new(0.5)),
            Err(Error::UnsupportedExponent(_))
        ));
    }

    fn bumpy(g: Grid) -> MeasureDensity {
        MeasureDensity::from_fn(g, |t| 0.02 * (1.0 + 0.4 * t.cos() + 0.2 * (3.0 * t).sin())).unwrap()
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let g = Grid::new(64).unwrap();
        let f = bumpy(g);
        let h = ScalarField::from_fn(g, |t| 1.2 + 0.1 * (2.0 * t).cos() + 0.05 * t.sin());
        let delta = ScalarField::from_fn(g, |t| 0.3 * (3.0 * t).cos() + 0.2 * t.sin() - 0.1);
        let lin = linearized_apply(&h, &delta, &f, 3.5);
        let eps = 1e-6;
        let shifted = |e: f64| {
            let v = ScalarField::from_fn(g, |t| {
                1.2 + 0.1 * (2.0 * t).cos() + 0.05 * t.sin()
                    + e * (0.3 * (3.0 * t).cos() + 0.2 * t.sin() - 0.1)
            });
            residual(&v, &f, 3.5).unwrap()
        };
        let (a, b) = (shifted(eps), shifted(-eps));
        for i in 0..64 {
            let fd = (a.values()[i] - b.values()[i]) / (2.0 * eps);
            assert!((fd - lin.values()[i]).abs() < 1e-7, "{i}: {fd} {}", lin.values()[i]);
        }
        // the dense Jacobian of the log form is F' scaled by 1/(h'' + h)
        let ops = Operators::new(g);
        let d = derivs(&h);
        let jac = ops.jacobian(h.values(), &d, 3.5);
        let jd = &jac * DVector::from_column_slice(delta.values());
        let fh = residual(&h, &f, 3.5).unwrap();
        for i in 0..64 {
            let r = d.d2[i] + h.values()[i];
            // G = ln r - ln(r - F) with r = h'' + h
            let dd = derivs(&delta);
            let rd = dd.d2[i] + delta.values()[i];
            let expect = rd / r - (rd - lin.values()[i]) / (r - fh.values()[i]);
            assert!((jd[i] - expect).abs() < 1e-10, "{i} {} {expect}", jd[i]);
        }
        // multiplicative perturbations h e^{εφ} linearize to δ = hφ
        let phi = |t: f64| (2.0 * t).sin();
        let hphi = ScalarField::from_fn(g, |t| {
            (1.2 + 0.1 * (2.0 * t).cos() + 0.05 * t.sin()) * phi(t)
        });
        let lin = linearized_apply(&h, &hphi, &f, 3.5);
        let mult = |e: f64| {
            let v = ScalarField::from_fn(g, |t| {
                (1.2 + 0.1 * (2.0 * t).cos() + 0.05 * t.sin()) * (e * phi(t)).exp()
            });
            residual(&v, &f, 3.5).unwrap()
        };
        let (a, b) = (mult(eps), mult(-eps));
        for i in 0..64 {
            let fd = (a.values()[i] - b.values()[i]) / (2.0 * eps);
            assert!((fd - lin.values()[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn solves_nonconstant_density() {
        let g = Grid::new(128).unwrap();
        let f = bumpy(g);
        let rep = continuation_solve(&f, &HomotopyConfig::new(3.0)).unwrap();
        assert!(rep.residual_linf <= 1e-10);
        let r = residual(rep.body.support(), &f, 3.0).unwrap();
        assert!(r.values().iter().all(|v| v.abs() <= 1e-10));
        let (lo, hi) = apriori_bounds(&f, 3.0).unwrap();
        let h = rep.body.support();
        assert!(h.min() >= lo - 1e-9 && h.max() <= hi + 1e-9, "{lo} {} {} {hi}", h.min(), h.max());

        let inits: Vec<Body> = [0.8, 1.0, 1.6]
            .iter()
            .map(|&r| Body::ball(g, r).unwrap())
            .collect();
        let probe = uniqueness_probe(&f, 3.0, &inits, 1e-11, 100).unwrap();
        assert!(probe.failures.is_empty(), "{:?}", probe.failures);
        assert!(probe.max_distance < 1e-8);
        assert!(hausdorff_distance(&probe.solutions[0], &rep.body).unwrap() < 1e-8);
    }
}
