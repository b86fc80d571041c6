//! Property suites: every identity and inequality the toolkit relies on,
//! checked on seeded random bodies against independent oracles.
//!
//! Each check becomes one [`Row`]. A row bounds its value from above or
//! below; `violation` is the amount by which the bound is exceeded (zero when
//! it holds), and a suite passes when every row has zero violation.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{
    convex_hull_body, hausdorff_distance, polar_body, radial_from_support, refined_extremes,
    wulff_shape, Body,
};
use crate::continuation::{
    apriori_bounds, constant_solution, continuation_solve, uniqueness_probe, HomotopyConfig,
};
use crate::error::{Error, Result};
use crate::gauss::{
    boundary_gaussian_volume, gaussian_volume, half_volume_bound, isoperimetric_deficit,
    lp_density, lp_total,
};
use crate::grid::{Grid, ScalarField};
use crate::measure::MeasureDensity;
use crate::variational::{rescale_to_half, variational_solve, VariationalOptions, HALF_VOLUME_RADIUS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub suite: String,
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub worst_violation: f64,
    /// Headline tolerance of the suite; individual rows carry their own bounds.
    pub tolerance: f64,
    pub pass: bool,
    pub rows: Vec<Row>,
}

impl SuiteResult {
    fn new(name: &str, cases: usize, tolerance: f64, rows: Vec<Row>) -> Self {
        let worst_violation = rows.iter().fold(0.0f64, |m, r| m.max(r.violation));
        Self {
            name: name.to_string(),
            cases,
            worst_violation,
            tolerance,
            pass: worst_violation == 0.0,
            rows,
        }
    }

    /// Largest value among rows with the given quantity name.
    pub fn max_value(&self, quantity: &str) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| r.value)
            .reduce(f64::max)
    }

    /// Smallest value among rows with the given quantity name.
    pub fn min_value(&self, quantity: &str) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| r.value)
            .reduce(f64::min)
    }
}

/// Writes the rows of all results as one CSV table.
pub fn write_csv<W: Write>(results: &[SuiteResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results.iter().flat_map(|s| &s.rows) {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

struct Checks {
    suite: &'static str,
    case: String,
    rows: Vec<Row>,
}

impl Checks {
    fn new(suite: &'static str, case: impl Into<String>) -> Self {
        Self {
            suite,
            case: case.into(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, quantity: &str, value: f64, bound: f64, excess: f64) {
        let violation = if excess.is_nan() {
            f64::INFINITY
        } else {
            excess.max(0.0)
        };
        self.rows.push(Row {
            suite: self.suite.to_string(),
            case: self.case.clone(),
            quantity: quantity.to_string(),
            value,
            bound,
            violation,
        });
    }

    fn at_most(&mut self, quantity: &str, value: f64, bound: f64) {
        self.push(quantity, value, bound, value - bound);
    }

    fn at_least(&mut self, quantity: &str, value: f64, bound: f64) {
        self.push(quantity, value, bound, bound - value);
    }

    fn error(&mut self, quantity: &str, err: &Error) {
        log::warn!("{} {}: {quantity} failed: {err}", self.suite, self.case);
        self.push(quantity, f64::NAN, 0.0, f64::NAN);
    }
}

fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

const MODES: std::ops::RangeInclusive<u32> = 2..=6;

fn trig_field(grid: Grid, c: f64, scale: f64, coeffs: &[(f64, f64)]) -> ScalarField {
    ScalarField::from_fn(grid, |t| {
        let wave: f64 = MODES
            .zip(coeffs)
            .map(|(k, (a, b))| a * (f64::from(k) * t).cos() + b * (f64::from(k) * t).sin())
            .sum();
        c * (1.0 + scale * wave)
    })
}

fn draw_coeffs(rng: &mut impl Rng) -> Vec<(f64, f64)> {
    MODES
        .map(|_| (rng.gen_range(-0.08..=0.08), rng.gen_range(-0.08..=0.08)))
        .collect()
}

/// A positive smooth field `c(1 + Σ_{k=2..6} a_k cos kθ + b_k sin kθ)` with
/// coefficients uniform in `[-0.08, 0.08]` and `c` in `[0.5, 2.5]`; it need
/// not be a support function.
pub fn random_field(rng: &mut impl Rng, grid: Grid) -> ScalarField {
    let c = rng.gen_range(0.5..=2.5);
    trig_field(grid, c, 1.0, &draw_coeffs(rng))
}

/// A random smooth convex body of the same form as [`random_field`].
/// Candidates whose radius of curvature falls below `0.05 c` are rejected
/// and the perturbation is shrunk by 0.7 before retrying, so every returned
/// body is strictly convex with a margin.
pub fn random_body(rng: &mut impl Rng, grid: Grid) -> Body {
    let c = rng.gen_range(0.5..=2.5);
    let coeffs = draw_coeffs(rng);
    let mut scale = 1.0;
    loop {
        if let Some(body) = accept_convex(trig_field(grid, c, scale, &coeffs), 0.05 * c) {
            return body;
        }
        scale *= 0.7;
    }
}

/// Accepts `field` as a body only if its radius of curvature is at least
/// `margin` everywhere.
pub fn accept_convex(field: ScalarField, margin: f64) -> Option<Body> {
    let body = Body::new(field).ok()?;
    (body.curvature_radius().min() >= margin).then_some(body)
}

/// Duality identities at N = 1024 on `count` random bodies plus three balls.
pub fn run_duality_suite(seed: u64, count: usize) -> SuiteResult {
    const TOL: f64 = 2e-3;
    let grid = Grid::new(1024).expect("valid grid");
    let mut rows: Vec<Row> = [0.5, 1.0, 2.0]
        .par_iter()
        .flat_map(|&r| {
            let ball = Body::ball(grid, r).expect("ball");
            let f = ScalarField::constant(grid, r);
            duality_checks(format!("ball r={r}"), &ball, &f, 1e-12)
        })
        .collect();
    rows.par_extend((0..count).into_par_iter().flat_map(|i| {
        let mut rng = case_rng(seed, i as u64);
        let body = random_body(&mut rng, grid);
        let f = random_field(&mut rng, grid);
        duality_checks(format!("body {i}"), &body, &f, TOL)
    }));
    SuiteResult::new("duality", count + 3, TOL, rows)
}

fn duality_checks(case: String, body: &Body, f: &ScalarField, tol: f64) -> Vec<Row> {
    let mut c = Checks::new("duality", case);
    let grid = body.grid();
    let h = body.support().values();

    let ext = refined_extremes(body, 8);
    c.at_most("max_support_minus_max_radial", (ext.support_max - ext.radial_max).abs(), tol);
    c.at_most("min_support_minus_min_radial", (ext.support_min - ext.radial_min).abs(), tol);

    let j = body.support().argmax();
    let worst = (0..grid.size())
        .map(|i| (grid.node(i) - grid.node(j)).cos() * h[j] - h[i])
        .fold(f64::NEG_INFINITY, f64::max);
    c.at_most("support_below_max_direction", worst, tol);

    match radial_from_support(body) {
        Ok(rho) => {
            let rv = rho.values();
            let k = rho.argmin();
            let worst = (0..grid.size())
                .map(|i| rv[i] * (grid.node(i) - grid.node(k)).cos() - rv[k])
                .fold(f64::NEG_INFINITY, f64::max);
            c.at_most("radial_above_min_direction", worst, tol);
            match polar_body(body) {
                Ok(polar) => {
                    let err = rv
                        .iter()
                        .zip(polar.support().values())
                        .map(|(r, hs)| (r * hs - 1.0).abs())
                        .fold(0.0, f64::max);
                    c.at_most("radial_times_polar_support", err, tol);
                    match polar_body(&polar).and_then(|pp| hausdorff_distance(&pp, body)) {
                        Ok(d) => c.at_most("double_polar_distance", d, tol),
                        Err(e) => c.error("double_polar_distance", &e),
                    }
                }
                Err(e) => c.error("radial_times_polar_support", &e),
            }
        }
        Err(e) => c.error("radial_above_min_direction", &e),
    }

    let wulff_dual = wulff_shape(f)
        .and_then(|w| polar_body(&w))
        .and_then(|wd| hausdorff_distance(&wd, &convex_hull_body(&f.map(|v| 1.0 / v))?));
    match wulff_dual {
        Ok(d) => c.at_most("wulff_polar_vs_reciprocal_hull", d, tol),
        Err(e) => c.error("wulff_polar_vs_reciprocal_hull", &e),
    }
    c.rows
}

/// Central differences of the Gaussian volume along `h_t = (h^p + t g^p)^{1/p}`
/// and `h_t = h e^{tφ}` against the corresponding measure integrals.
/// `t_list` must be positive and decreasing.
pub fn run_variation_suite(seed: u64, count: usize, t_list: &[f64]) -> SuiteResult {
    const TOL: f64 = 1e-6;
    let grid = Grid::new(256).expect("valid grid");
    let mut rows: Vec<Row> = [0.5, 1.0, 2.0]
        .par_iter()
        .flat_map(|&r| {
            let ball = Body::ball(grid, r).expect("ball");
            let one = ScalarField::constant(grid, 1.0);
            let mut c = Checks::new("variation", format!("ball r={r}"));
            let t = 1e-5;
            let fd = central_difference(&ball, &one, Some(1.0), t);
            c.at_most("fd_error_p1_closed_form", (fd - r * (-0.5 * r * r).exp()).abs(), 1e-8);
            let fd = central_difference(&ball, &one, None, t);
            c.at_most("fd_error_log_closed_form", (fd - r * r * (-0.5 * r * r).exp()).abs(), 1e-8);
            c.rows
        })
        .collect();
    rows.par_extend((0..count).into_par_iter().flat_map(|i| {
        let mut rng = case_rng(seed, i as u64);
        let body = random_body(&mut rng, grid);
        let g = random_field(&mut rng, grid);
        let phi = ScalarField::from_fn(grid, {
            let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            move |t| a[0] + a[1] * t.cos() + a[2] * (2.0 * t).sin() + a[3] * (3.0 * t).cos()
        });
        let mut c = Checks::new("variation", format!("body {i}"));
        for p in [-1.0, 1.0, 2.0] {
            let density = lp_density(&body, p).density;
            let exact = g
                .values()
                .iter()
                .zip(density.values())
                .map(|(gv, d)| gv.powf(p) * d)
                .sum::<f64>()
                * grid.weight()
                / p;
            variation_rows(&mut c, &format!("p={p}"), &body, &g, Some(p), exact, t_list, TOL);
        }
        let density = lp_density(&body, 0.0).density;
        let exact = phi
            .values()
            .iter()
            .zip(density.values())
            .map(|(a, d)| a * d)
            .sum::<f64>()
            * grid.weight();
        variation_rows(&mut c, "log", &body, &phi, None, exact, t_list, TOL);
        c.rows
    }));
    SuiteResult::new("variation", count + 3, TOL, rows)
}

#[allow(clippy::too_many_arguments)]
fn variation_rows(
    c: &mut Checks,
    family: &str,
    body: &Body,
    g: &ScalarField,
    p: Option<f64>,
    exact: f64,
    t_list: &[f64],
    tol: f64,
) {
    let errors: Vec<f64> = t_list
        .iter()
        .map(|&t| (central_difference(body, g, p, t) - exact).abs())
        .collect();
    if let Some(last) = errors.last() {
        c.at_most(&format!("fd_error_{family}"), *last, tol);
    }
    // Second-order signature, only where truncation dominates round-off,
    // which grows like 1/t in a central difference.
    for w in 0..errors.len().saturating_sub(1) {
        let (e1, e2) = (errors[w], errors[w + 1]);
        if e2 > 1e-14 / t_list[w + 1] {
            let expected = (t_list[w] / t_list[w + 1]).powi(2);
            let ratio = e1 / e2;
            c.at_most(
                &format!("fd_ratio_deviation_{family}"),
                (ratio / expected - 1.0).abs(),
                0.2,
            );
        }
    }
}

fn perturbed_volume(body: &Body, g: &ScalarField, p: Option<f64>, t: f64) -> f64 {
    let h = body.support();
    let values: Vec<f64> = h
        .values()
        .iter()
        .zip(g.values())
        .map(|(hv, gv)| match p {
            Some(p) => (hv.powf(p) + t * gv.powf(p)).powf(1.0 / p),
            None => hv * (t * gv).exp(),
        })
        .collect();
    let field = ScalarField::new(h.grid(), values).expect("finite perturbation");
    let shape = wulff_shape(&field).expect("positive perturbation");
    gaussian_volume(&shape)
}

fn central_difference(body: &Body, g: &ScalarField, p: Option<f64>, t: f64) -> f64 {
    (perturbed_volume(body, g, p, t) - perturbed_volume(body, g, p, -t)) / (2.0 * t)
}

/// Isoperimetric-type inequalities for `p` in `p_list` (all `>= 1`).
pub fn run_isoperimetric_suite(seed: u64, count: usize, p_list: &[f64]) -> SuiteResult {
    const TOL: f64 = 1e-8;
    let grid = Grid::new(256).expect("valid grid");
    let mut spot = Checks::new("isoperimetric", "balls");
    let b1 = Body::ball(grid, 1.0).expect("ball");
    spot.at_most(
        "boundary_volume_unit_ball_error",
        (boundary_gaussian_volume(&b1) - 0.5 * (-0.5f64).exp()).abs(),
        1e-10,
    );
    let bh = Body::ball(grid, HALF_VOLUME_RADIUS).expect("ball");
    let r = HALF_VOLUME_RADIUS;
    let closed = r * (-0.5 * r * r).exp() - 1.0 / (2.0 * PI).sqrt();
    match isoperimetric_deficit(&bh, 1.0) {
        Ok(rep) => spot.at_most("half_ball_deficit_error", (rep.deficit - closed).abs(), 1e-6),
        Err(e) => spot.error("half_ball_deficit_error", &e),
    }
    let mut rows = spot.rows;
    rows.par_extend((0..count).into_par_iter().flat_map(|i| {
        let mut rng = case_rng(seed, i as u64);
        let body = random_body(&mut rng, grid);
        let mut c = Checks::new("isoperimetric", format!("body {i}"));
        c.at_most(
            "boundary_volume_excess",
            boundary_gaussian_volume(&body) - gaussian_volume(&body),
            TOL,
        );
        let half = rescale_to_half(&body);
        for &p in p_list {
            match isoperimetric_deficit(&body, p) {
                Ok(rep) => {
                    c.at_least(&format!("deficit_p={p}"), rep.deficit, -TOL);
                    c.at_least("perimeter_deficit", rep.perimeter_deficit, -TOL);
                }
                Err(e) => c.error(&format!("deficit_p={p}"), &e),
            }
            match &half {
                Ok(k) => c.at_least(
                    &format!("half_volume_margin_p={p}"),
                    lp_total(k, p) - half_volume_bound(p),
                    -TOL,
                ),
                Err(e) => c.error(&format!("half_volume_margin_p={p}"), e),
            }
        }
        c.rows
    }));
    SuiteResult::new("isoperimetric", count + 2, TOL, rows)
}

fn two_bump(grid: Grid) -> MeasureDensity {
    MeasureDensity::even_from_fn(grid, |t| (1.0 + 0.5 * (2.0 * t).cos()) / (2.0 * PI))
        .expect("positive density")
}

fn max_antipodal_gap(body: &Body) -> f64 {
    let h = body.support().values();
    let g = body.grid();
    (0..h.len())
        .map(|i| (h[i] - h[g.antipode(i)]).abs())
        .fold(0.0, f64::max)
}

/// End-to-end checks of both solvers against closed forms, certificates and
/// self-consistency. The seed drives the random starts of the uniqueness
/// probe.
pub fn run_solver_cross_suite(seed: u64) -> SuiteResult {
    let jobs: Vec<Box<dyn Fn() -> Vec<Row> + Send + Sync>> = vec![
        Box::new(uniform_variational),
        Box::new(two_bump_variational),
        Box::new(continuation_checks),
        Box::new(move || uniqueness_checks(seed)),
    ];
    let rows: Vec<Row> = jobs.par_iter().flat_map(|job| job()).collect();
    let cases = rows
        .iter()
        .map(|r| r.case.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    SuiteResult::new("solver", cases, 1e-3, rows)
}

fn uniform_variational() -> Vec<Row> {
    let grid = Grid::new(128).expect("valid grid");
    let mu = MeasureDensity::uniform(grid, 1.0).expect("uniform");
    let mut rows = Vec::new();
    for (p, lambda) in [(-1.0, 1.22525), (0.0, std::f64::consts::LOG2_E)] {
        let mut c = Checks::new("solver", format!("uniform p={p}"));
        match variational_solve(&mu, p, &VariationalOptions::default()) {
            Ok(rep) => {
                let h = rep.body.support();
                let radius = h.values().iter().sum::<f64>() / h.len() as f64;
                c.at_most("radius_error", (radius - HALF_VOLUME_RADIUS).abs(), 1e-3);
                c.at_most("lambda_error", (rep.lambda - lambda).abs(), 1e-3);
                c.at_most("gamma_error", (rep.gamma - 0.5).abs(), 1e-10);
                c.at_most("kkt_residual", rep.kkt_residual, 1e-3);
            }
            Err(e) => c.error("variational_solve", &e),
        }
        rows.extend(c.rows);
    }
    rows
}

fn two_bump_variational() -> Vec<Row> {
    let mut rows = Vec::new();
    for p in [-1.0, 0.0] {
        let mut c = Checks::new("solver", format!("two-bump p={p}"));
        let coarse = variational_solve(&two_bump(Grid::new(128).unwrap()), p, &Default::default());
        let fine = variational_solve(&two_bump(Grid::new(512).unwrap()), p, &Default::default());
        match (coarse, fine) {
            (Ok(a), Ok(b)) => {
                for rep in [&a, &b] {
                    c.at_most("kkt_residual", rep.kkt_residual, 1e-3);
                    c.at_most("gamma_error", (rep.gamma - 0.5).abs(), 1e-10);
                    c.at_most("antipodal_gap", max_antipodal_gap(&rep.body), 1e-12);
                }
                // compare on the coarse nodes, which are every fourth fine node
                let sub: Vec<f64> = b.body.support().values().iter().step_by(4).copied().collect();
                let d = ScalarField::new(a.body.grid(), sub)
                    .and_then(Body::new)
                    .and_then(|s| hausdorff_distance(&s, &a.body));
                match d {
                    Ok(d) => c.at_most("grid_refinement_distance", d, 1e-4),
                    Err(e) => c.error("grid_refinement_distance", &e),
                }
            }
            (Err(e), _) | (_, Err(e)) => c.error("variational_solve", &e),
        }
        rows.extend(c.rows);
    }
    rows
}

fn continuation_checks() -> Vec<Row> {
    let grid = Grid::new(256).expect("valid grid");
    let c0 = (-0.5f64).exp() / (2.0 * PI);
    let mut c = Checks::new("solver", "continuation p=3");
    let f = MeasureDensity::from_fn(grid, |t| c0 * (1.0 + 0.2 * (2.0 * t).cos())).unwrap();
    match continuation_solve(&f, &HomotopyConfig::new(3.0)) {
        Ok(rep) => {
            c.at_most("residual_linf", rep.residual_linf, 1e-9);
            c.at_most("homotopy_steps", rep.homotopy_steps_used as f64, 10.0);
            if let Some((lo, hi)) = apriori_bounds(&f, 3.0) {
                c.at_least("support_min_over_lower_bound", rep.body.support().min() - lo, -1e-9);
                c.at_least("upper_bound_over_support_max", hi - rep.body.support().max(), -1e-9);
            }
        }
        Err(e) => c.error("continuation_solve", &e),
    }
    let mut k = Checks::new("solver", "constant density p=3");
    let flat = MeasureDensity::uniform(grid, 2.0 * PI * c0).unwrap();
    match (continuation_solve(&flat, &HomotopyConfig::new(3.0)), constant_solution(c0, 3.0)) {
        (Ok(rep), Ok(s0)) => {
            let dev = rep
                .body
                .support()
                .values()
                .iter()
                .map(|h| (h - s0).abs())
                .fold(0.0, f64::max);
            k.at_most("deviation_from_constant", dev, 0.0);
            k.at_most("homotopy_steps", rep.homotopy_steps_used as f64, 1.0);
        }
        (Err(e), _) | (_, Err(e)) => k.error("continuation_solve", &e),
    }
    c.rows.extend(k.rows);
    c.rows
}

fn uniqueness_checks(seed: u64) -> Vec<Row> {
    let grid = Grid::new(256).expect("valid grid");
    let f = MeasureDensity::from_fn(grid, |t| (1.0 + 0.5 * (2.0 * t).cos()) / (2.0 * PI)).unwrap();
    let mut rng = case_rng(seed, u64::MAX);
    let inits: Vec<Body> = (0..5).map(|_| random_body(&mut rng, grid)).collect();
    let mut c = Checks::new("solver", "uniqueness p=3");
    match uniqueness_probe(&f, 3.0, &inits, 1e-10, 100) {
        Ok(rep) => {
            c.at_most("max_pairwise_distance", rep.max_distance, 1e-6);
            c.at_most("failed_starts", rep.failures.len() as f64, 0.0);
        }
        Err(e) => c.error("uniqueness_probe", &e),
    }
    c.rows
}

/// Default sizes used by `verify --suite all`.
pub const DEFAULT_DUALITY_COUNT: usize = 100;
pub const DEFAULT_VARIATION_COUNT: usize = 10;
pub const DEFAULT_ISOPERIMETRIC_COUNT: usize = 200;
pub const DEFAULT_T_LIST: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const DEFAULT_P_LIST: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Duality,
    Variation,
    Isoperimetric,
    Solver,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Duality,
        Suite::Variation,
        Suite::Isoperimetric,
        Suite::Solver,
    ];

    pub fn parse(name: &str) -> Option<Vec<Suite>> {
        Some(match name {
            "duality" => vec![Suite::Duality],
            "variation" => vec![Suite::Variation],
            "isoperimetric" => vec![Suite::Isoperimetric],
            "solver" => vec![Suite::Solver],
            "all" => Suite::ALL.to_vec(),
            _ => return None,
        })
    }

    /// Runs the suite; `count` overrides the default number of random bodies.
    pub fn run(self, seed: u64, count: Option<usize>) -> SuiteResult {
        match self {
            Suite::Duality => run_duality_suite(seed, count.unwrap_or(DEFAULT_DUALITY_COUNT)),
            Suite::Variation => run_variation_suite(
                seed,
                count.unwrap_or(DEFAULT_VARIATION_COUNT),
                &DEFAULT_T_LIST,
            ),
            Suite::Isoperimetric => run_isoperimetric_suite(
                seed,
                count.unwrap_or(DEFAULT_ISOPERIMETRIC_COUNT),
                &DEFAULT_P_LIST,
            ),
            Suite::Solver => run_solver_cross_suite(seed),
        }
    }
}
