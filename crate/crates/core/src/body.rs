//! Planar convex bodies described by their support function.
//!
//! A [`Body`] stores `h` on a [`Grid`] together with its spectral slope `h'`
//! and curvature radius `h'' + h`. Convexity is validated with the discrete
//! facet-length test `h_{i-1} + h_{i+1} - 2 cos(Δθ) h_i >= 0`, which holds
//! exactly for the sampled support function of any convex set and tends to
//! `h'' + h` as the grid is refined.
//!
//! Set operations (Wulff shape, convex hull, polar) go through planar
//! polygons: the polar of the Wulff shape `[f]` is the convex hull of the
//! points `u_i / f_i`, so all three reduce to one hull routine plus
//! [`hull::polar_vertices`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{self, Grid, Interpolant, ScalarField};
use crate::hull::{self, Point};

/// Relative convexity slack used by [`Body::new`].
pub const DEFAULT_CONVEX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    support: ScalarField,
    slope: ScalarField,
    curvature: ScalarField,
}

/// A boundary point reached through the inverse Gauss map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub position: [f64; 2],
    /// Outer normal angle θ.
    pub normal_angle: f64,
    /// Polar angle u of the position.
    pub direction_angle: f64,
    /// |position|
    pub radius: f64,
}

impl BoundaryPoint {
    fn from_frame(theta: f64, h: f64, dh: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let position = [h * c - dh * s, h * s + dh * c];
        Self {
            position,
            normal_angle: theta,
            direction_angle: position[1].atan2(position[0]),
            radius: h.hypot(dh),
        }
    }
}

/// Discrete curvature radius at every node (see module docs).
pub fn discrete_curvature(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    let dt = 2.0 * PI / n as f64;
    let c = dt.cos();
    let denom = 2.0 * (1.0 - c);
    (0..n)
        .map(|i| (h[(i + n - 1) % n] + h[(i + 1) % n] - 2.0 * c * h[i]) / denom)
        .collect()
}

impl Body {
    /// Validates a support field with the default slack `1e-9 · max h`.
    pub fn new(support: ScalarField) -> Result<Self> {
        let slack = DEFAULT_CONVEX_SLACK * support.max().abs();
        Self::with_slack(support, slack)
    }

    pub fn with_slack(support: ScalarField, eps_convex: f64) -> Result<Self> {
        for (node, &value) in support.values().iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::NonPositiveSupport { node, value });
            }
        }
        let radii = discrete_curvature(support.values());
        let (node, value) = radii
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is never empty");
        if value < -eps_convex {
            return Err(Error::NotConvex { node, value });
        }
        Ok(Self::assemble(support))
    }

    /// Skips validation; callers guarantee positivity.
    pub(crate) fn assemble(support: ScalarField) -> Self {
        let slope = support.differentiate(1);
        let d2 = support.differentiate(2);
        let curvature = ScalarField::from_vec_unchecked(
            support.grid(),
            d2.values()
                .iter()
                .zip(support.values())
                .map(|(a, b)| a + b)
                .collect(),
        );
        Self {
            support,
            slope,
            curvature,
        }
    }

    pub fn ball(grid: Grid, radius: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid, radius))
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.support.grid()
    }

    #[inline]
    pub fn support(&self) -> &ScalarField {
        &self.support
    }

    /// Spectral first derivative `h'`.
    #[inline]
    pub fn slope(&self) -> &ScalarField {
        &self.slope
    }

    /// Spectral `h'' + h`, the planar `det(∇²h + hI)`.
    #[inline]
    pub fn curvature_radius(&self) -> &ScalarField {
        &self.curvature
    }

    /// `|x|² = h² + h'²` at each node's boundary point.
    pub fn radius_squared(&self) -> Vec<f64> {
        self.support
            .values()
            .iter()
            .zip(self.slope.values())
            .map(|(h, d)| h * h + d * d)
            .collect()
    }

    pub fn boundary_points(&self) -> Vec<BoundaryPoint> {
        self.grid()
            .nodes()
            .zip(self.support.values().iter().zip(self.slope.values()))
            .map(|(t, (&h, &d))| BoundaryPoint::from_frame(t, h, d))
            .collect()
    }

    pub fn boundary_point(&self, theta: f64) -> BoundaryPoint {
        let h = Interpolant::new(&self.support).eval(theta);
        let d = Interpolant::new(&self.slope).eval(theta);
        BoundaryPoint::from_frame(theta, h, d)
    }

    pub fn radial(&self) -> Result<ScalarField> {
        radial_from_support(self)
    }

    pub fn is_even(&self) -> bool {
        let g = self.grid();
        let h = self.support.values();
        (0..g.size()).all(|i| h[i] == h[g.antipode(i)])
    }
}

pub fn body_from_support(values: ScalarField, eps_convex: f64) -> Result<Body> {
    Body::with_slack(values, eps_convex)
}

pub fn boundary_point(body: &Body, theta: f64) -> BoundaryPoint {
    body.boundary_point(theta)
}

/// Radial function on the grid: boundary points at the nodes give samples
/// `(u_i, ρ_i)` at irregular angles, which are re-interpolated at the nodes
/// with a periodic monotone cubic.
pub fn radial_from_support(body: &Body) -> Result<ScalarField> {
    let grid = body.grid();
    let n = grid.size();
    let h = body.support.values();
    let d = body.slope.values();
    let mut u: Vec<f64> = (0..n).map(|i| grid.node(i) + d[i].atan2(h[i])).collect();
    let rho: Vec<f64> = (0..n).map(|i| h[i].hypot(d[i])).collect();
    let slack = 1e-12;
    for i in 0..n {
        let next = if i + 1 < n { u[i + 1] } else { u[0] + 2.0 * PI };
        if next - u[i] <= slack {
            return Err(Error::DegenerateGauss(i));
        }
    }
    // Shift so that the knots start in [0, 2π).
    let shift = (u[0] / (2.0 * PI)).floor() * 2.0 * PI;
    u.iter_mut().for_each(|x| *x -= shift);
    let spline = PeriodicPchip::new(u, rho);
    Ok(ScalarField::from_vec_unchecked(
        grid,
        grid.nodes().map(|t| spline.eval(t)).collect(),
    ))
}

/// Periodic piecewise-cubic Hermite interpolant with Fritsch–Butland slopes.
struct PeriodicPchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl PeriodicPchip {
    /// `x` strictly increasing with `x[n-1] < x[0] + 2π`.
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let gap = |i: usize| {
            if i + 1 < n {
                x[i + 1] - x[i]
            } else {
                x[0] + 2.0 * PI - x[i]
            }
        };
        let secant = |i: usize| (y[(i + 1) % n] - y[i]) / gap(i);
        let slopes = (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                let (h0, h1) = (gap(prev), gap(i));
                let (s0, s1) = (secant(prev), secant(i));
                if s0 * s1 <= 0.0 {
                    0.0
                } else {
                    let w0 = 2.0 * h1 + h0;
                    let w1 = h1 + 2.0 * h0;
                    (w0 + w1) / (w0 / s0 + w1 / s1)
                }
            })
            .collect();
        Self { x, y, slopes }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let period = 2.0 * PI;
        let mut t = (t - self.x[0]).rem_euclid(period) + self.x[0];
        // Interval i: [x_i, x_{i+1}) with wrap-around for the last one.
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let (x1, y1) = if i + 1 < n {
            (self.x[i + 1], self.y[i + 1])
        } else {
            (self.x[0] + period, self.y[0])
        };
        if t < self.x[i] {
            t = self.x[i];
        }
        let h = x1 - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.y[i]
            + h10 * h * self.slopes[i]
            + h01 * y1
            + h11 * h * self.slopes[(i + 1) % n]
    }
}

fn polygon_body(vertices: &[Point], grid: Grid) -> Result<Body> {
    Body::new(ScalarField::new(grid, hull::polygon_support(vertices, grid))?)
}

fn hull_checked(points: &[Point]) -> Result<Vec<Point>> {
    let h = hull::convex_hull(points);
    if h.len() < 3 {
        return Err(Error::HullDegenerate(h.len()));
    }
    Ok(h)
}

fn check_positive(field: &ScalarField) -> Result<()> {
    for (node, &value) in field.values().iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveSupport { node, value });
        }
    }
    Ok(())
}

/// Largest convex body whose support function is at most `f` at every node,
/// built as the polar of the hull of `{u_i / f_i}`.
pub fn wulff_shape(f: &ScalarField) -> Result<Body> {
    check_positive(f)?;
    let grid = f.grid();
    let points: Vec<Point> = grid
        .nodes()
        .zip(f.values())
        .map(|(t, &v)| [t.cos() / v, t.sin() / v])
        .collect();
    let dual = hull_checked(&points)?;
    let primal = hull::polar_vertices(&dual)?;
    polygon_body(&primal, grid)
}

/// Convex hull of the radial graph `{r_i u_i}`.
pub fn convex_hull_body(r: &ScalarField) -> Result<Body> {
    check_positive(r)?;
    let grid = r.grid();
    let points: Vec<Point> = grid
        .nodes()
        .zip(r.values())
        .map(|(t, &v)| [v * t.cos(), v * t.sin()])
        .collect();
    let h = hull_checked(&points)?;
    // Origin must be interior for the result to be a body in K_o.
    hull::polar_vertices(&h)?;
    polygon_body(&h, grid)
}

/// Polar body via `ρ_{K*} = 1 / h_K`.
pub fn polar_body(body: &Body) -> Result<Body> {
    convex_hull_body(&body.support.map(|h| 1.0 / h))
}

/// Sup-norm distance between support fields.
pub fn hausdorff_distance(a: &Body, b: &Body) -> Result<f64> {
    a.grid().check_same(&b.grid())?;
    Ok(a.support
        .values()
        .iter()
        .zip(b.support.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

pub fn scale_body(body: &Body, c: f64) -> Result<Body> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidScale(c));
    }
    let scale = |f: &ScalarField| f.map(|v| v * c);
    Ok(Body {
        support: scale(&body.support),
        slope: scale(&body.slope),
        curvature: scale(&body.curvature),
    })
}

/// Exact antipodal average of the samples.
pub(crate) fn even_part(field: &ScalarField) -> ScalarField {
    let g = field.grid();
    let v = field.values();
    ScalarField::from_vec_unchecked(
        g,
        (0..g.size()).map(|i| 0.5 * (v[i] + v[g.antipode(i)])).collect(),
    )
}

/// Origin-symmetric part: antipodal averaging, Wulff re-convexification, and
/// a final exact averaging so that `h_i = h_{i+N/2}` holds bit-for-bit.
pub fn symmetrize(body: &Body) -> Result<Body> {
    let avg = even_part(&body.support);
    let convex = wulff_shape(&avg)?;
    Ok(Body::assemble(even_part(convex.support())))
}

/// Extremes of `h` and `ρ` located on a refined set of normal angles, using
/// the trigonometric interpolants of `h` and `h'`.
#[derive(Debug, Clone, Copy)]
pub struct Extremes {
    pub support_min: f64,
    pub support_max: f64,
    pub radial_min: f64,
    pub radial_max: f64,
}

pub fn refined_extremes(body: &Body, refine: usize) -> Extremes {
    let grid = body.grid();
    let m = grid.size() * refine.max(1);
    let angles: Vec<f64> = (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect();
    let h = grid::resample(&body.support, &angles);
    let d = grid::resample(&body.slope, &angles);
    let rho: Vec<f64> = h.iter().zip(&d).map(|(a, b)| a.hypot(*b)).collect();
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    };
    let (support_min, support_max) = fold(&h);
    let (radial_min, radial_max) = fold(&rho);
    Extremes {
        support_min,
        support_max,
        radial_min,
        radial_max,
    }
}
