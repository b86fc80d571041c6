use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} invalid: need an even count of at least 16 nodes")]
    InvalidGrid(usize),
    #[error("field length {len} does not match grid size {grid}")]
    LengthMismatch { len: usize, grid: usize },
    #[error("field has a non-finite value at node {0}")]
    NonFinite(usize),
    #[error("grids differ: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("support value {value} at node {node} is not positive")]
    NonPositiveSupport { node: usize, value: f64 },
    #[error("support field not convex: curvature radius {value} at node {node}")]
    NotConvex { node: usize, value: f64 },
    #[error("radial Gauss map not monotone near node {0}")]
    DegenerateGauss(usize),
    #[error("convex hull is degenerate ({0} vertices or origin not interior)")]
    HullDegenerate(usize),
    #[error("scale factor {0} must be positive")]
    InvalidScale(f64),
    #[error("argument {0} outside the function domain")]
    DomainError(f64),
    #[error("exponent p = {0} unsupported here")]
    UnsupportedExponent(f64),
    #[error("measure density invalid: {0}")]
    InvalidMeasure(String),
    #[error("measure is not even")]
    MeasureNotEven,
    #[error("measure is concentrated: smallest second-moment eigenvalue {0}")]
    MeasureConcentrated(f64),
    #[error("no progress after {iterations} iterations: KKT residual {kkt}")]
    NoProgress { iterations: usize, kkt: f64 },
    #[error("iterate has non-positive value {value} at node {node}")]
    NonPositiveIterate { node: usize, value: f64 },
    #[error("no root of the constant equation for c0 = {0}")]
    NoRoot(f64),
    #[error("mass {mass} violates the bound {bound}")]
    MassBoundViolated { mass: f64, bound: f64 },
    #[error("homotopy stalled at t = {t} (step {step})")]
    HomotopyStalled { t: f64, step: f64 },
    #[error("linearized system is singular")]
    NewtonSingular,
    #[error("iterate lost convexity at t = {0}")]
    NonConvexIterate(f64),
    #[error("Newton diverged: residual {0}")]
    NewtonDiverged(f64),
    #[error("file format: {0}")]
    Format(String),
}

impl Error {
    /// Variant name, as printed by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::GridMismatch(..) => "GridMismatch",
            Error::NonPositiveSupport { .. } => "NonPositiveSupport",
            Error::NotConvex { .. } => "NotConvex",
            Error::DegenerateGauss(_) => "DegenerateGauss",
            Error::HullDegenerate(_) => "HullDegenerate",
            Error::InvalidScale(_) => "InvalidScale",
            Error::DomainError(_) => "DomainError",
            Error::UnsupportedExponent(_) => "UnsupportedExponent",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::MeasureNotEven => "MeasureNotEven",
            Error::MeasureConcentrated(_) => "MeasureConcentrated",
            Error::NoProgress { .. } => "NoProgress",
            Error::NonPositiveIterate { .. } => "NonPositiveIterate",
            Error::NoRoot(_) => "NoRoot",
            Error::MassBoundViolated { .. } => "MassBoundViolated",
            Error::HomotopyStalled { .. } => "HomotopyStalled",
            Error::NewtonSingular => "NewtonSingular",
            Error::NonConvexIterate(_) => "NonConvexIterate",
            Error::NewtonDiverged(_) => "NewtonDiverged",
            Error::Format(_) => "Format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
