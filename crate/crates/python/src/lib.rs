//! Python bindings: bodies, measures, both solvers and the property suites.
//!
//! Library errors surface as `pygaussmink.GaussMinkError` with the error
//! name as the message prefix, e.g. `"MeasureNotEven: measure is not even"`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gaussmink::body::{self, Body};
use gaussmink::continuation::{self, HomotopyConfig};
use gaussmink::gauss;
use gaussmink::io::{self, BodyFile, MeasureFile};
use gaussmink::variational::{self, VariationalOptions};
use gaussmink::verify::Suite;
use gaussmink::{Error, Grid, MeasureDensity, ScalarField};

create_exception!(pygaussmink, GaussMinkError, PyException);

fn to_py(e: Error) -> PyErr {
    GaussMinkError::new_err(format!("{}: {e}", e.name()))
}

fn field(values: Vec<f64>) -> PyResult<ScalarField> {
    let grid = Grid::new(values.len()).map_err(to_py)?;
    ScalarField::new(grid, values).map_err(to_py)
}

/// Convex body given by its support function on a uniform grid of angles
/// `2πi/N`.
#[pyclass(name = "Body", module = "pygaussmink", frozen)]
pub struct PyBody {
    inner: Body,
}

#[pymethods]
impl PyBody {
    #[new]
    fn new(support: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: Body::new(field(support)?).map_err(to_py)?,
        })
    }

    /// Disk of radius `r` centred at the origin on an `n`-node grid.
    #[staticmethod]
    fn ball(n: usize, r: f64) -> PyResult<Self> {
        let grid = Grid::new(n).map_err(to_py)?;
        Ok(Self {
            inner: Body::ball(grid, r).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: BodyFile = io::from_json(text).map_err(to_py)?;
        Ok(Self {
            inner: file.into_body().map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_json(&BodyFile::from_body(&self.inner)).map_err(to_py)
    }

    #[getter]
    fn grid(&self) -> usize {
        self.inner.grid().size()
    }

    #[getter]
    fn support(&self) -> Vec<f64> {
        self.inner.support().values().to_vec()
    }

    #[getter]
    fn slope(&self) -> Vec<f64> {
        self.inner.slope().values().to_vec()
    }

    #[getter]
    fn curvature_radius(&self) -> Vec<f64> {
        self.inner.curvature_radius().values().to_vec()
    }

    fn radial(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.radial().map_err(to_py)?.into_values())
    }

    fn is_even(&self) -> bool {
        self.inner.is_even()
    }

    fn gaussian_volume(&self) -> f64 {
        gauss::gaussian_volume(&self.inner)
    }

    fn lp_density(&self, p: f64) -> Vec<f64> {
        gauss::lp_density(&self.inner, p).density.into_values()
    }

    fn lp_total(&self, p: f64) -> f64 {
        gauss::lp_total(&self.inner, p)
    }

    /// The same total computed by integrating over the boundary curve.
    fn lp_total_oracle(&self, p: f64) -> f64 {
        gauss::lp_total_boundary_oracle(&self.inner, p)
    }

    fn isoperimetric_deficit<'py>(&self, py: Python<'py>, p: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = gauss::isoperimetric_deficit(&self.inner, p).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("gamma", r.gamma)?;
        d.set_item("total", r.total)?;
        d.set_item("bound", r.bound)?;
        d.set_item("deficit", r.deficit)?;
        d.set_item("perimeter_deficit", r.perimeter_deficit)?;
        Ok(d)
    }

    fn polar(&self) -> PyResult<Self> {
        Ok(Self {
            inner: body::polar_body(&self.inner).map_err(to_py)?,
        })
    }

    fn scale(&self, c: f64) -> PyResult<Self> {
        Ok(Self {
            inner: body::scale_body(&self.inner, c).map_err(to_py)?,
        })
    }

    fn hausdorff(&self, other: &PyBody) -> PyResult<f64> {
        body::hausdorff_distance(&self.inner, &other.inner).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.grid().size()
    }

    fn __repr__(&self) -> String {
        let h = self.inner.support();
        format!(
            "Body(grid={}, support in [{:.6}, {:.6}])",
            h.len(),
            h.min(),
            h.max()
        )
    }
}

/// Target measure with a nonnegative density on the grid.
#[pyclass(name = "Measure", module = "pygaussmink", frozen)]
pub struct PyMeasure {
    inner: MeasureDensity,
}

#[pymethods]
impl PyMeasure {
    #[new]
    #[pyo3(signature = (density, even = false))]
    fn new(density: Vec<f64>, even: bool) -> PyResult<Self> {
        Ok(Self {
            inner: MeasureDensity::new(field(density)?, even).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn uniform(n: usize, mass: f64) -> PyResult<Self> {
        let grid = Grid::new(n).map_err(to_py)?;
        Ok(Self {
            inner: MeasureDensity::uniform(grid, mass).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: MeasureFile = io::from_json(text).map_err(to_py)?;
        Ok(Self {
            inner: file.into_measure().map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_json(&MeasureFile::from_measure(&self.inner)).map_err(to_py)
    }

    #[getter]
    fn density(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn even(&self) -> bool {
        self.inner.is_even()
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn with_mass(&self, mass: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_mass(mass).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Measure(grid={}, mass={:.6}, even={})",
            self.inner.grid().size(),
            self.inner.mass(),
            self.inner.is_even()
        )
    }
}

/// Body whose support is the largest below `values` (the Wulff shape).
#[pyfunction]
fn wulff_shape(values: Vec<f64>) -> PyResult<PyBody> {
    Ok(PyBody {
        inner: body::wulff_shape(&field(values)?).map_err(to_py)?,
    })
}

/// Convex hull of the points `r_i (cos θ_i, sin θ_i)`.
#[pyfunction]
fn convex_hull(radii: Vec<f64>) -> PyResult<PyBody> {
    Ok(PyBody {
        inner: body::convex_hull_body(&field(radii)?).map_err(to_py)?,
    })
}

#[pyfunction]
fn constant_solution(c0: f64, p: f64) -> PyResult<f64> {
    continuation::constant_solution(c0, p).map_err(to_py)
}

/// Variational solver for `p <= 0` and an even measure.
#[pyfunction]
#[pyo3(signature = (measure, p, tol = 1e-3, max_iter = 5000))]
fn variational_solve<'py>(
    py: Python<'py>,
    measure: &PyMeasure,
    p: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mu = measure.inner.clone();
    let opts = VariationalOptions {
        tol_kkt: tol,
        max_iter,
        ..Default::default()
    };
    let r = py
        .detach(move || variational::variational_solve(&mu, p, &opts))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("body", PyBody { inner: r.body })?;
    d.set_item("lambda", r.lambda)?;
    d.set_item("kkt_residual", r.kkt_residual)?;
    d.set_item("gamma", r.gamma)?;
    d.set_item("iterations", r.iterations)?;
    Ok(d)
}

/// Newton continuation for `p >= 1`.
#[pyfunction]
#[pyo3(signature = (measure, p, tol = 1e-10, override_mass = false))]
fn continuation_solve<'py>(
    py: Python<'py>,
    measure: &PyMeasure,
    p: f64,
    tol: f64,
    override_mass: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let f = measure.inner.clone();
    let mut cfg = HomotopyConfig::new(p);
    cfg.newton_tol = tol;
    cfg.override_mass_bound = override_mass;
    let r = py
        .detach(move || continuation::continuation_solve(&f, &cfg))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("body", PyBody { inner: r.body })?;
    d.set_item("residual_linf", r.residual_linf)?;
    d.set_item("gamma", r.gamma)?;
    d.set_item("homotopy_steps", r.homotopy_steps_used)?;
    d.set_item("newton_iters", r.newton_iterations_total)?;
    d.set_item("warnings", r.warnings)?;
    Ok(d)
}

/// Runs one property suite (`duality`, `variation`, `isoperimetric`,
/// `solver`) and returns its summary.
#[pyfunction]
#[pyo3(signature = (name, seed = 42, count = None))]
fn run_suite<'py>(
    py: Python<'py>,
    name: &str,
    seed: u64,
    count: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let suite = match Suite::parse(name).as_deref() {
        Some([one]) => *one,
        _ => {
            return Err(pyo3::exceptions::PyValueError::new_err(format!(
                "unknown suite '{name}'"
            )))
        }
    };
    let r = py.detach(move || suite.run(seed, count));
    let d = PyDict::new(py);
    d.set_item("name", r.name)?;
    d.set_item("pass", r.pass)?;
    d.set_item("cases", r.cases)?;
    d.set_item("worst_violation", r.worst_violation)?;
    d.set_item("rows", r.rows.len())?;
    Ok(d)
}

#[pymodule]
fn pygaussmink(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GaussMinkError", m.py().get_type::<GaussMinkError>())?;
    m.add_class::<PyBody>()?;
    m.add_class::<PyMeasure>()?;
    m.add_function(wrap_pyfunction!(wulff_shape, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull, m)?)?;
    m.add_function(wrap_pyfunction!(constant_solution, m)?)?;
    m.add_function(wrap_pyfunction!(variational_solve, m)?)?;
    m.add_function(wrap_pyfunction!(continuation_solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
