//! Python bindings. Matrices cross the boundary as lists of rows of `complex`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cpn_stack::algebra;
use cpn_stack::model::{build_tower, HoloSeed};
use cpn_stack::stack::{self, QuadConfig};
use cpn_stack::verify::{self, GridSpec, SuiteConfig};
use cpn_stack::{CMat, Error, EvalPoint, Poly};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NoConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn point(xi1: f64, xi2: f64) -> PyResult<EvalPoint> {
    EvalPoint::new(xi1, xi2).map_err(py_err)
}

/// Holomorphic seed: one list of ascending polynomial coefficients per component.
#[pyclass(name = "Seed", frozen, module = "cpn_stack_py")]
pub struct PySeed {
    inner: HoloSeed,
}

#[pymethods]
impl PySeed {
    #[new]
    #[pyo3(signature = (components, label = "seed"))]
    fn new(components: Vec<Vec<Complex64>>, label: &str) -> PyResult<Self> {
        let polys = components.into_iter().map(Poly::new).collect();
        Ok(Self {
            inner: HoloSeed::new(label, polys).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn veronese(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: HoloSeed::veronese(n).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn components(&self) -> Vec<Vec<Complex64>> {
        self.inner.components().iter().map(|p| p.coeffs.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Seed(label={:?}, n={})", self.inner.label, self.inner.n())
    }
}

#[pyfunction]
fn default_seed_catalog() -> Vec<PySeed> {
    verify::default_seed_catalog()
        .into_iter()
        .map(|inner| PySeed { inner })
        .collect()
}

/// Projectors `P_0 … P_{N−1}` at `ξ = xi1 + i xi2`.
#[pyfunction]
fn tower(seed: &PySeed, xi1: f64, xi2: f64) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
    let t = build_tower(&seed.inner, point(xi1, xi2)?, seed.inner.default_order()).map_err(py_err)?;
    Ok(t.values().iter().map(rows).collect())
}

/// `(X_k, ∂X_k, ∂̄X_k, c_k)` at a point.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn immersion(
    seed: &PySeed,
    k: usize,
    xi1: f64,
    xi2: f64,
) -> PyResult<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, f64)> {
    let s = stack::immersion_at(&seed.inner, k, point(xi1, xi2)?).map_err(py_err)?;
    Ok((rows(&s.x), rows(&s.dx), rows(&s.dbarx), s.c_k))
}

/// su(N) coordinates of `X_k` in the generalized Gell-Mann basis.
#[pyfunction]
fn sun_coordinates(seed: &PySeed, k: usize, xi1: f64, xi2: f64) -> PyResult<Vec<f64>> {
    let s = stack::immersion_at(&seed.inner, k, point(xi1, xi2)?).map_err(py_err)?;
    algebra::sun_coordinates(&s.x, 1e-8).map_err(py_err)
}

/// `(value, est_error)` of the action of level `k`.
#[pyfunction]
#[pyo3(signature = (seed, k, tol = 1e-7, max_refinements = 4))]
fn action(py: Python<'_>, seed: &PySeed, k: usize, tol: f64, max_refinements: usize) -> PyResult<(f64, f64)> {
    let cfg = QuadConfig {
        tol,
        max_refinements,
        ..QuadConfig::default()
    };
    let inner = &seed.inner;
    let r = py.detach(|| stack::action(inner, k, &cfg)).map_err(py_err)?;
    Ok((r.value, r.est_error))
}

/// Runs the identity suite and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (seed, nx = 21, ny = 21, extent = 3.0, random = None, prng_seed = 0, tol = None))]
#[allow(clippy::too_many_arguments)]
fn verify_suite(
    py: Python<'_>,
    seed: &PySeed,
    nx: usize,
    ny: usize,
    extent: f64,
    random: Option<usize>,
    prng_seed: u64,
    tol: Option<f64>,
) -> PyResult<String> {
    let grid = match random {
        Some(count) => GridSpec::Random {
            count,
            extent,
            prng_seed,
        },
        None => GridSpec::Cartesian { nx, ny, extent },
    };
    let mut cfg = SuiteConfig::default();
    if let Some(t) = tol {
        cfg.tolerances.identity = t;
    }
    let inner = &seed.inner;
    let report = py.detach(|| verify::run_suite(inner, &grid, &cfg)).map_err(py_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn cpn_stack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeed>()?;
    m.add_function(wrap_pyfunction!(default_seed_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(tower, m)?)?;
    m.add_function(wrap_pyfunction!(immersion, m)?)?;
    m.add_function(wrap_pyfunction!(sun_coordinates, m)?)?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(verify_suite, m)?)?;
    Ok(())
}
