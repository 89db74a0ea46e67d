//! Python bindings for `perctri-core`.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use perctri_core::arms::{self, parse_pattern};
use perctri_core::boxgraph::{choose_c as core_choose_c, ChainGraph, VertexTuple};
use perctri_core::estimator;
use perctri_core::io::{read_config, write_config};
use perctri_core::svg::{render_svg, Overlays};
use perctri_core::{Error, FeatureEngine, Side, Vertex};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(m) | Error::Format(m) => PyValueError::new_err(m),
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_json(value: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

type Pair = (i32, i32);

fn pairs<'a>(it: impl IntoIterator<Item = &'a Vertex>) -> Vec<Pair> {
    it.into_iter().map(|v| (v.x, v.y)).collect()
}

fn vertex((x, y): Pair) -> Vertex {
    Vertex::new(x, y)
}

/// A site configuration on the box `B(n)`.
#[pyclass(name = "Configuration", module = "perctri", eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyConfiguration {
    inner: perctri_core::Configuration,
}

#[pymethods]
impl PyConfiguration {
    #[staticmethod]
    #[pyo3(signature = (n, seed, trial=0))]
    fn sample(n: u32, seed: u64, trial: u64) -> PyResult<Self> {
        Ok(Self { inner: perctri_core::sample_config(n, seed, trial).map_err(py_err)? })
    }

    #[staticmethod]
    fn all_open(n: u32) -> Self {
        Self { inner: perctri_core::Configuration::all_open(n) }
    }

    #[staticmethod]
    fn all_closed(n: u32) -> Self {
        Self { inner: perctri_core::Configuration::all_closed(n) }
    }

    /// Site states in row-major order from `(-n, -n)`.
    #[staticmethod]
    fn from_states(n: u32, states: Vec<bool>) -> PyResult<Self> {
        let mut inner = perctri_core::Configuration::all_closed(n);
        if states.len() != inner.len() {
            return Err(PyValueError::new_err(format!("expected {} states, got {}", inner.len(), states.len())));
        }
        for (i, s) in states.into_iter().enumerate() {
            inner.set_idx(i, s);
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: read_config(data).map_err(py_err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &write_config(&self.inner))
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn states(&self) -> Vec<bool> {
        (0..self.inner.len()).map(|i| self.inner.is_open_idx(i)).collect()
    }

    fn is_open(&self, x: i32, y: i32) -> PyResult<bool> {
        let v = Vertex::new(x, y);
        if !self.inner.contains(v) {
            return Err(PyValueError::new_err(format!("({x}, {y}) is outside B({})", self.inner.n())));
        }
        Ok(self.inner.is_open(v))
    }

    fn set(&mut self, x: i32, y: i32, open: bool) -> PyResult<()> {
        let v = Vertex::new(x, y);
        if !self.inner.contains(v) {
            return Err(PyValueError::new_err(format!("({x}, {y}) is outside B({})", self.inner.n())));
        }
        self.inner.set(v, open);
        Ok(())
    }

    fn count_open(&self) -> usize {
        self.inner.count_open()
    }

    fn features(&self) -> PyResult<PyFeatureSets> {
        let s = FeatureEngine::new(self.inner.n()).sets(&self.inner).map_err(py_err)?;
        Ok(PyFeatureSets { gamma: pairs(&s.gamma), l: pairs(&s.l), f: pairs(&s.f), h_top: pairs(&s.h_top), q: pairs(&s.q) })
    }

    /// `(|L|, |F|, |Q|)`.
    fn feature_counts(&self) -> PyResult<(usize, usize, usize)> {
        perctri_core::feature_counts(&self.inner).map_err(py_err)
    }

    fn has_open_crossing(&self) -> bool {
        perctri_core::features::has_open_crossing(&self.inner)
    }

    fn pivotal_flip_oracle(&self) -> Vec<Pair> {
        pairs(&perctri_core::pivotal_flip_oracle(&self.inner))
    }

    #[pyo3(signature = (overlays=""))]
    fn render_svg(&self, overlays: &str) -> PyResult<String> {
        render_svg(&self.inner, Overlays::parse(overlays).map_err(py_err)?).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Configuration(n={}, open={})", self.inner.n(), self.inner.count_open())
    }
}

/// Lowest crossing, pioneering, highest-crossing and pivotal sites.
#[pyclass(name = "FeatureSets", module = "perctri", get_all)]
struct PyFeatureSets {
    gamma: Vec<Pair>,
    l: Vec<Pair>,
    f: Vec<Pair>,
    h_top: Vec<Pair>,
    q: Vec<Pair>,
}

/// An arm event description; see the `annulus`, `restricted`, `half_plane` and `horseshoe` constructors.
#[pyclass(name = "ArmSpec", module = "perctri", skip_from_py_object)]
#[derive(Clone)]
struct PyArmSpec {
    inner: arms::ArmSpec,
}

#[pymethods]
impl PyArmSpec {
    #[staticmethod]
    #[pyo3(signature = (kappa, inner, outer, center=(0, 0), pattern=None))]
    fn annulus(kappa: u8, inner: u32, outer: u32, center: Pair, pattern: Option<&str>) -> PyResult<Self> {
        let mut spec = arms::ArmSpec::annulus(kappa, vertex(center), inner, outer);
        if let Some(p) = pattern {
            spec.pattern = parse_pattern(p).map_err(py_err)?;
        }
        Ok(Self { inner: spec })
    }

    #[staticmethod]
    #[pyo3(signature = (kappa, outer, center=(0, 0)))]
    fn restricted(kappa: u8, outer: u32, center: Pair) -> Self {
        Self { inner: arms::ArmSpec::restricted(kappa, vertex(center), outer) }
    }

    #[staticmethod]
    fn half_plane(center: Pair, inner: u32, outer: u32) -> Self {
        Self { inner: arms::ArmSpec::half_plane(vertex(center), inner, outer) }
    }

    /// `side` is one of `left`, `right`, `bottom`, `top`.
    #[staticmethod]
    fn horseshoe(center: Pair, outer: u32, rho: u32, nu: u32, side: &str) -> PyResult<Self> {
        let side = match side {
            "left" => Side::Left,
            "right" => Side::Right,
            "bottom" => Side::Bottom,
            "top" => Side::Top,
            other => return Err(PyValueError::new_err(format!("unknown side {other:?}"))),
        };
        Ok(Self { inner: arms::ArmSpec::horseshoe(vertex(center), outer, rho, nu, side) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn occurs(&self, config: &PyConfiguration) -> PyResult<bool> {
        arms::arm_event(&config.inner, &self.inner).map_err(py_err)
    }
}

/// Monte Carlo moments of |L|, |F|, |Q| as CSV text.
#[pyfunction]
fn run_moments(py: Python<'_>, n: Vec<u32>, tau: Vec<u32>, trials: u64, seed: u64) -> PyResult<String> {
    py.detach(|| estimator::run_moments(&n, &tau, trials, seed)).map(|t| t.to_csv()).map_err(py_err)
}

/// Annulus arm probabilities along a ladder as CSV text.
#[pyfunction]
#[pyo3(signature = (kappa, ladder, trials, seed, inner=0, pattern=None))]
fn run_annulus_arms(
    py: Python<'_>,
    kappa: u8,
    ladder: Vec<u32>,
    trials: u64,
    seed: u64,
    inner: u32,
    pattern: Option<&str>,
) -> PyResult<String> {
    let pattern = match pattern {
        Some(p) => parse_pattern(p).map_err(py_err)?,
        None => arms::default_pattern(kappa),
    };
    let template = estimator::ArmTemplate::Annulus { kappa, pattern, inner };
    py.detach(|| estimator::run_arms(&template, &ladder, trials, seed)).map(|t| t.to_csv()).map_err(py_err)
}

/// Exact moments at `n` in {1, 2} as JSON text.
#[pyfunction]
#[pyo3(signature = (n, tau=1))]
fn exact_enumeration(py: Python<'_>, n: u32, tau: u32) -> PyResult<String> {
    to_json(&py.detach(|| estimator::exact_enumeration(n, tau)).map_err(py_err)?)
}

/// `(slope, intercept, r2)` of a log-log fit over the CSV rows of one quantity.
#[pyfunction]
#[pyo3(signature = (csv, quantity, tau=None))]
fn fit_exponent(csv: &str, quantity: &str, tau: Option<u32>) -> PyResult<(f64, f64, f64)> {
    let table = estimator::EstimateTable::from_csv(csv).map_err(py_err)?;
    let rows: Vec<_> = table.select(quantity, tau).into_iter().cloned().collect();
    let fit = estimator::fit_exponent(&rows, estimator::Weighting::None).map_err(py_err)?;
    Ok((fit.slope, fit.intercept, fit.r2))
}

#[pyfunction]
fn choose_c(tau: u32) -> u32 {
    core_choose_c(tau)
}

/// Chain graph of a vertex tuple as JSON text.
#[pyfunction]
#[pyo3(signature = (n, vertices, c=None))]
fn chain_graph(n: u32, vertices: Vec<Pair>, c: Option<u32>) -> PyResult<String> {
    let tuple = VertexTuple { n, vertices: vertices.into_iter().map(vertex).collect() };
    let c = c.unwrap_or_else(|| core_choose_c(tuple.vertices.len() as u32));
    to_json(&ChainGraph::build(&tuple, c).map_err(py_err)?)
}

/// Runs the `perctri` command line with `args` (without the program name); returns the exit code.
#[pyfunction]
fn cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| perctri_core::cli::run(std::iter::once("perctri".to_string()).chain(args)))
}

#[pymodule]
fn perctri(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyFeatureSets>()?;
    m.add_class::<PyArmSpec>()?;
    m.add_function(wrap_pyfunction!(run_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_annulus_arms, m)?)?;
    m.add_function(wrap_pyfunction!(exact_enumeration, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(choose_c, m)?)?;
    m.add_function(wrap_pyfunction!(chain_graph, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}
