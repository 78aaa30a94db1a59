//! Python bindings: configs, experiment runs, reports and the scalar
//! operations (metrics, selection, error bound).

use cpl_core::config::{ExperimentConfig, Strategy, TaskKind};
use cpl_core::engine::{error_bound as bound, select_top_k as top_k};
use cpl_core::eval::{self, RunReport};
use cpl_core::graph::generate_sbm as sbm;
use cpl_core::Error;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        2 => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// An experiment configuration.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ExperimentConfig::from_json(text).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ExperimentConfig::load(path).map_err(py_err)?,
        })
    }

    #[getter]
    fn task(&self) -> &'static str {
        match self.inner.task {
            TaskKind::Node => "node",
            TaskKind::Link => "link",
        }
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[setter]
    fn set_k(&mut self, k: usize) {
        self.inner.k = k;
    }

    #[getter]
    fn cap(&self) -> usize {
        self.inner.cap
    }

    #[setter]
    fn set_cap(&mut self, cap: usize) {
        self.inner.cap = cap;
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.seeds.clone()
    }

    #[setter]
    fn set_seeds(&mut self, seeds: Vec<u64>) -> PyResult<()> {
        if seeds.is_empty() {
            return Err(PyValueError::new_err("seed list is empty"));
        }
        self.inner.seeds = seeds;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(task={}, k={}, cap={}, seeds={:?})",
            self.task(),
            self.inner.k,
            self.inner.cap,
            self.inner.seeds
        )
    }
}

/// The report of one experiment invocation.
#[pyclass(name = "Report", skip_from_py_object)]
struct PyReport {
    inner: RunReport,
}

#[pymethods]
impl PyReport {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: RunReport::from_json(text).map_err(py_err)?,
        })
    }

    #[getter]
    fn schema_version(&self) -> u32 {
        self.inner.schema_version
    }

    #[getter]
    fn strategy(&self) -> String {
        self.inner.strategy.to_string()
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.summary.seeds.clone()
    }

    /// `(mean, std)` of a summary metric such as `test_accuracy` or `q`.
    fn metric(&self, name: &str) -> Option<(f64, Option<f64>)> {
        self.inner.summary.metric(name).map(|m| (m.mean, m.std))
    }

    fn metric_names(&self) -> Vec<String> {
        self.inner.summary.metrics.iter().map(|m| m.name.clone()).collect()
    }

    /// Per seed: `(seed, experimental_error, error_bound, bound_holds)`.
    fn bounds(&self) -> Vec<(u64, f64, Option<f64>, Option<bool>)> {
        self.inner
            .runs
            .iter()
            .map(|r| (r.seed, r.experimental_error, r.error_bound.map(|b| b.value), r.bound_holds))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn series_csv(&self) -> String {
        eval::series_csv(&self.inner)
    }
}

/// Runs every seed of `config` with `strategy` (defaults to the config's).
#[pyfunction]
#[pyo3(signature = (config, strategy=None))]
fn run(py: Python<'_>, config: &PyConfig, strategy: Option<&str>) -> PyResult<PyReport> {
    let strategy: Strategy = match strategy {
        Some(s) => s.parse().map_err(py_err)?,
        None => config.inner.strategy,
    };
    let cfg = config.inner.clone();
    let (report, _) = py
        .detach(|| eval::run_experiment(&cfg, strategy, &mut |_, _| {}))
        .map_err(py_err)?;
    Ok(PyReport { inner: report })
}

#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::auc(&scores, &labels).map_err(py_err)
}

#[pyfunction]
fn average_precision(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::average_precision(&scores, &labels).map_err(py_err)
}

/// `2(q + a)` and whether it exceeds 1.
#[pyfunction]
fn error_bound(q: f64, a: f64) -> PyResult<(f64, bool)> {
    let b = bound(q, a).map_err(py_err)?;
    Ok((b.value, b.vacuous))
}

/// Top-`k` positions (highest first, ties to the lower index) and the
/// lowest selected confidence.
#[pyfunction]
fn select_top_k(confidences: Vec<f64>, k: usize) -> PyResult<(Vec<usize>, Option<f64>)> {
    let s = top_k(&confidences, k).map_err(py_err)?;
    Ok((s.selected, s.c_min))
}

type EdgesAndLabels = (Vec<(usize, usize)>, Vec<usize>);

/// Undirected edge list and block labels of a stochastic block model.
#[pyfunction]
fn generate_sbm(block_sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64) -> PyResult<EdgesAndLabels> {
    let (g, labels) = sbm(&block_sizes, p_in, p_out, seed).map_err(py_err)?;
    let labels = labels.as_slice().iter().map(|l| l.unwrap_or(usize::MAX)).collect();
    Ok((g.edges(), labels))
}

#[pymodule]
fn pycpl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(select_top_k, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sbm, m)?)?;
    m.add("SCHEMA_VERSION", eval::SCHEMA_VERSION)?;
    Ok(())
}
