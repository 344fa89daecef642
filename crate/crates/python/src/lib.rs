//! Python bindings for `vi_extragrad`.
//!
//! Vectors cross the boundary as lists of floats; problem methods attach the
//! problem's quadrature weights. Iteration records and CSV rows come back as
//! dicts keyed like the CSV columns.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use vi_extragrad::error::Error;
use vi_extragrad::harness::{self, ExperimentConfig, ProblemKind, ResultRow};
use vi_extragrad::hilbert::HVec;
use vi_extragrad::problems::ProblemInstance;
use vi_extragrad::solvers::{self, Algorithm, IterationRecord, Schedules};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::SolverFailure { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

fn vector(coords: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<HVec> {
    match weights {
        Some(w) => HVec::new(coords, w),
        None => HVec::euclidean(coords),
    }
    .map_err(to_py)
}

fn config(
    problem: &str,
    seed: u64,
    m: usize,
    grid_points: usize,
) -> PyResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::benchmark(parse::<ProblemKind>(problem)?, seed);
    cfg.m = m;
    cfg.grid_points = grid_points;
    cfg.n_trials = 1;
    Ok(cfg)
}

/// A benchmark problem: operator, feasible set, reference solution.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: ProblemInstance,
}

impl PyProblem {
    fn point(&self, coords: Vec<f64>) -> PyResult<HVec> {
        self.inner.x_star.with_coords(coords).map_err(to_py)
    }
}

#[pymethods]
impl PyProblem {
    /// `kind` is one of "ex1", "ex2", "ex3".
    #[new]
    #[pyo3(signature = (kind, seed = 0, m = 5, grid_points = 101))]
    fn new(kind: &str, seed: u64, m: usize, grid_points: usize) -> PyResult<Self> {
        let cfg = config(kind, seed, m, grid_points)?;
        let inner = harness::build_problem(&cfg, 0).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz
    }

    #[getter]
    fn x_star(&self) -> Vec<f64> {
        self.inner.x_star.coords().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.x_star.weights().to_vec()
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = self.point(x)?;
        Ok(self.inner.apply(&x).map_err(to_py)?.into_coords())
    }

    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = self.point(x)?;
        Ok(self.inner.set.project(&x).map_err(to_py)?.into_coords())
    }

    #[pyo3(signature = (x, tol = 1e-12))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        let x = self.point(x)?;
        self.inner.set.contains(&x, tol).map_err(to_py)
    }

    /// Weighted distance to the reference solution.
    fn error(&self, x: Vec<f64>) -> PyResult<f64> {
        let x = self.point(x)?;
        x.distance(&self.inner.x_star).map_err(to_py)
    }

    /// Starting point used by the benchmark harness for this problem.
    #[pyo3(signature = (seed = 0))]
    fn initial_point(&self, seed: u64) -> PyResult<Vec<f64>> {
        let kind = parse::<ProblemKind>(self.inner.name.as_str())?;
        let mut cfg = ExperimentConfig::benchmark(kind, seed);
        cfg.n_trials = 1;
        let (x0, _) = harness::build_initial_points(&cfg, &self.inner, 0).map_err(to_py)?;
        Ok(x0.into_coords())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(name={:?}, dim={}, lipschitz={})",
            self.inner.name,
            self.inner.dim(),
            self.inner.lipschitz
        )
    }
}

fn record_dict<'py>(py: Python<'py>, r: &IterationRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iter", r.n)?;
    d.set_item("error", r.error)?;
    d.set_item("residual", r.residual)?;
    d.set_item("lambda", r.lambda)?;
    d.set_item("theta", r.theta)?;
    d.set_item("elapsed_ms", r.elapsed_ns as f64 * 1e-6)?;
    d.set_item("lambda_next", r.diagnostics.lambda_next)?;
    d.set_item("operator_evals", r.diagnostics.operator_evals)?;
    d.set_item("projections", r.diagnostics.projections)?;
    d.set_item("armijo_rejections", r.diagnostics.armijo_rejections)?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, r: &ResultRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("problem", &r.problem)?;
    d.set_item("algorithm", &r.algorithm)?;
    d.set_item("trial", r.trial)?;
    d.set_item("iter", r.iter)?;
    d.set_item("error", r.error)?;
    d.set_item("residual", r.residual)?;
    d.set_item("lambda", r.lambda)?;
    d.set_item("theta", r.theta)?;
    d.set_item("elapsed_ms", r.elapsed_ms)?;
    Ok(d)
}

fn row_from_dict(d: &Bound<'_, PyDict>) -> PyResult<ResultRow> {
    fn get<'py, T: FromPyObjectOwned<'py>>(d: &Bound<'py, PyDict>, key: &str) -> PyResult<T> {
        d.get_item(key)?
            .ok_or_else(|| PyValueError::new_err(format!("row is missing {key:?}")))?
            .extract()
            .map_err(Into::into)
    }
    Ok(ResultRow {
        problem: get(d, "problem")?,
        algorithm: get(d, "algorithm")?,
        trial: get(d, "trial")?,
        iter: get(d, "iter")?,
        error: get(d, "error")?,
        residual: get(d, "residual")?,
        lambda: get(d, "lambda")?,
        theta: get(d, "theta")?,
        elapsed_ms: get(d, "elapsed_ms")?,
    })
}

/// Run one solver. Returns a dict with `records`, `stop` and `final_point`.
#[pyfunction]
#[pyo3(signature = (problem, algorithm, x0, x1 = None, max_iter = 200, stop_tol = None))]
fn run<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    algorithm: &str,
    x0: Vec<f64>,
    x1: Option<Vec<f64>>,
    max_iter: usize,
    stop_tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let alg: Algorithm = parse(algorithm)?;
    let x1 = problem.point(x1.unwrap_or_else(|| x0.clone()))?;
    let x0 = problem.point(x0)?;
    let p = &problem.inner;
    let trace = py
        .detach(|| solvers::run(alg, p, &Schedules::for_algorithm(alg), x0, x1, max_iter, stop_tol))
        .map_err(to_py)?;
    let records = PyList::empty(py);
    for r in &trace.records {
        records.append(record_dict(py, r)?)?;
    }
    let out = PyDict::new(py);
    out.set_item("algorithm", alg.id())?;
    out.set_item("records", records)?;
    out.set_item("stop", trace.stop.as_str())?;
    out.set_item("final_point", trace.final_point.coords().to_vec())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (x_curr, x_prev, eps, theta_cap, weights = None))]
fn inertia_theta(
    x_curr: Vec<f64>,
    x_prev: Vec<f64>,
    eps: f64,
    theta_cap: f64,
    weights: Option<Vec<f64>>,
) -> PyResult<f64> {
    let a = vector(x_curr, weights.clone())?;
    let b = vector(x_prev, weights)?;
    solvers::inertia_theta(&a, &b, eps, theta_cap).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (lambda_n, mu, w, y, aw, ay, weights = None))]
#[allow(clippy::too_many_arguments)]
fn step_size_update(
    lambda_n: f64,
    mu: f64,
    w: Vec<f64>,
    y: Vec<f64>,
    aw: Vec<f64>,
    ay: Vec<f64>,
    weights: Option<Vec<f64>>,
) -> PyResult<f64> {
    let [w, y, aw, ay] = [w, y, aw, ay].map(|v| vector(v, weights.clone()));
    solvers::step_size_update(lambda_n, mu, &w?, &y?, &aw?, &ay?).map_err(to_py)
}

/// Benchmark rows for every algorithm and trial, ordered as in the CSV.
#[pyfunction]
#[pyo3(signature = (problem, algorithms = None, seed = 0, trials = 1, max_iter = None, m = 5, grid_points = 101, stop_tol = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    problem: &str,
    algorithms: Option<Vec<String>>,
    seed: u64,
    trials: usize,
    max_iter: Option<usize>,
    m: usize,
    grid_points: usize,
    stop_tol: Option<f64>,
) -> PyResult<Bound<'py, PyList>> {
    let mut cfg = config(problem, seed, m, grid_points)?;
    if let Some(names) = algorithms {
        cfg.algorithms = names.iter().map(|a| parse(a)).collect::<PyResult<_>>()?;
    }
    cfg.n_trials = trials;
    if let Some(k) = max_iter {
        cfg.max_iter = k;
    }
    cfg.stop_tol = stop_tol;
    let rows = py.detach(|| harness::run_experiment(&cfg)).map_err(to_py)?;
    let out = PyList::empty(py);
    for r in &rows {
        out.append(row_dict(py, r)?)?;
    }
    Ok(out)
}

/// Writes the three comparison CSVs. Returns `(paths, any_failed)`.
#[pyfunction]
#[pyo3(signature = (out_dir, seed = 42))]
fn repro(py: Python<'_>, out_dir: PathBuf, seed: u64) -> PyResult<(Vec<PathBuf>, bool)> {
    py.detach(|| harness::repro(&out_dir, seed)).map_err(to_py)
}

#[pyfunction]
fn read_csv<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyList>> {
    let rows = harness::read_csv(&path).map_err(to_py)?;
    let out = PyList::empty(py);
    for r in &rows {
        out.append(row_dict(py, r)?)?;
    }
    Ok(out)
}

#[pyfunction]
fn write_csv(rows: Vec<Bound<'_, PyDict>>, path: PathBuf) -> PyResult<()> {
    let rows = rows.iter().map(row_from_dict).collect::<PyResult<Vec<_>>>()?;
    harness::write_csv(&rows, &path).map_err(to_py)
}

/// Problem checks as `(name, passed, detail)` tuples.
#[pyfunction]
#[pyo3(signature = (problem, seed = 0, m = 5, grid_points = 101, samples = 1000))]
fn validate(
    problem: &str,
    seed: u64,
    m: usize,
    grid_points: usize,
    samples: usize,
) -> PyResult<Vec<(String, bool, String)>> {
    let cfg = config(problem, seed, m, grid_points)?;
    let lines = harness::validate_problem(&cfg, samples).map_err(to_py)?;
    Ok(lines
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect())
}

#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    Algorithm::ALL.iter().map(|a| a.id()).collect()
}

#[pymodule]
pub fn vi_extragrad_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(inertia_theta, m)?)?;
    m.add_function(wrap_pyfunction!(step_size_update, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(repro, m)?)?;
    m.add_function(wrap_pyfunction!(read_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_csv, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    Ok(())
}
