//! Python bindings. Reports come back as dicts; errors raise
//! `HesseflatError` whose argument is the JSON error payload.

use std::path::PathBuf;

use ::hesseflat::cli::{self, RunConfig};
use ::hesseflat::expr::{self, Bindings, Var};
use ::hesseflat::geometry::{self, ClosedFormField, HessianMetric, Rect};
use ::hesseflat::pipeline::{self, Profile};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(hesseflat, HesseflatError, PyValueError);

fn raise(e: impl Into<::hesseflat::Error>) -> PyErr {
    let e: ::hesseflat::Error = e.into();
    HesseflatError::new_err(e.payload().to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn field(potential: &str, x: (f64, f64), y: (f64, f64)) -> PyResult<ClosedFormField> {
    let e = expr::parse(potential).map_err(raise)?;
    Ok(ClosedFormField::new(&e, Rect::new(x, y)))
}

/// Canonical printed form of an expression.
#[pyfunction]
fn parse(source: &str) -> PyResult<String> {
    Ok(expr::parse(source).map_err(raise)?.to_string())
}

/// Symbolic derivative with respect to "x", "y" or "u".
#[pyfunction]
fn differentiate(source: &str, var: &str) -> PyResult<String> {
    let v = Var::from_name(var).ok_or_else(|| PyValueError::new_err(format!("unknown variable `{var}`")))?;
    let e = expr::parse(source).map_err(raise)?;
    Ok(expr::differentiate(&e, v).to_string())
}

#[pyfunction]
#[pyo3(signature = (source, x=0.0, y=0.0, u=0.0))]
fn evaluate(source: &str, x: f64, y: f64, u: f64) -> PyResult<f64> {
    let e = expr::parse(source).map_err(raise)?;
    e.eval(&Bindings { x, y, u }).map_err(|e| raise(geometry::GeometryError::Eval(e)))
}

/// Gaussian curvature of the Hessian metric of `potential` at `(x, y)`.
#[pyfunction]
fn curvature(potential: &str, x: f64, y: f64) -> PyResult<f64> {
    let f = field(potential, (x - 1.0, x + 1.0), (y - 1.0, y + 1.0))?;
    geometry::hessian_curvature(&f, (x, y)).map_err(raise)
}

/// Curvature at `(x, y)` from the Brioschi formula with difference quotients.
#[pyfunction]
fn brioschi(potential: &str, x: f64, y: f64) -> PyResult<f64> {
    let f = field(potential, (x - 1.0, x + 1.0), (y - 1.0, y + 1.0))?;
    geometry::brioschi_oracle(&HessianMetric(&f), (x, y)).map_err(raise)
}

/// Curvature, flatness and positivity summary over an `n × n` grid.
#[pyfunction]
#[pyo3(signature = (potential, xrange, yrange, n=101))]
fn check<'py>(
    py: Python<'py>,
    potential: &str,
    xrange: (f64, f64),
    yrange: (f64, f64),
    n: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let f = field(potential, xrange, yrange)?;
    let pts = Rect::new(xrange, yrange).grid(n, n).points();
    let rows = geometry::sweep(&f, &pts).map_err(raise)?;
    to_py(py, &geometry::summarize(&rows))
}

/// Admissible sub-interval of `urange` for the profile φ(u).
#[pyfunction]
#[pyo3(signature = (profile, urange=(-0.45, 0.45)))]
fn admissible_interval(profile: &str, urange: (f64, f64)) -> PyResult<(f64, f64)> {
    Ok(Profile::parse(profile, urange).map_err(raise)?.interval)
}

/// `(λ₁, λ₂)` at `u`.
#[pyfunction]
#[pyo3(signature = (profile, u, urange=(-0.45, 0.45)))]
fn characteristic_velocities(profile: &str, u: f64, urange: (f64, f64)) -> PyResult<(f64, f64)> {
    let p = Profile::parse(profile, urange).map_err(raise)?;
    pipeline::characteristic_velocities(&p, u).map_err(raise)
}

#[pyfunction]
fn catalog() -> Vec<&'static str> {
    geometry::catalog().iter().map(|f| f.name).collect()
}

#[pyfunction]
#[pyo3(signature = (name, n=101))]
fn verify_fixture<'py>(py: Python<'py>, name: &str, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let fx = geometry::fixture(name).ok_or_else(|| PyValueError::new_err(format!("unknown fixture `{name}`")))?;
    to_py(py, &geometry::verify_fixture(fx, n).map_err(raise)?)
}

/// Runs the full generation pipeline, writing artifacts to `out`, and
/// returns the report. Modes are `(A, B, k)` or `(A, B, k, psi0, dpsi0)`.
#[pyfunction]
#[pyo3(signature = (profile, modes, out, grid="129x129", trange=(0.2, 0.45), thetarange=(1.0, 1.4)))]
fn run_pipeline<'py>(
    py: Python<'py>,
    profile: &str,
    modes: Vec<Vec<f64>>,
    out: PathBuf,
    grid: &str,
    trange: (f64, f64),
    thetarange: (f64, f64),
) -> PyResult<Bound<'py, PyAny>> {
    let modes: Vec<String> = modes
        .iter()
        .map(|m| m.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","))
        .collect();
    let cfg = RunConfig {
        profile: Some(profile.to_string()),
        modes: Some(modes.join(";")),
        grid: Some(grid.to_string()),
        trange: Some(format!("{:?},{:?}", trange.0, trange.1)),
        thetarange: Some(format!("{:?},{:?}", thetarange.0, thetarange.1)),
        out: Some(out.clone()),
        ..Default::default()
    };
    std::fs::create_dir_all(&out).map_err(raise)?;
    let outcome = py.detach(|| cli::cmd_pipeline(&cfg, &out)).map_err(raise)?;
    to_py(py, &outcome.report)
}

/// Runs the command-line interface with `args` (without the program name)
/// and returns its exit code.
#[pyfunction]
fn run(py: Python<'_>, args: Vec<String>) -> i32 {
    let mut full = vec!["hesseflat".to_string()];
    full.extend(args);
    py.detach(|| cli::run_from_args(full))
}

#[pymodule]
#[pyo3(name = "hesseflat")]
fn hesseflat_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HesseflatError", m.py().get_type::<HesseflatError>())?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(differentiate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(curvature, m)?)?;
    m.add_function(wrap_pyfunction!(brioschi, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_interval, m)?)?;
    m.add_function(wrap_pyfunction!(characteristic_velocities, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(verify_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
