//! Python module `fbnet`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fbnet_core::analytic;
use fbnet_core::io;
use fbnet_core::liouvillian::sweep::{solve_point, sweep_g2_partial, SweepSpec};
use fbnet_core::liouvillian::SolverOptions;
use fbnet_core::meanfield::cubic;
use fbnet_core::netdsl;
use fbnet_core::network::{DrivePlacement, FeedbackParams, DEFAULT_DIMS};
use fbnet_core::reproduce::{self, FigureId, FigureSettings};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn param_set(name: &str, drive: Option<&str>) -> PyResult<FeedbackParams> {
    let p = match name {
        "fig5" => FeedbackParams::fig5(),
        "fig7" => FeedbackParams::fig7(),
        "fig9" => FeedbackParams::fig9(),
        _ => return Err(PyValueError::new_err(format!("unknown parameter set `{name}`"))),
    };
    match drive {
        None => Ok(p),
        Some(d) => DrivePlacement::parse(d)
            .map(|d| p.with_drive(d))
            .ok_or_else(|| PyValueError::new_err(format!("unknown drive `{d}`"))),
    }
}

/// Parses and composes a network document; returns `(report, triple_json)`.
#[pyfunction]
#[pyo3(signature = (source, params = None))]
fn compose(source: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<(String, String)> {
    let doc = netdsl::parse(source).map_err(|d| value_err(netdsl::render_all(&d, source)))?;
    let ov: Vec<(&str, f64)> = params.iter().flatten().map(|(k, v)| (k.as_str(), *v)).collect();
    let el = netdsl::elaborate_with(&doc, &ov).map_err(value_err)?;
    Ok((io::triple_report(&el.triple), io::triple_to_json(&el.triple).map_err(value_err)?))
}

/// `(ỹ, z̃)` bistability thresholds at `x`.
#[pyfunction]
fn thresholds(x: f64) -> (f64, f64) {
    cubic::thresholds(x)
}

/// Nonnegative roots of the steady-state cubic, ascending.
#[pyfunction]
fn cubic_roots(x: f64, y: f64, z: f64) -> Vec<f64> {
    cubic::solve_cubic(x, y, z).roots
}

/// Closed-form g²(0) of the effective Kerr cavity.
#[pyfunction]
fn g2_analytic(delta: f64, chi: f64, kappa_a: f64, gamma: f64) -> f64 {
    analytic::g2_analytic(delta, chi, kappa_a, gamma)
}

/// Master-equation observables at one `Δ/χ` of a built-in parameter set.
#[pyfunction]
#[pyo3(signature = (delta_over_chi, set = "fig5", drive = None, dims = DEFAULT_DIMS))]
fn steady_point(
    py: Python<'_>,
    delta_over_chi: f64,
    set: &str,
    drive: Option<&str>,
    dims: [usize; 3],
) -> PyResult<BTreeMap<&'static str, f64>> {
    let p = param_set(set, drive)?;
    let p = p.with_detuning(delta_over_chi * p.chi());
    let o = py
        .detach(|| solve_point(&p, dims, &SolverOptions::default()))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(BTreeMap::from([
        ("g2_a", o.g2_a),
        ("g2_c", o.g2_c),
        ("n_a", o.n_a),
        ("n_c", o.n_c),
        ("n_b", o.n_b),
        ("residual", o.residual),
    ]))
}

/// g²(0) sweep over `Δ/χ`; returns columns keyed by name.
#[pyfunction]
#[pyo3(signature = (start, stop, points, set = "fig5", drive = None, dims = DEFAULT_DIMS))]
fn g2_sweep(
    py: Python<'_>,
    start: f64,
    stop: f64,
    points: usize,
    set: &str,
    drive: Option<&str>,
    dims: [usize; 3],
) -> PyResult<BTreeMap<&'static str, Vec<f64>>> {
    let p = param_set(set, drive)?;
    let spec = SweepSpec::new(start, stop, points);
    let sweep = py.detach(|| sweep_g2_partial(&p, p.drive, &spec, dims, &SolverOptions::default()));
    if let Some(e) = sweep.failures.first() {
        return Err(PyRuntimeError::new_err(e.to_string()));
    }
    let r = sweep.result;
    let mut out = BTreeMap::from([("delta_over_chi", r.grid.clone())]);
    for name in ["g2_a", "g2_c", "n_a", "n_c", "n_b"] {
        out.insert(name, r.series(name));
    }
    Ok(out)
}

/// Regenerates one figure into `out_dir`; returns `(passed, detail)`.
#[pyfunction]
#[pyo3(signature = (figure, out_dir, points = None))]
fn reproduce_figure(py: Python<'_>, figure: &str, out_dir: PathBuf, points: Option<usize>) -> PyResult<(bool, String)> {
    let id = FigureId::parse(figure).ok_or_else(|| PyValueError::new_err(format!("unknown figure `{figure}`")))?;
    let settings = FigureSettings {
        points,
        ..Default::default()
    };
    let out = py.detach(|| reproduce::reproduce(id, &settings)).map_err(value_err)?;
    out.write_to(&out_dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((out.verdict.passed, out.verdict.detail))
}

#[pymodule]
fn fbnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_roots, m)?)?;
    m.add_function(wrap_pyfunction!(g2_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(steady_point, m)?)?;
    m.add_function(wrap_pyfunction!(g2_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_figure, m)?)?;
    m.add("FIG3_DOCUMENT", netdsl::FIG3_DOCUMENT)?;
    Ok(())
}
