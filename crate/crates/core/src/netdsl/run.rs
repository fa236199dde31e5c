//! Steady-state `Δ/χ` sweeps of a document's network.

use rayon::prelude::*;

use super::ast::NetworkDoc;
use super::elaborate::{detuning_overrides, elaborate_with, ElabError};
use crate::liouvillian::sweep::{local_extrema, Extremum, SweepSpec};
use crate::liouvillian::{build_liouvillian, g2_zero, occupation, steady_state_with, SolverOptions};

/// One table row per successful grid point: `g2_<mode>` for every optical
/// mode, then `n_<mode>` for every mode, in declaration order.
#[derive(Clone, Debug)]
pub struct DocumentSweep {
    pub columns: Vec<String>,
    pub grid: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `(grid index, Δ/χ, message)` of points that failed.
    pub failures: Vec<(usize, f64, String)>,
    pub extrema: Vec<Extremum>,
    pub truncations: Vec<(String, usize)>,
}

/// Solves the document at every `Δ/χ` of `grid`. `truncations` replaces the
/// document's mode truncations by label.
pub fn sweep_document(
    doc: &NetworkDoc,
    overrides: &[(&str, f64)],
    truncations: &[(String, usize)],
    grid: &SweepSpec,
    opts: &SolverOptions,
) -> Result<DocumentSweep, ElabError> {
    let base = elaborate_with(doc, overrides)?;
    for (label, _) in truncations {
        if !base.truncations.iter().any(|(l, _)| l == label) {
            return Err(ElabError::UnknownOverride(format!("truncation of mode {label}")));
        }
    }
    let dims: Vec<(String, usize)> = base
        .truncations
        .iter()
        .map(|(l, n)| {
            let n = truncations.iter().find(|(t, _)| t == l).map_or(*n, |t| t.1);
            (l.clone(), n)
        })
        .collect();
    let optical: Vec<String> = base.registry.iter().filter(|m| m.is_optical()).map(|m| m.label().to_string()).collect();
    let all: Vec<String> = base.registry.iter().map(|m| m.label().to_string()).collect();
    let mut columns: Vec<String> = optical.iter().map(|l| format!("g2_{l}")).collect();
    columns.extend(all.iter().map(|l| format!("n_{l}")));

    // Check the detuning parameters once, before fanning out.
    detuning_overrides(&base, 0.0)?;
    let xs = grid.values();
    let solved: Vec<Result<(Vec<f64>, f64), String>> = xs
        .par_iter()
        .map(|&x| {
            let det = detuning_overrides(&base, x).map_err(|e| e.to_string())?;
            // The detuning comes first so that it wins over user overrides.
            let ov: Vec<(&str, f64)> = det.iter().copied().chain(overrides.iter().copied()).collect();
            let mut el = elaborate_with(doc, &ov).map_err(|e| e.to_string())?;
            el.truncations = dims.clone();
            let model = el.lindblad_model().map_err(|e| e.to_string())?;
            let sop = build_liouvillian(&model).map_err(|e| e.to_string())?;
            let ss = steady_state_with(&sop, opts).map_err(|e| e.to_string())?;
            let mut row = Vec::with_capacity(optical.len() + all.len());
            for l in &optical {
                row.push(g2_zero(&ss.rho, model.space(), l).map_err(|e| e.to_string())?);
            }
            for l in &all {
                row.push(occupation(&ss.rho, model.space(), l).map_err(|e| e.to_string())?);
            }
            Ok((row, ss.residual))
        })
        .collect();
    let mut out = DocumentSweep {
        columns,
        grid: Vec::new(),
        rows: Vec::new(),
        residuals: Vec::new(),
        failures: Vec::new(),
        extrema: Vec::new(),
        truncations: dims,
    };
    for (i, (x, r)) in xs.into_iter().zip(solved).enumerate() {
        match r {
            Ok((row, res)) => {
                out.grid.push(x);
                out.rows.push(row);
                out.residuals.push(res);
            }
            Err(e) => out.failures.push((i, x, e)),
        }
    }
    for (k, name) in out.columns.iter().enumerate().take(optical.len()) {
        let ys: Vec<f64> = out.rows.iter().map(|r| r[k]).collect();
        out.extrema.extend(local_extrema(name, &out.grid, &ys));
    }
    Ok(out)
}
