//! Detuning sweeps of the feedback network's photon statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_liouvillian, g2_from_annihilator, occupation, steady_state_with, LiouvillianError, SolverOptions};
use crate::network::{DrivePlacement, FeedbackParams, ModelError};

/// A uniform grid `start, …, stop` with `points` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    // Exact endpoints; interior points cannot drift across runs.
                    if i == n - 1 {
                        self.stop
                    } else {
                        self.start + (self.stop - self.start) * t
                    }
                })
                .collect(),
        }
    }
}

/// Observables of one steady state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointObservables {
    pub g2_a: f64,
    pub g2_c: f64,
    pub n_a: f64,
    pub n_c: f64,
    pub n_b: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub series: String,
    pub kind: ExtremumKind,
    pub location: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub params: FeedbackParams,
    pub dims: [usize; 3],
    pub grid: Vec<f64>,
    pub points: Vec<PointObservables>,
    pub extrema: Vec<Extremum>,
}

impl SweepResult {
    pub fn series(&self, name: &str) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match name {
                "g2_a" => p.g2_a,
                "g2_c" => p.g2_c,
                "n_a" => p.n_a,
                "n_c" => p.n_c,
                _ => p.n_b,
            })
            .collect()
    }

    /// Global minimum `(location, value)` of a series.
    pub fn global_min(&self, name: &str) -> Option<(f64, f64)> {
        self.grid
            .iter()
            .copied()
            .zip(self.series(name))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Largest (or smallest) value of a series within `center ± half_width`.
    pub fn window_extremum(&self, name: &str, center: f64, half_width: f64, kind: ExtremumKind) -> Option<(f64, f64)> {
        let it = self
            .grid
            .iter()
            .copied()
            .zip(self.series(name))
            .filter(|(x, _)| (x - center).abs() <= half_width + 1e-12);
        match kind {
            ExtremumKind::Max => it.max_by(|a, b| a.1.total_cmp(&b.1)),
            ExtremumKind::Min => it.min_by(|a, b| a.1.total_cmp(&b.1)),
        }
    }

    /// Local extrema of one series.
    pub fn local_extrema_of(&self, name: &str) -> Vec<Extremum> {
        self.extrema.iter().filter(|e| e.series == name).cloned().collect()
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("sweep point {index} (Δ/χ = {delta_over_chi}): {source}")]
pub struct SweepError {
    pub index: usize,
    pub delta_over_chi: f64,
    #[source]
    pub source: ModelError,
}

/// Strict interior local extrema on a grid.
pub fn local_extrema(series: &str, xs: &[f64], ys: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        let (l, c, r) = (ys[i - 1], ys[i], ys[i + 1]);
        let kind = if c < l && c < r {
            ExtremumKind::Min
        } else if c > l && c > r {
            ExtremumKind::Max
        } else {
            continue;
        };
        out.push(Extremum {
            series: series.to_string(),
            kind,
            location: xs[i],
            value: c,
        });
    }
    out
}

/// Steady-state observables at the parameters as given.
pub fn solve_point(params: &FeedbackParams, dims: [usize; 3], opts: &SolverOptions) -> Result<PointObservables, ModelError> {
    let model = params.lindblad_model(dims)?;
    let sop = build_liouvillian(&model)?;
    let ss = steady_state_with(&sop, opts)?;
    let space = model.space();
    let a = space.annihilator("a").map_err(LiouvillianError::from)?;
    let c = space.annihilator("c").map_err(LiouvillianError::from)?;
    Ok(PointObservables {
        g2_a: g2_from_annihilator(&ss.rho, &a)?,
        g2_c: g2_from_annihilator(&ss.rho, &c)?,
        n_a: occupation(&ss.rho, space, "a")?,
        n_c: occupation(&ss.rho, space, "c")?,
        n_b: occupation(&ss.rho, space, "b")?,
        residual: ss.residual,
        iterations: ss.iterations,
    })
}

/// `g²(0)` of both cavities over a grid of `Δ/χ` with `Δ_s = Δ_c = Δ`.
///
/// Points are solved on the current rayon pool; results keep grid order.
pub fn sweep_g2(
    template: &FeedbackParams,
    placement: DrivePlacement,
    grid: &SweepSpec,
    dims: [usize; 3],
    opts: &SolverOptions,
) -> Result<SweepResult, SweepError> {
    let partial = sweep_g2_partial(template, placement, grid, dims, opts);
    match partial.failures.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(partial.result),
    }
}

/// A sweep that kept going past failed points.
#[derive(Clone, Debug)]
pub struct PartialSweep {
    /// Successful points only, in grid order.
    pub result: SweepResult,
    pub failures: Vec<SweepError>,
}

/// Like [`sweep_g2`], but failed points are collected instead of aborting.
pub fn sweep_g2_partial(
    template: &FeedbackParams,
    placement: DrivePlacement,
    grid: &SweepSpec,
    dims: [usize; 3],
    opts: &SolverOptions,
) -> PartialSweep {
    let chi = template.chi();
    let xs = grid.values();
    let solved: Vec<Result<PointObservables, SweepError>> = xs
        .par_iter()
        .enumerate()
        .map(|(index, &x)| {
            let p = template.with_detuning(x * chi).with_drive(placement);
            solve_point(&p, dims, opts).map_err(|source| SweepError {
                index,
                delta_over_chi: x,
                source,
            })
        })
        .collect();
    let mut result = SweepResult {
        params: template.with_drive(placement),
        dims,
        grid: Vec::new(),
        points: Vec::new(),
        extrema: Vec::new(),
    };
    let mut failures = Vec::new();
    for (x, r) in xs.into_iter().zip(solved) {
        match r {
            Ok(p) => {
                result.grid.push(x);
                result.points.push(p);
            }
            Err(e) => failures.push(e),
        }
    }
    for name in ["g2_a", "g2_c"] {
        let ys = result.series(name);
        result.extrema.extend(local_extrema(name, &result.grid, &ys));
    }
    PartialSweep { result, failures }
}

/// One rung of a truncation convergence ladder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderStep {
    pub dims: [usize; 3],
    pub g2_a: f64,
    pub relative_change: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Truncations whose result moved by less than the tolerance when each
    /// dimension was doubled in turn.
    pub dims: [usize; 3],
    pub g2_a: f64,
    pub steps: Vec<LadderStep>,
    pub converged: bool,
}

/// Doubles each truncation in turn until `g²_a(0)` moves by less than `tol`
/// (relative) for every doubling, or `max_rounds` rounds have been used.
/// The dimension that moved the result most is kept doubled for the next
/// round.
pub fn convergence_ladder(
    params: &FeedbackParams,
    start: [usize; 3],
    tol: f64,
    max_rounds: usize,
    opts: &SolverOptions,
) -> Result<ConvergenceReport, ModelError> {
    let mut dims = start;
    let mut base = solve_point(params, dims, opts)?.g2_a;
    let mut steps = vec![LadderStep {
        dims,
        g2_a: base,
        relative_change: 0.0,
    }];
    for _ in 0..max_rounds {
        let mut worst: Option<(usize, f64, f64)> = None;
        for k in 0..3 {
            let mut trial = dims;
            trial[k] *= 2;
            let g = solve_point(params, trial, opts)?.g2_a;
            let rel = (g - base).abs() / base.abs().max(f64::MIN_POSITIVE);
            steps.push(LadderStep {
                dims: trial,
                g2_a: g,
                relative_change: rel,
            });
            if worst.is_none_or(|w| rel > w.1) {
                worst = Some((k, rel, g));
            }
        }
        let (k, rel, g) = worst.unwrap();
        if rel < tol {
            return Ok(ConvergenceReport {
                dims,
                g2_a: base,
                steps,
                converged: true,
            });
        }
        dims[k] *= 2;
        base = g;
    }
    Ok(ConvergenceReport {
        dims,
        g2_a: base,
        steps,
        converged: false,
    })
}
