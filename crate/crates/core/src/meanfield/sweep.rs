//! Branch tables of the bistability cubic along one swept parameter.

use serde::{Deserialize, Serialize};

use super::{cubic, dimensionless, refine_fixed_point, stability_of, state_from_occupation, MeanFieldError, PhysicalBase, Stability};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Z,
    Y,
    /// Realized by sweeping `Δ_s` with the other rates fixed.
    X,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "z" => Some(Self::Z),
            "y" => Some(Self::Y),
            "x" => Some(Self::X),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub sweep_value: f64,
    pub root_index: usize,
    pub lambda: f64,
    pub n: f64,
    pub n_a: f64,
    pub stable: Stability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchTable {
    pub variable: SweepVariable,
    /// The two coordinates held fixed, as `(name, value)`.
    pub fixed: Vec<(String, f64)>,
    pub rows: Vec<BranchRow>,
    /// `n_A` reported with `K = 1`, i.e. equal to `n`.
    pub unit_k: bool,
}

impl BranchTable {
    /// Number of roots found at each distinct sweep value.
    pub fn root_counts(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some(last) if last.0 == r.sweep_value => last.1 += 1,
                _ => out.push((r.sweep_value, 1)),
            }
        }
        out
    }

    /// True when some sweep value carries three roots.
    pub fn is_multivalued(&self) -> bool {
        self.root_counts().iter().any(|&(_, c)| c >= 3)
    }
}

/// Roots of the cubic along a grid of one of `x`, `y`, `z`, the other two
/// fixed, with stability from the full linearization at the physical point
/// produced by `base`.
pub fn bistability_sweep(
    base: &PhysicalBase,
    variable: SweepVariable,
    fixed: (f64, f64),
    grid: &[f64],
    unit_k: bool,
) -> Result<BranchTable, MeanFieldError> {
    let names = match variable {
        SweepVariable::Z => ("x", "y"),
        SweepVariable::Y => ("x", "z"),
        SweepVariable::X => ("y", "z"),
    };
    let mut rows = Vec::new();
    for &v in grid {
        let (x, y, z) = match variable {
            SweepVariable::Z => (fixed.0, fixed.1, v),
            SweepVariable::Y => (fixed.0, v, fixed.1),
            SweepVariable::X => (v, fixed.0, fixed.1),
        };
        let p = base.realize(x, y, z)?;
        let d = dimensionless(&p)?;
        let roots = cubic::solve_cubic(d.x, d.y, d.z);
        for (i, &lambda) in roots.roots.iter().enumerate() {
            let n = lambda / d.k;
            let stable = if z == 0.0 {
                Stability::Stable
            } else {
                let fp = refine_fixed_point(state_from_occupation(n.max(0.0), &p), &p, i)?;
                stability_of(&fp.state, &p)
            };
            rows.push(BranchRow {
                sweep_value: v,
                root_index: i,
                lambda,
                n,
                n_a: if unit_k { n } else { d.big_k * n },
                stable,
            });
        }
    }
    Ok(BranchTable {
        variable,
        fixed: vec![(names.0.to_string(), fixed.0), (names.1.to_string(), fixed.1)],
        rows,
        unit_k,
    })
}

/// One panel of the bistability figure: the swept variable, the grid, and
/// one branch table per curve.
pub fn fig4_panel(panel: char, points: usize) -> Option<(SweepVariable, Vec<(String, BranchTable)>)> {
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
    };
    let zs = grid(0.0, 0.4);
    let ys = grid(0.0, 2.5);
    let base = PhysicalBase::default();
    let curves: Vec<(String, SweepVariable, (f64, f64), &Vec<f64>)> = match panel {
        'a' | 'b' => {
            let x = if panel == 'a' { 0.5 } else { 0.0 };
            [0.8, 1.2, 1.7].iter().map(|&y| (format!("y={y}"), SweepVariable::Z, (x, y), &zs)).collect()
        }
        'c' | 'd' => {
            let x = if panel == 'c' { 0.5 } else { 0.0 };
            [0.09, 0.2, 0.3].iter().map(|&z| (format!("z={z}"), SweepVariable::Y, (x, z), &ys)).collect()
        }
        'e' => [0.0, 0.25, 0.5].iter().map(|&x| (format!("x={x}"), SweepVariable::Z, (x, 0.8), &zs)).collect(),
        'f' => [0.0, 0.25, 0.5].iter().map(|&x| (format!("x={x}"), SweepVariable::Y, (x, 0.09), &ys)).collect(),
        _ => return None,
    };
    let variable = curves[0].1;
    let tables = curves
        .into_iter()
        .map(|(label, var, fixed, g)| {
            let t = bistability_sweep(&base, var, fixed, g, true).expect("figure grid lies in the physical range");
            (label, t)
        })
        .collect();
    Some((variable, tables))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_count_grouping() {
        let base = PhysicalBase::default();
        let t = bistability_sweep(&base, SweepVariable::Z, (0.5, 1.2), &[0.05, 0.1, 0.3], false).unwrap();
        let counts: Vec<usize> = t.root_counts().iter().map(|c| c.1).collect();
        assert_eq!(counts.len(), 3);
        assert!(t.rows.iter().all(|r| r.n_a == 0.0), "open loop has K = 0");
    }
}
