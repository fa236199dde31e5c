//! Output formats: fixed-precision floats, sweep and branch tables, JSON
//! sidecars, and a lossless JSON form of SLH triples.
//!
//! Every table written here is byte-for-byte reproducible: floats go through
//! [`fmt_float`], rows keep grid order.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liouvillian::sweep::{Extremum, PointObservables, SweepResult};
use crate::meanfield::sweep::BranchTable;
use crate::meanfield::Stability;
use crate::slh::{ModeId, ModeKind, ModeRegistry, Monomial, OperatorExpr, SlhError, SlhTriple};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Slh(#[from] SlhError),
    #[error("{0}")]
    Format(String),
}

/// Shortest decimal that round-trips the value rounded to 12 significant
/// digits. Plain notation for magnitudes in `[1e-5, 1e15)`, exponent
/// notation otherwise.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v);
    if rounded == 0.0 {
        return "0".into();
    }
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Where a row of a `Δ/χ` table came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MasterEquation,
    AnalyticFormula,
    WeakDrive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MasterEquation => "master_equation",
            Method::AnalyticFormula => "analytic_formula",
            Method::WeakDrive => "weak_drive",
        })
    }
}

/// One row of a `Δ/χ` table. Missing observables are written as empty
/// fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_over_chi: f64,
    pub g2_a: Option<f64>,
    pub g2_c: Option<f64>,
    pub n_a: Option<f64>,
    pub n_c: Option<f64>,
    pub n_b: Option<f64>,
}

impl SweepRow {
    pub fn from_point(x: f64, p: &PointObservables) -> Self {
        Self {
            delta_over_chi: x,
            g2_a: Some(p.g2_a),
            g2_c: Some(p.g2_c),
            n_a: Some(p.n_a),
            n_c: Some(p.n_c),
            n_b: Some(p.n_b),
        }
    }

    pub fn g2_only(x: f64, g2_a: Option<f64>) -> Self {
        Self {
            delta_over_chi: x,
            g2_a,
            g2_c: None,
            n_a: None,
            n_c: None,
            n_b: None,
        }
    }
}

pub const SWEEP_HEADER: [&str; 6] = ["delta_over_chi", "g2_a", "g2_c", "n_a", "n_c", "n_b"];
pub const BRANCH_HEADER: [&str; 6] = ["sweep_value", "root_index", "lambda", "n", "n_A", "stable"];

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, IoError> {
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Format(e.to_string()))
}

/// A `Δ/χ` table; with `method` set every row carries a trailing `method`
/// column.
pub fn sweep_table(rows: &[SweepRow], method: Option<&[Method]>) -> Result<String, IoError> {
    if let Some(m) = method {
        if m.len() != rows.len() {
            return Err(IoError::Format(format!("{} rows but {} methods", rows.len(), m.len())));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if method.is_some() {
        header.push("method");
    }
    w.write_record(&header)?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![
            fmt_float(r.delta_over_chi),
            fmt_opt(r.g2_a),
            fmt_opt(r.g2_c),
            fmt_opt(r.n_a),
            fmt_opt(r.n_c),
            fmt_opt(r.n_b),
        ];
        if let Some(m) = method {
            rec.push(m[i].to_string());
        }
        w.write_record(&rec)?;
    }
    finish(w)
}

/// A table with a leading `delta_over_chi` column and arbitrary named
/// columns after it.
pub fn columns_csv(columns: &[String], grid: &[f64], rows: &[Vec<f64>]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["delta_over_chi".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for (x, row) in grid.iter().zip(rows) {
        let rec: Vec<String> = std::iter::once(*x).chain(row.iter().copied()).map(fmt_float).collect();
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn sweep_result_rows(r: &SweepResult) -> Vec<SweepRow> {
    r.grid.iter().zip(&r.points).map(|(&x, p)| SweepRow::from_point(x, p)).collect()
}

pub fn sweep_csv(r: &SweepResult) -> Result<String, IoError> {
    sweep_table(&sweep_result_rows(r), None)
}

fn stability_field(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "true",
        Stability::Unstable => "false",
        Stability::Marginal => "marginal",
    }
}

pub fn branch_csv(t: &BranchTable) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BRANCH_HEADER)?;
    for r in &t.rows {
        w.write_record([
            fmt_float(r.sweep_value),
            r.root_index.to_string(),
            fmt_float(r.lambda),
            fmt_float(r.n),
            fmt_float(r.n_a),
            stability_field(r.stable).to_string(),
        ])?;
    }
    finish(w)
}

/// What is needed to regenerate an output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Equivalent command line.
    pub command: String,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncations: Option<Vec<(String, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<serde_json::Value>,
}

impl Provenance {
    pub fn new(command: impl Into<String>, parameters: serde_json::Value) -> Self {
        Self {
            tool: "fbnet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            truncations: None,
            solver: None,
        }
    }

    pub fn with_dims(mut self, dims: [usize; 3]) -> Self {
        self.truncations = Some(["a", "c", "b"].iter().map(|l| l.to_string()).zip(dims).collect());
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub provenance: Provenance,
    pub extrema: Vec<Extremum>,
    pub diagnostics: serde_json::Value,
}

impl Sidecar {
    pub fn to_json(&self) -> Result<String, IoError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

// Lossless triple serialization.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TermJson {
    /// `[creation, annihilation]` per mode, in registry order.
    powers: Vec<[u32; 2]>,
    re: f64,
    im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TripleJson {
    modes: Vec<ModeId>,
    #[serde(rename = "S")]
    s: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "L")]
    l: Vec<Vec<TermJson>>,
    #[serde(rename = "H")]
    h: Vec<TermJson>,
}

fn terms_json(e: &OperatorExpr) -> Vec<TermJson> {
    e.terms()
        .map(|(m, c)| TermJson {
            powers: m.powers().iter().map(|&(a, b)| [a, b]).collect(),
            re: c.re,
            im: c.im,
        })
        .collect()
}

/// JSON with every coefficient at full precision; [`triple_from_json`]
/// restores an equal triple.
pub fn triple_to_json(g: &SlhTriple) -> Result<String, IoError> {
    let s = g.s();
    let doc = TripleJson {
        modes: g.registry().iter().cloned().collect(),
        s: (0..s.nrows()).map(|i| (0..s.ncols()).map(|j| [s[(i, j)].re, s[(i, j)].im]).collect()).collect(),
        l: g.l().iter().map(terms_json).collect(),
        h: terms_json(g.h()),
    };
    let mut out = serde_json::to_string_pretty(&doc)?;
    out.push('\n');
    Ok(out)
}

pub fn triple_from_json(src: &str) -> Result<SlhTriple, IoError> {
    let doc: TripleJson = serde_json::from_str(src)?;
    let mut reg = ModeRegistry::new();
    for m in &doc.modes {
        reg.register(m.label(), m.kind())?;
    }
    let reg = reg.into_shared();
    let expr = |terms: &[TermJson]| {
        OperatorExpr::from_terms(
            &reg,
            terms.iter().map(|t| {
                (
                    Monomial::from_powers(t.powers.iter().map(|p| (p[0], p[1])).collect()),
                    Complex64::new(t.re, t.im),
                )
            }),
        )
    };
    let m = doc.s.len();
    if doc.s.iter().any(|row| row.len() != m) {
        return Err(IoError::Format("scattering matrix is not square".into()));
    }
    let s = DMatrix::from_fn(m, m, |i, j| Complex64::new(doc.s[i][j][0], doc.s[i][j][1]));
    let l = doc.l.iter().map(|t| expr(t)).collect::<Result<Vec<_>, _>>()?;
    Ok(SlhTriple::new(s, l, expr(&doc.h)?)?)
}

/// Terms of an expression, one per line, in canonical order.
pub fn expr_lines(e: &OperatorExpr) -> Vec<String> {
    if e.is_zero() {
        return vec!["0".into()];
    }
    let reg = e.registry();
    e.terms()
        .map(|(m, c)| {
            let mut ops = String::new();
            for (i, &(cr, an)) in m.powers().iter().enumerate() {
                let label = reg.get(i).map(|x| x.label()).unwrap_or("?");
                for _ in 0..cr {
                    ops.push_str(&format!(" {label}†"));
                }
                for _ in 0..an {
                    ops.push_str(&format!(" {label}"));
                }
            }
            format!("({} {} {}i){ops}", fmt_float(c.re), if c.im < 0.0 { "-" } else { "+" }, fmt_float(c.im.abs()))
        })
        .collect()
}

/// Human-readable listing used by `compose`.
pub fn triple_report(g: &SlhTriple) -> String {
    let mut out = String::new();
    let modes: Vec<String> = g
        .registry()
        .iter()
        .map(|m| {
            let kind = if m.kind() == ModeKind::Optical { "optical" } else { "mechanical" };
            format!("{} ({kind})", m.label())
        })
        .collect();
    out.push_str(&format!("modes: {}\n", modes.join(", ")));
    let s = g.s();
    out.push_str(&format!("S: {}x{}{}\n", s.nrows(), s.ncols(), if g.has_identity_scattering() { " identity" } else { "" }));
    for (k, l) in g.l().iter().enumerate() {
        out.push_str(&format!("L[{k}]:\n"));
        for line in expr_lines(l) {
            out.push_str(&format!("  {line}\n"));
        }
    }
    out.push_str("H:\n");
    for line in expr_lines(g.h()) {
        out.push_str(&format!("  {line}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::FeedbackParams;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(-2.5), "-2.5");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(1.3399999999999e-4), "0.000134");
        assert_eq!(fmt_float(2.0e-7), "2e-7");
        assert_eq!(fmt_float(123456789012345.0), "123456789012000");
        assert_eq!(fmt_float(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn formatted_floats_keep_twelve_digits() {
        for v in [std::f64::consts::PI, 1e-300, 7.123456789012345e10, -9.87654321098765e-8] {
            let back: f64 = fmt_float(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 5e-12, "{v} -> {back}");
        }
    }

    #[test]
    fn triple_round_trip_is_exact() {
        let g = FeedbackParams::fig9().with_detuning(0.37).composed_triple().unwrap();
        let text = triple_to_json(&g).unwrap();
        let back = triple_from_json(&text).unwrap();
        assert_eq!(back.l(), g.l());
        assert_eq!(back.h(), g.h());
        assert_eq!(back.s(), g.s());
        assert_eq!(triple_to_json(&back).unwrap(), text);
    }

    #[test]
    fn malformed_triples_are_rejected() {
        assert!(matches!(triple_from_json("{"), Err(IoError::Json(_))));
        let g = FeedbackParams::fig5().composed_triple().unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&triple_to_json(&g).unwrap()).unwrap();
        v["H"][0]["powers"].as_array_mut().unwrap().push(serde_json::json!([0, 0]));
        assert!(matches!(triple_from_json(&v.to_string()), Err(IoError::Slh(SlhError::MonomialArity { .. }))));
        let mut v: serde_json::Value = serde_json::from_str(&triple_to_json(&g).unwrap()).unwrap();
        v["H"][0]["im"] = serde_json::json!(5.0);
        assert!(matches!(triple_from_json(&v.to_string()), Err(IoError::Slh(SlhError::NonHermitian(_)))));
    }

    #[test]
    fn sweep_table_layout() {
        let rows = [SweepRow::g2_only(0.5, Some(0.25)), SweepRow::g2_only(1.0, None)];
        let t = sweep_table(&rows, Some(&[Method::AnalyticFormula, Method::WeakDrive])).unwrap();
        assert_eq!(
            t,
            "delta_over_chi,g2_a,g2_c,n_a,n_c,n_b,method\n0.5,0.25,,,,,analytic_formula\n1,,,,,,weak_drive\n"
        );
    }
}
