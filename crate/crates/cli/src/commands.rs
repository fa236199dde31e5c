use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;

use fbnet_core::acceptance::{Acceptance, TITLES};
use fbnet_core::analytic::{g2_analytic, weak_drive_g2, KerrParams, NonHermitianVariant};
use fbnet_core::io::{self, Method, Provenance, Sidecar, SweepRow};
use fbnet_core::liouvillian::sweep::{sweep_g2_partial, Extremum, ExtremumKind, SweepSpec};
use fbnet_core::liouvillian::SolverOptions;
use fbnet_core::meanfield::cubic::{bistable_window, solve_cubic, thresholds};
use fbnet_core::meanfield::sweep::{bistability_sweep, SweepVariable};
use fbnet_core::meanfield::{classify_stability, PhysicalBase};
use fbnet_core::netdsl::{elaborate_with, parse, render_all, sweep_document, NetworkDoc};
use fbnet_core::network::{DrivePlacement, FeedbackParams, DEFAULT_DIMS};
use fbnet_core::reproduce::{self, FigureId, FigureSettings};

use crate::config::{assignments, AnalyticOpts, CheckOpts, ComposeOpts, G2Opts, GlobalOpts, MeanfieldOpts, ReproduceOpts};
use crate::CliError;

const DEFAULT_SEED: u64 = 0x5eed;
const DEFAULT_POINTS: usize = 401;

pub struct Context {
    pub out: PathBuf,
    pub solver: SolverOptions,
    pub seed: u64,
}

impl Context {
    pub fn new(g: GlobalOpts) -> Result<Self, CliError> {
        let workers = match g.workers {
            Some(w) => Some(w),
            None => match std::env::var("FBNET_WORKERS") {
                Ok(s) => Some(s.trim().parse().map_err(|e| CliError::Usage(format!("FBNET_WORKERS=`{s}`: {e}")))?),
                Err(_) => None,
            },
        };
        if let Some(w) = workers {
            if w == 0 {
                return Err(CliError::Usage("worker count must be at least 1".into()));
            }
            // Only fails if a pool already exists, which cannot happen here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
        }
        let mut solver = SolverOptions::default();
        for (name, v) in [("residual-tol", g.residual_tol), ("gmres-tol", g.gmres_tol)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Usage(format!("--{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(t) = g.residual_tol {
            solver.residual_tol = t;
        }
        if let Some(t) = g.gmres_tol {
            solver.gmres.tol = t;
        }
        Ok(Self {
            out: g.out.unwrap_or_else(|| PathBuf::from(".")),
            solver,
            seed: g.seed.unwrap_or(DEFAULT_SEED),
        })
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        std::fs::write(&path, body)?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    fn solver_json(&self) -> serde_json::Value {
        json!({
            "residual_tol": self.solver.residual_tol,
            "gmres_tol": self.solver.gmres.tol,
            "dense_limit": self.solver.dense_limit,
        })
    }
}

/// The command line as given, for provenance blocks.
fn command_line() -> String {
    let mut args = std::env::args();
    args.next();
    std::iter::once("fbnet".to_string()).chain(args).collect::<Vec<_>>().join(" ")
}

fn read_document(path: &Path) -> Result<(String, NetworkDoc), CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    match parse(&src) {
        Ok(doc) => Ok((src, doc)),
        Err(d) => Err(CliError::Parse(format!("{}:\n{}", path.display(), render_all(&d, &src)))),
    }
}

fn param_set(name: Option<&str>) -> Result<(FeedbackParams, FigureId), CliError> {
    match name.unwrap_or("fig5") {
        "fig5" => Ok((FeedbackParams::fig5(), FigureId::Fig5a)),
        "fig7" => Ok((FeedbackParams::fig7(), FigureId::Fig7a)),
        "fig9" => Ok((FeedbackParams::fig9(), FigureId::Fig9a)),
        other => Err(CliError::Usage(format!("unknown parameter set `{other}` (fig5, fig7, fig9)"))),
    }
}

fn apply_params(p: &mut FeedbackParams, items: &[String]) -> Result<(), CliError> {
    for (name, v) in assignments::<f64>(items, "parameter")? {
        let field = match name.as_str() {
            "kappa" => &mut p.kappa,
            "kappa_f" => &mut p.kappa_f,
            "gamma" => &mut p.gamma,
            "g0" => &mut p.g0,
            "omega_m" => &mut p.omega_m,
            "gamma_m" => &mut p.gamma_m,
            "eps" => &mut p.eps,
            "delta_s" => &mut p.delta_s,
            "delta_c" => &mut p.delta_c,
            "omega_d" => &mut p.omega_d,
            "n_th" => &mut p.n_th,
            _ => return Err(CliError::Usage(format!("unknown parameter `{name}`"))),
        };
        *field = v;
    }
    p.validate().map_err(CliError::Usage)
}

fn placement(s: Option<&str>, default: DrivePlacement) -> Result<DrivePlacement, CliError> {
    match s {
        None => Ok(default),
        Some(s) => DrivePlacement::parse(s).ok_or_else(|| CliError::Usage(format!("unknown drive `{s}` (a or c)"))),
    }
}

fn grid(from: Option<f64>, to: Option<f64>, points: Option<usize>, default: SweepSpec) -> Result<SweepSpec, CliError> {
    let g = SweepSpec::new(from.unwrap_or(default.start), to.unwrap_or(default.stop), points.unwrap_or(default.points));
    if g.points == 0 || !g.start.is_finite() || !g.stop.is_finite() {
        return Err(CliError::Usage("sweep needs finite bounds and at least one point".into()));
    }
    Ok(g)
}

fn print_extrema(extrema: &[Extremum]) {
    for e in extrema {
        let kind = match e.kind {
            ExtremumKind::Min => "min",
            ExtremumKind::Max => "max",
        };
        println!("{kind} {} = {} at delta_over_chi = {}", e.series, io::fmt_float(e.value), io::fmt_float(e.location));
    }
}

pub fn compose(_ctx: &Context, o: ComposeOpts) -> Result<(), CliError> {
    let path = o.input.ok_or_else(|| CliError::Usage("compose needs an input document".into()))?;
    let (_, doc) = read_document(&path)?;
    let ov = assignments::<f64>(&o.params, "parameter")?;
    let ov: Vec<(&str, f64)> = ov.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let el = elaborate_with(&doc, &ov).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let g = &el.triple;
    print!("{}", io::triple_report(g));
    for (op, rate) in &el.baths {
        println!("bath {} rate {}", io::expr_lines(op).join(" "), io::fmt_float(*rate));
    }
    let herm = g.hermiticity_deviation();
    println!("check hermiticity: max |H - H^dagger| coefficient {herm:e} ({})", if herm <= 1e-12 { "ok" } else { "FAILED" });
    let s = g.s();
    let mut unit = 0.0f64;
    for i in 0..s.ncols() {
        for j in 0..s.ncols() {
            let acc = (0..s.nrows()).fold((0.0, 0.0), |(re, im), k| {
                let z = s[(k, i)].conj() * s[(k, j)];
                (re + z.re, im + z.im)
            });
            let target = if i == j { 1.0 } else { 0.0 };
            unit = unit.max((acc.0 - target).hypot(acc.1));
        }
    }
    println!("check unitarity: max |S^dagger S - I| {unit:e} ({})", if unit <= 1e-12 { "ok" } else { "FAILED" });
    if let Some(j) = o.json {
        std::fs::write(&j, io::triple_to_json(g)?)?;
        info!("wrote {}", j.display());
    }
    Ok(())
}

pub fn meanfield(ctx: &Context, o: MeanfieldOpts) -> Result<(), CliError> {
    if let Some(x) = o.threshold {
        let (yt, zt) = thresholds(x);
        println!("x = {}", io::fmt_float(x));
        println!("y_threshold = {}", io::fmt_float(yt));
        println!("z_threshold = {}", io::fmt_float(zt));
        if let Some(y) = o.y {
            match bistable_window(x, y) {
                Ok((lo, hi)) => println!("window at y = {}: z in ({}, {})", io::fmt_float(y), io::fmt_float(lo), io::fmt_float(hi)),
                Err(e) => println!("{e}"),
            }
        }
        return Ok(());
    }
    let base = PhysicalBase::default();
    let need = |v: Option<f64>, n: &str| v.ok_or_else(|| CliError::Usage(format!("meanfield needs --{n}")));
    if let Some(var) = &o.sweep {
        let variable = SweepVariable::parse(var).ok_or_else(|| CliError::Usage(format!("cannot sweep `{var}` (x, y or z)")))?;
        let (fixed, default) = match variable {
            SweepVariable::Z => ((need(o.x, "x")?, need(o.y, "y")?), (0.0, 0.4)),
            SweepVariable::Y => ((need(o.x, "x")?, need(o.z, "z")?), (0.0, 2.5)),
            SweepVariable::X => ((need(o.y, "y")?, need(o.z, "z")?), (base.x_min(), 0.5)),
        };
        let spec = grid(o.from, o.to, o.points, SweepSpec::new(default.0, default.1, DEFAULT_POINTS))?;
        let table = bistability_sweep(&base, variable, fixed, &spec.values(), false)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let csv = ctx.write("meanfield.csv", &io::branch_csv(&table)?)?;
        let mut prov = Provenance::new(command_line(), json!({ "base": base, "options": o, "grid": spec }));
        prov.solver = None;
        let side = Sidecar {
            provenance: prov,
            extrema: Vec::new(),
            diagnostics: json!({ "multivalued": table.is_multivalued(), "rows": table.rows.len() }),
        };
        ctx.write("meanfield.json", &side.to_json()?)?;
        println!("wrote {} ({} rows, {})", csv.display(), table.rows.len(), if table.is_multivalued() { "multivalued" } else { "single-valued" });
        return Ok(());
    }
    let (x, y, z) = (need(o.x, "x")?, need(o.y, "y")?, need(o.z, "z")?);
    let roots = solve_cubic(x, y, z);
    let p = base.realize(x, y, z).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("lambda,residual,stable");
    for (l, r) in roots.roots.iter().zip(&roots.residuals) {
        let st = classify_stability(*l, &p).map_err(|e| CliError::Solver(e.to_string()))?;
        println!("{},{},{}", io::fmt_float(*l), io::fmt_float(*r), serde_json::to_value(st).unwrap().as_str().unwrap_or("?"));
    }
    Ok(())
}

pub fn g2(ctx: &Context, o: G2Opts) -> Result<(), CliError> {
    if let Some(path) = o.input.clone() {
        return g2_document(ctx, &path, o);
    }
    let (mut p, figure) = param_set(o.set.as_deref())?;
    apply_params(&mut p, &o.params)?;
    let drive = placement(o.drive.as_deref(), p.drive)?;
    let (_, _, default_grid) = figure.sweep_setup().expect("Δ/χ figure");
    let spec = grid(o.from, o.to, o.points, default_grid)?;
    let dims = o.dims.unwrap_or(DEFAULT_DIMS);
    if dims.iter().any(|&d| d < 2) {
        return Err(CliError::Usage("truncations must be at least 2".into()));
    }
    let sweep = sweep_g2_partial(&p, drive, &spec, dims, &ctx.solver);
    let csv = ctx.write("g2.csv", &io::sweep_csv(&sweep.result)?)?;
    let mut prov = Provenance::new(command_line(), json!({ "params": p.with_drive(drive), "options": o, "grid": spec })).with_dims(dims);
    prov.solver = Some(ctx.solver_json());
    let failures: Vec<String> = sweep.failures.iter().map(|e| e.to_string()).collect();
    let side = Sidecar {
        provenance: prov,
        extrema: sweep.result.extrema.clone(),
        diagnostics: json!({ "failures": failures }),
    };
    ctx.write("g2.json", &side.to_json()?)?;
    println!("wrote {} ({} of {} points)", csv.display(), sweep.result.points.len(), spec.points);
    print_extrema(&sweep.result.extrema);
    if let Some(e) = sweep.failures.first() {
        return Err(CliError::Solver(e.to_string()));
    }
    Ok(())
}

fn g2_document(ctx: &Context, path: &Path, o: G2Opts) -> Result<(), CliError> {
    let (_, doc) = read_document(path)?;
    if o.set.is_some() || o.drive.is_some() || o.dims.is_some() {
        return Err(CliError::Usage("--set, --drive and --dims apply to built-in sets; documents define their own".into()));
    }
    let default = doc
        .sweeps
        .iter()
        .find(|s| s.variable == "delta_over_chi")
        .map(|_| ())
        .and_then(|_| {
            let el = fbnet_core::netdsl::elaborate(&doc).ok()?;
            el.sweeps.iter().find(|s| s.variable == "delta_over_chi").map(|s| s.spec)
        });
    let spec = match default {
        Some(d) => grid(o.from, o.to, o.points, d)?,
        None => match (o.from, o.to) {
            (Some(a), Some(b)) => grid(Some(a), Some(b), o.points, SweepSpec::new(a, b, 101))?,
            _ => return Err(CliError::Usage("document has no delta_over_chi sweep; give --from and --to".into())),
        },
    };
    let ov = assignments::<f64>(&o.params, "parameter")?;
    let ov: Vec<(&str, f64)> = ov.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let truncs = assignments::<usize>(&o.truncs, "truncation")?;
    let sweep = sweep_document(&doc, &ov, &truncs, &spec, &ctx.solver)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let csv = ctx.write("g2.csv", &io::columns_csv(&sweep.columns, &sweep.grid, &sweep.rows)?)?;
    let el = elaborate_with(&doc, &ov).map_err(|e| CliError::Parse(e.to_string()))?;
    let params: serde_json::Map<String, serde_json::Value> = el.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut prov = Provenance::new(command_line(), json!({ "document": path, "params": params, "options": o, "grid": spec }));
    prov.truncations = Some(sweep.truncations.clone());
    prov.solver = Some(ctx.solver_json());
    let failures: Vec<String> = sweep.failures.iter().map(|(i, x, e)| format!("point {i} (Δ/χ = {x}): {e}")).collect();
    let side = Sidecar {
        provenance: prov,
        extrema: sweep.extrema.clone(),
        diagnostics: json!({
            "max_residual": sweep.residuals.iter().copied().fold(0.0, f64::max),
            "failures": failures,
        }),
    };
    ctx.write("g2.json", &side.to_json()?)?;
    println!("wrote {} ({} of {} points)", csv.display(), sweep.rows.len(), spec.points);
    print_extrema(&sweep.extrema);
    if let Some(f) = failures.first() {
        return Err(CliError::Solver(f.clone()));
    }
    Ok(())
}

pub fn analytic(ctx: &Context, o: AnalyticOpts) -> Result<(), CliError> {
    let (mut p, figure) = param_set(o.set.as_deref())?;
    apply_params(&mut p, &o.params)?;
    if let Some(chi) = o.chi {
        if !(chi >= 0.0) {
            return Err(CliError::Usage(format!("--chi must be nonnegative, got {chi}")));
        }
        p.g0 = (chi * p.omega_m).sqrt();
    }
    let drive = placement(o.drive.as_deref(), p.drive)?;
    let p = p.with_drive(drive);
    let variant = match o.variant.as_deref() {
        None => NonHermitianVariant::default(),
        Some(s) => NonHermitianVariant::parse(s).ok_or_else(|| CliError::Usage(format!("unknown variant `{s}`")))?,
    };
    let (_, _, default_grid) = figure.sweep_setup().expect("Δ/χ figure");
    let spec = grid(o.from, o.to, o.points, default_grid)?;
    let xs = spec.values();
    let chi = p.chi();
    let mut rows = Vec::with_capacity(2 * xs.len());
    let mut methods = Vec::with_capacity(2 * xs.len());
    for &x in &xs {
        let k = KerrParams::from(&p.with_detuning(x * chi));
        rows.push(SweepRow::g2_only(x, Some(g2_analytic(k.delta_s, k.chi, k.kappa_a, k.gamma))));
        methods.push(Method::AnalyticFormula);
    }
    let mut warned = false;
    for &x in &xs {
        let g = match weak_drive_g2(&p.with_detuning(x * chi), drive, variant) {
            Ok(g) => Some(g),
            Err(e) => {
                if !warned {
                    warn!("weak-drive rows left empty: {e}");
                    warned = true;
                }
                None
            }
        };
        rows.push(SweepRow::g2_only(x, g));
        methods.push(Method::WeakDrive);
    }
    let csv = ctx.write("analytic.csv", &io::sweep_table(&rows, Some(&methods))?)?;
    let side = Sidecar {
        provenance: Provenance::new(command_line(), json!({ "params": p, "options": o, "grid": spec, "variant": variant })),
        extrema: Vec::new(),
        diagnostics: json!({ "chi": chi }),
    };
    ctx.write("analytic.json", &side.to_json()?)?;
    println!("wrote {} ({} rows)", csv.display(), rows.len());
    Ok(())
}

pub fn reproduce(ctx: &Context, o: ReproduceOpts) -> Result<(), CliError> {
    if o.figures.is_empty() {
        return Err(CliError::Usage("name at least one figure, or `all`".into()));
    }
    let mut figures = Vec::new();
    for f in &o.figures {
        if f == "all" {
            figures.extend(FigureId::all());
        } else {
            figures.push(FigureId::parse(f).ok_or_else(|| CliError::Usage(format!("unknown figure `{f}`")))?);
        }
    }
    let settings = FigureSettings {
        points: o.points,
        dims: o.dims,
        solver: ctx.solver,
    };
    let (mut failed, mut solver_failed) = (0, None);
    for f in figures {
        let out = reproduce::reproduce(f, &settings)?;
        out.write_to(&ctx.out)?;
        println!("{}", out.status_line());
        if !out.verdict.passed {
            failed += 1;
        }
        if out.solver_failed && solver_failed.is_none() {
            solver_failed = Some(format!("{f}: {}", out.verdict.detail));
        }
    }
    match (solver_failed, failed) {
        (Some(s), _) => Err(CliError::Solver(s)),
        (None, 0) => Ok(()),
        (None, n) => Err(CliError::CheckFailed(n)),
    }
}

pub fn check(ctx: &Context, o: CheckOpts) -> Result<(), CliError> {
    let ids: Vec<usize> = if o.criteria.is_empty() { (1..=TITLES.len()).collect() } else { o.criteria };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > TITLES.len()) {
        return Err(CliError::Usage(format!("no criterion {bad} (1 to {})", TITLES.len())));
    }
    let suite = Acceptance::new(ctx.solver, ctx.seed);
    let mut failed = 0;
    for id in &ids {
        let outcome = suite.run(*id);
        println!("{outcome}");
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", ids.len() - failed);
    if failed > 0 {
        Err(CliError::CheckFailed(failed))
    } else {
        Ok(())
    }
}
