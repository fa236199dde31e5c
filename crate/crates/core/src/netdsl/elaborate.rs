//! Turning a parsed document into SLH and master-equation inputs.

use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use super::ast::{BinOp, Connection, Expr, NetworkDoc};
use crate::fock::FockSpace;
use crate::liouvillian::sweep::SweepSpec;
use crate::liouvillian::{LindbladModel, LiouvillianError};
use crate::slh::{feedback_loop, rotating_frame, series, ModeRegistry, OperatorExpr, Registry, SlhError, SlhTriple};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElabError {
    #[error("parameter `{0}` must evaluate to a real number")]
    ComplexParameter(String),
    #[error("{0}")]
    Math(String),
    #[error("override of unknown parameter `{0}`")]
    UnknownOverride(String),
    #[error("{what} needs parameter `{name}`")]
    MissingParameter { what: String, name: String },
    #[error(transparent)]
    Slh(#[from] SlhError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub variable: String,
    pub spec: SweepSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec {
    pub mode: String,
    pub amplitude: f64,
    pub frequency: f64,
}

/// Everything a document determines, evaluated.
#[derive(Clone, Debug)]
pub struct Elaborated {
    pub registry: Registry,
    /// Parameter values in declaration order.
    pub params: Vec<(String, f64)>,
    pub truncations: Vec<(String, usize)>,
    /// Composed network in the frame rotating at the drive frequency, drive
    /// included.
    pub triple: SlhTriple,
    /// Extra collapse channels from `bath` statements, with rates.
    pub baths: Vec<(OperatorExpr, f64)>,
    pub drive: DriveSpec,
    pub sweeps: Vec<SweepPlan>,
}

impl Elaborated {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `χ` from a `chi` parameter, else `g0²/omega_m` when both are given.
    pub fn chi(&self) -> Option<f64> {
        self.param("chi")
            .or_else(|| Some(self.param("g0")?.powi(2) / self.param("omega_m")?))
    }

    pub fn lindblad_model(&self) -> Result<LindbladModel, LiouvillianError> {
        let dims: Vec<(&str, usize)> = self.truncations.iter().map(|(l, n)| (l.as_str(), *n)).collect();
        let space = FockSpace::new(&self.registry, &dims)?;
        let mut channels: Vec<(OperatorExpr, f64)> = self.triple.l().iter().map(|l| (l.clone(), 1.0)).collect();
        channels.extend(self.baths.iter().cloned());
        LindbladModel::from_exprs(space, self.triple.h(), &channels)
    }
}

struct Env<'a> {
    registry: &'a Registry,
    values: HashMap<String, f64>,
}

fn scalar_value(e: &OperatorExpr) -> Option<Complex64> {
    if e.is_zero() {
        Some(Complex64::new(0.0, 0.0))
    } else if e.len() == 1 && e.constant_term() != Complex64::new(0.0, 0.0) {
        Some(e.constant_term())
    } else {
        None
    }
}

impl Env<'_> {
    fn eval(&self, e: &Expr) -> Result<OperatorExpr, ElabError> {
        let reg = self.registry;
        Ok(match e {
            Expr::Real(v) => OperatorExpr::scalar(reg, Complex64::new(*v, 0.0)),
            Expr::Imag(v) => OperatorExpr::scalar(reg, Complex64::new(0.0, *v)),
            Expr::Param(p) => OperatorExpr::scalar(reg, Complex64::new(self.values[p], 0.0)),
            Expr::Lower(m) => OperatorExpr::lower(reg, m)?,
            Expr::Raise(m) => OperatorExpr::raise(reg, m)?,
            Expr::Sqrt(x) => {
                let v = self.eval(x)?;
                match scalar_value(&v) {
                    Some(z) if z.im == 0.0 && z.re >= 0.0 => OperatorExpr::scalar(reg, Complex64::new(z.re.sqrt(), 0.0)),
                    Some(z) => return Err(ElabError::Math(format!("sqrt of {z} in `{e}`: argument must be a nonnegative real"))),
                    None => return Err(ElabError::Math(format!("sqrt of an operator in `{e}`"))),
                }
            }
            Expr::Neg(x) => self.eval(x)?.scale_real(-1.0),
            Expr::Binary(op, l, r) => {
                let (l, r) = (self.eval(l)?, self.eval(r)?);
                match op {
                    BinOp::Add => l.try_add(&r)?,
                    BinOp::Sub => l.try_sub(&r)?,
                    BinOp::Mul => l.try_mul(&r)?,
                    BinOp::Div => match scalar_value(&r) {
                        Some(z) if z != Complex64::new(0.0, 0.0) => l.scale(z.inv()),
                        Some(_) => return Err(ElabError::Math(format!("division by zero in `{e}`"))),
                        None => return Err(ElabError::Math(format!("division by an operator in `{e}`"))),
                    },
                }
            }
        })
    }

    fn real(&self, e: &Expr, what: &str) -> Result<f64, ElabError> {
        let v = self.eval(e)?;
        match scalar_value(&v) {
            Some(z) if z.im == 0.0 => Ok(z.re),
            _ => Err(ElabError::ComplexParameter(what.to_string())),
        }
    }
}

pub fn elaborate(doc: &NetworkDoc) -> Result<Elaborated, ElabError> {
    elaborate_with(doc, &[])
}

/// Elaborates with some parameters replaced by fixed values; parameters
/// defined in terms of an overridden one follow it.
pub fn elaborate_with(doc: &NetworkDoc, overrides: &[(&str, f64)]) -> Result<Elaborated, ElabError> {
    for (name, _) in overrides {
        if !doc.params.iter().any(|p| p.name == *name) {
            return Err(ElabError::UnknownOverride(name.to_string()));
        }
    }
    let mut reg = ModeRegistry::new();
    for m in &doc.modes {
        reg.register(&m.label, m.kind)?;
    }
    let registry = reg.into_shared();
    let mut env = Env {
        registry: &registry,
        values: HashMap::new(),
    };
    let mut params = Vec::with_capacity(doc.params.len());
    for p in &doc.params {
        let v = match overrides.iter().find(|(n, _)| *n == p.name) {
            Some((_, v)) => *v,
            None => env.real(&p.value, &p.name)?,
        };
        env.values.insert(p.name.clone(), v);
        params.push((p.name.clone(), v));
    }
    let mut triples = HashMap::new();
    for s in &doc.systems {
        let l = env.eval(&s.l)?;
        let h = env.eval(&s.h)?;
        triples.insert(s.name.as_str(), SlhTriple::single(l, h)?);
    }
    let lab = match &doc.connection {
        None => triples[doc.systems[0].name.as_str()].clone(),
        Some(Connection::Series(names)) => {
            let mut acc = triples[names[0].as_str()].clone();
            for n in &names[1..] {
                acc = series(&acc, &triples[n.as_str()])?;
            }
            acc
        }
        Some(Connection::Feedback {
            plant,
            controller,
            return_coupling,
        }) => feedback_loop(&triples[plant.as_str()], &triples[controller.as_str()], &env.eval(return_coupling)?)?,
    };
    let frequency = match &doc.drive.frequency {
        Some(w) => env.real(w, "drive frequency")?,
        None => 0.0,
    };
    let amplitude = env.real(&doc.drive.amplitude, "drive amplitude")?;
    let framed = rotating_frame(&lab, frequency)?;
    let x = OperatorExpr::lower(&registry, &doc.drive.mode)?;
    let drive_term = (&x + &x.dagger()).scale_real(amplitude);
    let triple = SlhTriple::new(framed.s().clone(), framed.l().to_vec(), framed.h().try_add(&drive_term)?)?;
    let mut baths = Vec::new();
    for b in &doc.baths {
        let rate = env.real(&b.rate, "bath rate")?;
        let n_th = match &b.n_th {
            Some(n) => env.real(n, "thermal occupation")?,
            None => 0.0,
        };
        if rate < 0.0 || n_th < 0.0 {
            return Err(ElabError::Math(format!("bath on `{}` needs nonnegative rate and occupation", b.mode)));
        }
        let op = OperatorExpr::lower(&registry, &b.mode)?;
        baths.push((op.clone(), rate * (n_th + 1.0)));
        if n_th > 0.0 {
            baths.push((op.dagger(), rate * n_th));
        }
    }
    let mut sweeps = Vec::new();
    for s in &doc.sweeps {
        sweeps.push(SweepPlan {
            variable: s.variable.clone(),
            spec: SweepSpec::new(env.real(&s.start, "sweep start")?, env.real(&s.stop, "sweep stop")?, s.points),
        });
    }
    Ok(Elaborated {
        registry: registry.clone(),
        params,
        truncations: doc.modes.iter().map(|m| (m.label.clone(), m.truncation)).collect(),
        triple,
        baths,
        drive: DriveSpec {
            mode: doc.drive.mode.clone(),
            amplitude,
            frequency,
        },
        sweeps,
    })
}

/// Parameter overrides placing a document at `Δ_s = Δ_c = (Δ/χ)·χ`.
pub fn detuning_overrides(el: &Elaborated, delta_over_chi: f64) -> Result<[(&'static str, f64); 2], ElabError> {
    let chi = el.chi().ok_or_else(|| ElabError::MissingParameter {
        what: "a Δ/χ sweep".into(),
        name: "chi (or g0 and omega_m)".into(),
    })?;
    for name in ["delta_s", "delta_c"] {
        if el.param(name).is_none() {
            return Err(ElabError::MissingParameter {
                what: "a Δ/χ sweep".into(),
                name: name.into(),
            });
        }
    }
    let d = delta_over_chi * chi;
    Ok([("delta_s", d), ("delta_c", d)])
}
