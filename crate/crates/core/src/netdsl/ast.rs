//! Document tree and its canonical printer.

use std::fmt;

use crate::slh::ModeKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Real(f64),
    Imag(f64),
    Param(String),
    /// `A(mode)`
    Lower(String),
    /// `Adag(mode)`
    Raise(String),
    Sqrt(Box<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

const UNARY: u8 = 3;
const ATOM: u8 = 4;

impl Expr {
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => UNARY,
            _ => ATOM,
        }
    }

    /// Parameter names referenced, in order of first appearance.
    pub fn params(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                if !out.contains(&p.as_str()) {
                    out.push(p.as_str());
                }
            }
        });
        out
    }

    /// Mode labels referenced through ladder operators.
    pub fn modes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Lower(m) | Expr::Raise(m) = e {
                if !out.contains(&m.as_str()) {
                    out.push(m.as_str());
                }
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Sqrt(x) | Expr::Neg(x) => x.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            _ => {}
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // Rust's shortest round-trip formatting; integral values keep a point so
    // they re-lex as reals.
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{v:.1}")
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Real(v) => write_number(f, *v),
            Expr::Imag(v) => {
                write_number(f, *v)?;
                f.write_str("i")
            }
            Expr::Param(p) => f.write_str(p),
            Expr::Lower(m) => write!(f, "A({m})"),
            Expr::Raise(m) => write!(f, "Adag({m})"),
            Expr::Sqrt(x) => write!(f, "sqrt({x})"),
            Expr::Neg(x) => {
                if x.precedence() < UNARY {
                    write!(f, "-({x})")
                } else {
                    write!(f, "-{x}")
                }
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // Left-associative: an equal-precedence right operand needs
                // parentheses.
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub value: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeDecl {
    pub label: String,
    pub kind: ModeKind,
    pub truncation: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemDecl {
    pub name: String,
    pub l: Expr,
    pub h: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Connection {
    /// Output of each system feeds the next.
    Series(Vec<String>),
    Feedback {
        plant: String,
        controller: String,
        return_coupling: Expr,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveDecl {
    pub mode: String,
    pub amplitude: Expr,
    pub frequency: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathDecl {
    pub mode: String,
    pub rate: Expr,
    pub n_th: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepDecl {
    pub variable: String,
    pub start: Expr,
    pub stop: Expr,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkDoc {
    pub version: u32,
    pub units: String,
    pub params: Vec<ParamDecl>,
    pub modes: Vec<ModeDecl>,
    pub systems: Vec<SystemDecl>,
    pub connection: Option<Connection>,
    pub drive: DriveDecl,
    pub baths: Vec<BathDecl>,
    pub sweeps: Vec<SweepDecl>,
}

impl fmt::Display for NetworkDoc {
    /// Canonical layout: header, parameters, modes, systems, connection,
    /// drive, baths, sweeps.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "slh {}", self.version)?;
        writeln!(f, "units {}", self.units)?;
        if !self.params.is_empty() {
            writeln!(f)?;
            for p in &self.params {
                writeln!(f, "param {} = {}", p.name, p.value)?;
            }
        }
        writeln!(f)?;
        for m in &self.modes {
            writeln!(f, "mode {} {} {}", m.label, m.kind, m.truncation)?;
        }
        for s in &self.systems {
            writeln!(f)?;
            writeln!(f, "system {} {{", s.name)?;
            writeln!(f, "    S = identity")?;
            writeln!(f, "    L = {}", s.l)?;
            writeln!(f, "    H = {}", s.h)?;
            writeln!(f, "}}")?;
        }
        writeln!(f)?;
        match &self.connection {
            Some(Connection::Series(names)) => writeln!(f, "series {}", names.join(" -> "))?,
            Some(Connection::Feedback {
                plant,
                controller,
                return_coupling,
            }) => writeln!(f, "feedback {plant} -> {controller} return {return_coupling}")?,
            None => {}
        }
        write!(f, "drive {} amplitude {}", self.drive.mode, self.drive.amplitude)?;
        if let Some(w) = &self.drive.frequency {
            write!(f, " frequency {w}")?;
        }
        writeln!(f)?;
        for b in &self.baths {
            write!(f, "bath {} rate {}", b.mode, b.rate)?;
            if let Some(n) = &b.n_th {
                write!(f, " nth {n}")?;
            }
            writeln!(f)?;
        }
        for s in &self.sweeps {
            writeln!(f, "sweep {} from {} to {} points {}", s.variable, s.start, s.stop, s.points)?;
        }
        Ok(())
    }
}
