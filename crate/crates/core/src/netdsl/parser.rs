//! Recursive-descent parser with error recovery.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::{Diagnostic, MAX_DIAGNOSTICS};
use crate::slh::ModeKind;

/// Reserved words; none may name a parameter, mode or system.
pub const KEYWORDS: &[&str] = &[
    "slh", "units", "param", "mode", "optical", "mechanical", "system", "S", "L", "H", "identity", "series",
    "feedback", "return", "drive", "amplitude", "frequency", "bath", "rate", "nth", "sweep", "from", "to", "points",
    "A", "Adag", "sqrt",
];

const STATEMENT_STARTS: &[&str] = &["slh", "units", "param", "mode", "system", "series", "feedback", "drive", "bath", "sweep"];

/// Raised to unwind out of a statement after a diagnostic has been recorded.
struct Abort;

type PResult<T> = Result<T, Abort>;

struct Parser {
    toks: Vec<Token>,
    at: usize,
    diags: Vec<Diagnostic>,
    params: HashSet<String>,
    modes: Vec<ModeDecl>,
    systems: HashSet<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn peek_tok(&self) -> &Tok {
        &self.peek().tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek_tok(), Tok::Ident(s) if s == kw)
    }

    fn error_at(&mut self, pos: Pos, message: impl Into<String>, token: &str) {
        if self.diags.len() < MAX_DIAGNOSTICS {
            self.diags.push(Diagnostic::new(pos, message, token));
        }
    }

    fn fail<T>(&mut self, message: impl Into<String>) -> PResult<T> {
        let t = self.peek().clone();
        let shown = if t.tok == Tok::Eof { "end of input".to_string() } else { t.text.clone() };
        self.error_at(t.pos, message, &shown);
        Err(Abort)
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Token> {
        if *self.peek_tok() == want {
            Ok(self.bump())
        } else {
            let found = self.peek_tok().clone();
            self.fail(format!("expected {what}, found `{found}`"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.at_keyword(kw) {
            Ok(self.bump())
        } else {
            let found = self.peek_tok().clone();
            self.fail(format!("expected `{kw}`, found `{found}`"))
        }
    }

    /// A non-reserved identifier.
    fn name(&mut self, what: &str) -> PResult<Token> {
        match self.peek_tok().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(self.bump()),
            Tok::Ident(s) => self.fail(format!("`{s}` is a reserved word and cannot be used as {what}")),
            other => self.fail(format!("expected {what}, found `{other}`")),
        }
    }

    fn integer(&mut self, what: &str) -> PResult<(usize, Pos)> {
        match self.peek_tok().clone() {
            Tok::Number { value, integral: true } if value >= 0.0 && value < 1e15 => {
                let pos = self.bump().pos;
                Ok((value as usize, pos))
            }
            other => self.fail(format!("expected {what} (a nonnegative integer), found `{other}`")),
        }
    }

    /// Skips to the start of the next top-level statement.
    fn synchronize(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek_tok() {
                Tok::Eof => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth == 0 {
                        self.bump();
                        continue;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                Tok::Ident(s) if depth == 0 && STATEMENT_STARTS.contains(&s.as_str()) => return,
                _ => {}
            }
            self.bump();
        }
    }

    fn mode_kind(&self, label: &str) -> Option<ModeKind> {
        self.modes.iter().find(|m| m.label == label).map(|m| m.kind)
    }

    // expr   := term { ("+" | "-") term }
    // term   := unary { ("*" | "/") unary }
    // unary  := "-" unary | atom
    // atom   := REAL | IMAG | NAME | "A" "(" NAME ")" | "Adag" "(" NAME ")"
    //         | "sqrt" "(" expr ")" | "(" expr ")"
    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_tok() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_tok() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek_tok() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn close_paren(&mut self, open: &Token) -> PResult<()> {
        if *self.peek_tok() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            let found = self.peek_tok().clone();
            self.error_at(open.pos, format!("unclosed `(`: expected `)`, found `{found}`"), "(");
            Err(Abort)
        }
    }

    fn ladder_argument(&mut self) -> PResult<String> {
        let open = self.expect(Tok::LParen, "`(`")?;
        let t = self.name("a mode label")?;
        let label = t.text.clone();
        if self.mode_kind(&label).is_none() {
            self.error_at(t.pos, format!("undeclared mode `{label}`"), &label);
            return Err(Abort);
        }
        self.close_paren(&open)?;
        Ok(label)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek_tok().clone() {
            Tok::Number { value, .. } => {
                self.bump();
                Ok(Expr::Real(value))
            }
            Tok::Imag(v) => {
                self.bump();
                Ok(Expr::Imag(v))
            }
            Tok::LParen => {
                let open = self.bump();
                let e = self.expr()?;
                self.close_paren(&open)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "A" => {
                self.bump();
                Ok(Expr::Lower(self.ladder_argument()?))
            }
            Tok::Ident(s) if s == "Adag" => {
                self.bump();
                Ok(Expr::Raise(self.ladder_argument()?))
            }
            Tok::Ident(s) if s == "sqrt" => {
                self.bump();
                let open = self.expect(Tok::LParen, "`(` after `sqrt`")?;
                let e = self.expr()?;
                self.close_paren(&open)?;
                Ok(Expr::Sqrt(Box::new(e)))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let t = self.bump();
                if !self.params.contains(&s) {
                    self.error_at(t.pos, format!("undeclared parameter `{s}`"), &s);
                    return Err(Abort);
                }
                Ok(Expr::Param(s))
            }
            other => self.fail(format!("expected an expression, found `{other}`")),
        }
    }

    /// A scalar expression: parameters and literals only.
    fn scalar_expr(&mut self, what: &str) -> PResult<Expr> {
        let start = self.peek().clone();
        let e = self.expr()?;
        if !e.modes().is_empty() {
            self.error_at(start.pos, format!("type error: {what} must not contain ladder operators"), &start.text);
            return Err(Abort);
        }
        Ok(e)
    }

    fn param(&mut self, doc: &mut Draft) -> PResult<()> {
        self.expect_keyword("param")?;
        let t = self.name("a parameter name")?;
        self.expect(Tok::Eq, "`=`")?;
        let value = self.scalar_expr("a parameter value")?;
        if !self.params.insert(t.text.clone()) {
            self.error_at(t.pos, format!("duplicate declaration of parameter `{}`", t.text), &t.text);
            return Err(Abort);
        }
        doc.params.push(ParamDecl { name: t.text, value });
        Ok(())
    }

    fn mode(&mut self) -> PResult<()> {
        self.expect_keyword("mode")?;
        let t = self.name("a mode label")?;
        let kind = if self.at_keyword("optical") {
            ModeKind::Optical
        } else if self.at_keyword("mechanical") {
            ModeKind::Mechanical
        } else {
            let found = self.peek_tok().clone();
            return self.fail(format!("expected `optical` or `mechanical`, found `{found}`"));
        };
        self.bump();
        let (n, pos) = self.integer("a truncation")?;
        if n < 2 {
            self.error_at(pos, format!("truncation of `{}` must be at least 2", t.text), &n.to_string());
            return Err(Abort);
        }
        if self.mode_kind(&t.text).is_some() {
            self.error_at(t.pos, format!("duplicate declaration of `{}`", t.text), &t.text);
            return Err(Abort);
        }
        self.modes.push(ModeDecl {
            label: t.text,
            kind,
            truncation: n,
        });
        Ok(())
    }

    fn system(&mut self, doc: &mut Draft) -> PResult<()> {
        self.expect_keyword("system")?;
        let t = self.name("a system name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let (mut l, mut h) = (None, None);
        loop {
            match self.peek_tok().clone() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(s) if s == "S" => {
                    self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    self.expect_keyword("identity")?;
                }
                Tok::Ident(s) if s == "L" || s == "H" => {
                    let key = self.bump();
                    self.expect(Tok::Eq, "`=`")?;
                    let start = self.peek().clone();
                    let e = self.expr()?;
                    if s == "L" {
                        for m in e.modes() {
                            if self.mode_kind(m) == Some(ModeKind::Mechanical) {
                                self.error_at(
                                    start.pos,
                                    format!("type error: mechanical mode `{m}` cannot couple to a scattering channel"),
                                    m,
                                );
                                return Err(Abort);
                            }
                        }
                    }
                    let slot = if s == "L" { &mut l } else { &mut h };
                    if slot.replace(e).is_some() {
                        self.error_at(key.pos, format!("`{s}` given twice in system `{}`", t.text), &s);
                    }
                }
                Tok::Eof => return self.fail(format!("unclosed system block `{}`", t.text)),
                other => return self.fail(format!("expected `S`, `L`, `H` or `}}`, found `{other}`")),
            }
        }
        let (Some(l), Some(h)) = (l, h) else {
            self.error_at(t.pos, format!("system `{}` needs both `L` and `H`", t.text), &t.text);
            return Err(Abort);
        };
        if !self.systems.insert(t.text.clone()) {
            self.error_at(t.pos, format!("duplicate declaration of system `{}`", t.text), &t.text);
            return Err(Abort);
        }
        doc.systems.push(SystemDecl { name: t.text, l, h });
        Ok(())
    }

    fn system_ref(&mut self, used: &mut Vec<String>) -> PResult<String> {
        let t = self.name("a system name")?;
        if !self.systems.contains(&t.text) {
            self.error_at(t.pos, format!("undeclared system `{}`", t.text), &t.text);
            return Err(Abort);
        }
        if used.contains(&t.text) {
            self.error_at(t.pos, format!("system `{}` appears twice; only one feedback loop is allowed", t.text), &t.text);
            return Err(Abort);
        }
        used.push(t.text.clone());
        Ok(t.text)
    }

    fn connection(&mut self, doc: &mut Draft) -> PResult<()> {
        let kw = self.bump();
        let mut used = Vec::new();
        let conn = if kw.text == "series" {
            let mut names = vec![self.system_ref(&mut used)?];
            while *self.peek_tok() == Tok::Arrow {
                self.bump();
                names.push(self.system_ref(&mut used)?);
            }
            Connection::Series(names)
        } else {
            let plant = self.system_ref(&mut used)?;
            self.expect(Tok::Arrow, "`->`")?;
            let controller = self.system_ref(&mut used)?;
            self.expect_keyword("return")?;
            let return_coupling = self.expr()?;
            Connection::Feedback {
                plant,
                controller,
                return_coupling,
            }
        };
        if doc.connection.replace(conn).is_some() {
            self.error_at(kw.pos, "only one connection statement is allowed", &kw.text);
        }
        Ok(())
    }

    fn drive(&mut self, doc: &mut Draft) -> PResult<()> {
        let kw = self.expect_keyword("drive")?;
        let t = self.name("a mode label")?;
        match self.mode_kind(&t.text) {
            None => {
                self.error_at(t.pos, format!("undeclared mode `{}`", t.text), &t.text);
                return Err(Abort);
            }
            Some(ModeKind::Mechanical) => {
                self.error_at(t.pos, format!("type error: cannot drive mechanical mode `{}`", t.text), &t.text);
                return Err(Abort);
            }
            Some(ModeKind::Optical) => {}
        }
        self.expect_keyword("amplitude")?;
        let amplitude = self.scalar_expr("a drive amplitude")?;
        let frequency = if self.at_keyword("frequency") {
            self.bump();
            Some(self.scalar_expr("a drive frequency")?)
        } else {
            None
        };
        let d = DriveDecl {
            mode: t.text,
            amplitude,
            frequency,
        };
        if doc.drive.replace(d).is_some() {
            self.error_at(kw.pos, "only one drive statement is allowed", "drive");
        }
        Ok(())
    }

    fn bath(&mut self, doc: &mut Draft) -> PResult<()> {
        self.expect_keyword("bath")?;
        let t = self.name("a mode label")?;
        if self.mode_kind(&t.text).is_none() {
            self.error_at(t.pos, format!("undeclared mode `{}`", t.text), &t.text);
            return Err(Abort);
        }
        self.expect_keyword("rate")?;
        let rate = self.scalar_expr("a bath rate")?;
        let n_th = if self.at_keyword("nth") {
            self.bump();
            Some(self.scalar_expr("a thermal occupation")?)
        } else {
            None
        };
        doc.baths.push(BathDecl { mode: t.text, rate, n_th });
        Ok(())
    }

    fn sweep(&mut self, doc: &mut Draft) -> PResult<()> {
        self.expect_keyword("sweep")?;
        let t = self.name("a sweep variable")?;
        self.expect_keyword("from")?;
        let start = self.scalar_expr("a sweep bound")?;
        self.expect_keyword("to")?;
        let stop = self.scalar_expr("a sweep bound")?;
        self.expect_keyword("points")?;
        let (points, pos) = self.integer("a point count")?;
        if points == 0 {
            self.error_at(pos, "a sweep needs at least one point", "0");
            return Err(Abort);
        }
        doc.sweeps.push(SweepDecl {
            variable: t.text,
            start,
            stop,
            points,
        });
        Ok(())
    }

    fn header(&mut self, doc: &mut Draft) -> PResult<()> {
        if self.at_keyword("slh") {
            self.bump();
            let (v, pos) = self.integer("a format version")?;
            if v != 1 {
                self.error_at(pos, format!("unsupported format version {v}"), &v.to_string());
            }
            doc.version = v as u32;
        }
        if self.at_keyword("units") {
            self.bump();
            let t = self.name("a unit name")?;
            doc.units = t.text;
        }
        Ok(())
    }

    fn statement(&mut self, doc: &mut Draft) -> PResult<()> {
        let kw = match self.peek_tok() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        match kw.as_str() {
            "param" => self.param(doc),
            "mode" => self.mode(),
            "system" => self.system(doc),
            "series" | "feedback" => self.connection(doc),
            "drive" => self.drive(doc),
            "bath" => self.bath(doc),
            "sweep" => self.sweep(doc),
            "slh" | "units" => self.fail("the header must come first"),
            _ => {
                let found = self.peek_tok().clone();
                self.fail(format!("expected a statement, found `{found}`"))
            }
        }
    }
}

#[derive(Default)]
struct Draft {
    version: u32,
    units: String,
    params: Vec<ParamDecl>,
    systems: Vec<SystemDecl>,
    connection: Option<Connection>,
    drive: Option<DriveDecl>,
    baths: Vec<BathDecl>,
    sweeps: Vec<SweepDecl>,
}

/// Parses and validates a document, collecting up to
/// [`MAX_DIAGNOSTICS`] diagnostics.
pub fn parse(src: &str) -> Result<NetworkDoc, Vec<Diagnostic>> {
    let (toks, lex_diags) = tokenize(src);
    let mut p = Parser {
        toks,
        at: 0,
        diags: lex_diags,
        params: HashSet::new(),
        modes: Vec::new(),
        systems: HashSet::new(),
    };
    p.diags.truncate(MAX_DIAGNOSTICS);
    let mut doc = Draft {
        version: 1,
        units: "gamma".into(),
        ..Draft::default()
    };
    if p.header(&mut doc).is_err() {
        p.synchronize();
    }
    while *p.peek_tok() != Tok::Eof && p.diags.len() < MAX_DIAGNOSTICS {
        let before = p.at;
        if p.statement(&mut doc).is_err() {
            if p.at == before {
                p.bump();
            }
            p.synchronize();
        }
    }
    let origin = Pos { line: 1, col: 1 };
    let saw = |kw: &str| p.toks.iter().any(|t| t.tok == Tok::Ident(kw.to_string()));
    let (saw_system, saw_drive) = (saw("system"), saw("drive"));
    if !saw_system {
        p.error_at(origin, "no subsystem declared", "");
    } else if doc.systems.len() > 1 && doc.connection.is_none() {
        p.error_at(origin, "several systems are declared but no connection joins them", "");
    }
    if let Some(conn) = &doc.connection {
        let used: Vec<&String> = match conn {
            Connection::Series(n) => n.iter().collect(),
            Connection::Feedback { plant, controller, .. } => vec![plant, controller],
        };
        for s in &doc.systems {
            if !used.contains(&&s.name) {
                p.error_at(origin, format!("system `{}` is not connected", s.name), &s.name);
            }
        }
    }
    if doc.drive.is_none() && !saw_drive {
        let end = p.peek().pos;
        p.error_at(end, "no drive statement", "");
    }
    if !p.diags.is_empty() {
        p.diags.sort_by_key(|d| d.pos);
        return Err(p.diags);
    }
    Ok(NetworkDoc {
        version: doc.version,
        units: doc.units,
        params: doc.params,
        modes: p.modes,
        systems: doc.systems,
        connection: doc.connection,
        drive: doc.drive.expect("checked above"),
        baths: doc.baths,
        sweeps: doc.sweeps,
    })
}
