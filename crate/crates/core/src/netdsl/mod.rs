//! A small text format for describing feedback networks.
//!
//! See `docs/grammar.md` for the grammar. [`parse`] collects every error it
//! can recover from; [`elaborate`] turns a document into a composed SLH
//! triple and master-equation channels.

pub mod ast;
mod elaborate;
pub mod generate;
mod lexer;
mod parser;
mod run;

use std::fmt;

pub use ast::NetworkDoc;
pub use elaborate::{detuning_overrides, elaborate, elaborate_with, DriveSpec, ElabError, Elaborated, SweepPlan};
pub use lexer::Pos;
pub use parser::parse;
pub use run::{sweep_document, DocumentSweep};

/// Upper bound on diagnostics reported for one document.
pub const MAX_DIAGNOSTICS: usize = 20;

/// The coherent-feedback network of the optomechanical example, in the
/// rotating frame of a controller drive.
pub const FIG3_DOCUMENT: &str = include_str!("../../data/paper_fig3.slh");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
    /// Offending source text, empty at end of input.
    pub token: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, message: impl Into<String>, token: &str) -> Self {
        Self {
            pos,
            message: message.into(),
            token: token.to_string(),
        }
    }

    /// The message followed by the source line and a caret under the
    /// offending column.
    pub fn render(&self, src: &str) -> String {
        let line = src.lines().nth(self.pos.line.saturating_sub(1)).unwrap_or("");
        let width = self.token.chars().count().max(1);
        format!(
            "{self}\n  {line}\n  {}{}",
            " ".repeat(self.pos.col.saturating_sub(1)),
            "^".repeat(width)
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// Renders every diagnostic against `src`, separated by blank lines.
pub fn render_all(diags: &[Diagnostic], src: &str) -> String {
    diags.iter().map(|d| d.render(src)).collect::<Vec<_>>().join("\n\n")
}
