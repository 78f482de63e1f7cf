//! Text format for scenarios.
//!
//! ```text
//! factor coin { heads, tails }
//! agent Fbar
//! prepare coin = sqrt(1/3) heads + sqrt(2/3) tails
//! measure coin by Fbar
//! statement S : possible(Fbar = tails) expect HOLDS
//! ```

mod ast;
mod diagnostic;
mod lexer;
mod lower;
mod parser;
mod printer;

pub use ast::{
    AmpExpr, Atom, Coef, Collapse, Decl, Document, Ident, ModalityKw, OutcomeDef, Pos, PredicateExpr, Rational,
    Span, Spanned, Term,
};
pub use diagnostic::{Diagnostic, Severity};
pub use lexer::{tokenize, Token, TokenKind};
pub use lower::DEFAULT_NAME;
pub use parser::KEYWORDS;

use crate::scenarios::Scenario;

/// Source text with its syntax tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioDoc {
    pub source: String,
    pub document: Document,
}

fn whole(text: &str) -> Span {
    let start = Pos {
        line: 1,
        col: 1,
        offset: 0,
    };
    let mut end = start;
    for c in text.chars() {
        if c == '\n' {
            end.line += 1;
            end.col = 1;
        } else {
            end.col += 1;
        }
    }
    end.offset = text.len();
    Span { start, end }
}

impl ScenarioDoc {
    /// Checks names, bases and the preparation, and builds the scenario.
    pub fn lower(&self) -> Result<Scenario, Vec<Diagnostic>> {
        lower::lower_document(&self.document, whole(&self.source))
    }

    /// Canonical text of the syntax tree.
    pub fn print(&self) -> String {
        printer::print_document(&self.document)
    }

    /// Value of `option name`, if set.
    pub fn name_option(&self) -> Option<String> {
        self.document.decls.iter().find_map(|d| match &d.node {
            Decl::Option { key, values } if key.name == "name" => {
                Some(values.iter().map(Ident::as_str).collect::<Vec<_>>().join(", "))
            }
            _ => None,
        })
    }
}

/// Parses `text`; on failure returns every syntax diagnostic, in source order.
pub fn parse_scenario(text: &str) -> Result<ScenarioDoc, Vec<Diagnostic>> {
    parser::parse_document(text).map(|document| ScenarioDoc {
        source: text.to_string(),
        document,
    })
}

/// Parses and lowers in one go.
pub fn compile(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    parse_scenario(text)?.lower()
}

pub fn print_document(doc: &Document) -> String {
    printer::print_document(doc)
}
