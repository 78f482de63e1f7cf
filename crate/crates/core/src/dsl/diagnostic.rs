use std::fmt;

use super::ast::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    pub hint: Option<String>,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>, hint: Option<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span,
            message: message.into(),
            hint,
        }
    }

    /// Same as `==` but also compares positions.
    pub fn same_as(&self, other: &Diagnostic) -> bool {
        let key = |d: &Diagnostic| {
            (
                d.span.start.line,
                d.span.start.col,
                d.span.start.offset,
                d.span.end.line,
                d.span.end.col,
                d.span.end.offset,
            )
        };
        self == other && key(self) == key(other)
    }

    /// `path:line:col: error: message`, followed by the hint and the source line.
    pub fn render(&self, path: &str, source: &str) -> String {
        let mut out = format!(
            "{path}:{}:{}: {}: {}",
            self.span.start.line, self.span.start.col, self.severity, self.message
        );
        if let Some(line) = source.lines().nth(self.span.start.line.saturating_sub(1)) {
            let width = if self.span.end.line == self.span.start.line {
                self.span.end.col.saturating_sub(self.span.start.col).max(1)
            } else {
                1
            };
            out.push_str(&format!(
                "\n  | {line}\n  | {}{}",
                " ".repeat(self.span.start.col.saturating_sub(1)),
                "^".repeat(width)
            ));
        }
        if let Some(h) = &self.hint {
            out.push_str(&format!("\n  = hint: {h}"));
        }
        out
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.severity, self.message)?;
        if let Some(h) = &self.hint {
            write!(f, " (hint: {h})")?;
        }
        Ok(())
    }
}
