use alloc::string::String;
use core::fmt;

use crate::syntax::Span;

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

/// A located error report from the parser or the type checker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub severity: Severity,
    /// Stable kebab-case identifier, e.g. `write-through-readonly`.
    pub code: &'static str,
    pub message: String,
    /// Typing or subtyping rule implicated, when there is one.
    pub rule: Option<&'static str>,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            span,
            severity: Severity::Error,
            code,
            message: message.into(),
            rule: None,
            expected: None,
            actual: None,
        }
    }

    pub fn with_rule(mut self, rule: &'static str) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn with_types(mut self, expected: impl Into<String>, actual: impl Into<String>) -> Self {
        self.expected = Some(expected.into());
        self.actual = Some(actual.into());
        self
    }

    /// `file:line:col: error[code]: message`, one line.
    pub fn render(&self, file: &str, src: &str) -> String {
        let (line, col, _) = self.span.line_col(src);
        alloc::format!("{file}:{line}:{col}: {self}")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}", self.severity, self.code, self.message)?;
        if let Some(rule) = self.rule {
            write!(f, " (rule {rule})")?;
        }
        if let (Some(e), Some(a)) = (&self.expected, &self.actual) {
            write!(f, "; expected `{e}`, found `{a}`")?;
        }
        Ok(())
    }
}
