// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use super::ast::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// Which rule a diagnostic reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Code {
    Syntax,
    UnknownType,
    Duplicate,
    Undefined,
    Type,
    Pointer,
    VariableArray,
    LoopBound,
    LoopForm,
    LoopVarMutated,
    UnboundedLoop,
    Recursion,
    EarlyExit,
    IndexBounds,
    DynamicIndex,
    NodeLimit,
    Entry,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Syntax => "SYNTAX",
            Code::UnknownType => "UNKNOWN_TYPE",
            Code::Duplicate => "DUPLICATE",
            Code::Undefined => "UNDEFINED",
            Code::Type => "TYPE",
            Code::Pointer => "POINTER",
            Code::VariableArray => "VARIABLE_ARRAY",
            Code::LoopBound => "LOOP_BOUND",
            Code::LoopForm => "LOOP_FORM",
            Code::LoopVarMutated => "LOOP_VAR_MUTATED",
            Code::UnboundedLoop => "UNBOUNDED_LOOP",
            Code::Recursion => "RECURSION",
            Code::EarlyExit => "EARLY_EXIT",
            Code::IndexBounds => "INDEX_BOUNDS",
            Code::DynamicIndex => "DYNAMIC_INDEX",
            Code::NodeLimit => "NODE_LIMIT",
            Code::Entry => "ENTRY",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, code, span, message: message.into() }
    }

    pub fn warning(code: Code, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, code, span, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: error[CODE]: message`
    pub fn render(&self, file: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!("{file}:{}:{}: {sev}[{}]: {}", self.span.line, self.span.col, self.code, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("<input>"))
    }
}
