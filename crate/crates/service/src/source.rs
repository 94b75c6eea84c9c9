//! Turning `.sbp` policies and `.grg` theories into validated theories.

use std::path::Path;

use arbiter_core::rule_lang::{check_source, validate_theory, Diagnostic, Theory};
use arbiter_core::sbp::{compile_policy, parse_policy, Mode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Sbp,
    Grg,
}

impl SourceKind {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "sbp" => Some(SourceKind::Sbp),
            "grg" => Some(SourceKind::Grg),
            _ => None,
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            SourceKind::Sbp => "source.sbp",
            SourceKind::Grg => "source.grg",
        }
    }
}

/// A theory that validated without errors, with any warnings and notes.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub theory: Theory,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses, compiles (for policies) and validates. On failure returns every
/// diagnostic, errors first.
pub fn compile_source(kind: SourceKind, text: &str, mode: Mode) -> Result<Compiled, Vec<Diagnostic>> {
    let theory = match kind {
        SourceKind::Sbp => parse_policy(text).and_then(|doc| compile_policy(&doc, mode)).map_err(|e| vec![Diagnostic::from(&e)])?,
        SourceKind::Grg => match check_source(text) {
            (Some(t), _) => t,
            (None, diags) => return Err(diags),
        },
    };
    let mut diagnostics = validate_theory(&theory);
    diagnostics.sort_by_key(|d| std::cmp::Reverse(d.severity));
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(diagnostics);
    }
    Ok(Compiled { theory, diagnostics })
}

pub fn format_diagnostic(origin: &str, d: &Diagnostic) -> String {
    let position = match (d.line, d.column) {
        (Some(l), Some(c)) => format!("{origin}:{l}:{c}"),
        (Some(l), None) => format!("{origin}:{l}"),
        _ => origin.to_string(),
    };
    let severity = serde_json::to_value(d.severity).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let mut line = format!("{position}: {severity}[{}]: {}", d.code, d.message);
    if !d.rules.is_empty() && !d.rules.iter().all(|r| d.message.contains(r.as_str())) {
        line.push_str(&format!(" ({})", d.rules.join(", ")));
    }
    line
}
