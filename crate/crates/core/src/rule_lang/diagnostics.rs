use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ComplementPair, Literal, ParseError, Theory, TheoryError};
use crate::binding::{eval_comparison, match_atom, Bindings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// One finding about a source file or theory. Shared by the CLI and the API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl Diagnostic {
    pub fn new(severity: Severity, code: &str, message: impl Into<String>) -> Self {
        Diagnostic { severity, code: code.to_string(), message: message.into(), rules: Vec::new(), line: None, column: None }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Diagnostic::new(Severity::Error, code, message)
    }

    pub fn with_rules(mut self, rules: impl IntoIterator<Item = String>) -> Self {
        self.rules = rules.into_iter().collect();
        self
    }

    pub fn at(mut self, line: usize, column: usize) -> Self {
        self.line = Some(line);
        self.column = Some(column);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "{l}:{c}: ")?;
        }
        write!(f, "{} [{}]: {}", self.severity, self.code, self.message)
    }
}

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Self {
        Diagnostic::error("ParseError", e.to_string()).at(e.line, e.column)
    }
}

impl From<&TheoryError> for Diagnostic {
    fn from(e: &TheoryError) -> Self {
        match e {
            TheoryError::Parse(p) => p.into(),
            TheoryError::DuplicateLabel { label } => Diagnostic::error(e.code(), e.to_string()).with_rules([label.clone()]),
            TheoryError::DanglingPreferTarget { rule, .. }
            | TheoryError::RangeRestrictionViolation { rule, .. }
            | TheoryError::Stratification { rule, .. }
            | TheoryError::SelfPreference { rule }
            | TheoryError::DerivedPredicateInPriority { rule, .. } => {
                Diagnostic::error(e.code(), e.to_string()).with_rules([rule.clone()])
            }
            TheoryError::NonGroundAbducible(_) | TheoryError::UnknownLabel(_) => Diagnostic::error(e.code(), e.to_string()),
        }
    }
}

type PredKey = (String, usize);

fn key(atom: &super::Atom) -> PredKey {
    (atom.predicate.clone(), atom.arity())
}

/// Static checks on a structurally valid theory. Never fails; findings are
/// reported as warnings or info.
pub fn validate_theory(theory: &Theory) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let rules = theory.rules();

    let used_in_bodies: BTreeSet<PredKey> = rules.iter().flat_map(|r| r.body_atoms()).map(key).collect();
    let complement_keys: BTreeSet<PredKey> =
        theory.complements().iter().flat_map(|ComplementPair(a, b)| [key(a), key(b)]).collect();

    // Terminal conclusions look like options and need a declared conflict.
    let mut seen = BTreeSet::new();
    for rule in rules {
        let Some(head) = rule.head.domain() else { continue };
        let k = key(head);
        if used_in_bodies.contains(&k) || complement_keys.contains(&k) || !seen.insert(k.clone()) {
            continue;
        }
        out.push(
            Diagnostic::new(
                Severity::Warning,
                "MissingComplement",
                format!("conclusion `{}/{}` is never used as a premise and has no complement", k.0, k.1),
            )
            .with_rules(rules.iter().filter(|r| r.head.domain().map(key) == Some(k.clone())).map(|r| r.label.clone())),
        );
    }

    for ComplementPair(a, b) in theory.complements() {
        let side = |pattern: &super::Atom| -> Vec<&str> {
            rules
                .iter()
                .filter(|r| r.head.domain().is_some_and(|h| key(h) == key(pattern)))
                .map(|r| r.label.as_str())
                .collect()
        };
        let (left, right) = (side(a), side(b));
        let mut unresolved = Vec::new();
        for l in &left {
            for r in &right {
                let resolved = rules.iter().any(|p| {
                    matches!(p.prefer_target(), Some((x, y)) if (x == *l && y == *r) || (x == *r && y == *l))
                });
                if !resolved {
                    unresolved.push(format!("{l} vs {r}"));
                }
            }
        }
        if !unresolved.is_empty() {
            out.push(
                Diagnostic::new(
                    Severity::Info,
                    "UnresolvedConflict",
                    format!(
                        "conflict between `{a}` and `{b}` has no preference for: {} (resolved only if their scenarios are disjoint)",
                        unresolved.join(", ")
                    ),
                )
                .with_rules(unresolved),
            );
        }
    }

    for abd in theory.abducibles() {
        let used = rules.iter().flat_map(|r| &r.premises).any(|p| match_atom(p, abd, &mut Bindings::new()));
        if !used {
            out.push(Diagnostic::new(
                Severity::Warning,
                "UnusedAbducible",
                format!("abducible `{abd}` is not a premise of any rule"),
            ));
        }
    }

    let derived: BTreeSet<PredKey> = rules.iter().filter_map(|r| r.head.domain()).map(key).collect();
    let mut reachable_preds: BTreeSet<PredKey> = BTreeSet::new();
    let mut reachable = vec![false; rules.len()];
    let constant_false: Vec<bool> = rules
        .iter()
        .map(|r| {
            r.conditions.iter().any(|c| match c {
                Literal::Builtin(cmp, l, rhs) if c.is_ground() => {
                    !matches!(eval_comparison(*cmp, l, rhs, &Bindings::new()), Ok(true))
                }
                _ => false,
            })
        })
        .collect();
    loop {
        let mut changed = false;
        for (i, rule) in rules.iter().enumerate() {
            if reachable[i] || constant_false[i] {
                continue;
            }
            let premises_ok = rule.premises.iter().all(|p| {
                let k = key(p);
                !derived.contains(&k)
                    || reachable_preds.contains(&k)
                    || theory.abducibles().iter().any(|a| match_atom(p, a, &mut Bindings::new()))
            });
            let conditions_ok = rule.conditions.iter().filter_map(Literal::domain).all(|a| {
                let k = key(a);
                !derived.contains(&k) || reachable_preds.contains(&k)
            });
            if premises_ok && conditions_ok {
                reachable[i] = true;
                changed = true;
                if let Some(h) = rule.head.domain() {
                    reachable_preds.insert(key(h));
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (rule, ok) in rules.iter().zip(&reachable) {
        if !ok {
            out.push(
                Diagnostic::new(
                    Severity::Warning,
                    "UnreachableRule",
                    format!("rule `{}` can never fire: its conditions cannot be met by any input", rule.label),
                )
                .with_rules([rule.label.clone()]),
            );
        }
    }
    out
}
