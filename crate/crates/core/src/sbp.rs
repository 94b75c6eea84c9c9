//! Scenario-based preference policies: the authoring format, its compiler
//! into rule theories, and the application metadata derived from a theory.
//!
//! A policy file is line oriented with four sections:
//!
//! ```text
//! POLICY salary_negotiation
//! OPTIONS
//!   accept
//!   refuse
//! SCENARIOS
//!   low: the offered salary is low
//!     advanced: offered_salary(O), expected_salary(E), O=<0.7*E
//! STATEMENTS
//!   s2: low => refuse
//! PREFERENCES
//!   pr1: s3 > s4
//!   pr2: s4 > s3 when increase
//!   m1: pr2 > pr1
//! ```
//!
//! `#` starts a comment. An `advanced:` line refines the scenario above it;
//! `advanced: propositional` keeps the scenario's sentence atom in advanced
//! mode as well.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rule_lang::{parse_body, Atom, Literal, RuleClause, Term, Theory, TheoryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Basic,
    Advanced,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Mode::Basic),
            "advanced" => Ok(Mode::Advanced),
            other => Err(format!("unknown mode `{other}` (expected basic or advanced)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Basic => "basic",
            Mode::Advanced => "advanced",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdvancedCondition {
    /// The scenario stays propositional in advanced mode.
    Propositional,
    Literals(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDef {
    pub id: String,
    pub basic_text: String,
    pub advanced: Option<AdvancedCondition>,
}

impl ScenarioDef {
    /// The propositional atom for the sentence: lowercased, every run of
    /// non-alphanumerics collapsed to one underscore.
    pub fn atom(&self) -> String {
        propositionalize(&self.basic_text)
    }
}

pub fn propositionalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionStatement {
    pub id: String,
    pub scenario: String,
    pub option: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceStatement {
    pub id: String,
    pub stronger: String,
    pub weaker: String,
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDocument {
    pub name: String,
    pub options: Vec<String>,
    pub scenarios: BTreeMap<String, ScenarioDef>,
    /// Scenario ids in declaration order.
    pub scenario_order: Vec<String>,
    pub statements: Vec<DecisionStatement>,
    pub preferences: Vec<PreferenceStatement>,
}

impl PolicyDocument {
    /// Level of a statement (0) or preference (1 + level of its targets).
    pub fn level_of(&self, id: &str) -> Option<usize> {
        if self.statements.iter().any(|s| s.id == id) {
            return Some(0);
        }
        let pref = self.preferences.iter().find(|p| p.id == id)?;
        self.level_of(&pref.stronger).map(|l| l + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("a policy needs at least two options, found {0}")]
    TooFewOptions(usize),
    #[error("line {line}: unknown {kind} `{id}`")]
    UnknownReference { line: usize, kind: &'static str, id: String },
    #[error("line {line}: `{id}` is declared more than once")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: preference `{id}` relates `{stronger}` (level {stronger_level}) and `{weaker}` (level {weaker_level})")]
    LevelMismatch { line: usize, id: String, stronger: String, weaker: String, stronger_level: usize, weaker_level: usize },
    #[error("scenario `{0}` has no advanced condition")]
    MissingAdvancedCondition(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl PolicyError {
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::Parse { .. } => "ParseError",
            PolicyError::TooFewOptions(_) => "ParseError",
            PolicyError::UnknownReference { .. } => "UnknownReference",
            PolicyError::DuplicateId { .. } => "DuplicateId",
            PolicyError::LevelMismatch { .. } => "LevelMismatch",
            PolicyError::MissingAdvancedCondition(_) => "MissingAdvancedCondition",
            PolicyError::Theory(e) => e.code(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            PolicyError::Parse { line, .. }
            | PolicyError::UnknownReference { line, .. }
            | PolicyError::DuplicateId { line, .. }
            | PolicyError::LevelMismatch { line, .. } => Some(*line),
            _ => None,
        }
    }
}

impl From<&PolicyError> for crate::rule_lang::Diagnostic {
    fn from(e: &PolicyError) -> Self {
        match e {
            PolicyError::Theory(t) => t.into(),
            _ => {
                let d = crate::rule_lang::Diagnostic::error(e.code(), e.to_string());
                match e.line() {
                    Some(l) => d.at(l, 1),
                    None => d,
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Options,
    Scenarios,
    Statements,
    Preferences,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn split_labelled(line: &str, lineno: usize) -> Result<(&str, &str), PolicyError> {
    let (id, rest) = line.split_once(':').ok_or_else(|| PolicyError::Parse {
        line: lineno,
        message: format!("expected `id: ...`, found `{line}`"),
    })?;
    let id = id.trim();
    if !is_identifier(id) {
        return Err(PolicyError::Parse { line: lineno, message: format!("`{id}` is not a valid identifier") });
    }
    Ok((id, rest.trim()))
}

/// Parses and validates a policy document.
pub fn parse_policy(source: &str) -> Result<PolicyDocument, PolicyError> {
    let mut name = None;
    let mut section = None;
    let mut options: Vec<String> = Vec::new();
    let mut scenarios = BTreeMap::new();
    let mut scenario_order: Vec<String> = Vec::new();
    let mut statements = Vec::new();
    let mut preferences = Vec::new();
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    // (line, kind, id) references to resolve once everything is declared.
    let mut refs: Vec<(usize, &'static str, String)> = Vec::new();
    let mut pref_lines = BTreeMap::new();

    let mut claim = |id: &str, line: usize| -> Result<(), PolicyError> {
        if ids.insert(id.to_string(), line).is_some() {
            return Err(PolicyError::DuplicateId { line, id: id.to_string() });
        }
        Ok(())
    };

    for (idx, raw) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("POLICY") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                let n = rest.trim();
                if !is_identifier(n) {
                    return Err(PolicyError::Parse { line: lineno, message: format!("invalid policy name `{n}`") });
                }
                name = Some(n.to_string());
                continue;
            }
        }
        match line {
            "OPTIONS" => section = Some(Section::Options),
            "SCENARIOS" => section = Some(Section::Scenarios),
            "STATEMENTS" => section = Some(Section::Statements),
            "PREFERENCES" => section = Some(Section::Preferences),
            _ => match section {
                None => {
                    return Err(PolicyError::Parse {
                        line: lineno,
                        message: format!("expected POLICY or a section header, found `{line}`"),
                    })
                }
                Some(Section::Options) => {
                    for opt in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        if !is_identifier(opt) {
                            return Err(PolicyError::Parse {
                                line: lineno,
                                message: format!("`{opt}` is not a valid option identifier"),
                            });
                        }
                        if options.iter().any(|o| o == opt) {
                            return Err(PolicyError::DuplicateId { line: lineno, id: opt.to_string() });
                        }
                        options.push(opt.to_string());
                    }
                }
                Some(Section::Scenarios) => {
                    if let Some(cond) = line.strip_prefix("advanced:") {
                        let Some(last) = scenario_order.last() else {
                            return Err(PolicyError::Parse {
                                line: lineno,
                                message: "`advanced:` must follow a scenario".into(),
                            });
                        };
                        let scenario: &mut ScenarioDef = scenarios.get_mut(last).expect("declared scenario");
                        if scenario.advanced.is_some() {
                            return Err(PolicyError::Parse {
                                line: lineno,
                                message: format!("scenario `{last}` already has an advanced condition"),
                            });
                        }
                        let cond = cond.trim();
                        scenario.advanced = Some(if cond == "propositional" {
                            AdvancedCondition::Propositional
                        } else {
                            let lits = parse_body(cond).map_err(|e| PolicyError::Parse {
                                line: lineno,
                                message: format!("in advanced condition: expected {}, found {}", e.expected.join(" or "), e.found),
                            })?;
                            check_condition(&lits, last, lineno)?;
                            AdvancedCondition::Literals(lits)
                        });
                        continue;
                    }
                    let (id, text) = split_labelled(line, lineno)?;
                    if text.is_empty() || propositionalize(text).is_empty() {
                        return Err(PolicyError::Parse { line: lineno, message: format!("scenario `{id}` has no text") });
                    }
                    let atom = propositionalize(text);
                    if !is_identifier(&atom) {
                        return Err(PolicyError::Parse {
                            line: lineno,
                            message: format!("scenario text must start with a letter, giving atom `{atom}`"),
                        });
                    }
                    claim(id, lineno)?;
                    scenarios.insert(
                        id.to_string(),
                        ScenarioDef { id: id.to_string(), basic_text: text.to_string(), advanced: None },
                    );
                    scenario_order.push(id.to_string());
                }
                Some(Section::Statements) => {
                    let (id, rest) = split_labelled(line, lineno)?;
                    let (scenario, option) = rest.split_once("=>").ok_or_else(|| PolicyError::Parse {
                        line: lineno,
                        message: format!("expected `scenario => option`, found `{rest}`"),
                    })?;
                    let (scenario, option) = (scenario.trim(), option.trim());
                    claim(id, lineno)?;
                    refs.push((lineno, "scenario", scenario.to_string()));
                    refs.push((lineno, "option", option.to_string()));
                    statements.push(DecisionStatement {
                        id: id.to_string(),
                        scenario: scenario.to_string(),
                        option: option.to_string(),
                    });
                }
                Some(Section::Preferences) => {
                    let (id, rest) = split_labelled(line, lineno)?;
                    let (relation, context) = match rest.split_once(" when ") {
                        Some((r, c)) => (r.trim(), Some(c.trim().to_string())),
                        None => (rest, None),
                    };
                    let (stronger, weaker) = relation.split_once('>').ok_or_else(|| PolicyError::Parse {
                        line: lineno,
                        message: format!("expected `stronger > weaker [when scenario]`, found `{rest}`"),
                    })?;
                    let (stronger, weaker) = (stronger.trim().to_string(), weaker.trim().to_string());
                    if stronger == weaker {
                        return Err(PolicyError::Parse {
                            line: lineno,
                            message: format!("preference `{id}` relates `{stronger}` to itself"),
                        });
                    }
                    claim(id, lineno)?;
                    refs.push((lineno, "statement or preference", stronger.clone()));
                    refs.push((lineno, "statement or preference", weaker.clone()));
                    if let Some(c) = &context {
                        refs.push((lineno, "scenario", c.clone()));
                    }
                    pref_lines.insert(id.to_string(), lineno);
                    preferences.push(PreferenceStatement { id: id.to_string(), stronger, weaker, context });
                }
            },
        }
    }

    let name = name.ok_or(PolicyError::Parse { line: 1, message: "missing `POLICY <name>` line".into() })?;
    if options.len() < 2 {
        return Err(PolicyError::TooFewOptions(options.len()));
    }

    let statement_ids: BTreeSet<&str> = statements.iter().map(|s| s.id.as_str()).collect();
    let pref_ids: BTreeSet<&str> = preferences.iter().map(|p| p.id.as_str()).collect();
    for (line, kind, id) in &refs {
        let ok = match *kind {
            "scenario" => scenarios.contains_key(id),
            "option" => options.contains(id),
            _ => statement_ids.contains(id.as_str()) || pref_ids.contains(id.as_str()),
        };
        if !ok {
            return Err(PolicyError::UnknownReference { line: *line, kind, id: id.clone() });
        }
    }

    let doc = PolicyDocument { name, options, scenarios, scenario_order, statements, preferences };
    for pref in &doc.preferences {
        let line = pref_lines[&pref.id];
        let (ls, lw) = match (level_guarded(&doc, &pref.stronger), level_guarded(&doc, &pref.weaker)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(PolicyError::Parse { line, message: format!("preference `{}` is part of a cycle", pref.id) })
            }
        };
        if ls != lw {
            return Err(PolicyError::LevelMismatch {
                line,
                id: pref.id.clone(),
                stronger: pref.stronger.clone(),
                weaker: pref.weaker.clone(),
                stronger_level: ls,
                weaker_level: lw,
            });
        }
    }
    Ok(doc)
}

// Cycle-safe level lookup.
fn level_guarded(doc: &PolicyDocument, id: &str) -> Option<usize> {
    let mut current = id;
    let mut depth = 0;
    while doc.statements.iter().all(|s| s.id != current) {
        let pref = doc.preferences.iter().find(|p| p.id == current)?;
        current = &pref.stronger;
        depth += 1;
        if depth > doc.preferences.len() {
            return None;
        }
    }
    Some(depth)
}

fn check_condition(lits: &[Literal], scenario: &str, line: usize) -> Result<(), PolicyError> {
    let mut bound = BTreeSet::new();
    let mut used = BTreeSet::new();
    for lit in lits {
        match lit {
            Literal::Domain(a) => a.collect_variables(&mut bound),
            Literal::Builtin(..) => lit.collect_variables(&mut used),
            Literal::Prefer(..) => unreachable!("parse_body rejects prefer"),
        }
    }
    match used.difference(&bound).next() {
        Some(v) => Err(PolicyError::Parse {
            line,
            message: format!("variable `{v}` in scenario `{scenario}` does not occur in a domain condition"),
        }),
        None => Ok(()),
    }
}

fn label_prefix(level: usize) -> String {
    match level {
        0 => "r".into(),
        1 => "p".into(),
        2 => "c".into(),
        n => format!("m{n}_"),
    }
}

/// Compiles a policy into a theory. Statements become level-0 rules, each
/// preference a `prefer` rule one level above its targets. Labels are
/// numbered per level in declaration order (`r1..`, `p1..`, `c1..`).
pub fn compile_policy(doc: &PolicyDocument, mode: Mode) -> Result<Theory, PolicyError> {
    let condition = |scenario_id: &str| -> Result<Vec<Literal>, PolicyError> {
        let scenario = &doc.scenarios[scenario_id];
        let prop = || vec![Literal::Domain(Atom::prop(scenario.atom()))];
        match (mode, &scenario.advanced) {
            (Mode::Basic, _) | (Mode::Advanced, Some(AdvancedCondition::Propositional)) => Ok(prop()),
            (Mode::Advanced, Some(AdvancedCondition::Literals(lits))) => Ok(lits.clone()),
            (Mode::Advanced, None) => Err(PolicyError::MissingAdvancedCondition(scenario_id.to_string())),
        }
    };

    let mut labels: BTreeMap<&str, String> = BTreeMap::new();
    let mut counters: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next_label = |level: usize| {
        let n = counters.entry(level).or_insert(0);
        *n += 1;
        format!("{}{}", label_prefix(level), n)
    };

    let mut rules = Vec::new();
    for st in &doc.statements {
        let label = next_label(0);
        labels.insert(&st.id, label.clone());
        rules.push(RuleClause::new(label, Literal::Domain(Atom::prop(&st.option)), Vec::new(), condition(&st.scenario)?));
    }
    // Preferences in order of level, then declaration.
    let mut prefs: Vec<(usize, &PreferenceStatement)> =
        doc.preferences.iter().map(|p| (doc.level_of(&p.id).unwrap_or(1), p)).collect();
    prefs.sort_by_key(|(level, _)| *level);
    for (level, pref) in prefs {
        let label = next_label(level);
        labels.insert(&pref.id, label.clone());
        let conditions = match &pref.context {
            Some(ctx) => condition(ctx)?,
            None => Vec::new(),
        };
        rules.push(RuleClause::new(
            label,
            Literal::Prefer(labels[pref.stronger.as_str()].clone(), labels[pref.weaker.as_str()].clone()),
            Vec::new(),
            conditions,
        ));
    }
    let mut complements = Vec::new();
    for (i, a) in doc.options.iter().enumerate() {
        for b in &doc.options[i + 1..] {
            complements.push((Atom::prop(a), Atom::prop(b)));
        }
    }
    Ok(Theory::new(rules, complements, Vec::new())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Propositional,
    Numeric,
    /// Any other input predicate; supplied as ground literal text.
    Relational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioElement {
    pub id: String,
    pub kind: ElementKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub arity: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ApplicationMetadata {
    pub options: Vec<String>,
    pub scenario_elements: Vec<ScenarioElement>,
}

impl ApplicationMetadata {
    pub fn element(&self, id: &str) -> Option<&ScenarioElement> {
        self.scenario_elements.iter().find(|e| e.id == id)
    }
}

/// Options are level-0 conclusions taking part in a complement pair; scenario
/// elements are body predicates no rule derives, in first-use order.
pub fn metadata_of(theory: &Theory) -> ApplicationMetadata {
    let mut options: Vec<String> = Vec::new();
    for rule in theory.rules() {
        if let Some(head) = rule.head.domain() {
            let text = head.to_string();
            if theory.in_complement(head) && !options.contains(&text) {
                options.push(text);
            }
        }
    }

    let derived: BTreeSet<(&str, usize)> =
        theory.rules().iter().filter_map(|r| r.head.domain()).map(|a| (a.predicate.as_str(), a.arity())).collect();
    let mut elements: Vec<ScenarioElement> = Vec::new();
    for rule in theory.rules() {
        let builtin_vars: BTreeSet<&str> = {
            let mut vars = BTreeSet::new();
            for c in &rule.conditions {
                if let Literal::Builtin(..) = c {
                    c.collect_variables(&mut vars);
                }
            }
            vars
        };
        for atom in rule.body_atoms() {
            if derived.contains(&(atom.predicate.as_str(), atom.arity())) {
                continue;
            }
            let numeric_use = atom.arity() == 1
                && match &atom.args[0] {
                    Term::Number(_) => true,
                    Term::Variable(v) => builtin_vars.contains(v.as_str()),
                    _ => false,
                };
            let kind = match atom.arity() {
                0 => ElementKind::Propositional,
                _ if numeric_use => ElementKind::Numeric,
                _ => ElementKind::Relational,
            };
            match elements.iter_mut().find(|e| e.id == atom.predicate && e.arity == atom.arity()) {
                Some(existing) => {
                    if existing.kind == ElementKind::Relational && kind == ElementKind::Numeric {
                        existing.kind = ElementKind::Numeric;
                    }
                }
                None => elements.push(ScenarioElement { id: atom.predicate.clone(), kind, arity: atom.arity() }),
            }
        }
    }
    ApplicationMetadata { options, scenario_elements: elements }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule_lang::parse_theory;

    const SALARY: &str = include_str!("../fixtures/salary.sbp");

    #[test]
    fn salary_policy_counts() {
        let doc = parse_policy(SALARY).unwrap();
        assert_eq!(doc.name, "salary_negotiation");
        assert_eq!(doc.options, ["accept", "refuse"]);
        assert_eq!(doc.scenarios.len(), 4);
        assert_eq!(doc.statements.len(), 4);
        let levels: Vec<usize> = doc.preferences.iter().map(|p| doc.level_of(&p.id).unwrap()).collect();
        assert_eq!(levels, [1, 1, 2]);
    }

    #[test]
    fn propositional_atoms() {
        assert_eq!(propositionalize("The offered salary is low"), "the_offered_salary_is_low");
        assert_eq!(propositionalize("  price -- too   high! "), "price_too_high");
    }

    #[test]
    fn one_option_is_rejected() {
        let src = "POLICY p\nOPTIONS\n  accept\n";
        assert_eq!(parse_policy(src), Err(PolicyError::TooFewOptions(1)));
    }

    #[test]
    fn unknown_scenario() {
        let src = "POLICY p\nOPTIONS\n  a, b\nSTATEMENTS\n  s1: nowhere => a\n";
        assert!(matches!(parse_policy(src), Err(PolicyError::UnknownReference { kind: "scenario", .. })));
    }

    #[test]
    fn level_mismatch() {
        let src = "POLICY p\nOPTIONS\n  a, b\nSCENARIOS\n  x: thing x\nSTATEMENTS\n  s1: x => a\n  s2: x => b\nPREFERENCES\n  p1: s1 > s2\n  p2: p1 > s2\n";
        assert!(matches!(parse_policy(src), Err(PolicyError::LevelMismatch { .. })));
    }

    #[test]
    fn preference_cycles_are_rejected() {
        let src = "POLICY p\nOPTIONS\n  a, b\nPREFERENCES\n  p1: p2 > p2b\n  p2: p1 > p2b\n  p2b: p1 > p2\n";
        assert!(parse_policy(src).is_err());
    }

    #[test]
    fn options_only_compiles_to_complements() {
        let doc = parse_policy("POLICY p\nOPTIONS\n  a\n  b\n").unwrap();
        let t = compile_policy(&doc, Mode::Basic).unwrap();
        assert!(t.rules().is_empty());
        assert_eq!(t.complements().len(), 1);
    }

    #[test]
    fn complements_for_every_option_pair() {
        let doc = parse_policy("POLICY p\nOPTIONS\n  a, b, c\n").unwrap();
        let t = compile_policy(&doc, Mode::Basic).unwrap();
        assert_eq!(t.complements().len(), 3);
    }

    #[test]
    fn missing_advanced_condition() {
        let src = "POLICY p\nOPTIONS\n  a, b\nSCENARIOS\n  x: thing x\nSTATEMENTS\n  s1: x => a\n";
        let doc = parse_policy(src).unwrap();
        assert_eq!(compile_policy(&doc, Mode::Advanced), Err(PolicyError::MissingAdvancedCondition("x".into())));
        let src = src.replace("thing x\n", "thing x\n    advanced: propositional\n");
        let t = compile_policy(&parse_policy(&src).unwrap(), Mode::Advanced).unwrap();
        assert_eq!(t.rules()[0].to_string(), "rule(r1,a,[]):-thing_x.");
    }

    #[test]
    fn advanced_condition_must_be_range_restricted() {
        let src = "POLICY p\nOPTIONS\n  a, b\nSCENARIOS\n  x: thing x\n    advanced: Y>3\n";
        assert!(matches!(parse_policy(src), Err(PolicyError::Parse { line: 6, .. })));
    }

    #[test]
    fn deep_preferences_get_level_prefixes() {
        let src = "POLICY p\nOPTIONS\n  a, b\nSCENARIOS\n  x: x\nSTATEMENTS\n  s1: x => a\n  s2: x => b\nPREFERENCES\n  q1: s1 > s2\n  q2: s2 > s1\n  q3: q1 > q2\n  q4: q2 > q1\n  q5: q3 > q4\n";
        let t = compile_policy(&parse_policy(src).unwrap(), Mode::Basic).unwrap();
        let labels: Vec<&str> = t.rules().iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["r1", "r2", "p1", "p2", "c1", "c2", "m3_1"]);
        assert_eq!(t.level_of("m3_1"), Some(3));
    }

    #[test]
    fn metadata_basic_and_advanced() {
        let basic = metadata_of(&parse_theory(include_str!("../fixtures/salary_basic.grg")).unwrap());
        assert_eq!(basic.options, ["accept", "refuse"]);
        assert_eq!(basic.scenario_elements.len(), 4);
        assert!(basic.scenario_elements.iter().all(|e| e.kind == ElementKind::Propositional));

        let adv = metadata_of(&parse_theory(include_str!("../fixtures/salary_advanced.grg")).unwrap());
        assert_eq!(adv.options, ["accept", "refuse"]);
        let ids: Vec<&str> = adv.scenario_elements.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["offered_salary", "expected_salary", "yearly_salary_increase"]);
        assert!(adv.scenario_elements.iter().all(|e| e.kind == ElementKind::Numeric));

        assert_eq!(metadata_of(&Theory::default()), ApplicationMetadata::default());
    }

    #[test]
    fn metadata_excludes_beliefs() {
        let t = parse_theory("rule(r1,risky,[]):-volatile.\nrule(r2,sell,[risky]).\nrule(r3,hold,[]):-calm.\ncomplement(sell,hold).").unwrap();
        let m = metadata_of(&t);
        assert_eq!(m.options, ["sell", "hold"]);
        let ids: Vec<&str> = m.scenario_elements.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["volatile", "calm"]);
    }
}
