//! The rule language: `rule(Label, Head, [Premises]) :- Conditions.`,
//! `complement(A, B).` and `abducible(P).` clauses.

mod ast;
mod diagnostics;
mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use ast::{ArithOp, Atom, Comparison, ComplementPair, Literal, RuleClause, RuleLabel, Term};
pub use diagnostics::{validate_theory, Diagnostic, Severity};
pub use lexer::{tokenize, Spanned, Tok};
pub use parser::parse_body;

use crate::binding::{match_atom, Bindings};
use parser::Clause;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{column}: expected {}, found {found}", expected_list(.expected))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

fn expected_list(expected: &[String]) -> String {
    match expected.len() {
        0 => "valid input".to_string(),
        1 => expected[0].clone(),
        _ => format!("one of {}", expected.join(", ")),
    }
}

impl ParseError {
    pub fn new(line: usize, column: usize, expected: Vec<String>, found: impl Into<String>) -> Self {
        ParseError { line, column, expected, found: found.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("rule label `{label}` is declared more than once")]
    DuplicateLabel { label: RuleLabel },
    #[error("rule `{rule}` prefers unknown rule `{target}`")]
    DanglingPreferTarget { rule: RuleLabel, target: RuleLabel },
    #[error("variable `{variable}` of rule `{rule}` does not occur in a domain condition")]
    RangeRestrictionViolation { rule: RuleLabel, variable: String },
    #[error("rule `{rule}` breaks level stratification: {reason}")]
    Stratification { rule: RuleLabel, reason: String },
    #[error("rule `{rule}` prefers a rule over itself")]
    SelfPreference { rule: RuleLabel },
    #[error("abducible `{0}` must be ground")]
    NonGroundAbducible(String),
    #[error("priority rule `{rule}` depends on derived predicate `{predicate}`")]
    DerivedPredicateInPriority { rule: RuleLabel, predicate: String },
    #[error("unknown rule label `{0}`")]
    UnknownLabel(RuleLabel),
}

impl TheoryError {
    pub fn code(&self) -> &'static str {
        match self {
            TheoryError::Parse(_) => "ParseError",
            TheoryError::DuplicateLabel { .. } => "DuplicateLabel",
            TheoryError::DanglingPreferTarget { .. } => "DanglingPreferTarget",
            TheoryError::RangeRestrictionViolation { .. } => "RangeRestrictionViolation",
            TheoryError::Stratification { .. } => "StratificationError",
            TheoryError::SelfPreference { .. } => "SelfPreference",
            TheoryError::NonGroundAbducible(_) => "NonGroundAbducible",
            TheoryError::DerivedPredicateInPriority { .. } => "DerivedPredicateInPriority",
            TheoryError::UnknownLabel(_) => "UnknownLabel",
        }
    }
}

/// A validated set of labelled rules, complements and abducibles.
#[derive(Debug, Clone, Default)]
pub struct Theory {
    rules: Vec<RuleClause>,
    complements: Vec<ComplementPair>,
    abducibles: Vec<Atom>,
    index: HashMap<RuleLabel, usize>,
    levels: Vec<usize>,
}

impl PartialEq for Theory {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules && self.complements == other.complements && self.abducibles == other.abducibles
    }
}

impl Eq for Theory {}

impl Theory {
    /// Builds a theory, folding complement pairs and checking every
    /// structural invariant.
    pub fn new(
        rules: Vec<RuleClause>,
        complements: impl IntoIterator<Item = (Atom, Atom)>,
        abducibles: impl IntoIterator<Item = Atom>,
    ) -> Result<Theory, TheoryError> {
        let mut folded: Vec<ComplementPair> = Vec::new();
        for (a, b) in complements {
            if !folded.iter().any(|p| p.same_pair(&a, &b)) {
                folded.push(ComplementPair(a, b));
            }
        }
        let mut abd: Vec<Atom> = Vec::new();
        for a in abducibles {
            if !a.is_ground() {
                return Err(TheoryError::NonGroundAbducible(a.to_string()));
            }
            if !abd.contains(&a) {
                abd.push(a);
            }
        }

        let mut index = HashMap::new();
        for (i, rule) in rules.iter().enumerate() {
            if index.insert(rule.label.clone(), i).is_some() {
                return Err(TheoryError::DuplicateLabel { label: rule.label.clone() });
            }
        }
        for rule in &rules {
            if let Some((a, b)) = rule.prefer_target() {
                for target in [a, b] {
                    if !index.contains_key(target) {
                        return Err(TheoryError::DanglingPreferTarget {
                            rule: rule.label.clone(),
                            target: target.to_string(),
                        });
                    }
                }
                if a == b {
                    return Err(TheoryError::SelfPreference { rule: rule.label.clone() });
                }
            }
            check_range_restriction(rule)?;
        }
        let levels = compute_levels(&rules, &index)?;

        let derived: BTreeSet<(&str, usize)> = rules
            .iter()
            .filter_map(|r| r.head.domain())
            .map(|a| (a.predicate.as_str(), a.arity()))
            .collect();
        for rule in rules.iter().filter(|r| r.prefer_target().is_some()) {
            if let Some(atom) = rule.body_atoms().find(|a| derived.contains(&(a.predicate.as_str(), a.arity()))) {
                return Err(TheoryError::DerivedPredicateInPriority {
                    rule: rule.label.clone(),
                    predicate: format!("{}/{}", atom.predicate, atom.arity()),
                });
            }
        }

        Ok(Theory { rules, complements: folded, abducibles: abd, index, levels })
    }

    pub fn rules(&self) -> &[RuleClause] {
        &self.rules
    }

    pub fn complements(&self) -> &[ComplementPair] {
        &self.complements
    }

    pub fn abducibles(&self) -> &[Atom] {
        &self.abducibles
    }

    pub fn rule(&self, label: &str) -> Option<&RuleClause> {
        self.index.get(label).map(|&i| &self.rules[i])
    }

    pub fn level_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).map(|&i| self.levels[i])
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    pub fn is_abducible(&self, atom: &Atom) -> bool {
        self.abducibles.contains(atom)
    }

    /// True iff the two ground atoms instantiate the two sides of a declared
    /// complement pair, in either orientation.
    pub fn conflicting(&self, a: &Atom, b: &Atom) -> bool {
        self.complements.iter().any(|ComplementPair(x, y)| {
            let forward = {
                let mut env = Bindings::new();
                match_atom(x, a, &mut env) && match_atom(y, b, &mut env)
            };
            forward || {
                let mut env = Bindings::new();
                match_atom(x, b, &mut env) && match_atom(y, a, &mut env)
            }
        })
    }

    /// True iff the atom instantiates one side of some complement pair.
    pub fn in_complement(&self, a: &Atom) -> bool {
        self.complements
            .iter()
            .any(|ComplementPair(x, y)| match_atom(x, a, &mut Bindings::new()) || match_atom(y, a, &mut Bindings::new()))
    }
}

fn check_range_restriction(rule: &RuleClause) -> Result<(), TheoryError> {
    let mut bound = BTreeSet::new();
    for cond in &rule.conditions {
        if let Literal::Domain(a) = cond {
            a.collect_variables(&mut bound);
        }
    }
    let mut used = BTreeSet::new();
    rule.head.collect_variables(&mut used);
    for p in &rule.premises {
        p.collect_variables(&mut used);
    }
    for cond in &rule.conditions {
        if let Literal::Builtin(..) = cond {
            cond.collect_variables(&mut used);
        }
    }
    match used.difference(&bound).next() {
        Some(v) => Err(TheoryError::RangeRestrictionViolation { rule: rule.label.clone(), variable: v.to_string() }),
        None => Ok(()),
    }
}

fn compute_levels(rules: &[RuleClause], index: &HashMap<RuleLabel, usize>) -> Result<Vec<usize>, TheoryError> {
    #[derive(Clone, Copy)]
    enum Mark {
        Unvisited,
        Active,
        Done(usize),
    }

    fn visit(
        i: usize,
        rules: &[RuleClause],
        index: &HashMap<RuleLabel, usize>,
        marks: &mut [Mark],
    ) -> Result<usize, TheoryError> {
        match marks[i] {
            Mark::Done(l) => return Ok(l),
            Mark::Active => {
                return Err(TheoryError::Stratification {
                    rule: rules[i].label.clone(),
                    reason: "cyclic preference levels".into(),
                })
            }
            Mark::Unvisited => {}
        }
        marks[i] = Mark::Active;
        let level = match rules[i].prefer_target() {
            None => 0,
            Some((a, b)) => {
                let la = visit(index[a], rules, index, marks)?;
                let lb = visit(index[b], rules, index, marks)?;
                if la != lb {
                    return Err(TheoryError::Stratification {
                        rule: rules[i].label.clone(),
                        reason: format!("`{a}` is at level {la} but `{b}` is at level {lb}"),
                    });
                }
                la + 1
            }
        };
        marks[i] = Mark::Done(level);
        Ok(level)
    }

    let mut marks = vec![Mark::Unvisited; rules.len()];
    (0..rules.len()).map(|i| visit(i, rules, index, &mut marks)).collect()
}

/// Parses `.grg` source text into a validated theory.
pub fn parse_theory(source: &str) -> Result<Theory, TheoryError> {
    let mut rules = Vec::new();
    let mut complements = Vec::new();
    let mut abducibles = Vec::new();
    for clause in parser::parse_clauses(source)? {
        match clause.item {
            Clause::Rule(r) => rules.push(r),
            Clause::Complement(a, b) => complements.push((a, b)),
            Clause::Abducible(a) => abducibles.push(a),
        }
    }
    Theory::new(rules, complements, abducibles)
}

/// Parses and validates `.grg` text, reporting every finding as a
/// [`Diagnostic`] positioned at the offending clause where possible.
pub fn check_source(source: &str) -> (Option<Theory>, Vec<Diagnostic>) {
    let clauses = match parser::parse_clauses(source) {
        Ok(c) => c,
        Err(e) => return (None, vec![Diagnostic::from(&e)]),
    };
    let positions: HashMap<String, (usize, usize)> = clauses
        .iter()
        .filter_map(|c| match &c.item {
            Clause::Rule(r) => Some((r.label.clone(), (c.line, c.column))),
            _ => None,
        })
        .collect();
    match parse_theory(source) {
        Ok(theory) => {
            let diags = validate_theory(&theory)
                .into_iter()
                .map(|d| match d.rules.first().and_then(|r| positions.get(r)) {
                    Some(&(l, c)) if d.rules.len() == 1 => d.at(l, c),
                    _ => d,
                })
                .collect();
            (Some(theory), diags)
        }
        Err(e) => {
            let mut d = Diagnostic::from(&e);
            if let Some(&(l, c)) = d.rules.first().and_then(|r| positions.get(r)) {
                d = d.at(l, c);
            }
            (None, vec![d])
        }
    }
}

/// Renders a theory in source syntax, one clause per line. Each complement
/// pair is written in both directions.
pub fn render_theory(theory: &Theory) -> String {
    theory.to_string()
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        for ComplementPair(a, b) in &self.complements {
            writeln!(f, "complement({a},{b}).")?;
            writeln!(f, "complement({b},{a}).")?;
        }
        for a in &self.abducibles {
            writeln!(f, "abducible({a}).")?;
        }
        Ok(())
    }
}

/// Level of a rule: 0 for domain heads, one above its targets for `prefer` heads.
pub fn level_of(theory: &Theory, label: &str) -> Result<usize, TheoryError> {
    theory.level_of(label).ok_or_else(|| TheoryError::UnknownLabel(label.to_string()))
}

/// Labels grouped by level, in clause order.
pub fn labels_by_level(theory: &Theory) -> BTreeMap<usize, Vec<&str>> {
    let mut out: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (rule, &level) in theory.rules.iter().zip(&theory.levels) {
        out.entry(level).or_default().push(&rule.label);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SALARY_BASIC: &str = include_str!("../../fixtures/salary_basic.grg");
    const SALARY_ADVANCED: &str = include_str!("../../fixtures/salary_advanced.grg");

    #[test]
    fn salary_basic_shape() {
        let t = parse_theory(SALARY_BASIC).unwrap();
        assert_eq!(t.rules().len(), 7);
        assert_eq!(t.complements().len(), 1);
        assert!(t.abducibles().is_empty());
    }

    #[test]
    fn salary_advanced_conditions() {
        let t = parse_theory(SALARY_ADVANCED).unwrap();
        assert_eq!(t.rules().len(), 7);
        let r1 = t.rule("r1").unwrap();
        let conds: Vec<String> = r1.conditions.iter().map(ToString::to_string).collect();
        assert_eq!(conds, ["offered_salary(O)", "expected_salary(E)", "O>=E"]);
    }

    #[test]
    fn levels_follow_prefer_structure() {
        let t = parse_theory(SALARY_BASIC).unwrap();
        assert_eq!(level_of(&t, "r3"), Ok(0));
        assert_eq!(level_of(&t, "p2"), Ok(1));
        assert_eq!(level_of(&t, "c1"), Ok(2));
        assert!(matches!(level_of(&t, "zz"), Err(TheoryError::UnknownLabel(_))));
        assert_eq!(t.max_level(), 2);
    }

    #[test]
    fn check_source_positions_semantic_errors() {
        let (theory, diags) = check_source("rule(r1,a,[]).\n  rule(r1,b,[]).");
        assert!(theory.is_none());
        assert_eq!(diags[0].code, "DuplicateLabel");
        assert_eq!((diags[0].line, diags[0].column), (Some(2), Some(3)));
        let (_, diags) = check_source("rule(r1,a,[]) x");
        assert_eq!(diags[0].code, "ParseError");
        assert_eq!(diags[0].line, Some(1));
    }

    #[test]
    fn empty_source() {
        let t = parse_theory("").unwrap();
        assert!(t.rules().is_empty() && t.complements().is_empty());
        assert_eq!(render_theory(&t), "");
    }

    #[test]
    fn dangling_prefer_target() {
        let err = parse_theory("rule(p1,prefer(r9,r4),[]).").unwrap_err();
        assert!(matches!(err, TheoryError::DanglingPreferTarget { ref target, .. } if target == "r9"));
    }

    #[test]
    fn duplicate_label() {
        let err = parse_theory("rule(r1,a,[]).\nrule(r1,b,[]).").unwrap_err();
        assert_eq!(err, TheoryError::DuplicateLabel { label: "r1".into() });
    }

    #[test]
    fn range_restriction() {
        let err = parse_theory("rule(r1,a(X),[]):-b.").unwrap_err();
        assert!(matches!(err, TheoryError::RangeRestrictionViolation { ref variable, .. } if variable == "X"));
        let err = parse_theory("rule(r1,a,[]):-b(Y),X>Y.").unwrap_err();
        assert!(matches!(err, TheoryError::RangeRestrictionViolation { ref variable, .. } if variable == "X"));
        let err = parse_theory("rule(r1,a,[q(Z)]):-b(Y).").unwrap_err();
        assert!(matches!(err, TheoryError::RangeRestrictionViolation { ref variable, .. } if variable == "Z"));
    }

    #[test]
    fn stratification_errors() {
        let mixed = "rule(r1,a,[]).\nrule(r2,b,[]).\nrule(p1,prefer(r1,r2),[]).\nrule(c1,prefer(p1,r1),[]).";
        assert!(matches!(parse_theory(mixed), Err(TheoryError::Stratification { .. })));
        let cyclic = "rule(p1,prefer(p2,p2x),[]).\nrule(p2,prefer(p1,p2x),[]).\nrule(p2x,a,[]).";
        assert!(matches!(parse_theory(cyclic), Err(TheoryError::Stratification { .. })));
        assert!(matches!(
            parse_theory("rule(r1,a,[]).\nrule(p1,prefer(r1,r1),[])."),
            Err(TheoryError::SelfPreference { .. })
        ));
    }

    #[test]
    fn priority_rules_may_not_use_beliefs() {
        let src = "rule(r1,a,[]).\nrule(r2,b,[]).\nrule(r3,c,[]).\nrule(p1,prefer(r1,r2),[]):-c.";
        assert!(matches!(parse_theory(src), Err(TheoryError::DerivedPredicateInPriority { .. })));
    }

    #[test]
    fn complements_fold_and_render_both_ways() {
        let t = parse_theory("complement(accept,refuse).\ncomplement(refuse,accept).").unwrap();
        assert_eq!(t.complements().len(), 1);
        assert_eq!(render_theory(&t), "complement(accept,refuse).\ncomplement(refuse,accept).\n");
    }

    #[test]
    fn non_ground_abducible_rejected() {
        assert!(matches!(parse_theory("abducible(p(X))."), Err(TheoryError::NonGroundAbducible(_))));
    }

    #[test]
    fn complement_patterns_match_ground_atoms() {
        let t = parse_theory("complement(buy(X),sell(X)).").unwrap();
        let buy = Atom::parse("buy(apple)").unwrap();
        let sell = Atom::parse("sell(apple)").unwrap();
        let sell_pear = Atom::parse("sell(pear)").unwrap();
        assert!(t.conflicting(&buy, &sell));
        assert!(t.conflicting(&sell, &buy));
        assert!(!t.conflicting(&buy, &sell_pear));
    }
}
