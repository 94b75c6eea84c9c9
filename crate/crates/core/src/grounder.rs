//! Instantiates a theory against the facts and numeric inputs of one query.
//!
//! Grounding runs in two phases. First the derivable beliefs (heads of
//! level-0 rules) are computed to a fixpoint, re-examining only rules whose
//! bodies mention a predicate that gained new atoms in the previous round.
//! Then every rule is instantiated once against the context plus those
//! beliefs. Builtins are evaluated after all domain conditions are bound.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binding::{bind_variables, eval_comparison, match_atom, substitute_atom, Bindings, EvalError};
use crate::decimal::{ArithmeticError, Decimal};
use crate::rule_lang::{Atom, Literal, RuleClause, RuleLabel, Term, Theory};

/// Input facts for one decision.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryContext {
    /// Ground domain facts; zero-arity atoms for propositional scenarios.
    #[serde(default)]
    pub propositional_facts: BTreeSet<Atom>,
    /// Numeric inputs, e.g. `offered_salary -> [70000]`. Several values for
    /// one input produce one instance per value.
    #[serde(default)]
    pub numeric_bindings: BTreeMap<String, Vec<Decimal>>,
    /// Abducibles assumed during abduction.
    #[serde(default)]
    pub assumed: BTreeSet<Atom>,
}

impl QueryContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fact(mut self, name: &str) -> Self {
        self.propositional_facts.insert(Atom::prop(name));
        self
    }

    pub fn with_binding(mut self, name: &str, value: Decimal) -> Self {
        self.numeric_bindings.entry(name.to_string()).or_default().push(value);
        self
    }

    pub fn with_assumed(mut self, atom: Atom) -> Self {
        self.assumed.insert(atom);
        self
    }

    /// Every atom the context makes true, assumptions included.
    pub fn known_atoms(&self) -> BTreeSet<Atom> {
        let mut out = self.propositional_facts.clone();
        for (name, values) in &self.numeric_bindings {
            for v in values {
                out.insert(Atom::new(name.clone(), vec![Term::Number(v.clone())]));
            }
        }
        out.extend(self.assumed.iter().cloned());
        out
    }

    /// True when the atom is a fact or binding of this context (not an assumption).
    pub fn is_fact(&self, atom: &Atom) -> bool {
        if self.propositional_facts.contains(atom) {
            return true;
        }
        match atom.args.as_slice() {
            [Term::Number(v)] => self.numeric_bindings.get(&atom.predicate).is_some_and(|vs| vs.contains(v)),
            _ => false,
        }
    }
}

/// One instance of a rule schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundRule {
    pub schema_label: RuleLabel,
    /// Schema label plus a canonical binding suffix, e.g. `r1{E=80000,O=100000}`.
    pub instance_id: String,
    pub level: usize,
    pub head: Literal,
    pub premises: Vec<Atom>,
    /// Conditions with variables replaced; arithmetic left unevaluated.
    pub conditions: Vec<Literal>,
    /// Premises and conditions that are not context facts and must be
    /// supported by other rules.
    pub depends_on: Vec<Atom>,
    /// Abducible premises not (yet) assumed.
    pub open_assumptions: Vec<Atom>,
    /// All conditions hold and no premise is left open.
    pub satisfied: bool,
}

impl GroundRule {
    pub fn head_atom(&self) -> Option<&Atom> {
        self.head.domain()
    }

    pub fn prefer_target(&self) -> Option<(&str, &str)> {
        match &self.head {
            Literal::Prefer(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Ground domain atoms of the conditions and premises.
    pub fn body_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.premises.iter().chain(self.conditions.iter().filter_map(Literal::domain))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("rule `{rule}`: variable `{variable}` is unbound after matching its conditions")]
    UnboundVariable { rule: RuleLabel, variable: String },
    #[error("rule `{rule}`: {error}")]
    Arithmetic { rule: RuleLabel, error: ArithmeticError },
    #[error("rule `{rule}`: {message}")]
    Evaluation { rule: RuleLabel, message: String },
}

fn eval_error(rule: &str, e: EvalError) -> GroundError {
    match e {
        EvalError::UnboundVariable(variable) => GroundError::UnboundVariable { rule: rule.to_string(), variable },
        EvalError::Arithmetic(error) => GroundError::Arithmetic { rule: rule.to_string(), error },
        EvalError::NotNumeric(t) => GroundError::Evaluation { rule: rule.to_string(), message: format!("`{t}` is not a number") },
    }
}

type PredKey = (String, usize);

#[derive(Default)]
struct FactIndex {
    by_pred: HashMap<PredKey, Vec<Atom>>,
    all: BTreeSet<Atom>,
}

impl FactIndex {
    fn insert(&mut self, atom: Atom) -> bool {
        if self.all.insert(atom.clone()) {
            self.by_pred.entry((atom.predicate.clone(), atom.arity())).or_default().push(atom);
            true
        } else {
            false
        }
    }

    fn candidates(&self, pattern: &Atom) -> &[Atom] {
        self.by_pred
            .get(&(pattern.predicate.clone(), pattern.arity()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn contains(&self, atom: &Atom) -> bool {
        self.all.contains(atom)
    }
}

/// Domain conditions in matching order: atoms with arithmetic arguments last,
/// so their variables are bound by the time they are evaluated.
fn join_order(rule: &RuleClause) -> Vec<&Atom> {
    let mut atoms: Vec<&Atom> = rule.conditions.iter().filter_map(Literal::domain).collect();
    atoms.sort_by_key(|a| a.args.iter().any(|t| matches!(t, Term::Arith(..))));
    atoms
}

fn enumerate_bindings(atoms: &[&Atom], facts: &FactIndex, env: &mut Bindings, out: &mut Vec<Bindings>) {
    let Some((first, rest)) = atoms.split_first() else {
        out.push(env.clone());
        return;
    };
    for candidate in facts.candidates(first) {
        let mut next = env.clone();
        if match_atom(first, candidate, &mut next) {
            enumerate_bindings(rest, facts, &mut next, out);
        }
    }
}

fn builtins_hold(rule: &RuleClause, env: &Bindings) -> Result<bool, GroundError> {
    for cond in &rule.conditions {
        if let Literal::Builtin(cmp, l, r) = cond {
            if !eval_comparison(*cmp, l, r, env).map_err(|e| eval_error(&rule.label, e))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn instance_id(label: &str, env: &Bindings) -> String {
    if env.is_empty() {
        return label.to_string();
    }
    let parts: Vec<String> = env.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{label}{{{}}}", parts.join(","))
}

/// Bindings under which all conditions of `rule` hold against `facts`.
fn satisfying_bindings(rule: &RuleClause, facts: &FactIndex) -> Result<Vec<Bindings>, GroundError> {
    let order = join_order(rule);
    let mut envs = Vec::new();
    enumerate_bindings(&order, facts, &mut Bindings::new(), &mut envs);
    let mut out = Vec::with_capacity(envs.len());
    for env in envs {
        if builtins_hold(rule, &env)? {
            out.push(env);
        }
    }
    Ok(out)
}

/// Rules by level then label, so results and the first error reported do
/// not depend on source order.
fn by_label(theory: &Theory) -> Vec<&RuleClause> {
    let mut rules: Vec<&RuleClause> = theory.rules().iter().collect();
    rules.sort_by_key(|r| (theory.level_of(&r.label).unwrap_or(0), &r.label));
    rules
}

fn derive_beliefs(theory: &Theory, known: &BTreeSet<Atom>) -> Result<FactIndex, GroundError> {
    let mut facts = FactIndex::default();
    for a in known {
        facts.insert(a.clone());
    }
    let level0: Vec<&RuleClause> = by_label(theory).into_iter().filter(|r| r.head.domain().is_some()).collect();
    let mut delta: Option<BTreeSet<PredKey>> = None;
    loop {
        let mut changed: BTreeSet<PredKey> = BTreeSet::new();
        for rule in &level0 {
            if let Some(d) = &delta {
                if !rule.body_atoms().any(|a| d.contains(&(a.predicate.clone(), a.arity()))) {
                    continue;
                }
            }
            for env in satisfying_bindings(rule, &facts)? {
                let premises: Vec<Atom> = rule
                    .premises
                    .iter()
                    .map(|p| substitute_atom(p, &env))
                    .collect::<Result<_, _>>()
                    .map_err(|e| eval_error(&rule.label, e))?;
                if !premises.iter().all(|p| facts.contains(p)) {
                    continue;
                }
                let head = substitute_atom(rule.head.domain().expect("level-0 head"), &env)
                    .map_err(|e| eval_error(&rule.label, e))?;
                let key = (head.predicate.clone(), head.arity());
                if facts.insert(head) {
                    changed.insert(key);
                }
            }
        }
        if changed.is_empty() {
            return Ok(facts);
        }
        delta = Some(changed);
    }
}

/// Grounds every rule of `theory` against `ctx`.
///
/// Rules whose conditions fail are omitted. A level-0 instance whose only
/// missing premises are declared abducibles is kept, unsatisfied, with those
/// premises listed in `open_assumptions`.
pub fn ground_theory(theory: &Theory, ctx: &QueryContext) -> Result<Vec<GroundRule>, GroundError> {
    let known = ctx.known_atoms();
    let facts = derive_beliefs(theory, &known)?;

    let mut out = Vec::new();
    for rule in by_label(theory) {
        let level = theory.level_of(&rule.label).unwrap_or(0);
        let mut seen = BTreeSet::new();
        for env in satisfying_bindings(rule, &facts)? {
            let id = instance_id(&rule.label, &env);
            if !seen.insert(id.clone()) {
                continue;
            }
            let err = |e| eval_error(&rule.label, e);
            let premises: Vec<Atom> = rule.premises.iter().map(|p| substitute_atom(p, &env)).collect::<Result<_, _>>().map_err(err)?;
            let conditions: Vec<Literal> = rule
                .conditions
                .iter()
                .map(|c| match c {
                    Literal::Domain(a) => substitute_atom(a, &env).map(Literal::Domain),
                    Literal::Builtin(cmp, l, r) => Ok(Literal::Builtin(*cmp, bind_variables(l, &env)?, bind_variables(r, &env)?)),
                    Literal::Prefer(..) => Ok(c.clone()),
                })
                .collect::<Result<_, _>>()
                .map_err(err)?;

            let mut depends_on = Vec::new();
            let mut open = Vec::new();
            let mut missing = false;
            for p in &premises {
                if known.contains(p) {
                    continue;
                } else if facts.contains(p) {
                    depends_on.push(p.clone());
                } else if theory.is_abducible(p) {
                    open.push(p.clone());
                } else {
                    missing = true;
                }
            }
            if missing || (level > 0 && !open.is_empty()) {
                continue;
            }
            for a in conditions.iter().filter_map(Literal::domain) {
                if !known.contains(a) && !depends_on.contains(a) {
                    depends_on.push(a.clone());
                }
            }
            let head = match &rule.head {
                Literal::Domain(a) => Literal::Domain(substitute_atom(a, &env).map_err(err)?),
                other => other.clone(),
            };
            out.push(GroundRule {
                schema_label: rule.label.clone(),
                instance_id: id,
                level,
                head,
                premises,
                conditions,
                depends_on,
                satisfied: open.is_empty(),
                open_assumptions: open,
            });
        }
    }
    Ok(out)
}
