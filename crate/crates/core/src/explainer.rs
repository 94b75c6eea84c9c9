//! Explanation traces for acceptable arguments, and a replay check that
//! re-derives each trace from the data it cites.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Decimal;
use crate::engine::{defeat_chain, Argument, Decision};
use crate::grounder::{ground_theory, GroundRule, QueryContext};
use crate::rule_lang::{Atom, Literal, Term, Theory};

/// A ground rule instance as cited by an explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleInstance {
    pub id: String,
    pub schema: String,
    pub level: usize,
    pub head: String,
    pub conditions: Vec<String>,
}

impl RuleInstance {
    fn of(g: &GroundRule) -> Self {
        RuleInstance {
            id: g.instance_id.clone(),
            schema: g.schema_label.clone(),
            level: g.level,
            head: g.head.to_string(),
            conditions: g
                .premises
                .iter()
                .map(ToString::to_string)
                .chain(g.conditions.iter().map(ToString::to_string))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactsUsed {
    pub facts: BTreeSet<Atom>,
    pub bindings: BTreeMap<String, Vec<Decimal>>,
}

impl FactsUsed {
    fn insert_from(&mut self, atom: &Atom, ctx: &QueryContext) {
        if ctx.propositional_facts.contains(atom) {
            self.facts.insert(atom.clone());
        } else if let [Term::Number(v)] = atom.args.as_slice() {
            let values = self.bindings.entry(atom.predicate.clone()).or_default();
            if !values.contains(v) {
                values.push(v.clone());
            }
        }
    }

    fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.facts.iter().cloned().chain(self.bindings.iter().flat_map(|(name, values)| {
            values.iter().map(move |v| Atom::new(name.clone(), vec![Term::Number(v.clone())]))
        }))
    }
}

/// A competing rule and the priority instances that beat it. An empty chain
/// means neither side is stronger and the attack is mutual.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Defeat {
    pub competing_option: String,
    pub competing_rule: String,
    pub chain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub option: String,
    /// The argument's rules, concluding rule first.
    pub decision_rules: Vec<RuleInstance>,
    /// Priority instances cited by the defeat chains, by level then id.
    pub priority_rules: Vec<RuleInstance>,
    pub facts_used: FactsUsed,
    pub assumptions: Vec<Atom>,
    pub defeated: Vec<Defeat>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionResult {
    pub acceptable_options: BTreeSet<String>,
    pub ambiguous: bool,
    pub per_option: BTreeMap<String, Vec<Explanation>>,
    /// Union of the assumptions cited by the explanations.
    pub assumptions: BTreeSet<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("decision cites rule instance `{0}`, which is not a satisfied rule of the ground set")]
    InconsistentInputs(String),
}

fn schema_of(instance: &str) -> &str {
    instance.split('{').next().unwrap_or(instance)
}

pub fn explain(
    decision: &Decision,
    ground: &[GroundRule],
    ctx: &QueryContext,
    theory: &Theory,
) -> Result<DecisionResult, ExplainError> {
    let by_id: HashMap<&str, &GroundRule> =
        ground.iter().filter(|g| g.satisfied).map(|g| (g.instance_id.as_str(), g)).collect();
    let lookup = |id: &str| by_id.get(id).copied().ok_or_else(|| ExplainError::InconsistentInputs(id.to_string()));
    let active = decision.active.iter().map(|id| lookup(id)).collect::<Result<Vec<_>, _>>()?;

    let mut result = DecisionResult {
        acceptable_options: decision.acceptable_options.clone(),
        ambiguous: decision.ambiguous,
        ..DecisionResult::default()
    };
    let mut memo = Memo::default();
    for (option, args) in &decision.arguments {
        let mut explanations = Vec::new();
        for arg in args {
            let e = explain_argument(arg, &active, ground, decision, ctx, theory, &lookup, &mut memo)?;
            result.assumptions.extend(e.assumptions.iter().cloned());
            explanations.push(e);
        }
        result.per_option.insert(option.clone(), explanations);
    }
    Ok(result)
}

/// Conflict and chain lookups shared by every argument of one decision.
#[derive(Default)]
struct Memo<'g> {
    conflicts: HashMap<(&'g Atom, &'g Atom), bool>,
    chains: HashMap<(&'g str, &'g str), Vec<String>>,
}

#[allow(clippy::too_many_arguments)]
fn explain_argument<'g>(
    arg: &Argument,
    active: &[&'g GroundRule],
    ground: &[GroundRule],
    decision: &Decision,
    ctx: &QueryContext,
    theory: &Theory,
    lookup: &dyn Fn(&str) -> Result<&'g GroundRule, ExplainError>,
    memo: &mut Memo<'g>,
) -> Result<Explanation, ExplainError> {
    let top = lookup(&arg.top)?;
    let mut rules = vec![top];
    for id in arg.derivation.iter().filter(|id| **id != arg.top) {
        rules.push(lookup(id)?);
    }

    let mut defeated: BTreeMap<String, Defeat> = BTreeMap::new();
    for s in &rules {
        let Some(sh) = s.head_atom() else { continue };
        for t in active {
            let Some(th) = t.head_atom() else { continue };
            if !*memo.conflicts.entry((sh, th)).or_insert_with(|| theory.conflicting(sh, th)) {
                continue;
            }
            let chain = memo
                .chains
                .entry((s.schema_label.as_str(), t.schema_label.as_str()))
                .or_insert_with(|| defeat_chain(ground, &decision.priorities, 1, &s.schema_label, &t.schema_label));
            let entry = defeated.entry(t.instance_id.clone()).or_insert_with(|| Defeat {
                competing_option: th.to_string(),
                competing_rule: t.instance_id.clone(),
                chain: Vec::new(),
            });
            if entry.chain.is_empty() {
                entry.chain = chain.clone();
            }
        }
    }

    let mut priority: Vec<&GroundRule> = Vec::new();
    for d in defeated.values() {
        for id in &d.chain {
            let g = lookup(id)?;
            if !priority.iter().any(|p| p.instance_id == g.instance_id) {
                priority.push(g);
            }
        }
    }
    priority.sort_by(|a, b| (a.level, &a.instance_id).cmp(&(b.level, &b.instance_id)));

    let mut facts_used = FactsUsed::default();
    let mut assumptions = BTreeSet::new();
    for g in rules.iter().chain(&priority) {
        for atom in g.body_atoms() {
            if ctx.is_fact(atom) {
                facts_used.insert_from(atom, ctx);
            } else if ctx.assumed.contains(atom) {
                assumptions.insert(atom.clone());
            }
        }
    }

    Ok(Explanation {
        option: arg.conclusion.to_string(),
        decision_rules: rules.iter().map(|g| RuleInstance::of(g)).collect(),
        priority_rules: priority.iter().map(|g| RuleInstance::of(g)).collect(),
        facts_used,
        assumptions: assumptions.into_iter().collect(),
        defeated: defeated.into_values().collect(),
    })
}

/// Re-grounds the theory against only the cited facts and assumptions and
/// checks that the cited rules still fire, derive the option, and that each
/// defeat chain is well formed and drawn from the cited priorities.
pub fn replay(expl: &Explanation, theory: &Theory) -> bool {
    let mut ctx = QueryContext::new();
    ctx.propositional_facts = expl.facts_used.facts.clone();
    ctx.numeric_bindings = expl.facts_used.bindings.clone();
    ctx.assumed = expl.assumptions.iter().cloned().collect();
    let Ok(ground) = ground_theory(theory, &ctx) else { return false };
    let by_id: HashMap<&str, &GroundRule> =
        ground.iter().filter(|g| g.satisfied).map(|g| (g.instance_id.as_str(), g)).collect();

    let mut cited = Vec::new();
    for r in expl.decision_rules.iter().chain(&expl.priority_rules) {
        match by_id.get(r.id.as_str()) {
            Some(g) if g.head.to_string() == r.head => cited.push(*g),
            _ => return false,
        }
    }
    let (decision, priority) = cited.split_at(expl.decision_rules.len());

    // The decision rules alone derive the option.
    if decision.is_empty() || decision[0].head.to_string() != expl.option {
        return false;
    }
    let mut derived: BTreeSet<&Atom> = BTreeSet::new();
    let mut fired = vec![false; decision.len()];
    loop {
        let mut progress = false;
        for (i, g) in decision.iter().enumerate() {
            if !fired[i] && g.depends_on.iter().all(|d| derived.contains(d)) {
                fired[i] = true;
                if let Some(h) = g.head_atom() {
                    derived.insert(h);
                }
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    if fired.contains(&false) {
        return false;
    }

    let decision_heads: Vec<(&str, &Atom)> =
        decision.iter().filter_map(|g| g.head_atom().map(|h| (g.schema_label.as_str(), h))).collect();
    let priority_ids: BTreeSet<&str> = priority.iter().map(|g| g.instance_id.as_str()).collect();
    let mut chained: BTreeSet<&str> = BTreeSet::new();
    for d in &expl.defeated {
        let Ok(competing) = Atom::parse(&d.competing_option) else { return false };
        let competitor = schema_of(&d.competing_rule);
        let opposed: Vec<&str> =
            decision_heads.iter().filter(|(_, h)| theory.conflicting(h, &competing)).map(|(s, _)| *s).collect();
        if opposed.is_empty() {
            return false;
        }
        // Each later element either backs an earlier element one level up
        // or concludes the same priority as an earlier element.
        let mut earlier: Vec<(&str, &str, &str)> = Vec::new();
        for (i, id) in d.chain.iter().enumerate() {
            if !priority_ids.contains(id.as_str()) {
                return false;
            }
            let Some(Literal::Prefer(a, b)) = by_id.get(id.as_str()).map(|g| &g.head) else { return false };
            let ok = if i == 0 {
                opposed.contains(&a.as_str()) && b == competitor
            } else {
                earlier.iter().any(|&(s, x, y)| s == a || (x == a && y == b))
            };
            if !ok {
                return false;
            }
            earlier.push((schema_of(id), a, b));
            chained.insert(id);
        }
    }
    if chained != priority_ids {
        return false;
    }

    // Every cited fact is matched by some cited rule.
    let matched: BTreeSet<&Atom> = cited.iter().flat_map(|g| g.body_atoms()).collect();
    expl.facts_used.atoms().all(|a| matched.contains(&a))
}

/// `accept — because r4 [..]; overrides r3 (refuse) because p2 because c1`.
pub fn render_text(expl: &Explanation) -> String {
    let mut out = format!("{} — because ", expl.option);
    let rules: Vec<String> =
        expl.decision_rules.iter().map(|r| format!("{} [{}]", r.schema, r.conditions.join(", "))).collect();
    out.push_str(&rules.join(" and "));
    if !expl.assumptions.is_empty() {
        let names: Vec<String> = expl.assumptions.iter().map(ToString::to_string).collect();
        let _ = write!(out, " assuming {}", names.join(", "));
    }
    for d in &expl.defeated {
        let competitor = schema_of(&d.competing_rule);
        if d.chain.is_empty() {
            let _ = write!(out, "; contested by {competitor} ({}), unresolved", d.competing_option);
        } else {
            let chain: Vec<&str> = d.chain.iter().map(|id| schema_of(id)).collect();
            let _ = write!(out, "; overrides {competitor} ({}) because {}", d.competing_option, chain.join(" because "));
        }
    }
    out
}
