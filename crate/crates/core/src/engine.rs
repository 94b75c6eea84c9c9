//! Arguments, level-by-level strict priorities and credulous acceptance.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::grounder::GroundRule;
use crate::rule_lang::{Atom, Literal, RuleLabel, Theory};

/// A minimal derivation of one conclusion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Argument {
    pub conclusion: Literal,
    /// Instance id of the rule concluding `conclusion`.
    pub top: String,
    /// Instance ids, sorted.
    pub derivation: Vec<String>,
    /// Acceptable priority instances that make this argument win its
    /// conflicts. Filled only for acceptable option arguments.
    pub support_priorities: Vec<String>,
    /// Abducible premises used by the derivation.
    pub assumptions: Vec<Atom>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PriorityLevel {
    /// `(stronger, weaker)` schema labels one level down.
    pub strict: BTreeSet<(RuleLabel, RuleLabel)>,
    /// Instance ids of the acceptable priority instances.
    pub acceptable: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PriorityRelation {
    pub levels: BTreeMap<usize, PriorityLevel>,
}

impl PriorityRelation {
    pub fn stronger(&self, level: usize, a: &str, b: &str) -> bool {
        self.levels.get(&level).is_some_and(|l| l.strict.contains(&(a.to_string(), b.to_string())))
    }

    pub fn is_acceptable(&self, level: usize, instance: &str) -> bool {
        self.levels.get(&level).is_some_and(|l| l.acceptable.contains(instance))
    }
}

/// Outcome of the acceptance check, before explanations are attached.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub acceptable_options: BTreeSet<String>,
    pub ambiguous: bool,
    /// Acceptable arguments for each acceptable option.
    pub arguments: BTreeMap<String, Vec<Argument>>,
    pub priorities: PriorityRelation,
    /// Level-0 instances that belong to at least one consistent derivation,
    /// i.e. that some argument can field against a competitor.
    pub active: BTreeSet<String>,
}

pub fn conflicts(a: &Argument, b: &Argument, theory: &Theory) -> bool {
    literals_conflict(&a.conclusion, &b.conclusion, theory)
}

pub fn literals_conflict(a: &Literal, b: &Literal, theory: &Theory) -> bool {
    match (a, b) {
        (Literal::Domain(x), Literal::Domain(y)) => theory.conflicting(x, y),
        (Literal::Prefer(x1, y1), Literal::Prefer(x2, y2)) => x1 == y2 && y1 == x2,
        _ => false,
    }
}

/// Level-0 rules indexed for repeated conflict lookups.
struct Level0<'a> {
    rules: Vec<&'a GroundRule>,
    heads: Vec<&'a Atom>,
    head_ids: Vec<usize>,
    /// conflict[i][j] over distinct head atoms.
    conflict: Vec<Vec<bool>>,
}

impl<'a> Level0<'a> {
    fn new(ground: &'a [GroundRule], theory: &Theory) -> Self {
        let rules: Vec<&GroundRule> = ground.iter().filter(|g| g.satisfied && g.head_atom().is_some()).collect();
        let heads: Vec<&Atom> = rules.iter().map(|g| g.head_atom().expect("domain head")).collect();
        let mut distinct: Vec<&Atom> = heads.clone();
        distinct.sort();
        distinct.dedup();
        let position: HashMap<&Atom, usize> = distinct.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let head_ids = heads.iter().map(|h| position[h]).collect();
        let conflict = distinct
            .iter()
            .map(|a| distinct.iter().map(|b| theory.conflicting(a, b)).collect())
            .collect();
        Level0 { rules, heads, head_ids, conflict }
    }

    fn conflicting(&self, i: usize, j: usize) -> bool {
        self.conflict[self.head_ids[i]][self.head_ids[j]]
    }

    fn consistent(&self, set: &BTreeSet<usize>) -> bool {
        let members: Vec<usize> = set.iter().copied().collect();
        members.iter().enumerate().all(|(x, &i)| members[x + 1..].iter().all(|&j| !self.conflicting(i, j)))
    }

    /// Minimal consistent derivations per conclusion, plus the rules that
    /// occur in some consistent derivation.
    fn derivations(&self) -> (BTreeMap<&'a Atom, Vec<BTreeSet<usize>>>, BTreeSet<usize>) {
        let mut minimal: BTreeMap<&Atom, Vec<BTreeSet<usize>>> = BTreeMap::new();
        loop {
            let mut changed = false;
            for (r, rule) in self.rules.iter().enumerate() {
                for set in self.combinations(r, rule, &minimal) {
                    if !self.consistent(&set) {
                        continue;
                    }
                    let known = minimal.entry(self.heads[r]).or_default();
                    if known.iter().any(|k| k.is_subset(&set)) {
                        continue;
                    }
                    known.retain(|k| !set.is_subset(k));
                    known.push(set);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut active = BTreeSet::new();
        for (r, rule) in self.rules.iter().enumerate() {
            if self.combinations(r, rule, &minimal).iter().any(|s| self.consistent(s)) {
                active.insert(r);
            }
        }
        for sets in minimal.values_mut() {
            sets.sort();
        }
        (minimal, active)
    }

    /// Every way of combining one minimal derivation per dependency of `r`.
    fn combinations(
        &self,
        r: usize,
        rule: &GroundRule,
        minimal: &BTreeMap<&Atom, Vec<BTreeSet<usize>>>,
    ) -> Vec<BTreeSet<usize>> {
        let mut acc = vec![BTreeSet::from([r])];
        let mut deps: Vec<&Atom> = rule.depends_on.iter().collect();
        deps.sort();
        deps.dedup();
        for dep in deps {
            let Some(options) = minimal.get(dep) else { return Vec::new() };
            acc = acc
                .iter()
                .flat_map(|base| options.iter().map(move |o| base.union(o).copied().collect()))
                .collect();
        }
        acc
    }
}

/// All minimal arguments: one per minimal consistent derivation of each
/// derivable level-0 conclusion, and one single-rule argument per satisfied
/// priority instance.
pub fn build_arguments(ground: &[GroundRule], theory: &Theory) -> Vec<Argument> {
    let level0 = Level0::new(ground, theory);
    let (minimal, _) = level0.derivations();
    let mut out: Vec<Argument> = Vec::new();
    for (conclusion, sets) in &minimal {
        for set in sets {
            out.push(level0_argument(&level0, conclusion, set, theory));
        }
    }
    for g in ground.iter().filter(|g| g.satisfied && g.prefer_target().is_some()) {
        out.push(Argument {
            conclusion: g.head.clone(),
            top: g.instance_id.clone(),
            derivation: vec![g.instance_id.clone()],
            support_priorities: Vec::new(),
            assumptions: abducible_premises(std::iter::once(g), theory),
        });
    }
    out.sort();
    out
}

fn abducible_premises<'a>(rules: impl Iterator<Item = &'a GroundRule>, theory: &Theory) -> Vec<Atom> {
    let set: BTreeSet<Atom> =
        rules.flat_map(|g| g.premises.iter()).filter(|p| theory.is_abducible(p)).cloned().collect();
    set.into_iter().collect()
}

fn level0_argument(level0: &Level0, conclusion: &Atom, set: &BTreeSet<usize>, theory: &Theory) -> Argument {
    let top = set
        .iter()
        .copied()
        .filter(|&i| level0.heads[i] == conclusion)
        .min_by(|&a, &b| level0.rules[a].instance_id.cmp(&level0.rules[b].instance_id))
        .expect("derivation concludes its atom");
    let mut derivation: Vec<String> = set.iter().map(|&i| level0.rules[i].instance_id.clone()).collect();
    derivation.sort();
    Argument {
        conclusion: Literal::Domain(conclusion.clone()),
        top: level0.rules[top].instance_id.clone(),
        derivation,
        support_priorities: Vec::new(),
        assumptions: abducible_premises(set.iter().map(|&i| level0.rules[i]), theory),
    }
}

/// Top-down priority resolution from the highest level to level 1.
pub fn strict_priorities(ground: &[GroundRule], theory: &Theory) -> PriorityRelation {
    let mut by_level: BTreeMap<usize, Vec<&GroundRule>> = BTreeMap::new();
    for g in ground.iter().filter(|g| g.satisfied && g.prefer_target().is_some()) {
        by_level.entry(g.level).or_default().push(g);
    }
    let mut relation = PriorityRelation::default();
    for k in (1..=theory.max_level()).rev() {
        let instances = by_level.get(&k).map(Vec::as_slice).unwrap_or_default();
        let mut level = PriorityLevel::default();
        for rho in instances {
            let (x, y) = rho.prefer_target().expect("priority instance");
            let beaten = instances.iter().any(|other| {
                other.prefer_target() == Some((y, x)) && relation.stronger(k + 1, &other.schema_label, &rho.schema_label)
            });
            if !beaten {
                level.acceptable.insert(rho.instance_id.clone());
            }
        }
        let concluded: BTreeSet<(&str, &str)> = instances
            .iter()
            .filter(|g| level.acceptable.contains(&g.instance_id))
            .filter_map(|g| g.prefer_target())
            .collect();
        for &(a, b) in &concluded {
            if !concluded.contains(&(b, a)) {
                level.strict.insert((a.to_string(), b.to_string()));
            }
        }
        relation.levels.insert(k, level);
    }
    relation
}

/// Lowest-id acceptable instance at `level` concluding `prefer(a,b)`.
fn witness<'a>(ground: &'a [GroundRule], priorities: &PriorityRelation, level: usize, a: &str, b: &str) -> Option<&'a GroundRule> {
    ground
        .iter()
        .filter(|g| g.level == level && g.prefer_target() == Some((a, b)) && priorities.is_acceptable(level, &g.instance_id))
        .min_by(|x, y| x.instance_id.cmp(&y.instance_id))
}

/// The priority instances showing that schema `a` beats schema `b` at
/// `level`: a witness for `prefer(a,b)`, then for every satisfied instance
/// concluding the opposite, the instances that beat it one level up.
/// Empty when `a` is not strictly stronger.
pub fn defeat_chain(ground: &[GroundRule], priorities: &PriorityRelation, level: usize, a: &str, b: &str) -> Vec<String> {
    let mut chain = Vec::new();
    extend_chain(ground, priorities, level, a, b, &mut chain);
    chain
}

fn extend_chain(ground: &[GroundRule], priorities: &PriorityRelation, level: usize, a: &str, b: &str, chain: &mut Vec<String>) {
    if !priorities.stronger(level, a, b) {
        return;
    }
    let Some(first) = witness(ground, priorities, level, a, b) else { return };
    push_unique(chain, &first.instance_id);
    let mut supporters: Vec<&GroundRule> = ground
        .iter()
        .filter(|g| g.level == level && g.prefer_target() == Some((a, b)) && priorities.is_acceptable(level, &g.instance_id))
        .collect();
    supporters.sort_by(|x, y| (x.instance_id != first.instance_id, &x.instance_id).cmp(&(y.instance_id != first.instance_id, &y.instance_id)));
    let mut opponents: Vec<&GroundRule> =
        ground.iter().filter(|g| g.satisfied && g.level == level && g.prefer_target() == Some((b, a))).collect();
    opponents.sort_by(|x, y| x.instance_id.cmp(&y.instance_id));
    for opp in opponents {
        let beater = supporters.iter().find(|s| priorities.stronger(level + 1, &s.schema_label, &opp.schema_label));
        if let Some(sup) = beater {
            push_unique(chain, &sup.instance_id);
            extend_chain(ground, priorities, level + 1, &sup.schema_label, &opp.schema_label, chain);
        }
    }
}

fn push_unique(chain: &mut Vec<String>, id: &str) {
    if !chain.iter().any(|c| c == id) {
        chain.push(id.to_string());
    }
}

/// Credulous acceptance: an option argument is acceptable iff none of its
/// rules faces a conflicting active rule that is strictly stronger at level 1.
pub fn acceptable_options(ground: &[GroundRule], theory: &Theory) -> Decision {
    let level0 = Level0::new(ground, theory);
    let (minimal, active) = level0.derivations();
    let priorities = strict_priorities(ground, theory);

    let mut arguments: BTreeMap<String, Vec<Argument>> = BTreeMap::new();
    for (conclusion, sets) in &minimal {
        if !theory.in_complement(conclusion) {
            continue;
        }
        for set in sets {
            let defeated = set.iter().any(|&s| {
                active.iter().any(|&t| {
                    level0.conflicting(t, s)
                        && priorities.stronger(1, &level0.rules[t].schema_label, &level0.rules[s].schema_label)
                })
            });
            if defeated {
                continue;
            }
            let mut arg = level0_argument(&level0, conclusion, set, theory);
            let mut support = Vec::new();
            for &s in set {
                for &t in &active {
                    if level0.conflicting(t, s) {
                        let chain = defeat_chain(
                            ground,
                            &priorities,
                            1,
                            &level0.rules[s].schema_label,
                            &level0.rules[t].schema_label,
                        );
                        for id in chain {
                            push_unique(&mut support, &id);
                        }
                    }
                }
            }
            support.sort();
            arg.support_priorities = support;
            arguments.entry(conclusion.to_string()).or_default().push(arg);
        }
    }

    let acceptable_options: BTreeSet<String> = arguments.keys().cloned().collect();
    let accepted_atoms: Vec<&Atom> = minimal.keys().copied().filter(|a| acceptable_options.contains(&a.to_string())).collect();
    let ambiguous = accepted_atoms
        .iter()
        .enumerate()
        .any(|(i, a)| accepted_atoms[i + 1..].iter().any(|b| theory.conflicting(a, b)));
    Decision {
        acceptable_options,
        ambiguous,
        arguments,
        priorities,
        active: active.iter().map(|&i| level0.rules[i].instance_id.clone()).collect(),
    }
}
