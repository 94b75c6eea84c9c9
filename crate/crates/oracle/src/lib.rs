//! Brute-force reference semantics for small ground rule sets.
//!
//! Every subset of satisfied level-0 rules is a candidate composite argument.
//! A candidate is valid when each of its rules can fire from the context plus
//! the conclusions of the candidate's own rules, and no two of its
//! conclusions are complementary. A valid candidate is acceptable when no
//! valid candidate holds a rule whose conclusion conflicts with one of its
//! conclusions and whose rule is strictly preferred at level 1.
//!
//! Priority acceptability is evaluated by direct recursion on the level
//! definitions instead of the engine's top-down sweep:
//!
//! * a level-k priority instance is acceptable iff it is satisfied and no
//!   satisfied instance concluding the opposite priority is strictly stronger
//!   at level k+1;
//! * `a` is strictly stronger than `b` at level k iff an acceptable level-k
//!   instance concludes `prefer(a,b)` and none concludes `prefer(b,a)`.
//!
//! Only the rule-language and grounding data types are shared with the
//! engine.

pub mod random;

use std::collections::{BTreeMap, BTreeSet};

use arbiter_core::grounder::GroundRule;
use arbiter_core::rule_lang::{Atom, Literal, Term, Theory};
use thiserror::Error;

/// Largest ground set the oracle accepts.
pub const MAX_GROUND_RULES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} ground rules exceed the oracle cap of {MAX_GROUND_RULES}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleVerdict {
    pub acceptable_options: BTreeSet<String>,
    /// Per level, the `(stronger, weaker)` schema pairs concluded by
    /// acceptable priority instances.
    pub acceptable_prefer_conclusions: BTreeMap<usize, BTreeSet<(String, String)>>,
}

// Structural matching of a complement side (which may hold variables)
// against a ground atom. Numbers compare by value via `Decimal`'s `Eq`.
fn unify_side(pattern: &Atom, ground: &Atom, env: &mut BTreeMap<String, Term>) -> bool {
    fn go(p: &Term, g: &Term, env: &mut BTreeMap<String, Term>) -> bool {
        match (p, g) {
            (Term::Variable(v), _) => match env.get(v) {
                Some(prev) => prev == g,
                None => {
                    env.insert(v.clone(), g.clone());
                    true
                }
            },
            (Term::Compound(f, a), Term::Compound(h, b)) => {
                f == h && a.len() == b.len() && a.iter().zip(b).all(|(x, y)| go(x, y, env))
            }
            _ => p == g,
        }
    }
    pattern.predicate == ground.predicate
        && pattern.args.len() == ground.args.len()
        && pattern.args.iter().zip(&ground.args).all(|(p, g)| go(p, g, env))
}

fn complementary(theory: &Theory, a: &Atom, b: &Atom) -> bool {
    theory.complements().iter().any(|pair| {
        let mut e1 = BTreeMap::new();
        let mut e2 = BTreeMap::new();
        (unify_side(&pair.0, a, &mut e1) && unify_side(&pair.1, b, &mut e1))
            || (unify_side(&pair.0, b, &mut e2) && unify_side(&pair.1, a, &mut e2))
    })
}

fn is_option(theory: &Theory, a: &Atom) -> bool {
    theory.complements().iter().any(|pair| {
        unify_side(&pair.0, a, &mut BTreeMap::new()) || unify_side(&pair.1, a, &mut BTreeMap::new())
    })
}

struct Priorities<'a> {
    /// Satisfied priority instances with their level and conclusion.
    prefs: Vec<(usize, &'a str, &'a str, &'a str)>,
}

impl<'a> Priorities<'a> {
    fn new(ground: &'a [GroundRule], theory: &Theory) -> Self {
        let level = |label: &str| schema_level(theory, label);
        let prefs = ground
            .iter()
            .filter(|g| g.satisfied)
            .filter_map(|g| match &g.head {
                Literal::Prefer(a, b) => Some((level(&g.schema_label), g.instance_id.as_str(), a.as_str(), b.as_str())),
                _ => None,
            })
            .collect();
        Priorities { prefs }
    }

    fn acceptable(&self, index: usize) -> bool {
        let (k, _, x, y) = self.prefs[index];
        let own_schema = self.schema_of(index);
        !self.prefs.iter().enumerate().any(|(j, &(kj, _, a, b))| {
            kj == k && a == y && b == x && self.stronger(k + 1, self.schema_of(j), own_schema)
        })
    }

    fn schema_of(&self, index: usize) -> &'a str {
        let id = self.prefs[index].1;
        id.split('{').next().unwrap_or(id)
    }

    fn stronger(&self, level: usize, a: &str, b: &str) -> bool {
        let concludes = |x: &str, y: &str| {
            self.prefs
                .iter()
                .enumerate()
                .any(|(i, &(k, _, p, q))| k == level && p == x && q == y && self.acceptable(i))
        };
        concludes(a, b) && !concludes(b, a)
    }
}

fn schema_level(theory: &Theory, label: &str) -> usize {
    match theory.rules().iter().find(|r| r.label == label).map(|r| &r.head) {
        Some(Literal::Prefer(a, _)) => 1 + schema_level(theory, a),
        _ => 0,
    }
}

/// Exhaustive verdict for a ground rule set of at most [`MAX_GROUND_RULES`].
pub fn brute_force_acceptable(ground: &[GroundRule], theory: &Theory) -> Result<OracleVerdict, OracleError> {
    if ground.len() > MAX_GROUND_RULES {
        return Err(OracleError::TooLarge(ground.len()));
    }
    let priorities = Priorities::new(ground, theory);

    let mut acceptable_prefer_conclusions: BTreeMap<usize, BTreeSet<(String, String)>> = BTreeMap::new();
    for (i, &(k, _, a, b)) in priorities.prefs.iter().enumerate() {
        if priorities.acceptable(i) {
            acceptable_prefer_conclusions.entry(k).or_default().insert((a.to_string(), b.to_string()));
        }
    }

    let rules: Vec<&GroundRule> = ground.iter().filter(|g| g.satisfied && g.head.domain().is_some()).collect();
    let n = rules.len();
    let head = |i: usize| rules[i].head.domain().expect("domain head");

    // attackers[s]: rules t whose conclusion conflicts with s's and which are
    // strictly preferred to s at level 1.
    let mut attackers = vec![0u32; n];
    for (s, slot) in attackers.iter_mut().enumerate() {
        for t in 0..n {
            if complementary(theory, head(t), head(s))
                && priorities.stronger(1, &rules[t].schema_label, &rules[s].schema_label)
            {
                *slot |= 1 << t;
            }
        }
    }

    let valid = |mask: u32| -> bool {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                if complementary(theory, head(i), head(j)) {
                    return false;
                }
            }
        }
        let mut fired = 0u32;
        let mut available: BTreeSet<&Atom> = BTreeSet::new();
        loop {
            let mut progress = false;
            for &i in &members {
                if fired & (1 << i) == 0 && rules[i].depends_on.iter().all(|d| available.contains(d)) {
                    fired |= 1 << i;
                    available.insert(head(i));
                    progress = true;
                }
            }
            if !progress {
                return fired == mask;
            }
        }
    };

    let candidates: Vec<u32> = (1u32..(1u32 << n)).filter(|&m| valid(m)).collect();
    let mut acceptable_options = BTreeSet::new();
    for &s in &candidates {
        let attack_mask = (0..n).filter(|i| s & (1 << i) != 0).fold(0u32, |acc, i| acc | attackers[i]);
        if candidates.iter().any(|&t| t & attack_mask != 0) {
            continue;
        }
        for i in (0..n).filter(|i| s & (1 << i) != 0) {
            if is_option(theory, head(i)) {
                acceptable_options.insert(head(i).to_string());
            }
        }
    }
    Ok(OracleVerdict { acceptable_options, acceptable_prefer_conclusions })
}
