//! Seeded generator of small propositional theories for differential tests.

use arbiter_core::grounder::QueryContext;
use arbiter_core::rule_lang::{parse_theory, Atom, Theory};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct RandomCase {
    pub source: String,
    pub theory: Theory,
    pub context: QueryContext,
}

const FACTS: [&str; 5] = ["f0", "f1", "f2", "f3", "f4"];
const BELIEFS: [&str; 3] = ["b0", "nb0", "b1"];

fn conditions<R: Rng>(rng: &mut R, max: usize) -> Vec<&'static str> {
    let n = rng.gen_range(0..=max);
    let mut picked: Vec<&str> = FACTS.choose_multiple(rng, n).copied().collect();
    picked.sort_unstable();
    picked
}

fn clause(label: &str, head: &str, premises: &[&str], conds: &[&str]) -> String {
    let body = if conds.is_empty() { String::new() } else { format!(":-{}", conds.join(",")) };
    format!("rule({label},{head},[{}]){body}.\n", premises.join(","))
}

/// A theory with at most `max_rules` rules (the ground set is the same size,
/// since everything is propositional), up to three levels and three options.
/// Preference cycles, belief chains and abducible premises all occur.
pub fn random_case<R: Rng>(rng: &mut R, max_rules: usize) -> RandomCase {
    let max_rules = max_rules.max(2);
    let option_count = rng.gen_range(2..=3);
    let options: Vec<String> = (0..option_count).map(|i| format!("o{i}")).collect();
    let mut src = String::new();

    let n0 = rng.gen_range(1..=max_rules.min(5));
    let mut level0 = Vec::new();
    for i in 0..n0 {
        let label = format!("r{}", i + 1);
        let head = if rng.gen_bool(0.7) {
            options.choose(rng).unwrap().clone()
        } else {
            BELIEFS.choose(rng).unwrap().to_string()
        };
        let mut premises = Vec::new();
        if rng.gen_bool(0.35) {
            let b = *BELIEFS.choose(rng).unwrap();
            if b != head {
                premises.push(b);
            }
        }
        if rng.gen_bool(0.15) {
            premises.push("a0");
        }
        src.push_str(&clause(&label, &head, &premises, &conditions(rng, 1)));
        level0.push(label);
    }

    let mut remaining = max_rules - n0;
    let mut below = level0;
    for prefix in ["p", "c"] {
        if below.len() < 2 || remaining == 0 {
            break;
        }
        let count = rng.gen_range(1..=remaining.min(3));
        remaining -= count;
        let mut this_level = Vec::new();
        for i in 0..count {
            let label = format!("{prefix}{}", i + 1);
            let pair: Vec<&String> = below.choose_multiple(rng, 2).collect();
            let head = format!("prefer({},{})", pair[0], pair[1]);
            src.push_str(&clause(&label, &head, &[], &conditions(rng, 1)));
            this_level.push(label);
        }
        below = this_level;
    }

    for (i, a) in options.iter().enumerate() {
        for b in &options[i + 1..] {
            src.push_str(&format!("complement({a},{b}).\n"));
        }
    }
    src.push_str("complement(b0,nb0).\nabducible(a0).\n");

    let theory = parse_theory(&src).unwrap_or_else(|e| panic!("generated theory rejected: {e}\n{src}"));
    let mut context = QueryContext::new();
    for f in FACTS {
        if rng.gen_bool(0.7) {
            context = context.with_fact(f);
        }
    }
    if rng.gen_bool(0.3) {
        context = context.with_assumed(Atom::prop("a0"));
    }
    RandomCase { source: src, theory, context }
}
