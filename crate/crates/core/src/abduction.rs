//! Minimal abductive support for a target option.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::explainer::Explanation;
use crate::grounder::QueryContext;
use crate::rule_lang::{Atom, Theory};
use crate::{evaluate, EvaluationError};

/// Largest abducible vocabulary searched exhaustively.
pub const MAX_ABDUCIBLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbductionError {
    #[error("`{0}` is not an option of this theory")]
    UnknownOption(String),
    #[error("{0} candidate abducibles exceed the search limit of {MAX_ABDUCIBLES}")]
    TooManyAbducibles(usize),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbductiveSupport {
    pub assumptions: Vec<Atom>,
    pub explanation: Explanation,
}

/// Subset-minimal sets of abducibles that, added to `ctx.assumed`, make
/// `target` acceptable. Returns `[{}]` when it already is, and `[]` when no
/// set works.
pub fn decide_with_abduction(
    theory: &Theory,
    ctx: &QueryContext,
    target: &str,
) -> Result<Vec<AbductiveSupport>, AbductionError> {
    let option = Atom::parse(target).map_err(|_| AbductionError::UnknownOption(target.to_string()))?;
    if !theory.in_complement(&option) {
        return Err(AbductionError::UnknownOption(target.to_string()));
    }
    let known = ctx.known_atoms();
    let vocabulary: Vec<&Atom> = theory.abducibles().iter().filter(|a| !known.contains(a)).collect();
    if vocabulary.len() > MAX_ABDUCIBLES {
        return Err(AbductionError::TooManyAbducibles(vocabulary.len()));
    }

    let n = vocabulary.len();
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut found: Vec<u32> = Vec::new();
    let mut out = Vec::new();
    for mask in masks {
        if found.iter().any(|f| f & mask == *f) {
            continue;
        }
        let chosen: BTreeSet<Atom> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| vocabulary[i].clone()).collect();
        let mut extended = ctx.clone();
        extended.assumed.extend(chosen.iter().cloned());
        let result = evaluate(theory, &extended)?;
        if let Some(explanation) = result.per_option.get(&option.to_string()).and_then(|es| es.first()) {
            found.push(mask);
            out.push(AbductiveSupport { assumptions: chosen.into_iter().collect(), explanation: explanation.clone() });
        }
    }
    Ok(out)
}
