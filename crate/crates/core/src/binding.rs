//! Variable bindings, one-way matching of patterns against ground atoms, and
//! evaluation of arithmetic terms.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::decimal::{ArithmeticError, Num};
use crate::rule_lang::{ArithOp, Atom, Comparison, Term};

pub type Bindings = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is unbound")]
    UnboundVariable(String),
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error("`{0}` is not a number")]
    NotNumeric(String),
}

pub fn eval_num(term: &Term, env: &Bindings) -> Result<Num, EvalError> {
    match term {
        Term::Number(d) => Ok(Num::from(d)),
        Term::Variable(v) => match env.get(v) {
            Some(bound) => eval_num(bound, env),
            None => Err(EvalError::UnboundVariable(v.clone())),
        },
        Term::Arith(op, l, r) => {
            let (a, b) = (eval_num(l, env)?, eval_num(r, env)?);
            Ok(match op {
                ArithOp::Add => a.add(&b)?,
                ArithOp::Sub => a.sub(&b)?,
                ArithOp::Mul => a.mul(&b)?,
                ArithOp::Div => a.div(&b)?,
                ArithOp::Pow => a.pow(&b)?,
            })
        }
        other => Err(EvalError::NotNumeric(other.to_string())),
    }
}

/// Replaces bound variables and folds ground arithmetic into numbers.
pub fn substitute(term: &Term, env: &Bindings) -> Result<Term, EvalError> {
    match term {
        Term::Variable(v) => match env.get(v) {
            Some(bound) => Ok(bound.clone()),
            None => Err(EvalError::UnboundVariable(v.clone())),
        },
        Term::Atom(_) | Term::Number(_) => Ok(term.clone()),
        Term::Compound(f, args) => Ok(Term::Compound(
            f.clone(),
            args.iter().map(|a| substitute(a, env)).collect::<Result<_, _>>()?,
        )),
        Term::Arith(..) => Ok(Term::Number(eval_num(term, env)?.to_decimal()?)),
    }
}

/// Replaces bound variables but leaves arithmetic unevaluated, so ground
/// conditions still read like their source (`70000>0.7*80000`).
pub fn bind_variables(term: &Term, env: &Bindings) -> Result<Term, EvalError> {
    match term {
        Term::Variable(v) => env.get(v).cloned().ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Term::Atom(_) | Term::Number(_) => Ok(term.clone()),
        Term::Compound(f, args) => Ok(Term::Compound(
            f.clone(),
            args.iter().map(|a| bind_variables(a, env)).collect::<Result<_, _>>()?,
        )),
        Term::Arith(op, l, r) => Ok(Term::arith(*op, bind_variables(l, env)?, bind_variables(r, env)?)),
    }
}

pub fn substitute_atom(atom: &Atom, env: &Bindings) -> Result<Atom, EvalError> {
    Ok(Atom {
        predicate: atom.predicate.clone(),
        args: atom.args.iter().map(|a| substitute(a, env)).collect::<Result<_, _>>()?,
    })
}

/// Evaluates a comparison. Numeric operands compare by value; `=` on
/// non-numeric ground terms compares structurally.
pub fn eval_comparison(cmp: Comparison, lhs: &Term, rhs: &Term, env: &Bindings) -> Result<bool, EvalError> {
    match (eval_num(lhs, env), eval_num(rhs, env)) {
        (Ok(a), Ok(b)) => Ok(eval_builtin(cmp, &a, &b)),
        (Err(EvalError::NotNumeric(_)), _) | (_, Err(EvalError::NotNumeric(_))) if cmp == Comparison::Eq => {
            Ok(substitute(lhs, env)? == substitute(rhs, env)?)
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

pub fn eval_builtin(cmp: Comparison, lhs: &Num, rhs: &Num) -> bool {
    let ord = lhs.compare(rhs);
    match cmp {
        Comparison::Gt => ord == Ordering::Greater,
        Comparison::Lt => ord == Ordering::Less,
        Comparison::Ge => ord != Ordering::Less,
        Comparison::Le => ord != Ordering::Greater,
        Comparison::Eq => ord == Ordering::Equal,
    }
}

/// Matches `pattern` against a ground term, extending `env`. Arithmetic
/// sub-patterns must already be evaluable under `env`.
pub fn match_term(pattern: &Term, ground: &Term, env: &mut Bindings) -> bool {
    match pattern {
        Term::Variable(v) => match env.get(v) {
            Some(bound) => terms_equal(bound, ground),
            None => {
                env.insert(v.clone(), ground.clone());
                true
            }
        },
        Term::Atom(a) => matches!(ground, Term::Atom(b) if a == b),
        Term::Number(a) => matches!(ground, Term::Number(b) if a == b),
        Term::Compound(f, args) => match ground {
            Term::Compound(g, gargs) if f == g && args.len() == gargs.len() => {
                args.iter().zip(gargs).all(|(p, g)| match_term(p, g, env))
            }
            _ => false,
        },
        Term::Arith(..) => match (eval_num(pattern, env), ground) {
            (Ok(value), Term::Number(d)) => value.compare(&Num::from(d)) == Ordering::Equal,
            _ => false,
        },
    }
}

fn terms_equal(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Number(x), Term::Number(y)) => x == y,
        _ => a == b,
    }
}

pub fn match_atom(pattern: &Atom, ground: &Atom, env: &mut Bindings) -> bool {
    pattern.predicate == ground.predicate
        && pattern.args.len() == ground.args.len()
        && pattern.args.iter().zip(&ground.args).all(|(p, g)| match_term(p, g, env))
}
