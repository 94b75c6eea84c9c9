use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::decimal::Decimal;

/// Label of a rule clause (`r1`, `p2`, `c1`, ...).
pub type RuleLabel = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Pow => "**",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(String),
    Number(Decimal),
    Variable(String),
    Compound(String, Vec<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Self {
        Term::Atom(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Variable(name.into())
    }

    pub fn number(value: Decimal) -> Self {
        Term::Number(value)
    }

    pub fn arith(op: ArithOp, lhs: Term, rhs: Term) -> Self {
        Term::Arith(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Variable(_) => false,
            Term::Atom(_) | Term::Number(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            Term::Arith(_, l, r) => l.is_ground() && r.is_ground(),
        }
    }

    pub fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Term::Variable(v) => {
                out.insert(v);
            }
            Term::Atom(_) | Term::Number(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_variables(out)),
            Term::Arith(_, l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Comparison {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Gt => ">",
            Comparison::Lt => "<",
            Comparison::Ge => ">=",
            Comparison::Le => "=<",
            Comparison::Eq => "=",
        }
    }
}

/// A predicate applied to arguments. Zero arguments makes it a propositional atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn prop(predicate: impl Into<String>) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        self.args.iter().for_each(|a| a.collect_variables(out));
    }

    /// Parses a single domain literal such as `offered_salary(70000)`.
    pub fn parse(text: &str) -> Result<Atom, super::ParseError> {
        super::parser::parse_atom(text)
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Atom::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Domain(Atom),
    Builtin(Comparison, Term, Term),
    Prefer(RuleLabel, RuleLabel),
}

impl Literal {
    pub fn domain(&self) -> Option<&Atom> {
        match self {
            Literal::Domain(a) => Some(a),
            _ => None,
        }
    }

    pub fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Literal::Domain(a) => a.collect_variables(out),
            Literal::Builtin(_, l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
            Literal::Prefer(..) => {}
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Literal::Domain(a) => a.is_ground(),
            Literal::Builtin(_, l, r) => l.is_ground() && r.is_ground(),
            Literal::Prefer(..) => true,
        }
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleClause {
    pub label: RuleLabel,
    pub head: Literal,
    /// The bracketed premise list: defeasible beliefs or abducible hypotheses.
    pub premises: Vec<Atom>,
    /// The body after `:-`.
    pub conditions: Vec<Literal>,
}

impl RuleClause {
    pub fn new(label: impl Into<String>, head: Literal, premises: Vec<Atom>, conditions: Vec<Literal>) -> Self {
        RuleClause { label: label.into(), head, premises, conditions }
    }

    pub fn prefer_target(&self) -> Option<(&str, &str)> {
        match &self.head {
            Literal::Prefer(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Domain literals of the premise list and conditions, in source order.
    pub fn body_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.premises.iter().chain(self.conditions.iter().filter_map(Literal::domain))
    }
}

/// Unordered pair of conflicting conclusions, kept in first-declared orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComplementPair(pub Atom, pub Atom);

impl ComplementPair {
    pub fn same_pair(&self, a: &Atom, b: &Atom) -> bool {
        (&self.0 == a && &self.1 == b) || (&self.0 == b && &self.1 == a)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => f.write_str(a),
            Term::Number(n) => write!(f, "{n}"),
            Term::Variable(v) => f.write_str(v),
            Term::Compound(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
            Term::Arith(op, l, r) => {
                write_operand(f, l)?;
                f.write_str(op.symbol())?;
                write_operand(f, r)
            }
        }
    }
}

// Operands that are themselves expressions or negative numbers are always bracketed.
fn write_operand(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Arith(..) => write!(f, "({t})"),
        Term::Number(n) if n.is_negative() => write!(f, "({t})"),
        _ => write!(f, "{t}"),
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_list(f, &self.args)?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Domain(a) => write!(f, "{a}"),
            Literal::Builtin(cmp, l, r) => write!(f, "{l}{}{r}", cmp.symbol()),
            Literal::Prefer(a, b) => write!(f, "prefer({a},{b})"),
        }
    }
}

impl fmt::Display for RuleClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule({},{},[", self.label, self.head)?;
        write_list(f, &self.premises)?;
        f.write_str("])")?;
        if !self.conditions.is_empty() {
            f.write_str(":-")?;
            write_list(f, &self.conditions)?;
        }
        f.write_str(".")
    }
}
