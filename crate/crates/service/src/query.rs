//! Query requests checked against an application's metadata.

use std::collections::{BTreeMap, BTreeSet};

use arbiter_core::abduction::{decide_with_abduction, AbductionError, AbductiveSupport};
use arbiter_core::decimal::Decimal;
use arbiter_core::grounder::QueryContext;
use arbiter_core::rule_lang::{Atom, Diagnostic, Theory};
use arbiter_core::sbp::{ApplicationMetadata, ElementKind};
use arbiter_core::{evaluate, EvaluationError, Explanation};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

/// One numeric value or several (each yields its own rule instances).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingValues(pub Vec<Decimal>);

impl<'de> Deserialize<'de> for BindingValues {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let one = |v: &serde_json::Value| -> Result<Decimal, D::Error> {
            match v {
                serde_json::Value::Number(n) => n.to_string().parse().map_err(D::Error::custom),
                serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
                other => Err(D::Error::custom(format!("expected a number, found {other}"))),
            }
        };
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Array(items) => Ok(BindingValues(items.iter().map(one).collect::<Result<_, _>>()?)),
            v => Ok(BindingValues(vec![one(&v)?])),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    #[serde(default)]
    pub facts: Vec<String>,
    #[serde(default)]
    pub bindings: BTreeMap<String, BindingValues>,
    #[serde(default)]
    pub abduce_for: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryResponse {
    pub app_id: String,
    pub revision: u64,
    pub acceptable_options: BTreeSet<String>,
    pub ambiguous: bool,
    pub explanations: Vec<Explanation>,
    pub assumptions: BTreeSet<Atom>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abduction: Option<Abduction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Abduction {
    pub target: String,
    pub supports: Vec<AbductiveSupport>,
}

#[derive(Debug, Error)]
pub enum QueryError {
    /// The request does not fit the application's vocabulary.
    #[error("invalid query context")]
    InvalidContext(Vec<Diagnostic>),
    /// Evaluating the inputs failed, e.g. a division by zero.
    #[error(transparent)]
    Evaluation(EvaluationError),
    #[error(transparent)]
    Abduction(AbductionError),
}

/// Maps request ids onto context atoms, rejecting anything the metadata
/// does not list.
pub fn build_context(metadata: &ApplicationMetadata, req: &QueryRequest) -> Result<QueryContext, Vec<Diagnostic>> {
    let mut ctx = QueryContext::new();
    let mut problems = Vec::new();
    for fact in &req.facts {
        match metadata.element(fact) {
            Some(e) if e.kind == ElementKind::Propositional => {
                ctx.propositional_facts.insert(Atom::prop(fact.as_str()));
                continue;
            }
            Some(e) if e.kind == ElementKind::Numeric => {
                problems.push(Diagnostic::error(
                    "NumericElementAsFact",
                    format!("`{fact}` is numeric; supply it under `bindings`"),
                ));
                continue;
            }
            _ => {}
        }
        let relational = Atom::parse(fact).ok().filter(|a| {
            a.is_ground()
                && metadata.scenario_elements.iter().any(|e| {
                    e.kind == ElementKind::Relational && e.id == a.predicate && e.arity == a.arity()
                })
        });
        match relational {
            Some(atom) => {
                ctx.propositional_facts.insert(atom);
            }
            None => problems.push(Diagnostic::error(
                "UnknownScenarioElement",
                format!("`{fact}` is not a scenario element of this application"),
            )),
        }
    }
    for (name, values) in &req.bindings {
        match metadata.element(name) {
            Some(e) if e.kind == ElementKind::Numeric => {
                for v in &values.0 {
                    ctx = ctx.with_binding(name, v.clone());
                }
            }
            _ => problems.push(Diagnostic::error(
                "UnknownScenarioElement",
                format!("`{name}` is not a numeric scenario element of this application"),
            )),
        }
    }
    if let Some(target) = &req.abduce_for {
        if !metadata.options.contains(target) {
            problems.push(Diagnostic::error("UnknownOption", format!("`{target}` is not an option of this application")));
        }
    }
    if problems.is_empty() {
        Ok(ctx)
    } else {
        Err(problems)
    }
}

pub fn run_query(
    app_id: &str,
    revision: u64,
    theory: &Theory,
    metadata: &ApplicationMetadata,
    req: &QueryRequest,
) -> Result<QueryResponse, QueryError> {
    let ctx = build_context(metadata, req).map_err(QueryError::InvalidContext)?;
    let result = evaluate(theory, &ctx).map_err(QueryError::Evaluation)?;
    let abduction = match &req.abduce_for {
        Some(target) => Some(Abduction {
            target: target.clone(),
            supports: decide_with_abduction(theory, &ctx, target).map_err(QueryError::Abduction)?,
        }),
        None => None,
    };
    Ok(QueryResponse {
        app_id: app_id.to_string(),
        revision,
        acceptable_options: result.acceptable_options,
        ambiguous: result.ambiguous,
        explanations: result.per_option.into_values().flatten().collect(),
        assumptions: result.assumptions,
        abduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use arbiter_core::sbp::metadata_of;
    use arbiter_core::rule_lang::parse_theory;

    fn request(json: &str) -> QueryRequest {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn bindings_accept_numbers_strings_and_lists() {
        let r = request(r#"{"bindings":{"a":0.1,"b":"70000","c":[1,2.5]}}"#);
        assert_eq!(r.bindings["a"].0, ["0.1".parse::<Decimal>().unwrap()]);
        assert_eq!(r.bindings["b"].0.len(), 1);
        assert_eq!(r.bindings["c"].0.len(), 2);
        assert!(serde_json::from_str::<QueryRequest>(r#"{"bindings":{"a":true}}"#).is_err());
        assert!(serde_json::from_str::<QueryRequest>(r#"{"fact":[]}"#).is_err());
    }

    #[test]
    fn unknown_ids_are_rejected() {
        let t = parse_theory(include_str!("../../core/fixtures/salary_advanced.grg")).unwrap();
        let m = metadata_of(&t);
        let errs = build_context(&m, &request(r#"{"facts":["nonexistent_atom"],"bindings":{"salary":1}}"#)).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|d| d.code == "UnknownScenarioElement"));
        let errs = build_context(&m, &request(r#"{"facts":["offered_salary"]}"#)).unwrap_err();
        assert_eq!(errs[0].code, "NumericElementAsFact");
    }

    #[test]
    fn relational_facts_are_ground_literals() {
        let t = parse_theory("rule(r1,go,[]):-route(X,Y),open(Y).\ncomplement(go,stay).").unwrap();
        let m = metadata_of(&t);
        let ctx = build_context(&m, &request(r#"{"facts":["route(a,b)","open(b)"]}"#)).unwrap();
        assert_eq!(ctx.propositional_facts.len(), 2);
        assert!(build_context(&m, &request(r#"{"facts":["route(a)"]}"#)).is_err());
        assert!(build_context(&m, &request(r#"{"facts":["route(X,b)"]}"#)).is_err());
    }
}
