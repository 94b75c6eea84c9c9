//! Rule language, policy compiler, grounder and decision engine for
//! preference-based argumentation.
//!
//! ```
//! use arbiter_core::{evaluate, grounder::QueryContext, rule_lang::parse_theory};
//!
//! let theory = parse_theory(
//!     "rule(r1,accept,[]):-good.\nrule(r2,refuse,[]):-risky.\n\
//!      rule(p1,prefer(r2,r1),[]).\ncomplement(accept,refuse).",
//! )
//! .unwrap();
//! let ctx = QueryContext::new().with_fact("good").with_fact("risky");
//! let result = evaluate(&theory, &ctx).unwrap();
//! assert_eq!(result.acceptable_options.iter().collect::<Vec<_>>(), ["refuse"]);
//! ```

pub mod abduction;
pub mod binding;
pub mod decimal;
pub mod engine;
pub mod explainer;
pub mod grounder;
pub mod rule_lang;
pub mod sbp;

use thiserror::Error;

pub use explainer::{DecisionResult, Explanation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Ground(#[from] grounder::GroundError),
    #[error(transparent)]
    Explain(#[from] explainer::ExplainError),
}

/// Grounds, decides and explains in one step.
pub fn evaluate(theory: &rule_lang::Theory, ctx: &grounder::QueryContext) -> Result<DecisionResult, EvaluationError> {
    let ground = grounder::ground_theory(theory, ctx)?;
    let decision = engine::acceptable_options(&ground, theory);
    Ok(explainer::explain(&decision, &ground, ctx, theory)?)
}
