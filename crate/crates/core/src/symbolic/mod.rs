//! Symbolic layer: PDDL-subset parsing, grounding, the abstract transition
//! function and a satisficing task planner.

mod ground;
mod parse;
mod planner;
pub mod sexpr;

pub use ground::{
    AbstractState, ActionId, Atom, AttachmentChange, FactId, GroundAction, GroundError, GroundTask,
    ObjId, Object, StateDisplay,
};
pub use parse::{
    parse_domain, parse_problem, parse_raw_atom, ActionKind, ActionSchema, AtomTemplate,
    DomainModel, Param, PredicateDecl, ProblemDef, RawAtom, Term, TypeDecl, ATTACHED,
};
pub use planner::{
    h_add, replay, task_plan, task_plan_with_stats, PlanError, PlanStats, PlannerConfig,
    SearchMode, DEFAULT_NODE_BUDGET,
};

use sexpr::Pos;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: undeclared {kind} `{name}`")]
    Undeclared {
        pos: Pos,
        kind: &'static str,
        name: String,
    },
    #[error("{pos}: duplicate {kind} `{name}`")]
    Duplicate {
        pos: Pos,
        kind: &'static str,
        name: String,
    },
    #[error("{pos}: `{name}` takes {expected} arguments, found {found}")]
    Arity {
        pos: Pos,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{pos}: `{arg}` is not of type `{expected}`")]
    TypeMismatch {
        pos: Pos,
        arg: String,
        expected: String,
    },
    #[error(transparent)]
    Ground(#[from] GroundError),
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError::Syntax { pos, msg: msg.into() }
    }

    pub(crate) fn undeclared(pos: Pos, kind: &'static str, name: &str) -> Self {
        ParseError::Undeclared {
            pos,
            kind,
            name: name.to_string(),
        }
    }
}

/// Parses and grounds a domain/problem pair.
pub fn load_task(domain_text: &str, problem_text: &str) -> Result<GroundTask, ParseError> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text, &domain)?;
    GroundTask::new(domain, &problem)
}
