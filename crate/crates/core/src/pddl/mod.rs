//! Reading and writing the supported PDDL 2.1 subset, plan files and the
//! configuration document; grounding; lifted macro composition; and the
//! shortest-path closure of move schemas.

mod closure;
mod config;
mod domain;
mod emit;
mod ground;
mod lift;
mod plan_io;
pub mod sexpr;

pub use closure::{all_pairs_shortest_paths, shortest_path_closure, MoveSpec};
pub use config::{parse_config, Config, MutexEntry};
pub use domain::{
    parse_domain, parse_problem, LiftedAtom, LiftedDomain, LiftedLiteral, LiftedSchema,
    PredicateDecl, Problem, Term, TypedName, OBJECT,
};
pub use emit::{emit_domain, emit_problem, emit_task};
pub use ground::{
    ground, ground_with_macros, instantiate, ExclusionReason, Excluded, GroundingReport,
    ObjectTable,
};
pub use lift::{lift_compose, GroundingCheck, GroundingStatus, LiftReport, MacroRecipe, RecipeStep};
pub use plan_io::{emit_plan, parse_plan};

use crate::composer::{ComposeError, Undefined};
use crate::model::{ModelError, WellFormednessReport};
use crate::time::Time;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("{line}:{col}: expected {expected}")]
    Parse {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("{line}:{col}: unsupported feature: {feature}")]
    UnsupportedFeature {
        feature: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: {message}")]
    Invalid {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("type error: {0}")]
    Type(String),
    #[error("unknown schema `{0}`")]
    UnknownSchema(String),
    #[error("schema `{name}` is ill-formed for distinct arguments: {report}")]
    IllFormedSchema {
        name: String,
        report: WellFormednessReport,
    },
    #[error("macro `{name}` is undefined for every grounding")]
    UndefinedForAllGroundings { name: String, witness: Undefined },
    #[error("macro `{name}` is undefined for distinct arguments but defined for {defined} aliased groundings")]
    UndefinedForDistinctArguments { name: String, defined: usize },
    #[error("invalid macro recipe `{name}`: {message}")]
    Recipe { name: String, message: String },
    #[error("line {line}: unknown action {name}")]
    UnknownAction { line: usize, name: String },
    #[error("line {line}: {action} lasts {declared}, the plan says {given}")]
    DurationMismatch {
        line: usize,
        action: String,
        declared: Time,
        given: Time,
    },
    #[error("`{schema}` cannot be closed as a move schema: {reason}")]
    NotAMoveSchema { schema: String, reason: String },
    #[error("no duration given for edge {from} -> {to}")]
    MissingEdgeDuration { from: String, to: String },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("cannot emit task: {0}")]
    Emit(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}
