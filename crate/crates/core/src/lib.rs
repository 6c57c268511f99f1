//! Sequential temporal macro-actions for PDDL 2.1 durative actions.
//!
//! The crate composes durative actions into macro-actions, turns a task with
//! macros into an effect-safe task guarded by mutex atoms, validates
//! time-stamped plans against the exact event-sequence semantics, and unfolds
//! macros in solutions back into their constituents.

pub mod composer;
pub mod effect_safe;
pub mod model;
pub mod pddl;
pub mod planner;
pub mod refinement;
pub mod semantics;
pub mod time;

pub use model::*;
pub use time::Time;
