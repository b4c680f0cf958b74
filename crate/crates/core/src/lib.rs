//! Model checking for the runs-and-systems model of knowledge.
//!
//! A [`System`] is a finite set of runs over a common horizon together with an
//! interpretation of its primitive propositions. On top of it the crate
//! evaluates knowledge, common knowledge and nested knowledge ([`logic`]),
//! decides the coordination predicates and checks the knowledge-of-preconditions
//! theorems with counterexample reporting ([`properties`]), and builds systems
//! from protocols and contexts, including a library of classic scenarios
//! ([`protocols`]). [`gen`] produces random and exhaustively enumerated small
//! systems for property testing.

pub mod error;
pub mod gen;
pub mod kernel;
pub mod logic;
pub mod properties;
pub mod protocols;

pub use error::{Error, Result};
pub use kernel::{
    Action, AgentId, EnvState, GlobalState, History, HistoryEvent, LocalState, Point, Run, System,
    Value,
};
pub use logic::{Formula, Interpretation, PointSet};
