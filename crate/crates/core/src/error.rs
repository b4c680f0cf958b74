use thiserror::Error;

use crate::kernel::AgentId;
use crate::logic::FormulaParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("point ({run}, {time}) is not a point of the system")]
    PointOutOfRange { run: usize, time: usize },

    #[error("agent {agent} is outside the agent range 1..={count}")]
    AgentOutOfRange { agent: usize, count: usize },

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("unknown run `{0}`")]
    UnknownRun(String),

    #[error("proposition `{0}` is not declared by the interpretation")]
    UndeclaredProp(String),

    #[error("common knowledge needs a non-empty group")]
    EmptyGroup,

    #[error("agent {0} appears more than once in the action assignment")]
    DuplicateAgent(AgentId),

    #[error("bad action assignment: {0}")]
    BadAssignment(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// A kernel invariant violated by one global state.
    #[error("run {run}, time {time}: {reason}")]
    InvalidState {
        run: usize,
        time: usize,
        reason: String,
    },

    #[error("context expands to {required} runs, over the budget of {budget}")]
    BudgetExceeded { required: usize, budget: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Parse(#[from] FormulaParseError),
}
