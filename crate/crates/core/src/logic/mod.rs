//! The epistemic language, interpretations, and the satisfaction relation.
//!
//! Formulas are evaluated bottom-up: every subformula is turned into its
//! extension, the set of points where it holds. `K_i` is then a per-class
//! universal over agent `i`'s indistinguishability partition, and `C_G` a
//! universal over the connected components of the union of the partitions of
//! the agents in `G`.

mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::kernel::{Action, AgentId, Point, Run, System};

pub use eval::{
    eval, eval_common, extension, indistinguishable, nested_everyone, nested_everyone_extension,
    valid, validly_implies, PointSet,
};
pub use parse::{parse_formula, FormulaParseError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// `true` / `false`.
    Const(bool),
    Prop(String),
    Does(AgentId, Action),
    Did(AgentId, Action),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Know(AgentId, Box<Formula>),
    /// Common knowledge among a non-empty group.
    Common(BTreeSet<AgentId>, Box<Formula>),
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    pub fn does(agent: AgentId, action: impl Into<String>) -> Self {
        Formula::Does(agent, Action::new(action))
    }

    pub fn did(agent: AgentId, action: impl Into<String>) -> Self {
        Formula::Did(agent, Action::new(action))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(f: Formula, g: Formula) -> Self {
        Formula::And(Box::new(f), Box::new(g))
    }

    /// `!( !f & !g )`.
    pub fn or(f: Formula, g: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(f), Formula::not(g)))
    }

    /// `!( f & !g )`.
    pub fn implies(f: Formula, g: Formula) -> Self {
        Formula::not(Formula::and(f, Formula::not(g)))
    }

    pub fn know(agent: AgentId, f: Formula) -> Self {
        Formula::Know(agent, Box::new(f))
    }

    pub fn common(group: impl IntoIterator<Item = AgentId>, f: Formula) -> Self {
        Formula::Common(group.into_iter().collect(), Box::new(f))
    }

    /// `K_{a_m} ... K_{a_1} f` for `chain = [a_1, ..., a_m]`: the first
    /// agent's knowledge is innermost.
    pub fn nested_know(chain: &[AgentId], f: Formula) -> Self {
        chain.iter().fold(f, |acc, &a| Formula::know(a, acc))
    }

    /// Nesting depth of knowledge operators.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Prop(_) | Formula::Does(..) | Formula::Did(..) => 0,
            Formula::Not(f) => f.modal_depth(),
            Formula::And(f, g) => f.modal_depth().max(g.modal_depth()),
            Formula::Know(_, f) | Formula::Common(_, f) => 1 + f.modal_depth(),
        }
    }

    /// Checks agents, group and proposition names against the system.
    pub fn validate(&self, sys: &System) -> Result<()> {
        match self {
            Formula::Const(_) => Ok(()),
            Formula::Prop(name) => {
                if sys.interpretation().declares(name) {
                    Ok(())
                } else {
                    Err(Error::UndeclaredProp(name.clone()))
                }
            }
            Formula::Does(a, _) | Formula::Did(a, _) => sys.check_agent(*a),
            Formula::Not(f) => f.validate(sys),
            Formula::And(f, g) => {
                f.validate(sys)?;
                g.validate(sys)
            }
            Formula::Know(a, f) => {
                sys.check_agent(*a)?;
                f.validate(sys)
            }
            Formula::Common(group, f) => {
                if group.is_empty() {
                    return Err(Error::EmptyGroup);
                }
                for a in group {
                    sys.check_agent(*a)?;
                }
                f.validate(sys)
            }
        }
    }
}

/// Truth table of the primitive propositions over `Pts(R)`, indexed in
/// (run, time) order. `does`/`did` atoms are not part of it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    table: BTreeMap<String, Vec<bool>>,
}

impl Interpretation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds the table from explicit rows; totality is checked when the
    /// interpretation is attached to a system.
    pub fn from_table(table: BTreeMap<String, Vec<bool>>) -> Self {
        Interpretation { table }
    }

    /// Evaluates `holds(prop, run, time)` at every point of `runs`.
    pub fn tabulate<F>(props: &[&str], runs: &[Run], horizon: usize, holds: F) -> Self
    where
        F: Fn(&str, &Run, usize) -> bool,
    {
        let table = props
            .iter()
            .map(|&name| {
                let row = runs
                    .iter()
                    .flat_map(|run| (0..=horizon).map(move |t| (run, t)))
                    .map(|(run, t)| holds(name, run, t))
                    .collect();
                (name.to_owned(), row)
            })
            .collect();
        Interpretation { table }
    }

    pub fn declares(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    pub fn prop_names(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    pub fn row(&self, name: &str) -> Option<&[bool]> {
        self.table.get(name).map(Vec::as_slice)
    }

    /// `pi(prop, p)`.
    pub fn holds(&self, sys: &System, name: &str, p: Point) -> Result<bool> {
        sys.check_point(p)?;
        let row = self
            .table
            .get(name)
            .ok_or_else(|| Error::UndeclaredProp(name.to_owned()))?;
        Ok(row[sys.point_index(p)])
    }

    pub(crate) fn check_total(&self, points: usize) -> Result<()> {
        for (name, row) in &self.table {
            if row.len() != points {
                return Err(Error::InvalidSystem(format!(
                    "proposition `{name}` has {} truth values for {points} points",
                    row.len()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn select_runs(&self, keep: &[usize], horizon: usize) -> Self {
        let width = horizon + 1;
        let table = self
            .table
            .iter()
            .map(|(name, row)| {
                let kept = keep
                    .iter()
                    .flat_map(|&r| row[r * width..(r + 1) * width].iter().copied())
                    .collect();
                (name.clone(), kept)
            })
            .collect();
        Interpretation { table }
    }

    pub(crate) fn concat(&self, other: &Interpretation) -> Result<Self> {
        if self.table.keys().ne(other.table.keys()) {
            return Err(Error::InvalidSystem(
                "appended runs must interpret the same propositions".into(),
            ));
        }
        let table = self
            .table
            .iter()
            .map(|(name, row)| {
                let mut row = row.clone();
                row.extend_from_slice(&other.table[name]);
                (name.clone(), row)
            })
            .collect();
        Ok(Interpretation { table })
    }
}
