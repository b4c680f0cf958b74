//! Global states, runs, systems and points, plus the `does`/`did` action
//! semantics read off the environment's history component.
//!
//! Runs are finite: a system has a horizon `T` and every run is the sequence
//! of global states at times `0..=T`. An action `a` is performed by agent `i`
//! at `(r, t)` iff the event `(a, i, t)` is in the history of `r` at time
//! `t + 1`; since histories only grow, that is the same as being in every
//! later history. Nothing is performed at `t = T`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic::Interpretation;

/// Structured payload of local and environment states.
///
/// Only equality matters for knowledge. `Hash`/`Ord` are consistent with it
/// and used for partitioning and deterministic output.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn list(items: impl IntoIterator<Item = Value>) -> Self {
        Value::List(items.into_iter().collect())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_owned())
    }
}

/// Renders ints bare, strings double-quoted with `\"` and `\\` escapes, and
/// lists as `[a b c]`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => write_quoted(f, s),
            Value::List(items) => {
                f.write_str("[")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

/// An agent, numbered from 1.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AgentId(usize);

impl AgentId {
    /// # Panics
    /// If `number` is 0.
    pub fn new(number: usize) -> Self {
        assert!(number >= 1, "agents are numbered from 1");
        AgentId(number)
    }

    /// The 1-based agent number.
    pub fn number(self) -> usize {
        self.0
    }

    /// Position of this agent's local state inside a global state.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Action(String);

impl Action {
    /// # Panics
    /// If `label` is empty.
    pub fn new(label: impl Into<String>) -> Self {
        let label = label.into();
        assert!(!label.is_empty(), "action labels are non-empty");
        Action(label)
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `(action, agent, time)`: the agent performed the action at that time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryEvent {
    pub action: Action,
    pub agent: AgentId,
    pub time: usize,
}

impl HistoryEvent {
    pub fn new(action: Action, agent: AgentId, time: usize) -> Self {
        HistoryEvent {
            action,
            agent,
            time,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct History {
    events: BTreeSet<HistoryEvent>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, event: HistoryEvent) -> bool {
        self.events.insert(event)
    }

    pub fn contains(&self, event: &HistoryEvent) -> bool {
        self.events.contains(event)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HistoryEvent> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_subset(&self, other: &History) -> bool {
        self.events.is_subset(&other.events)
    }
}

impl FromIterator<HistoryEvent> for History {
    fn from_iter<I: IntoIterator<Item = HistoryEvent>>(iter: I) -> Self {
        History {
            events: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalState(pub Value);

impl From<Value> for LocalState {
    fn from(v: Value) -> Self {
        LocalState(v)
    }
}

impl fmt::Display for LocalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvState {
    pub history: History,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalState {
    pub env: EnvState,
    pub locals: Vec<LocalState>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub name: String,
    pub states: Vec<GlobalState>,
}

impl Run {
    pub fn new(name: impl Into<String>, states: Vec<GlobalState>) -> Self {
        Run {
            name: name.into(),
            states,
        }
    }

    pub fn state(&self, time: usize) -> &GlobalState {
        &self.states[time]
    }

    /// Runs compare equal as sequences of global states; names are labels.
    pub fn same_states(&self, other: &Run) -> bool {
        self.states == other.states
    }
}

/// `(run, time)`, the unit at which formulas are evaluated.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Point {
    pub run: usize,
    pub time: usize,
}

impl Point {
    pub fn new(run: usize, time: usize) -> Self {
        Point { run, time }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.run, self.time)
    }
}

/// A finite interpreted system: runs over a common horizon plus the truth
/// table of its primitive propositions. Immutable once built.
#[derive(Clone, Debug)]
pub struct System {
    agents: Vec<String>,
    horizon: usize,
    runs: Vec<Run>,
    interpretation: Interpretation,
    /// Per agent, the indistinguishability class id of every point.
    classes: Vec<Vec<u32>>,
    class_counts: Vec<usize>,
}

impl System {
    /// Validates every kernel invariant and precomputes the agents'
    /// indistinguishability partitions.
    pub fn new(
        agents: Vec<String>,
        horizon: usize,
        runs: Vec<Run>,
        interpretation: Interpretation,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidSystem("a system needs at least one agent".into()));
        }
        if runs.is_empty() {
            return Err(Error::InvalidSystem("a system needs at least one run".into()));
        }
        for (r, run) in runs.iter().enumerate() {
            validate_run(r, run, agents.len(), horizon)?;
        }
        interpretation.check_total(runs.len() * (horizon + 1))?;

        let mut sys = System {
            agents,
            horizon,
            runs,
            interpretation,
            classes: Vec::new(),
            class_counts: Vec::new(),
        };
        sys.build_partitions();
        Ok(sys)
    }

    fn build_partitions(&mut self) {
        let n = self.agents.len();
        let mut classes = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for a in 0..n {
            let mut ids: HashMap<&LocalState, u32> = HashMap::new();
            let mut of_point = Vec::with_capacity(self.point_count());
            for run in &self.runs {
                for state in &run.states {
                    let next = ids.len() as u32;
                    of_point.push(*ids.entry(&state.locals[a]).or_insert(next));
                }
            }
            counts.push(ids.len());
            classes.push(of_point);
        }
        self.classes = classes;
        self.class_counts = counts;
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agents
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (1..=self.agents.len()).map(AgentId)
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agents[agent.index()]
    }

    /// Resolves an agent by name, or by its 1-based number.
    pub fn agent_by_name(&self, name: &str) -> Result<AgentId> {
        if let Some(k) = self.agents.iter().position(|a| a == name) {
            return Ok(AgentId(k + 1));
        }
        match name.parse::<usize>() {
            Ok(k) if (1..=self.agents.len()).contains(&k) => Ok(AgentId(k)),
            _ => Err(Error::UnknownAgent(name.to_owned())),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn run(&self, id: usize) -> Result<&Run> {
        self.runs.get(id).ok_or(Error::PointOutOfRange { run: id, time: 0 })
    }

    /// Resolves a run by name, or by its index.
    pub fn run_by_name(&self, name: &str) -> Result<usize> {
        if let Some(k) = self.runs.iter().position(|r| r.name == name) {
            return Ok(k);
        }
        match name.parse::<usize>() {
            Ok(k) if k < self.runs.len() => Ok(k),
            _ => Err(Error::UnknownRun(name.to_owned())),
        }
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interpretation
    }

    /// `|Pts(R)|`.
    pub fn point_count(&self) -> usize {
        self.runs.len() * (self.horizon + 1)
    }

    /// All points in (run, time) order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let width = self.horizon + 1;
        (0..self.point_count()).map(move |k| Point::new(k / width, k % width))
    }

    pub fn point_index(&self, p: Point) -> usize {
        p.run * (self.horizon + 1) + p.time
    }

    pub fn point_at(&self, index: usize) -> Point {
        let width = self.horizon + 1;
        Point::new(index / width, index % width)
    }

    pub fn check_point(&self, p: Point) -> Result<()> {
        if p.run < self.runs.len() && p.time <= self.horizon {
            Ok(())
        } else {
            Err(Error::PointOutOfRange {
                run: p.run,
                time: p.time,
            })
        }
    }

    pub fn check_agent(&self, agent: AgentId) -> Result<()> {
        if agent.number() <= self.agents.len() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange {
                agent: agent.number(),
                count: self.agents.len(),
            })
        }
    }

    pub fn global_state(&self, p: Point) -> Result<&GlobalState> {
        self.check_point(p)?;
        Ok(&self.runs[p.run].states[p.time])
    }

    /// `r_i(t)`.
    pub fn local_state(&self, p: Point, agent: AgentId) -> Result<&LocalState> {
        self.check_agent(agent)?;
        Ok(&self.global_state(p)?.locals[agent.index()])
    }

    /// `does_i(a)` at `p`. False at the horizon: no later history attests it.
    pub fn does(&self, p: Point, agent: AgentId, action: &Action) -> Result<bool> {
        self.check_point(p)?;
        self.check_agent(agent)?;
        Ok(self.does_unchecked(p, agent, action))
    }

    pub(crate) fn does_unchecked(&self, p: Point, agent: AgentId, action: &Action) -> bool {
        if p.time >= self.horizon {
            return false;
        }
        let event = HistoryEvent::new(action.clone(), agent, p.time);
        self.runs[p.run].states[p.time + 1].env.history.contains(&event)
    }

    /// `did_i(a)` at `p`: `does_i(a)` at some `t' <= p.time` of the same run.
    pub fn did(&self, p: Point, agent: AgentId, action: &Action) -> Result<bool> {
        self.check_point(p)?;
        self.check_agent(agent)?;
        Ok(self.did_unchecked(p, agent, action))
    }

    pub(crate) fn did_unchecked(&self, p: Point, agent: AgentId, action: &Action) -> bool {
        (0..=p.time).any(|t| self.does_unchecked(Point::new(p.run, t), agent, action))
    }

    /// Class id of `p` in the agent's indistinguishability partition.
    pub(crate) fn class_of(&self, agent: AgentId, point_index: usize) -> usize {
        self.classes[agent.index()][point_index] as usize
    }

    pub(crate) fn class_count(&self, agent: AgentId) -> usize {
        self.class_counts[agent.index()]
    }

    /// Every action label that occurs in some history.
    pub fn actions(&self) -> BTreeSet<(AgentId, Action)> {
        let mut out = BTreeSet::new();
        for run in &self.runs {
            if let Some(last) = run.states.last() {
                for e in last.env.history.iter() {
                    out.insert((e.agent, e.action.clone()));
                }
            }
        }
        out
    }

    /// Largest event time recorded anywhere, if any action occurs.
    pub fn latest_event_time(&self) -> Option<usize> {
        self.runs
            .iter()
            .filter_map(|r| r.states.last())
            .flat_map(|s| s.env.history.iter().map(|e| e.time))
            .max()
    }

    /// Drops runs whose state sequence repeats an earlier run's. Knowledge is
    /// unaffected; the interpretation rows of the kept runs are preserved.
    pub fn deduplicated(&self) -> Result<System> {
        let mut keep: Vec<usize> = Vec::new();
        for (r, run) in self.runs.iter().enumerate() {
            if !keep.iter().any(|&k| self.runs[k].same_states(run)) {
                keep.push(r);
            }
        }
        let runs = keep.iter().map(|&r| self.runs[r].clone()).collect();
        let interp = self.interpretation.select_runs(&keep, self.horizon);
        System::new(self.agents.clone(), self.horizon, runs, interp)
    }

    /// A copy with a different interpretation.
    pub fn with_interpretation(&self, interpretation: Interpretation) -> Result<System> {
        interpretation.check_total(self.point_count())?;
        let mut sys = self.clone();
        sys.interpretation = interpretation;
        Ok(sys)
    }

    /// A copy with extra runs appended (and their interpretation rows).
    pub fn with_runs_appended(
        &self,
        extra: Vec<Run>,
        extra_interp: Interpretation,
    ) -> Result<System> {
        let mut runs = self.runs.clone();
        runs.extend(extra);
        let interp = self.interpretation.concat(&extra_interp)?;
        System::new(self.agents.clone(), self.horizon, runs, interp)
    }
}

fn validate_run(r: usize, run: &Run, agent_count: usize, horizon: usize) -> Result<()> {
    if run.states.len() != horizon + 1 {
        return Err(Error::InvalidState {
            run: r,
            time: run.states.len().min(horizon),
            reason: format!(
                "run has {} states, horizon {horizon} needs {}",
                run.states.len(),
                horizon + 1
            ),
        });
    }
    for (t, state) in run.states.iter().enumerate() {
        let bad = |reason: String| Error::InvalidState {
            run: r,
            time: t,
            reason,
        };
        if state.locals.len() != agent_count {
            return Err(bad(format!(
                "{} local states for {agent_count} agents",
                state.locals.len()
            )));
        }
        for e in state.env.history.iter() {
            if e.time >= t {
                return Err(bad(format!(
                    "history event ({}, {}, {}) is not in the past",
                    e.action, e.agent, e.time
                )));
            }
            if e.agent.number() > agent_count {
                return Err(bad(format!("history event names agent {}", e.agent)));
            }
        }
        if t > 0 && !run.states[t - 1].env.history.is_subset(&state.env.history) {
            return Err(bad("history shrank since the previous time".into()));
        }
    }
    Ok(())
}
