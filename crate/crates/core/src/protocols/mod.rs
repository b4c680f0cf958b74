//! Building systems `R(P, gamma)` from a protocol and a context.
//!
//! The model is synchronous rounds over a network. At every time `t < T`
//! each agent applies its deterministic step to its local state, which yields
//! an optional action and messages for neighbouring agents. The environment
//! then picks, for each message, one delay within the edge's bounds or (on a
//! lossy edge) loss; every combination of choices is a separate branch.
//! Messages and scheduled external inputs arriving at `t + 1` are folded into
//! the receivers' local states by the protocol's update rule, and the actions
//! performed at `t` are appended to the history at `t + 1`.
//!
//! Since steps depend only on the local state, every action a [`Protocol`]
//! emits is conscious in the generated system, provided local states carry
//! enough to tell apart points at the horizon (the scenarios keep a clock).

pub mod scenarios;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::kernel::{
    Action, AgentId, EnvState, GlobalState, History, HistoryEvent, LocalState, Point, Run, System,
    Value,
};
use crate::logic::{extension, Formula, Interpretation};

/// Runs a context may expand to before generation gives up.
pub const DEFAULT_RUN_BUDGET: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub to: AgentId,
    pub payload: Value,
}

/// Something arriving in an agent's local state; `from` is `None` for
/// external inputs supplied by the environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub from: Option<AgentId>,
    pub payload: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AgentMove {
    pub action: Option<Action>,
    pub sends: Vec<Message>,
}

impl AgentMove {
    pub fn idle() -> Self {
        Self::default()
    }
}

/// A deterministic joint protocol: each method may only look at the agent's
/// own local state and what is delivered to it.
pub trait Protocol {
    /// Local state at time 0 from the agent's initial input and any external
    /// inputs scheduled for time 0.
    fn initial(&self, agent: AgentId, input: &Value, inbox: &[Delivery]) -> LocalState;

    fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove;

    /// Local state one round later, given what the agent did and received.
    fn update(
        &self,
        agent: AgentId,
        local: &LocalState,
        performed: &AgentMove,
        inbox: &[Delivery],
    ) -> LocalState;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: AgentId,
    pub b: AgentId,
    pub min_delay: usize,
    pub max_delay: usize,
    pub lossy: bool,
}

impl Edge {
    /// Reliable edge with a fixed delay.
    pub fn fixed(a: AgentId, b: AgentId, delay: usize) -> Self {
        Edge {
            a,
            b,
            min_delay: delay,
            max_delay: delay,
            lossy: false,
        }
    }
}

/// Undirected communication graph with per-edge delay bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkTopology {
    agents: usize,
    edges: Vec<Edge>,
}

impl NetworkTopology {
    pub fn new(agents: usize, edges: Vec<Edge>) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidConfig("a network needs at least one agent".into()));
        }
        for e in &edges {
            let bad = |why: &str| Error::InvalidConfig(format!("edge {}-{}: {why}", e.a, e.b));
            if e.a.number() > agents || e.b.number() > agents {
                return Err(bad("endpoint out of range"));
            }
            if e.a == e.b {
                return Err(bad("self loop"));
            }
            if e.min_delay == 0 || e.min_delay > e.max_delay {
                return Err(bad("delays must satisfy 1 <= min <= max"));
            }
        }
        Ok(NetworkTopology { agents, edges })
    }

    /// `1 - 2 - ... - n`, every edge with the same delay.
    pub fn path(agents: usize, delay: usize) -> Result<Self> {
        let edges = (1..agents)
            .map(|k| Edge::fixed(AgentId::new(k), AgentId::new(k + 1), delay))
            .collect();
        Self::new(agents, edges)
    }

    pub fn complete(agents: usize, delay: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 1..=agents {
            for b in a + 1..=agents {
                edges.push(Edge::fixed(AgentId::new(a), AgentId::new(b), delay));
            }
        }
        Self::new(agents, edges)
    }

    /// Parses `"1-2,2-3,3-4"` into unit-delay reliable edges.
    pub fn parse_edges(agents: usize, list: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| Error::InvalidConfig(format!("bad edge `{part}`, want `i-j`")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::InvalidConfig(format!("bad agent number in `{part}`")))
            };
            edges.push(Edge::fixed(AgentId::new(num(a)?), AgentId::new(num(b)?), 1));
        }
        Self::new(agents, edges)
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, x: AgentId, y: AgentId) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| (e.a == x && e.b == y) || (e.a == y && e.b == x))
    }

    pub fn neighbors(&self, x: AgentId) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.a == x {
                    Some(e.b)
                } else if e.b == x {
                    Some(e.a)
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Hop distance from `root` to every agent (`None` if unreachable).
    pub fn distances(&self, root: AgentId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.agents];
        dist[root.index()] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x.index()].expect("queued agents have a distance");
            for y in self.neighbors(x) {
                if dist[y.index()].is_none() {
                    dist[y.index()] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Breadth-first tree towards `root`: each agent's next hop (lowest
    /// numbered neighbour one step closer), `None` for the root.
    pub fn parents_toward(&self, root: AgentId) -> Result<Vec<Option<AgentId>>> {
        let dist = self.distances(root);
        (1..=self.agents)
            .map(AgentId::new)
            .map(|x| {
                let d = dist[x.index()].ok_or_else(|| {
                    Error::InvalidConfig(format!("agent {x} cannot reach agent {root}"))
                })?;
                if d == 0 {
                    return Ok(None);
                }
                Ok(self
                    .neighbors(x)
                    .into_iter()
                    .find(|y| dist[y.index()] == Some(d - 1)))
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.distances(AgentId::new(1)).iter().all(Option::is_some)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalInput {
    pub time: usize,
    pub agent: AgentId,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialState {
    /// Prefix of the names of the runs starting here.
    pub label: String,
    /// Per-agent initial input, handed to [`Protocol::initial`].
    pub inputs: Vec<Value>,
    /// External inputs the environment will deliver, fixed per initial state.
    pub external: Vec<ExternalInput>,
    /// Scenario data kept in the environment state (e.g. the initial values
    /// propositions are computed from).
    pub env: Value,
}

/// Initial states over a network; the environment's choices come from the
/// edges' delay and loss bounds.
#[derive(Clone, Debug)]
pub struct Context {
    pub agents: Vec<String>,
    pub topology: NetworkTopology,
    pub initial_states: Vec<InitialState>,
}

impl Context {
    fn validate(&self) -> Result<()> {
        if self.agents.len() != self.topology.agent_count() {
            return Err(Error::InvalidConfig(format!(
                "{} agent names for a network of {}",
                self.agents.len(),
                self.topology.agent_count()
            )));
        }
        if self.initial_states.is_empty() {
            return Err(Error::InvalidConfig("no initial states".into()));
        }
        for init in &self.initial_states {
            if init.inputs.len() != self.agents.len() {
                return Err(Error::InvalidConfig(format!(
                    "initial state `{}` has {} inputs for {} agents",
                    init.label,
                    init.inputs.len(),
                    self.agents.len()
                )));
            }
            if init.external.iter().any(|x| x.agent.number() > self.agents.len()) {
                return Err(Error::InvalidConfig(format!(
                    "initial state `{}` schedules input for an unknown agent",
                    init.label
                )));
            }
        }
        Ok(())
    }
}

/// The scenario part of an environment payload built by [`generate_runs`].
pub fn scenario_env(state: &GlobalState) -> &Value {
    match &state.env.payload {
        Value::List(items) if !items.is_empty() => &items[0],
        other => other,
    }
}

#[derive(Clone, Debug)]
struct InFlight {
    arrival: usize,
    from: AgentId,
    to: AgentId,
    payload: Value,
}

impl InFlight {
    fn to_value(&self) -> Value {
        Value::list([
            Value::Int(self.arrival as i64),
            Value::Int(self.from.number() as i64),
            Value::Int(self.to.number() as i64),
            self.payload.clone(),
        ])
    }
}

struct Partial {
    init: usize,
    name: String,
    states: Vec<GlobalState>,
    in_flight: Vec<InFlight>,
}

fn env_payload(init: &InitialState, in_flight: &[InFlight]) -> Value {
    Value::list([
        init.env.clone(),
        Value::List(in_flight.iter().map(InFlight::to_value).collect()),
    ])
}

fn external_inbox(init: &InitialState, agent: AgentId, time: usize) -> Vec<Delivery> {
    init.external
        .iter()
        .filter(|x| x.agent == agent && x.time == time)
        .map(|x| Delivery {
            from: None,
            payload: x.payload.clone(),
        })
        .collect()
}

/// Unfolds every initial state through every sequence of environment choices
/// for `horizon` rounds. Runs come out ordered by initial state, then by the
/// environment's choice indices. Fails instead of truncating when a level of
/// the expansion would exceed `budget` runs.
pub fn generate_runs<P: Protocol + ?Sized>(
    protocol: &P,
    context: &Context,
    horizon: usize,
    budget: usize,
) -> Result<Vec<Run>> {
    context.validate()?;
    if context.initial_states.len() > budget {
        return Err(Error::BudgetExceeded {
            required: context.initial_states.len(),
            budget,
        });
    }
    let agents: Vec<AgentId> = (1..=context.agents.len()).map(AgentId::new).collect();

    let mut frontier: Vec<Partial> = context
        .initial_states
        .iter()
        .enumerate()
        .map(|(k, init)| {
            let locals = agents
                .iter()
                .map(|&a| protocol.initial(a, &init.inputs[a.index()], &external_inbox(init, a, 0)))
                .collect();
            Partial {
                init: k,
                name: init.label.clone(),
                states: vec![GlobalState {
                    env: EnvState {
                        history: History::new(),
                        payload: env_payload(init, &[]),
                    },
                    locals,
                }],
                in_flight: Vec::new(),
            }
        })
        .collect();

    for t in 0..horizon {
        // moves and per-message environment choices of every partial run
        let mut expansions = Vec::with_capacity(frontier.len());
        let mut required = 0usize;
        for partial in &frontier {
            let current = partial.states.last().expect("partial runs are non-empty");
            let moves: Vec<AgentMove> = agents
                .iter()
                .map(|&a| protocol.step(a, &current.locals[a.index()]))
                .collect();
            let mut options: Vec<Vec<Option<usize>>> = Vec::new();
            let mut sent: Vec<(AgentId, Message)> = Vec::new();
            for (&a, mv) in agents.iter().zip(&moves) {
                for msg in &mv.sends {
                    let edge = context.topology.edge(a, msg.to).ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "agent {a} sent to {} without a channel",
                            msg.to
                        ))
                    })?;
                    let mut opts: Vec<Option<usize>> =
                        (edge.min_delay..=edge.max_delay).map(Some).collect();
                    if edge.lossy {
                        opts.push(None);
                    }
                    options.push(opts);
                    sent.push((a, msg.clone()));
                }
            }
            let branches = options
                .iter()
                .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
                .unwrap_or(usize::MAX);
            required = required.saturating_add(branches);
            expansions.push((moves, options, sent, branches));
        }
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }

        let mut next = Vec::with_capacity(required);
        for (partial, (moves, options, sent, branches)) in frontier.iter().zip(&expansions) {
            let init = &context.initial_states[partial.init];
            let current = partial.states.last().expect("partial runs are non-empty");
            let mut history = current.env.history.clone();
            for (&a, mv) in agents.iter().zip(moves) {
                if let Some(action) = &mv.action {
                    history.insert(HistoryEvent::new(action.clone(), a, t));
                }
            }
            for choice in 0..*branches {
                // mixed-radix decode, first message most significant
                let mut rest = choice;
                let mut picks = vec![None; options.len()];
                for (k, opts) in options.iter().enumerate().rev() {
                    picks[k] = opts[rest % opts.len()];
                    rest /= opts.len();
                }
                let mut in_flight = partial.in_flight.clone();
                for ((from, msg), pick) in sent.iter().zip(&picks) {
                    if let Some(delay) = pick {
                        in_flight.push(InFlight {
                            arrival: t + delay,
                            from: *from,
                            to: msg.to,
                            payload: msg.payload.clone(),
                        });
                    }
                }
                let (arriving, pending): (Vec<_>, Vec<_>) =
                    in_flight.into_iter().partition(|m| m.arrival == t + 1);
                let locals = agents
                    .iter()
                    .map(|&a| {
                        let mut inbox: Vec<Delivery> = arriving
                            .iter()
                            .filter(|m| m.to == a)
                            .map(|m| Delivery {
                                from: Some(m.from),
                                payload: m.payload.clone(),
                            })
                            .collect();
                        inbox.extend(external_inbox(init, a, t + 1));
                        protocol.update(a, &current.locals[a.index()], &moves[a.index()], &inbox)
                    })
                    .collect();
                let mut states = partial.states.clone();
                states.push(GlobalState {
                    env: EnvState {
                        history: history.clone(),
                        payload: env_payload(init, &pending),
                    },
                    locals,
                });
                let name = if *branches > 1 {
                    format!("{}.{choice}", partial.name)
                } else {
                    partial.name.clone()
                };
                next.push(Partial {
                    init: partial.init,
                    name,
                    states,
                    in_flight: pending,
                });
            }
        }
        frontier = next;
    }

    Ok(frontier
        .into_iter()
        .map(|p| Run::new(p.name, p.states))
        .collect())
}

/// [`generate_runs`] plus an interpretation computed from run contents.
pub fn generate_system<P, F>(
    protocol: &P,
    context: &Context,
    horizon: usize,
    budget: usize,
    props: &[&str],
    holds: F,
) -> Result<System>
where
    P: Protocol + ?Sized,
    F: Fn(&str, &Run, usize) -> bool,
{
    let runs = generate_runs(protocol, context, horizon, budget)?;
    let interp = Interpretation::tabulate(props, &runs, horizon, holds);
    System::new(context.agents.clone(), horizon, runs, interp)
}

/// `agent` performs `action` at the first time `condition` holds in a run.
#[derive(Clone, Debug)]
pub struct FirstTimeRule {
    pub agent: AgentId,
    pub action: Action,
    pub condition: Formula,
}

/// Adds knowledge-triggered actions that do not influence any local state.
///
/// Each condition is evaluated on `sys` as given, and the action is recorded
/// at the first time before the horizon where it holds. When the agent's
/// local states determine its own past (perfect recall) and the condition is
/// local to the agent, the added action is conscious.
pub fn perform_when_first(sys: &System, rules: &[FirstTimeRule]) -> Result<System> {
    let mut firsts = Vec::with_capacity(rules.len());
    for rule in rules {
        sys.check_agent(rule.agent)?;
        let ext = extension(sys, &rule.condition)?;
        let per_run: Vec<Option<usize>> = (0..sys.runs().len())
            .map(|r| {
                (0..sys.horizon()).find(|&t| ext.contains(sys.point_index(Point::new(r, t))))
            })
            .collect();
        firsts.push(per_run);
    }
    let mut runs = sys.runs().to_vec();
    for (r, run) in runs.iter_mut().enumerate() {
        for (rule, per_run) in rules.iter().zip(&firsts) {
            if let Some(t0) = per_run[r] {
                let event = HistoryEvent::new(rule.action.clone(), rule.agent, t0);
                for state in &mut run.states[t0 + 1..] {
                    state.env.history.insert(event.clone());
                }
            }
        }
    }
    System::new(
        sys.agent_names().to_vec(),
        sys.horizon(),
        runs,
        sys.interpretation().clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Agent 1 pings agent 2 once at time 0; agent 2 counts receipts.
    struct Ping;

    impl Protocol for Ping {
        fn initial(&self, _: AgentId, _: &Value, _: &[Delivery]) -> LocalState {
            LocalState(Value::list([Value::Int(0), Value::Int(0)]))
        }

        fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove {
            let clock = local.0.as_list().unwrap()[0].as_int().unwrap();
            if agent.number() == 1 && clock == 0 {
                AgentMove {
                    action: Some(Action::new("ping")),
                    sends: vec![Message {
                        to: AgentId::new(2),
                        payload: Value::Int(1),
                    }],
                }
            } else {
                AgentMove::idle()
            }
        }

        fn update(&self, _: AgentId, local: &LocalState, _: &AgentMove, inbox: &[Delivery]) -> LocalState {
            let items = local.0.as_list().unwrap();
            LocalState(Value::list([
                Value::Int(items[0].as_int().unwrap() + 1),
                Value::Int(items[1].as_int().unwrap() + inbox.len() as i64),
            ]))
        }
    }

    fn context(edge: Edge) -> Context {
        Context {
            agents: vec!["1".into(), "2".into()],
            topology: NetworkTopology::new(2, vec![edge]).unwrap(),
            initial_states: vec![InitialState {
                label: "r".into(),
                inputs: vec![Value::Int(0), Value::Int(0)],
                external: vec![],
                env: Value::Int(0),
            }],
        }
    }

    #[test]
    fn deterministic_context_has_one_run() {
        let ctx = context(Edge::fixed(AgentId::new(1), AgentId::new(2), 1));
        let runs = generate_runs(&Ping, &ctx, 3, DEFAULT_RUN_BUDGET).unwrap();
        assert_eq!(runs.len(), 1);
        let received: Vec<i64> = runs[0]
            .states
            .iter()
            .map(|s| s.locals[1].0.as_list().unwrap()[1].as_int().unwrap())
            .collect();
        assert_eq!(received, vec![0, 1, 1, 1]);
    }

    #[test]
    fn delay_bounds_and_loss_branch() {
        let ctx = context(Edge {
            a: AgentId::new(1),
            b: AgentId::new(2),
            min_delay: 1,
            max_delay: 2,
            lossy: true,
        });
        let runs = generate_runs(&Ping, &ctx, 3, DEFAULT_RUN_BUDGET).unwrap();
        let names: Vec<&str> = runs.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["r.0", "r.1", "r.2"]);
        let arrival = |run: &Run| {
            run.states
                .iter()
                .position(|s| s.locals[1].0.as_list().unwrap()[1] == Value::Int(1))
        };
        assert_eq!(arrival(&runs[0]), Some(1));
        assert_eq!(arrival(&runs[1]), Some(2));
        assert_eq!(arrival(&runs[2]), None);
        // the ping is recorded the same way in every branch
        for run in &runs {
            assert_eq!(run.states[1].env.history.len(), 1);
            assert!(run.states[0].env.history.is_empty());
        }
    }

    #[test]
    fn budget_is_enforced_not_truncated() {
        let ctx = context(Edge {
            a: AgentId::new(1),
            b: AgentId::new(2),
            min_delay: 1,
            max_delay: 3,
            lossy: true,
        });
        assert_eq!(
            generate_runs(&Ping, &ctx, 2, 3).unwrap_err(),
            Error::BudgetExceeded {
                required: 4,
                budget: 3
            }
        );
    }

    #[test]
    fn sending_without_a_channel_is_an_error() {
        let ctx = Context {
            agents: vec!["1".into(), "2".into(), "3".into()],
            topology: NetworkTopology::new(
                3,
                vec![Edge::fixed(AgentId::new(2), AgentId::new(3), 1)],
            )
            .unwrap(),
            initial_states: vec![InitialState {
                label: "r".into(),
                inputs: vec![Value::Int(0); 3],
                external: vec![],
                env: Value::Int(0),
            }],
        };
        assert!(matches!(
            generate_runs(&Ping, &ctx, 1, 10),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn topology_helpers() {
        let t = NetworkTopology::parse_edges(4, "1-2, 2-3,3-4").unwrap();
        assert!(t.is_connected());
        assert_eq!(
            t.distances(AgentId::new(1)),
            vec![Some(0), Some(1), Some(2), Some(3)]
        );
        let parents = t.parents_toward(AgentId::new(1)).unwrap();
        assert_eq!(parents[3], Some(AgentId::new(3)));
        assert_eq!(parents[0], None);
        assert!(NetworkTopology::parse_edges(3, "1-1").is_err());
        assert!(NetworkTopology::parse_edges(3, "1-4").is_err());
        assert!(!NetworkTopology::parse_edges(3, "1-2").unwrap().is_connected());
    }
}
