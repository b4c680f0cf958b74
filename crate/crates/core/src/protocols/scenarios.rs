//! Ready-made systems: the lamp and its switch, a possibly lost message, the
//! ATM, computing the maximum over a network, the firing squad, and an
//! ordered chain of actions.
//!
//! Every generated local state starts with a clock, so agents always know the
//! time, and keeps a log of what the agent has seen.

use std::collections::BTreeSet;

use super::{
    generate_system, perform_when_first, scenario_env, AgentMove, Context, Delivery, Edge,
    ExternalInput, FirstTimeRule, InitialState, Message, NetworkTopology, Protocol,
    DEFAULT_RUN_BUDGET,
};
use crate::error::{Error, Result};
use crate::kernel::{
    Action, AgentId, EnvState, GlobalState, History, LocalState, Run, System, Value,
};
use crate::logic::{Formula, Interpretation};

fn fields(local: &LocalState) -> &[Value] {
    local.0.as_list().expect("scenario local states are lists")
}

fn int_at(local: &LocalState, k: usize) -> i64 {
    fields(local)[k].as_int().expect("integer field")
}

fn clock(local: &LocalState) -> i64 {
    int_at(local, 0)
}

fn ints(items: impl IntoIterator<Item = i64>) -> Value {
    Value::list(items.into_iter().map(Value::Int))
}

fn env_int(run: &Run, k: usize) -> i64 {
    scenario_env(run.state(0)).as_list().expect("scenario env is a list")[k]
        .as_int()
        .expect("integer env field")
}

fn rename_runs(sys: System, rename: impl Fn(&str) -> String) -> Result<System> {
    let runs = sys
        .runs()
        .iter()
        .map(|r| Run::new(rename(&r.name), r.states.clone()))
        .collect();
    System::new(
        sys.agent_names().to_vec(),
        sys.horizon(),
        runs,
        sys.interpretation().clone(),
    )
}

/// A switch (the only agent) that is `ON` or `OFF`, and a lamp that is lit
/// exactly when the switch is on and the bulb is intact. Runs `r_on_lit`,
/// `r_on_burnt` and `r_off`, horizon 1, proposition `lit`.
pub fn lamp() -> System {
    lamp_runs(&[("r_on_lit", "ON", "lit"), ("r_on_burnt", "ON", "burnt"), ("r_off", "OFF", "off")])
}

/// The lamp without a burnt-out bulb among the possibilities.
pub fn lamp_without_burnout() -> System {
    lamp_runs(&[("r_on_lit", "ON", "lit"), ("r_off", "OFF", "off")])
}

fn lamp_runs(rows: &[(&str, &str, &str)]) -> System {
    let horizon = 1;
    let runs: Vec<Run> = rows
        .iter()
        .map(|&(name, switch, bulb)| {
            let state = GlobalState {
                env: EnvState {
                    history: History::new(),
                    payload: Value::str(bulb),
                },
                locals: vec![LocalState(Value::str(switch))],
            };
            Run::new(name, vec![state; horizon + 1])
        })
        .collect();
    let interp = Interpretation::tabulate(&["lit"], &runs, horizon, |_, run, t| {
        run.state(t).env.payload == Value::str("lit")
    });
    System::new(vec!["switch".into()], horizon, runs, interp).expect("lamp system is well formed")
}

struct MessageProtocol;

impl Protocol for MessageProtocol {
    fn initial(&self, _: AgentId, _: &Value, _: &[Delivery]) -> LocalState {
        LocalState(ints([0, 0]))
    }

    fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove {
        if agent.number() == 1 && clock(local) == 1 && int_at(local, 1) == 0 {
            AgentMove {
                action: Some(Action::new("send")),
                sends: vec![Message {
                    to: AgentId::new(2),
                    payload: Value::str("m"),
                }],
            }
        } else {
            AgentMove::idle()
        }
    }

    /// Alice's flag records that she sent, Bob's that he received.
    fn update(&self, agent: AgentId, local: &LocalState, performed: &AgentMove, inbox: &[Delivery]) -> LocalState {
        let flag = int_at(local, 1) == 1
            || if agent.number() == 1 {
                performed.action.is_some()
            } else {
                !inbox.is_empty()
            };
        LocalState(ints([clock(local) + 1, flag as i64]))
    }
}

/// Alice sends Bob a message at time 1 over a link of delay 1; unless
/// `reliable`, the message may be lost. Runs `r_del` (and `r_lost`), horizon
/// 3, proposition `delivered` (Bob has the message).
pub fn message(reliable: bool) -> System {
    let alice = AgentId::new(1);
    let bob = AgentId::new(2);
    let context = Context {
        agents: vec!["Alice".into(), "Bob".into()],
        topology: NetworkTopology::new(
            2,
            vec![Edge {
                a: alice,
                b: bob,
                min_delay: 1,
                max_delay: 1,
                lossy: !reliable,
            }],
        )
        .expect("valid topology"),
        initial_states: vec![InitialState {
            label: "r".into(),
            inputs: vec![Value::Int(0), Value::Int(0)],
            external: vec![],
            env: Value::Int(0),
        }],
    };
    let sys = generate_system(
        &MessageProtocol,
        &context,
        3,
        DEFAULT_RUN_BUDGET,
        &["delivered"],
        |_, run, t| int_at(&run.state(t).locals[bob.index()], 1) == 1,
    )
    .expect("message system is well formed");
    rename_runs(sys, |name| match name {
        "r.1" => "r_lost".into(),
        _ => "r_del".into(),
    })
    .expect("renaming keeps the system valid")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtmConfig {
    /// Possible account balances, one initial state each.
    pub balances: Vec<i64>,
    /// Amount requested; credit is good when the balance covers it.
    pub withdrawal: i64,
    pub horizon: usize,
}

impl Default for AtmConfig {
    fn default() -> Self {
        AtmConfig {
            balances: vec![-50, 0, 100],
            withdrawal: 50,
            horizon: 3,
        }
    }
}

struct AtmProtocol {
    withdrawal: i64,
}

impl Protocol for AtmProtocol {
    fn initial(&self, agent: AgentId, input: &Value, _: &[Delivery]) -> LocalState {
        if agent.number() == 1 {
            // [clock, learned balance (empty list until known), dispensed]
            LocalState(Value::list([Value::Int(0), Value::list([]), Value::Int(0)]))
        } else {
            LocalState(Value::list([Value::Int(0), input.clone()]))
        }
    }

    fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove {
        if agent.number() == 2 {
            if clock(local) == 0 {
                return AgentMove {
                    action: None,
                    sends: vec![Message {
                        to: AgentId::new(1),
                        payload: fields(local)[1].clone(),
                    }],
                };
            }
            return AgentMove::idle();
        }
        let learned = fields(local)[1].as_list().expect("balance slot");
        let covered = learned
            .first()
            .and_then(Value::as_int)
            .is_some_and(|b| b >= self.withdrawal);
        if covered && int_at(local, 2) == 0 {
            AgentMove {
                action: Some(Action::new("dispense")),
                sends: vec![],
            }
        } else {
            AgentMove::idle()
        }
    }

    fn update(&self, agent: AgentId, local: &LocalState, performed: &AgentMove, inbox: &[Delivery]) -> LocalState {
        let f = fields(local);
        if agent.number() == 2 {
            return LocalState(Value::list([Value::Int(clock(local) + 1), f[1].clone()]));
        }
        let learned = match inbox.first() {
            Some(d) => Value::list([d.payload.clone()]),
            None => f[1].clone(),
        };
        let dispensed = int_at(local, 2) == 1 || performed.action.is_some();
        LocalState(Value::list([
            Value::Int(clock(local) + 1),
            learned,
            Value::Int(dispensed as i64),
        ]))
    }
}

fn number_label(v: i64) -> String {
    if v < 0 {
        format!("neg{}", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

/// Agents `atm` and `bank`. The bank reports the balance at time 0 over a
/// lossy link of delay 1; the ATM performs `dispense` once it has learned a
/// balance covering the withdrawal. For every balance there is a run where
/// the report arrives (`b{balance}_up`) and one where it is lost
/// (`b{balance}_down`). Proposition `good_credit`.
pub fn atm(config: &AtmConfig) -> Result<System> {
    if config.balances.is_empty() {
        return Err(Error::InvalidConfig("ATM needs at least one balance".into()));
    }
    if config.horizon < 2 {
        return Err(Error::InvalidConfig("ATM horizon must be at least 2".into()));
    }
    let balances: BTreeSet<i64> = config.balances.iter().copied().collect();
    let context = Context {
        agents: vec!["atm".into(), "bank".into()],
        topology: NetworkTopology::new(
            2,
            vec![Edge {
                a: AgentId::new(1),
                b: AgentId::new(2),
                min_delay: 1,
                max_delay: 1,
                lossy: true,
            }],
        )?,
        initial_states: balances
            .iter()
            .map(|&b| InitialState {
                label: format!("b{}", number_label(b)),
                inputs: vec![Value::Int(0), Value::Int(b)],
                external: vec![],
                env: ints([b]),
            })
            .collect(),
    };
    let withdrawal = config.withdrawal;
    let sys = generate_system(
        &AtmProtocol { withdrawal },
        &context,
        config.horizon,
        DEFAULT_RUN_BUDGET,
        &["good_credit"],
        |_, run, _| env_int(run, 0) >= withdrawal,
    )?;
    rename_runs(sys, |name| {
        let (base, choice) = name.rsplit_once('.').expect("every ATM run branches once");
        format!("{base}_{}", if choice == "0" { "up" } else { "down" })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtmMode {
    /// Leaves report first; an agent passes on the maximum of its subtree
    /// once every child has reported.
    BottomUp,
    /// Every agent forwards the largest value seen so far towards agent 1
    /// whenever it exceeds everything it has sent before.
    ClockedFlood,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtmConfig {
    pub topology: NetworkTopology,
    /// Possible initial values; every tuple over it is an initial state.
    pub domain: Vec<i64>,
    /// Initial values of the run whose id is returned.
    pub designated: Vec<i64>,
    pub mode: CtmMode,
    pub horizon: usize,
    pub budget: usize,
}

impl CtmConfig {
    /// Path `1-2-...-n` with unit delays and horizon 5.
    pub fn path(domain: Vec<i64>, designated: Vec<i64>, mode: CtmMode) -> Result<Self> {
        Ok(CtmConfig {
            topology: NetworkTopology::path(designated.len().max(1), 1)?,
            domain,
            designated,
            mode,
            horizon: 5,
            budget: DEFAULT_RUN_BUDGET,
        })
    }
}

struct CtmProtocol {
    mode: CtmMode,
    parent: Vec<Option<AgentId>>,
    children: Vec<Vec<AgentId>>,
}

// local state: [clock, own value, received [[time from value] ...], sent [value ...]]
impl CtmProtocol {
    fn best(local: &LocalState) -> i64 {
        let f = fields(local);
        let own = f[1].as_int().expect("own value");
        f[2].as_list()
            .expect("received log")
            .iter()
            .map(|m| m.as_list().expect("log entry")[2].as_int().expect("value"))
            .fold(own, i64::max)
    }
}

impl Protocol for CtmProtocol {
    fn initial(&self, _: AgentId, input: &Value, _: &[Delivery]) -> LocalState {
        LocalState(Value::list([
            Value::Int(0),
            input.clone(),
            Value::list([]),
            Value::list([]),
        ]))
    }

    fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove {
        let Some(parent) = self.parent[agent.index()] else {
            return AgentMove::idle();
        };
        let f = fields(local);
        let sent = f[3].as_list().expect("sent log");
        let best = Self::best(local);
        let send = match self.mode {
            CtmMode::ClockedFlood => sent
                .iter()
                .all(|v| v.as_int().expect("sent value") < best),
            CtmMode::BottomUp => {
                let heard: BTreeSet<i64> = f[2]
                    .as_list()
                    .expect("received log")
                    .iter()
                    .map(|m| m.as_list().expect("log entry")[1].as_int().expect("sender"))
                    .collect();
                sent.is_empty()
                    && self.children[agent.index()]
                        .iter()
                        .all(|c| heard.contains(&(c.number() as i64)))
            }
        };
        if send {
            AgentMove {
                action: None,
                sends: vec![Message {
                    to: parent,
                    payload: Value::Int(best),
                }],
            }
        } else {
            AgentMove::idle()
        }
    }

    fn update(&self, _: AgentId, local: &LocalState, performed: &AgentMove, inbox: &[Delivery]) -> LocalState {
        let f = fields(local);
        let now = clock(local) + 1;
        let mut received = f[2].as_list().expect("received log").to_vec();
        for d in inbox {
            let from = d.from.map_or(0, |a| a.number() as i64);
            received.push(Value::list([Value::Int(now), Value::Int(from), d.payload.clone()]));
        }
        let mut sent = f[3].as_list().expect("sent log").to_vec();
        sent.extend(performed.sends.iter().map(|m| m.payload.clone()));
        LocalState(Value::list([
            Value::Int(now),
            f[1].clone(),
            Value::List(received),
            Value::List(sent),
        ]))
    }
}

/// Computing the maximum: agents `1..n` on `config.topology` each start with
/// a value from the domain, and agent 1 prints the maximum. Propositions
/// `max_{c}` state that the maximum initial value is `c`; agent 1 performs
/// `print_{c}` at the first time it knows `max_{c}`.
///
/// Returns the system and the id of the designated run.
pub fn ctm(config: &CtmConfig) -> Result<(System, usize)> {
    let n = config.topology.agent_count();
    let mut domain = config.domain.clone();
    domain.sort_unstable();
    domain.dedup();
    if domain.is_empty() {
        return Err(Error::InvalidConfig("value domain is empty".into()));
    }
    if domain[0] < 0 {
        return Err(Error::InvalidConfig("values must be non-negative".into()));
    }
    if config.designated.len() != n {
        return Err(Error::InvalidConfig(format!(
            "designated tuple has {} values for {n} agents",
            config.designated.len()
        )));
    }
    if let Some(v) = config.designated.iter().find(|v| !domain.contains(v)) {
        return Err(Error::InvalidConfig(format!("designated value {v} is not in the domain")));
    }
    if !config.topology.is_connected() {
        return Err(Error::InvalidConfig("topology is not connected".into()));
    }
    let total = u32::try_from(n)
        .ok()
        .and_then(|e| domain.len().checked_pow(e))
        .unwrap_or(usize::MAX);
    if total > config.budget {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: config.budget,
        });
    }

    let root = AgentId::new(1);
    let parent = config.topology.parents_toward(root)?;
    let mut children = vec![Vec::new(); n];
    for (k, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[p.index()].push(AgentId::new(k + 1));
        }
    }

    let mut initial_states = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    let mut designated_id = None;
    for id in 0..total {
        let values: Vec<i64> = digits.iter().map(|&d| domain[d]).collect();
        if values == config.designated {
            designated_id = Some(id);
        }
        let label = format!(
            "v{}",
            values.iter().map(i64::to_string).collect::<Vec<_>>().join("_")
        );
        initial_states.push(InitialState {
            label,
            inputs: values.iter().map(|&v| Value::Int(v)).collect(),
            external: vec![],
            env: ints(values),
        });
        // odometer, last agent fastest
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < domain.len() {
                break;
            }
            *d = 0;
        }
    }

    let context = Context {
        agents: (1..=n).map(|k| k.to_string()).collect(),
        topology: config.topology.clone(),
        initial_states,
    };
    let protocol = CtmProtocol {
        mode: config.mode,
        parent,
        children,
    };
    let names: Vec<String> = domain.iter().map(|c| format!("max_{c}")).collect();
    let props: Vec<&str> = names.iter().map(String::as_str).collect();
    let base = generate_system(&protocol, &context, config.horizon, config.budget, &props, |name, run, _| {
        let values = scenario_env(run.state(0)).as_list().expect("values");
        let max = values.iter().filter_map(Value::as_int).max();
        max.is_some_and(|m| name == format!("max_{m}"))
    })?;
    let rules: Vec<FirstTimeRule> = domain
        .iter()
        .map(|c| FirstTimeRule {
            agent: root,
            action: Action::new(format!("print_{c}")),
            condition: Formula::know(root, Formula::prop(format!("max_{c}"))),
        })
        .collect();
    let sys = perform_when_first(&base, &rules)?;
    Ok((sys, designated_id.expect("designated tuple is enumerated")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FireRule {
    /// `fire_i` when common knowledge of the go first holds.
    Common,
    /// `fire_i` as soon as agent `i` itself knows about the go; the agents
    /// then fire at different times.
    Eager,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiringSquadConfig {
    pub agents: usize,
    pub relay_delay: usize,
    /// Times at which agent 1 may receive the go, `None` for never.
    pub window: Vec<Option<usize>>,
    /// Defaults to two steps past the latest possible relay.
    pub horizon: Option<usize>,
    pub rule: FireRule,
}

impl FiringSquadConfig {
    /// Two agents, relay delay 2, go at time 0 or never, horizon 4.
    pub fn two_agents() -> Self {
        FiringSquadConfig {
            agents: 2,
            relay_delay: 2,
            window: vec![Some(0), None],
            horizon: Some(4),
            rule: FireRule::Common,
        }
    }

    pub fn effective_horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| {
            self.window.iter().flatten().max().copied().unwrap_or(0) + self.relay_delay + 2
        })
    }
}

/// Relays the go to everyone on first hearing it.
/// local state: [clock, time the go was heard or -1]
struct GoRelay {
    agents: usize,
    action: Option<fn(usize) -> String>,
}

impl GoRelay {
    fn heard_now(local: &LocalState) -> bool {
        int_at(local, 1) == clock(local)
    }
}

impl Protocol for GoRelay {
    fn initial(&self, _: AgentId, _: &Value, inbox: &[Delivery]) -> LocalState {
        LocalState(ints([0, if inbox.is_empty() { -1 } else { 0 }]))
    }

    fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove {
        if !Self::heard_now(local) {
            return AgentMove::idle();
        }
        AgentMove {
            action: self.action.map(|f| Action::new(f(agent.number()))),
            sends: (1..=self.agents)
                .filter(|&k| k != agent.number())
                .map(|k| Message {
                    to: AgentId::new(k),
                    payload: Value::str("go"),
                })
                .collect(),
        }
    }

    fn update(&self, _: AgentId, local: &LocalState, _: &AgentMove, inbox: &[Delivery]) -> LocalState {
        let now = clock(local) + 1;
        let heard = int_at(local, 1);
        let heard = if heard < 0 && !inbox.is_empty() { now } else { heard };
        LocalState(ints([now, heard]))
    }
}

fn go_runs_label(window: &[Option<usize>], prefix: &str, at: Option<usize>, never: &str) -> String {
    match at {
        None => never.to_owned(),
        Some(_) if window.iter().flatten().count() == 1 => prefix.to_owned(),
        Some(t) => format!("{prefix}{t}"),
    }
}

fn dedup_window(window: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut w = window.to_vec();
    // arrival times ascending, never last
    w.sort_by_key(|x| x.map_or(usize::MAX, |t| t));
    w.dedup();
    w
}

/// Agents `1..n` on a complete graph; the go reaches agent 1 at one of the
/// window's times (or never) and is relayed to everyone. `psi_go` holds once
/// the go has arrived. Agent `i` performs `fire_i` per `config.rule`.
/// Runs are named `r_go` / `r_go{t}` and `r_nogo`.
pub fn firing_squad(config: &FiringSquadConfig) -> Result<System> {
    if config.agents < 2 {
        return Err(Error::InvalidConfig("firing squad needs at least two agents".into()));
    }
    if config.window.is_empty() {
        return Err(Error::InvalidConfig("input window is empty".into()));
    }
    if config.relay_delay == 0 {
        return Err(Error::InvalidConfig("relay delay must be at least 1".into()));
    }
    let n = config.agents;
    let window = dedup_window(&config.window);
    let horizon = config.effective_horizon();
    let context = Context {
        agents: (1..=n).map(|k| k.to_string()).collect(),
        topology: NetworkTopology::complete(n, config.relay_delay)?,
        initial_states: window
            .iter()
            .map(|&at| InitialState {
                label: go_runs_label(&window, "r_go", at, "r_nogo"),
                inputs: vec![Value::Int(0); n],
                external: at
                    .map(|t| ExternalInput {
                        time: t,
                        agent: AgentId::new(1),
                        payload: Value::str("go"),
                    })
                    .into_iter()
                    .collect(),
                env: ints([at.map_or(-1, |t| t as i64)]),
            })
            .collect(),
    };
    let base = generate_system(
        &GoRelay {
            agents: n,
            action: None,
        },
        &context,
        horizon,
        DEFAULT_RUN_BUDGET,
        &["psi_go"],
        |_, run, t| {
            let at = env_int(run, 0);
            at >= 0 && at as usize <= t
        },
    )?;
    let group: BTreeSet<AgentId> = (1..=n).map(AgentId::new).collect();
    let psi = Formula::prop("psi_go");
    let rules: Vec<FirstTimeRule> = group
        .iter()
        .map(|&i| FirstTimeRule {
            agent: i,
            action: Action::new(format!("fire_{}", i.number())),
            condition: match config.rule {
                FireRule::Common => Formula::Common(group.clone(), Box::new(psi.clone())),
                FireRule::Eager => Formula::know(i, psi.clone()),
            },
        })
        .collect();
    perform_when_first(&base, &rules)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub agents: usize,
    /// Times at which agent 1 may receive the trigger, `None` for never.
    pub window: Vec<Option<usize>>,
    pub relay_delay: usize,
    /// Defaults to two steps past the latest possible last action.
    pub horizon: Option<usize>,
    /// Agent `k` wipes its memory right after acting.
    pub forgetful: bool,
}

impl ChainConfig {
    pub fn new(agents: usize) -> Self {
        ChainConfig {
            agents,
            window: vec![Some(0), Some(1), None],
            relay_delay: 1,
            horizon: None,
            forgetful: false,
        }
    }

    pub fn effective_horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| {
            self.window.iter().flatten().max().copied().unwrap_or(0)
                + self.agents.saturating_sub(1) * self.relay_delay
                + 2
        })
    }
}

/// local state: [clock, time the trigger or relay arrived or -1, done]
struct ChainProtocol {
    agents: usize,
    forgetful: bool,
}

impl Protocol for ChainProtocol {
    fn initial(&self, _: AgentId, _: &Value, inbox: &[Delivery]) -> LocalState {
        LocalState(ints([0, if inbox.is_empty() { -1 } else { 0 }, 0]))
    }

    fn step(&self, agent: AgentId, local: &LocalState) -> AgentMove {
        if int_at(local, 1) < 0 || int_at(local, 2) == 1 {
            return AgentMove::idle();
        }
        let j = agent.number();
        AgentMove {
            action: Some(Action::new(format!("a{j}"))),
            sends: if j < self.agents {
                vec![Message {
                    to: AgentId::new(j + 1),
                    payload: Value::str("go"),
                }]
            } else {
                vec![]
            },
        }
    }

    fn update(&self, agent: AgentId, local: &LocalState, performed: &AgentMove, inbox: &[Delivery]) -> LocalState {
        let now = clock(local) + 1;
        if self.forgetful && agent.number() == self.agents && performed.action.is_some() {
            return LocalState(ints([now, -1, 0]));
        }
        let heard = int_at(local, 1);
        let heard = if heard < 0 && !inbox.is_empty() { now } else { heard };
        let done = int_at(local, 2) == 1 || performed.action.is_some();
        LocalState(ints([now, heard, done as i64]))
    }
}

/// Agents `1..k` on a path. Agent 1 performs `a1` when the external trigger
/// arrives and each agent `j` performs `a{j}` when agent `j-1`'s relay
/// arrives. `psi_input` holds once the trigger has arrived. Runs are named
/// `r_trig` / `r_trig{t}` and `r_none`.
pub fn ordered_chain(config: &ChainConfig) -> Result<System> {
    if config.agents < 2 {
        return Err(Error::InvalidConfig("a chain needs at least two agents".into()));
    }
    if config.window.is_empty() {
        return Err(Error::InvalidConfig("trigger window is empty".into()));
    }
    if config.relay_delay == 0 {
        return Err(Error::InvalidConfig("relay delay must be at least 1".into()));
    }
    let k = config.agents;
    let window = dedup_window(&config.window);
    let context = Context {
        agents: (1..=k).map(|j| j.to_string()).collect(),
        topology: NetworkTopology::path(k, config.relay_delay)?,
        initial_states: window
            .iter()
            .map(|&at| InitialState {
                label: go_runs_label(&window, "r_trig", at, "r_none"),
                inputs: vec![Value::Int(0); k],
                external: at
                    .map(|t| ExternalInput {
                        time: t,
                        agent: AgentId::new(1),
                        payload: Value::str("trigger"),
                    })
                    .into_iter()
                    .collect(),
                env: ints([at.map_or(-1, |t| t as i64)]),
            })
            .collect(),
    };
    generate_system(
        &ChainProtocol {
            agents: k,
            forgetful: config.forgetful,
        },
        &context,
        config.effective_horizon(),
        DEFAULT_RUN_BUDGET,
        &["psi_input"],
        |_, run, t| {
            let at = env_int(run, 0);
            at >= 0 && at as usize <= t
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Point;
    use crate::logic::eval;
    use crate::properties::earliest;

    #[test]
    fn lamp_has_three_static_runs() {
        let sys = lamp();
        assert_eq!(sys.runs().len(), 3);
        assert_eq!(lamp_without_burnout().runs().len(), 2);
        let on = sys.run_by_name("r_on_lit").unwrap();
        assert_eq!(
            sys.local_state(Point::new(on, 0), AgentId::new(1)).unwrap(),
            &LocalState(Value::str("ON"))
        );
    }

    #[test]
    fn lossy_message_has_two_runs_alice_cannot_tell_apart() {
        let sys = message(false);
        let del = sys.run_by_name("r_del").unwrap();
        let lost = sys.run_by_name("r_lost").unwrap();
        let alice = AgentId::new(1);
        assert_eq!(
            sys.local_state(Point::new(del, 2), alice).unwrap(),
            sys.local_state(Point::new(lost, 2), alice).unwrap()
        );
        assert_eq!(message(true).runs().len(), 1);
    }

    #[test]
    fn ctm_counts_and_designated_run() {
        let cfg = CtmConfig::path(vec![0, 50, 75, 100, 150], vec![75, 100, 50, 0], CtmMode::ClockedFlood)
            .unwrap();
        let (sys, id) = ctm(&cfg).unwrap();
        assert_eq!(sys.runs().len(), 625);
        assert_eq!(sys.runs()[id].name, "v75_100_50_0");
        let k1 = Formula::know(AgentId::new(1), Formula::prop("max_100"));
        assert_eq!(earliest(&sys, id, &k1).unwrap(), Some(3));
        assert!(sys.does(Point::new(id, 3), AgentId::new(1), &Action::new("print_100")).unwrap());
    }

    #[test]
    fn ctm_rejects_values_outside_the_domain() {
        let cfg = CtmConfig::path(vec![0, 50], vec![50, 75], CtmMode::BottomUp).unwrap();
        assert!(matches!(ctm(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = CtmConfig::path(vec![0, 1, 2], vec![0, 1, 2], CtmMode::BottomUp).unwrap();
        cfg.budget = 26;
        assert_eq!(
            ctm(&cfg).unwrap_err(),
            Error::BudgetExceeded {
                required: 27,
                budget: 26
            }
        );
    }

    #[test]
    fn two_agent_firing_squad_fires_together_at_two() {
        let sys = firing_squad(&FiringSquadConfig::two_agents()).unwrap();
        let names: Vec<&str> = sys.runs().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["r_go", "r_nogo"]);
        for i in 1..=2 {
            let fire = Action::new(format!("fire_{i}"));
            let at: Vec<bool> = (0..=4)
                .map(|t| sys.does(Point::new(0, t), AgentId::new(i), &fire).unwrap())
                .collect();
            assert_eq!(at, [false, false, true, false, false]);
        }
        assert!(!eval(&sys, Point::new(1, 3), &Formula::did(AgentId::new(1), "fire_1")).unwrap());
    }

    #[test]
    fn chain_acts_in_order() {
        let sys = ordered_chain(&ChainConfig::new(3)).unwrap();
        let run = sys.run_by_name("r_trig1").unwrap();
        let times: Vec<Option<usize>> = (1..=3)
            .map(|j| {
                earliest(&sys, run, &Formula::does(AgentId::new(j), format!("a{j}"))).unwrap()
            })
            .collect();
        assert_eq!(times, [Some(1), Some(2), Some(3)]);
        assert!(sys.run(sys.run_by_name("r_none").unwrap()).unwrap().states.last().unwrap().env.history.is_empty());
    }

    #[test]
    fn atm_dispenses_only_after_learning() {
        let sys = atm(&AtmConfig::default()).unwrap();
        let names: Vec<&str> = sys.runs().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            ["bneg50_up", "bneg50_down", "b0_up", "b0_down", "b100_up", "b100_down"]
        );
        let dispensed = |name: &str| {
            let r = sys.run_by_name(name).unwrap();
            !sys.runs()[r].states.last().unwrap().env.history.is_empty()
        };
        assert!(dispensed("b100_up"));
        assert!(!dispensed("b100_down"));
        assert!(!dispensed("b0_up"));
    }
}
