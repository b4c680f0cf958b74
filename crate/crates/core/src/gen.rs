//! Random and exhaustively enumerated small systems, plus a formula pool to
//! quantify over, for property testing.
//!
//! Local states are plain symbols, so knowledge is nontrivial: an agent may
//! confuse points of different runs and different times. Agent `i`'s action
//! `act{i}` is performed exactly when its symbol lies in a fixed random set,
//! which makes it conscious. Actions `env{i}` are scattered independently of
//! local states and are usually not conscious.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kernel::{
    Action, AgentId, EnvState, GlobalState, HistoryEvent, LocalState, Run, System, Value,
};
use crate::logic::{Formula, Interpretation};
use crate::properties::ActionAssignment;

/// Symbol used for a halted agent at the horizon when every ordinary symbol
/// would trigger its action.
const HALTED: i64 = -1;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomParams {
    pub max_agents: usize,
    pub max_runs: usize,
    pub max_horizon: usize,
    pub max_alphabet: usize,
    /// Chance of an `env{i}` action at each point before the horizon.
    pub inject_probability: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_agents: 4,
            max_runs: 8,
            max_horizon: 5,
            max_alphabet: 4,
            inject_probability: 0.1,
        }
    }
}

/// Per run, per time, per agent local symbols, and the events of each run.
struct Layout {
    agents: usize,
    horizon: usize,
    locals: Vec<Vec<Vec<Value>>>,
    events: Vec<BTreeSet<HistoryEvent>>,
}

impl Layout {
    fn does(&self, run: usize, time: usize, agent: AgentId, action: &str) -> bool {
        self.events[run].contains(&HistoryEvent::new(Action::new(action), agent, time))
    }

    fn runs(&self) -> Vec<Run> {
        self.locals
            .iter()
            .zip(&self.events)
            .enumerate()
            .map(|(r, (per_time, events))| {
                let states = per_time
                    .iter()
                    .enumerate()
                    .map(|(t, locals)| GlobalState {
                        env: EnvState {
                            history: events.iter().filter(|e| e.time < t).cloned().collect(),
                            payload: Value::Int(0),
                        },
                        locals: locals.iter().cloned().map(LocalState).collect(),
                    })
                    .collect();
                Run::new(format!("r{r}"), states)
            })
            .collect()
    }

    /// Builds the system with `table` rows in (run, time) order.
    fn into_system(self, table: BTreeMap<String, Vec<bool>>) -> System {
        let names = (1..=self.agents).map(|k| k.to_string()).collect();
        System::new(names, self.horizon, self.runs(), Interpretation::from_table(table))
            .expect("generated systems are well formed")
    }

    fn row(&self, mut f: impl FnMut(usize, usize) -> bool) -> Vec<bool> {
        (0..self.locals.len())
            .flat_map(|r| (0..=self.horizon).map(move |t| (r, t)))
            .map(|(r, t)| f(r, t))
            .collect()
    }
}

fn random_row<R: Rng + ?Sized>(rng: &mut R, layout: &Layout, p: f64) -> Vec<bool> {
    layout.row(|_, _| rng.gen_bool(p))
}

/// A fact that becomes true at a random time of each run (possibly never)
/// and stays true.
fn stable_row<R: Rng + ?Sized>(rng: &mut R, layout: &Layout) -> Vec<bool> {
    let starts: Vec<usize> = (0..layout.locals.len())
        .map(|_| rng.gen_range(0..=layout.horizon + 1))
        .collect();
    layout.row(|r, t| t >= starts[r])
}

/// Random system with propositions `p`, `q` (random), `s` (stable) and
/// `pre` (true wherever agent 1 does `act1`, plus random points).
pub fn random_system<R: Rng + ?Sized>(rng: &mut R, params: &RandomParams) -> System {
    let agents = rng.gen_range(1..=params.max_agents.max(1));
    let runs = rng.gen_range(1..=params.max_runs.max(1));
    let horizon = rng.gen_range(1..=params.max_horizon.max(1));
    let alphabet = rng.gen_range(2..=params.max_alphabet.max(2)) as i64;

    let triggers: Vec<Vec<bool>> = (0..agents)
        .map(|_| (0..alphabet).map(|_| rng.gen_bool(0.4)).collect())
        .collect();
    let idle: Vec<Vec<i64>> = triggers
        .iter()
        .map(|tr| (0..alphabet).filter(|&s| !tr[s as usize]).collect())
        .collect();

    let mut locals = Vec::with_capacity(runs);
    let mut events = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut per_time = Vec::with_capacity(horizon + 1);
        let mut evs = BTreeSet::new();
        for t in 0..=horizon {
            let mut row = Vec::with_capacity(agents);
            for i in 0..agents {
                let agent = AgentId::new(i + 1);
                let sym = if t < horizon {
                    rng.gen_range(0..alphabet)
                } else {
                    // nothing can be attested at the horizon, so the agent
                    // must be in a state where it would not act
                    idle[i].choose(rng).copied().unwrap_or(HALTED)
                };
                if t < horizon {
                    if triggers[i][sym as usize] {
                        evs.insert(HistoryEvent::new(Action::new(format!("act{}", i + 1)), agent, t));
                    }
                    if rng.gen_bool(params.inject_probability) {
                        evs.insert(HistoryEvent::new(Action::new(format!("env{}", i + 1)), agent, t));
                    }
                }
                row.push(Value::Int(sym));
            }
            per_time.push(row);
        }
        locals.push(per_time);
        events.push(evs);
    }
    let layout = Layout {
        agents,
        horizon,
        locals,
        events,
    };

    let mut table = BTreeMap::new();
    table.insert("p".to_owned(), random_row(rng, &layout, 0.5));
    table.insert("q".to_owned(), random_row(rng, &layout, 0.5));
    table.insert("s".to_owned(), stable_row(rng, &layout));
    let extra = random_row(rng, &layout, 0.25);
    let width = horizon + 1;
    let pre = layout.row(|r, t| extra[r * width + t] || layout.does(r, t, AgentId::new(1), "act1"));
    table.insert("pre".to_owned(), pre);
    layout.into_system(table)
}

/// A system with an assignment of simultaneous conscious actions, one per
/// agent of the whole group.
#[derive(Clone, Debug)]
pub struct SimultaneousInstance {
    pub system: System,
    pub actions: ActionAssignment,
}

/// Every agent splits its symbols into firing and idle ones. A random set of
/// points before the horizon are firing points: there every agent shows a
/// firing symbol and performs `a{i}`; elsewhere every agent shows an idle
/// symbol. Proposition `pre` holds at all firing points (and some others).
pub fn random_simultaneous<R: Rng + ?Sized>(rng: &mut R, params: &RandomParams) -> SimultaneousInstance {
    let agents = rng.gen_range(2..=params.max_agents.max(2));
    let runs = rng.gen_range(1..=params.max_runs.max(1));
    let horizon = rng.gen_range(1..=params.max_horizon.max(1));
    let alphabet = rng.gen_range(2..=params.max_alphabet.max(2)) as i64;
    // firing symbols are 0..cut, idle ones cut..alphabet
    let cuts: Vec<i64> = (0..agents).map(|_| rng.gen_range(1..alphabet)).collect();

    let mut locals = Vec::with_capacity(runs);
    let mut events = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut per_time = Vec::with_capacity(horizon + 1);
        let mut evs = BTreeSet::new();
        for t in 0..=horizon {
            let fire = t < horizon && rng.gen_bool(0.35);
            let row = cuts
                .iter()
                .enumerate()
                .map(|(i, &cut)| {
                    if fire {
                        evs.insert(HistoryEvent::new(
                            Action::new(format!("a{}", i + 1)),
                            AgentId::new(i + 1),
                            t,
                        ));
                        Value::Int(rng.gen_range(0..cut))
                    } else {
                        Value::Int(rng.gen_range(cut..alphabet))
                    }
                })
                .collect();
            per_time.push(row);
        }
        locals.push(per_time);
        events.push(evs);
    }
    let layout = Layout {
        agents,
        horizon,
        locals,
        events,
    };
    let mut table = BTreeMap::new();
    table.insert("p".to_owned(), random_row(rng, &layout, 0.5));
    table.insert("q".to_owned(), random_row(rng, &layout, 0.5));
    table.insert("s".to_owned(), stable_row(rng, &layout));
    let extra = random_row(rng, &layout, 0.25);
    let width = horizon + 1;
    let pre = layout.row(|r, t| extra[r * width + t] || layout.does(r, t, AgentId::new(1), "a1"));
    table.insert("pre".to_owned(), pre);
    let actions = ActionAssignment::new(
        (1..=agents).map(|i| (AgentId::new(i), Action::new(format!("a{i}")))),
    )
    .expect("agents are distinct");
    SimultaneousInstance {
        system: layout.into_system(table),
        actions,
    }
}

/// A system with a sequence of ordered conscious actions `a1..ak` by agents
/// `1..k` that the agents recall.
#[derive(Clone, Debug)]
pub struct OrderedInstance {
    pub system: System,
    pub sequence: ActionAssignment,
}

/// In each run a prefix `a1..ac` of the chain is performed, once each, at
/// times `t_1 <= ... <= t_c` before the horizon. Agent `j`'s local state is a
/// phase (0 before acting, 1 while acting, 2 after) and a random symbol.
/// `psi` is a stable fact that becomes true no later than `t_1`.
pub fn random_ordered<R: Rng + ?Sized>(rng: &mut R, params: &RandomParams) -> OrderedInstance {
    let k = rng.gen_range(2..=params.max_agents.clamp(2, 3));
    let runs = rng.gen_range(1..=params.max_runs.max(1));
    let horizon = rng.gen_range(1..=params.max_horizon.max(1));
    let alphabet = rng.gen_range(1..=params.max_alphabet.max(1)) as i64;

    let mut locals = Vec::with_capacity(runs);
    let mut events = Vec::with_capacity(runs);
    let mut triggers = Vec::with_capacity(runs);
    for _ in 0..runs {
        let performed = rng.gen_range(0..=k);
        let mut times: Vec<usize> = (0..performed).map(|_| rng.gen_range(0..horizon)).collect();
        times.sort_unstable();
        let trigger = match times.first() {
            Some(&t1) => rng.gen_range(0..=t1),
            None => rng.gen_range(0..=horizon + 1),
        };
        triggers.push(trigger);
        let mut evs = BTreeSet::new();
        for (j, &t) in times.iter().enumerate() {
            evs.insert(HistoryEvent::new(Action::new(format!("a{}", j + 1)), AgentId::new(j + 1), t));
        }
        let per_time = (0..=horizon)
            .map(|t| {
                (0..k)
                    .map(|j| {
                        let phase = match times.get(j) {
                            Some(&tj) if t == tj => 1,
                            Some(&tj) if t > tj => 2,
                            _ => 0,
                        };
                        Value::list([Value::Int(phase), Value::Int(rng.gen_range(0..alphabet))])
                    })
                    .collect()
            })
            .collect();
        locals.push(per_time);
        events.push(evs);
    }
    let layout = Layout {
        agents: k,
        horizon,
        locals,
        events,
    };
    let mut table = BTreeMap::new();
    table.insert("psi".to_owned(), layout.row(|r, t| t >= triggers[r]));
    table.insert("p".to_owned(), random_row(rng, &layout, 0.5));
    table.insert("s".to_owned(), stable_row(rng, &layout));
    let sequence =
        ActionAssignment::new((1..=k).map(|j| (AgentId::new(j), Action::new(format!("a{j}")))))
            .expect("agents are distinct");
    OrderedInstance {
        system: layout.into_system(table),
        sequence,
    }
}

/// Every system with two agents, horizon 0 to 2, local-state alphabet
/// `{0, 1}` and one to three runs (a multiset of the possible runs).
///
/// Actions `c{i}_{s}` are performed by agent `i` whenever its state is `s`
/// before the horizon, `n1` by agent 1 at time 0 of the first run and `n2` by
/// agent 2 at time `T - 1` of the last run. Propositions: `p` (agent 2 is in
/// state 1), `q` (both agents are in the same state), `late` (time >= 1).
pub fn exhaustive_systems() -> impl Iterator<Item = System> {
    (0..=2usize).flat_map(|horizon| {
        let per_run = 1usize << (2 * (horizon + 1));
        multisets(per_run, 3).map(move |choice| exhaustive_system(horizon, &choice))
    })
}

/// Number of systems [`exhaustive_systems`] yields.
pub fn exhaustive_count() -> usize {
    (0..=2usize)
        .map(|h| {
            let n = 1usize << (2 * (h + 1));
            // multisets of size 1, 2 and 3 from n kinds
            n + n * (n + 1) / 2 + n * (n + 1) * (n + 2) / 6
        })
        .sum()
}

/// Non-decreasing index tuples of length 1..=max_len over 0..n.
fn multisets(n: usize, max_len: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=max_len).flat_map(move |len| {
        let mut cur = vec![0usize; len];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = cur.clone();
            // advance to the next non-decreasing tuple
            match (0..len).rev().find(|&k| cur[k] + 1 < n) {
                Some(k) => {
                    let v = cur[k] + 1;
                    for slot in &mut cur[k..] {
                        *slot = v;
                    }
                }
                None => done = true,
            }
            Some(out)
        })
    })
}

fn exhaustive_system(horizon: usize, choice: &[usize]) -> System {
    let width = horizon + 1;
    let mut locals = Vec::with_capacity(choice.len());
    let mut events = Vec::with_capacity(choice.len());
    for (r, &code) in choice.iter().enumerate() {
        // bit 2t is agent 1 at time t, bit 2t+1 agent 2
        let per_time: Vec<Vec<Value>> = (0..width)
            .map(|t| {
                (0..2)
                    .map(|i| Value::Int(((code >> (2 * t + i)) & 1) as i64))
                    .collect()
            })
            .collect();
        let mut evs = BTreeSet::new();
        for (t, row) in per_time.iter().enumerate().take(horizon) {
            for (i, v) in row.iter().enumerate() {
                let agent = AgentId::new(i + 1);
                evs.insert(HistoryEvent::new(Action::new(format!("c{}_{v}", i + 1)), agent, t));
            }
        }
        if horizon >= 1 {
            if r == 0 {
                evs.insert(HistoryEvent::new(Action::new("n1"), AgentId::new(1), 0));
            }
            if r == choice.len() - 1 {
                evs.insert(HistoryEvent::new(Action::new("n2"), AgentId::new(2), horizon - 1));
            }
        }
        locals.push(per_time);
        events.push(evs);
    }
    let layout = Layout {
        agents: 2,
        horizon,
        locals,
        events,
    };
    let mut table = BTreeMap::new();
    table.insert(
        "p".to_owned(),
        layout.row(|r, t| layout.locals[r][t][1] == Value::Int(1)),
    );
    table.insert(
        "q".to_owned(),
        layout.row(|r, t| layout.locals[r][t][0] == layout.locals[r][t][1]),
    );
    table.insert("late".to_owned(), layout.row(|_, t| t >= 1));
    layout.into_system(table)
}

/// Formulas of modal depth at most 2 over a system's propositions, a couple
/// of its actions, and its agents. Deterministic for a given system.
pub fn formula_pool(sys: &System) -> Vec<Formula> {
    let agents: Vec<AgentId> = sys.agents().collect();
    let group: BTreeSet<AgentId> = agents.iter().copied().collect();
    let mut atoms: Vec<Formula> = sys.interpretation().prop_names().map(Formula::prop).collect();
    for (agent, action) in sys.actions().into_iter().take(2) {
        atoms.push(Formula::Did(agent, action));
    }
    atoms.push(Formula::Const(true));

    let mut pool = atoms.clone();
    pool.extend(atoms.iter().take(3).map(|a| Formula::not(a.clone())));
    for pair in atoms.windows(2).take(3) {
        pool.push(Formula::and(pair[0].clone(), pair[1].clone()));
        pool.push(Formula::or(pair[0].clone(), Formula::not(pair[1].clone())));
    }
    let level0 = pool.clone();

    let mut level1 = Vec::new();
    for &i in &agents {
        for f in level0.iter().take(6) {
            level1.push(Formula::know(i, f.clone()));
        }
        level1.push(Formula::not(Formula::know(i, atoms[0].clone())));
    }
    for f in atoms.iter().take(3) {
        level1.push(Formula::Common(group.clone(), Box::new(f.clone())));
    }
    pool.extend(level1.iter().cloned());

    let first = agents[0];
    let last = *agents.last().expect("systems have agents");
    for f in atoms.iter().take(2) {
        pool.push(Formula::know(last, Formula::know(first, f.clone())));
        pool.push(Formula::know(first, Formula::not(Formula::know(last, f.clone()))));
        pool.push(Formula::Common(
            group.clone(),
            Box::new(Formula::know(first, f.clone())),
        ));
    }
    if atoms.len() >= 2 {
        pool.push(Formula::know(
            first,
            Formula::and(atoms[0].clone(), Formula::know(last, atoms[1].clone())),
        ));
    }
    pool
}
