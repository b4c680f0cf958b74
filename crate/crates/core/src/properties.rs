//! Semantic predicates over a system (necessary conditions, conscious
//! actions, locality, stability, recall, simultaneity, ordering) and checkers
//! for the three knowledge-of-preconditions theorems.
//!
//! Every universal predicate has a `*_counterexample` form returning the first
//! falsifying point in (run, time) order. Theorem checkers never assert a
//! conclusion whose hypotheses fail; they report the failing hypothesis with a
//! witness instead.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Action, AgentId, Point, System};
use crate::logic::{extension, Formula};

/// One `(agent, action)` per participating agent, agents distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionAssignment {
    pairs: Vec<(AgentId, Action)>,
}

impl ActionAssignment {
    pub fn new(pairs: impl IntoIterator<Item = (AgentId, Action)>) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let mut seen = BTreeSet::new();
        for (agent, _) in &pairs {
            if !seen.insert(*agent) {
                return Err(Error::DuplicateAgent(*agent));
            }
        }
        Ok(ActionAssignment { pairs })
    }

    pub fn pairs(&self) -> &[(AgentId, Action)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn agents(&self) -> BTreeSet<AgentId> {
        self.pairs.iter().map(|(a, _)| *a).collect()
    }

    pub fn action_of(&self, agent: AgentId) -> Option<&Action> {
        self.pairs.iter().find(|(a, _)| *a == agent).map(|(_, x)| x)
    }

    fn check(&self, sys: &System) -> Result<()> {
        self.pairs.iter().try_for_each(|(a, _)| sys.check_agent(*a))
    }
}

fn point_of(sys: &System, index: Option<usize>) -> Option<Point> {
    index.map(|k| sys.point_at(k))
}

/// First point where `does_i(a)` holds but `psi` does not.
pub fn necessary_condition_counterexample(
    sys: &System,
    psi: &Formula,
    agent: AgentId,
    action: &Action,
) -> Result<Option<Point>> {
    let does = extension(sys, &Formula::Does(agent, action.clone()))?;
    let psi = extension(sys, psi)?;
    Ok(point_of(sys, does.first_outside(&psi)))
}

/// `psi` holds at every point where `i` performs `a`.
pub fn is_necessary_condition(
    sys: &System,
    psi: &Formula,
    agent: AgentId,
    action: &Action,
) -> Result<bool> {
    Ok(necessary_condition_counterexample(sys, psi, agent, action)?.is_none())
}

/// First point where `i` performs `a` although some `~_i`-equivalent point
/// does not (there `does_i(a)` holds and `K_i does_i(a)` fails).
pub fn conscious_counterexample(
    sys: &System,
    agent: AgentId,
    action: &Action,
) -> Result<Option<Point>> {
    let does = Formula::Does(agent, action.clone());
    let known = extension(sys, &Formula::know(agent, does.clone()))?;
    let does = extension(sys, &does)?;
    Ok(point_of(sys, does.first_outside(&known)))
}

/// Whether `i` performs `a` is a function of `i`'s local state.
pub fn is_conscious(sys: &System, agent: AgentId, action: &Action) -> Result<bool> {
    Ok(conscious_counterexample(sys, agent, action)?.is_none())
}

/// First point where `f` holds and `K_i f` does not.
pub fn local_counterexample(sys: &System, agent: AgentId, f: &Formula) -> Result<Option<Point>> {
    let known = extension(sys, &Formula::know(agent, f.clone()))?;
    Ok(point_of(sys, extension(sys, f)?.first_outside(&known)))
}

/// `R |= f -> K_i f`.
pub fn is_local(sys: &System, agent: AgentId, f: &Formula) -> Result<bool> {
    Ok(local_counterexample(sys, agent, f)?.is_none())
}

/// First point where `f` is false although it held earlier in the same run.
pub fn stable_counterexample(sys: &System, f: &Formula) -> Result<Option<Point>> {
    let ext = extension(sys, f)?;
    for run in 0..sys.runs().len() {
        let mut seen = false;
        for t in 0..=sys.horizon() {
            let p = Point::new(run, t);
            let now = ext.contains(sys.point_index(p));
            if seen && !now {
                return Ok(Some(p));
            }
            seen |= now;
        }
    }
    Ok(None)
}

/// Once true in a run, `f` stays true for the rest of it.
pub fn is_stable(sys: &System, f: &Formula) -> Result<bool> {
    Ok(stable_counterexample(sys, f)?.is_none())
}

pub fn recall_counterexample(sys: &System, agent: AgentId, f: &Formula) -> Result<Option<Point>> {
    stable_counterexample(sys, &Formula::know(agent, f.clone()))
}

/// `K_i f` is stable.
pub fn recalls(sys: &System, agent: AgentId, f: &Formula) -> Result<bool> {
    Ok(recall_counterexample(sys, agent, f)?.is_none())
}

/// First point where some `alpha_j` is performed without some `alpha_i`.
pub fn simultaneous_counterexample(
    sys: &System,
    actions: &ActionAssignment,
) -> Result<Option<Point>> {
    if actions.len() < 2 {
        return Err(Error::BadAssignment(
            "simultaneity needs at least two actions".into(),
        ));
    }
    actions.check(sys)?;
    let mut first: Option<Point> = None;
    for (i, ai) in actions.pairs() {
        let does_i = Formula::Does(*i, ai.clone());
        for (j, aj) in actions.pairs() {
            if i == j {
                continue;
            }
            if let Some(p) = necessary_condition_counterexample(sys, &does_i, *j, aj)? {
                first = Some(first.map_or(p, |q| q.min(p)));
            }
        }
    }
    Ok(first)
}

/// Each `does_i(alpha_i)` is a necessary condition for every `does_j(alpha_j)`.
pub fn is_simultaneous(sys: &System, actions: &ActionAssignment) -> Result<bool> {
    Ok(simultaneous_counterexample(sys, actions)?.is_none())
}

/// First point where some `alpha_j` is performed before `alpha_{j-1}` was.
pub fn ordered_counterexample(sys: &System, seq: &ActionAssignment) -> Result<Option<Point>> {
    if seq.len() < 2 {
        return Err(Error::BadAssignment(
            "an ordered sequence needs at least two actions".into(),
        ));
    }
    seq.check(sys)?;
    let mut first: Option<Point> = None;
    for w in seq.pairs().windows(2) {
        let (prev, prev_act) = &w[0];
        let (next, next_act) = &w[1];
        let did_prev = Formula::Did(*prev, prev_act.clone());
        if let Some(p) = necessary_condition_counterexample(sys, &did_prev, *next, next_act)? {
            first = Some(first.map_or(p, |q| q.min(p)));
        }
    }
    Ok(first)
}

/// `did_{j-1}(alpha_{j-1})` is a necessary condition for `does_j(alpha_j)`.
pub fn is_ordered(sys: &System, seq: &ActionAssignment) -> Result<bool> {
    Ok(ordered_counterexample(sys, seq)?.is_none())
}

/// Least time at which `f` holds in the run, if any.
pub fn earliest(sys: &System, run: usize, f: &Formula) -> Result<Option<usize>> {
    sys.check_point(Point::new(run, 0))?;
    let ext = extension(sys, f)?;
    Ok((0..=sys.horizon()).find(|&t| ext.contains(sys.point_index(Point::new(run, t)))))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Theorem {
    #[serde(rename = "KOP")]
    Kop,
    #[serde(rename = "CKOP")]
    Ckop,
    #[serde(rename = "NKOP")]
    Nkop,
    #[serde(rename = "PREDICATE")]
    Predicate,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Kop => "KOP",
            Theorem::Ckop => "CKOP",
            Theorem::Nkop => "NKOP",
            Theorem::Predicate => "PREDICATE",
        })
    }
}

/// One checked universal statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    /// A point falsifying the statement when it fails.
    pub witness: Option<Point>,
}

impl Check {
    fn from_witness(name: String, witness: Option<Point>) -> Self {
        Check {
            name,
            holds: witness.is_none(),
            witness,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    /// Some checked statement of the conclusion failed although every
    /// hypothesis held: the evaluator is wrong.
    ConclusionFails,
    HypothesisFails,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub theorem: Theorem,
    pub hypotheses: Vec<Check>,
    /// Present iff every hypothesis holds.
    #[serde(rename = "conclusion")]
    pub conclusion_holds: Option<bool>,
    /// The individual necessary conditions making up the conclusion.
    pub obligations: Vec<Check>,
    /// Intermediate results, each checked only when its own premises hold.
    pub lemmas: Vec<Check>,
    pub counterexamples: Vec<Point>,
    pub note: String,
}

impl VerificationReport {
    fn assemble(
        theorem: Theorem,
        hypotheses: Vec<Check>,
        obligations: Vec<Check>,
        lemmas: Vec<Check>,
    ) -> Self {
        let hyps_hold = hypotheses.iter().all(|c| c.holds);
        let conclusion_holds = hyps_hold.then(|| obligations.iter().all(|c| c.holds));
        let mut counterexamples = Vec::new();
        for c in hypotheses.iter().chain(&obligations).chain(&lemmas) {
            if let Some(p) = c.witness {
                if !counterexamples.contains(&p) {
                    counterexamples.push(p);
                }
            }
        }
        let note = match hypotheses.iter().find(|c| !c.holds) {
            Some(c) => format!(
                "hypothesis {} fails at {}; conclusion not asserted",
                c.name,
                c.witness.expect("failed checks carry a witness")
            ),
            None => match obligations.iter().chain(&lemmas).find(|c| !c.holds) {
                Some(c) => format!(
                    "hypotheses hold but {} fails at {}",
                    c.name,
                    c.witness.expect("failed checks carry a witness")
                ),
                None => "hypotheses hold; conclusion verified at every point".to_owned(),
            },
        };
        VerificationReport {
            theorem,
            hypotheses,
            conclusion_holds,
            obligations,
            lemmas,
            counterexamples,
            note,
        }
    }

    /// Report for a single predicate: no hypotheses, conclusion = the result.
    pub fn predicate(name: String, witness: Option<Point>) -> Self {
        let check = Check::from_witness(name, witness);
        let note = match witness {
            Some(p) => format!("{} fails at {p}", check.name),
            None => format!("{} holds", check.name),
        };
        VerificationReport {
            theorem: Theorem::Predicate,
            hypotheses: Vec::new(),
            conclusion_holds: Some(check.holds),
            counterexamples: witness.into_iter().collect(),
            obligations: vec![check],
            lemmas: Vec::new(),
            note,
        }
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|c| c.holds)
    }

    pub fn outcome(&self) -> Outcome {
        if !self.hypotheses_hold() {
            Outcome::HypothesisFails
        } else if self.conclusion_holds == Some(true) && self.lemmas.iter().all(|c| c.holds) {
            Outcome::Holds
        } else {
            Outcome::ConclusionFails
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theorem: {}", self.theorem)?;
        let line = |f: &mut fmt::Formatter<'_>, kind: &str, c: &Check| -> fmt::Result {
            match c.witness {
                Some(p) => writeln!(f, "  {kind} {}: FAILS at {p}", c.name),
                None => writeln!(f, "  {kind} {}: holds", c.name),
            }
        };
        for c in &self.hypotheses {
            line(f, "hypothesis", c)?;
        }
        for c in &self.lemmas {
            line(f, "lemma", c)?;
        }
        for c in &self.obligations {
            line(f, "obligation", c)?;
        }
        match self.conclusion_holds {
            Some(true) => writeln!(f, "conclusion: holds")?,
            Some(false) => writeln!(f, "conclusion: FAILS")?,
            None => writeln!(f, "conclusion: not asserted")?,
        }
        write!(f, "note: {}", self.note)
    }
}

fn necessary_check(sys: &System, psi: &Formula, agent: AgentId, action: &Action) -> Result<Check> {
    Ok(Check::from_witness(
        format!("necessary({psi}, {}, {action})", sys.agent_name(agent)),
        necessary_condition_counterexample(sys, psi, agent, action)?,
    ))
}

fn conscious_check(sys: &System, agent: AgentId, action: &Action) -> Result<Check> {
    Ok(Check::from_witness(
        format!("conscious({}, {action})", sys.agent_name(agent)),
        conscious_counterexample(sys, agent, action)?,
    ))
}

/// Knowledge of preconditions: for a conscious `a`, if `psi` is necessary for
/// `does_i(a)` then so is `K_i psi`.
pub fn check_kop(
    sys: &System,
    agent: AgentId,
    action: &Action,
    psi: &Formula,
) -> Result<VerificationReport> {
    sys.check_agent(agent)?;
    psi.validate(sys)?;
    let hypotheses = vec![
        conscious_check(sys, agent, action)?,
        necessary_check(sys, psi, agent, action)?,
    ];
    let mut obligations = Vec::new();
    if hypotheses.iter().all(|c| c.holds) {
        let known = Formula::know(agent, psi.clone());
        obligations.push(necessary_check(sys, &known, agent, action)?);
    }
    Ok(VerificationReport::assemble(
        Theorem::Kop,
        hypotheses,
        obligations,
        Vec::new(),
    ))
}

/// Common knowledge of preconditions: for simultaneous conscious actions, a
/// necessary condition `psi` of `does_i(alpha_i)` is common knowledge to `G`
/// whenever any `alpha_j` is performed.
pub fn check_ckop(
    sys: &System,
    group: &BTreeSet<AgentId>,
    actions: &ActionAssignment,
    agent: AgentId,
    psi: &Formula,
) -> Result<VerificationReport> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    for a in group {
        sys.check_agent(*a)?;
    }
    if actions.agents() != *group {
        return Err(Error::BadAssignment(
            "the actions must name exactly one action per group member".into(),
        ));
    }
    let own = actions
        .action_of(agent)
        .ok_or_else(|| Error::BadAssignment(format!("agent {agent} is not in the group")))?;
    psi.validate(sys)?;

    let mut hypotheses = Vec::new();
    let simultaneous = if actions.len() >= 2 {
        let c = Check::from_witness(
            "simultaneous".to_owned(),
            simultaneous_counterexample(sys, actions)?,
        );
        let holds = c.holds;
        hypotheses.push(c);
        holds
    } else {
        true
    };
    for (j, aj) in actions.pairs() {
        hypotheses.push(conscious_check(sys, *j, aj)?);
    }
    let necessary = necessary_check(sys, psi, agent, own)?;
    let necessary_holds = necessary.holds;
    hypotheses.push(necessary);

    // Observation 1 needs only simultaneity and the necessary condition.
    let mut lemmas = Vec::new();
    if simultaneous && necessary_holds {
        for (j, aj) in actions.pairs() {
            let mut c = necessary_check(sys, psi, *j, aj)?;
            c.name = format!("observation1: {}", c.name);
            lemmas.push(c);
        }
    }

    let mut obligations = Vec::new();
    if hypotheses.iter().all(|c| c.holds) {
        let common = Formula::Common(group.clone(), Box::new(psi.clone()));
        for (j, aj) in actions.pairs() {
            obligations.push(necessary_check(sys, &common, *j, aj)?);
        }
    }
    Ok(VerificationReport::assemble(
        Theorem::Ckop,
        hypotheses,
        obligations,
        lemmas,
    ))
}

/// Nested knowledge of preconditions: for ordered, recalled, conscious
/// actions and a stable necessary condition `psi` of the first one,
/// `K_j K_{j-1} ... K_1 psi` is necessary for the `j`-th action.
pub fn check_nkop(
    sys: &System,
    seq: &ActionAssignment,
    psi: &Formula,
) -> Result<VerificationReport> {
    if seq.is_empty() {
        return Err(Error::BadAssignment("empty action sequence".into()));
    }
    seq.check(sys)?;
    psi.validate(sys)?;
    let pairs = seq.pairs();

    let mut hypotheses = Vec::new();
    let ordered = if pairs.len() >= 2 {
        let c = Check::from_witness("ordered".to_owned(), ordered_counterexample(sys, seq)?);
        let holds = c.holds;
        hypotheses.push(c);
        holds
    } else {
        true
    };
    let mut recall_ok = Vec::new();
    for (j, aj) in pairs {
        let did = Formula::Did(*j, aj.clone());
        let c = Check::from_witness(
            format!("recalls({}, {did})", sys.agent_name(*j)),
            recall_counterexample(sys, *j, &did)?,
        );
        recall_ok.push(c.holds);
        hypotheses.push(c);
    }
    let mut conscious_ok = Vec::new();
    for (j, aj) in pairs {
        let c = conscious_check(sys, *j, aj)?;
        conscious_ok.push(c.holds);
        hypotheses.push(c);
    }
    hypotheses.push(Check::from_witness(
        format!("stable({psi})"),
        stable_counterexample(sys, psi)?,
    ));
    let (first, first_act) = &pairs[0];
    hypotheses.push(necessary_check(sys, psi, *first, first_act)?);

    let mut lemmas = Vec::new();
    if ordered {
        for w in pairs.windows(2) {
            let did_next = Formula::Did(w[1].0, w[1].1.clone());
            let did_prev = Formula::Did(w[0].0, w[0].1.clone());
            let prev_ext = extension(sys, &did_prev)?;
            let witness = extension(sys, &did_next)?.first_outside(&prev_ext);
            lemmas.push(Check::from_witness(
                format!("claim1: valid({did_next} -> {did_prev})"),
                point_of(sys, witness),
            ));
        }
    }
    for (k, (j, aj)) in pairs.iter().enumerate() {
        if recall_ok[k] && conscious_ok[k] {
            let did = Formula::Did(*j, aj.clone());
            lemmas.push(Check::from_witness(
                format!("claim2: local({}, {did})", sys.agent_name(*j)),
                local_counterexample(sys, *j, &did)?,
            ));
        }
    }

    let mut obligations = Vec::new();
    if hypotheses.iter().all(|c| c.holds) {
        let mut chain = Vec::new();
        for (j, aj) in pairs {
            chain.push(*j);
            let nested = Formula::nested_know(&chain, psi.clone());
            obligations.push(necessary_check(sys, &nested, *j, aj)?);
        }
    }
    Ok(VerificationReport::assemble(
        Theorem::Nkop,
        hypotheses,
        obligations,
        lemmas,
    ))
}
