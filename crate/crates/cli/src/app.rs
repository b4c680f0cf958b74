use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kop_core::gen::{random_ordered, random_simultaneous, random_system, RandomParams};
use kop_core::logic::{eval, extension, parse_formula};
use kop_core::properties::{
    check_ckop, check_kop, check_nkop, conscious_counterexample, earliest, local_counterexample,
    necessary_condition_counterexample, ordered_counterexample, recall_counterexample,
    simultaneous_counterexample, stable_counterexample, ActionAssignment, Outcome,
    VerificationReport,
};
use kop_core::protocols::scenarios::{
    atm, ctm, firing_squad, lamp, lamp_without_burnout, message, ordered_chain, AtmConfig,
    ChainConfig, CtmConfig, CtmMode, FireRule, FiringSquadConfig,
};
use kop_core::protocols::{NetworkTopology, DEFAULT_RUN_BUDGET};
use kop_core::{Action, AgentId, Formula, Point, System};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::document::{self, DocumentError};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Holds = 0,
    Fails = 1,
    HypothesisFails = 2,
    InputError = 3,
    BudgetExceeded = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Document {
        path: String,
        source: DocumentError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] kop_core::Error),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Core(kop_core::Error::BudgetExceeded { .. }) => ExitStatus::BudgetExceeded,
            _ => ExitStatus::InputError,
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "kop", version, about = "Model checker for knowledge in multi-agent systems")]
pub struct Cli {
    /// Write a JSON report here as well
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Seed for generated systems
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of runs a generated system may have
    #[arg(long, global = true, default_value_t = DEFAULT_RUN_BUDGET)]
    pub budget: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a formula at a point, on the whole system, or along a run
    Eval(EvalArgs),
    /// Decide one predicate: necessary, conscious, local, stable, recalls,
    /// simultaneous or ordered
    Check(CheckArgs),
    /// Check a theorem instance and report hypotheses and conclusion
    Verify(VerifyArgs),
    /// Generate a built-in system
    Scenario(ScenarioArgs),
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub system: PathBuf,
    pub formula: String,
    /// Point as RUN,TIME (run by name or index)
    #[arg(long, value_name = "RUN,TIME")]
    pub at: Option<String>,
    /// List every point where the formula holds
    #[arg(long)]
    pub extension: bool,
    /// Print the first time the formula holds in RUN
    #[arg(long, value_name = "RUN")]
    pub earliest: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub system: PathBuf,
    pub predicate: String,
    /// Predicate arguments, e.g. `good_credit atm dispense` or `a1@1 a2@2`
    pub args: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TheoremArg {
    Kop,
    Ckop,
    Nkop,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub system: PathBuf,
    #[arg(value_enum)]
    pub theorem: TheoremArg,
    #[arg(long)]
    pub agent: Option<String>,
    #[arg(long)]
    pub action: Option<String>,
    #[arg(long)]
    pub psi: String,
    /// Comma separated agents; defaults to all agents
    #[arg(long)]
    pub group: Option<String>,
    /// Comma separated ACTION@AGENT; inferred when every agent performs a
    /// single action
    #[arg(long)]
    pub actions: Option<String>,
    /// Comma separated ACTION@AGENT in order; inferred like --actions
    #[arg(long)]
    pub seq: Option<String>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// Write the system document here instead of standard output
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub scenario: ScenarioCommand,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Clocked,
    BottomUp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Common,
    Eager,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RandomKind {
    System,
    Simultaneous,
    Ordered,
}

#[derive(Subcommand, Debug)]
pub enum ScenarioCommand {
    /// Lamp and switch
    Lamp {
        /// Leave out the burnt-out bulb run
        #[arg(long)]
        no_burnout: bool,
    },
    /// Alice sends Bob a message
    Message {
        #[arg(long)]
        reliable: bool,
    },
    /// Cash machine that dispenses on known good credit
    Atm {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-50,0,100")]
        balances: Vec<i64>,
        #[arg(long, default_value_t = 50)]
        withdrawal: i64,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
    },
    /// Computing the maximum over a network
    Ctm {
        #[arg(long, value_enum, default_value = "clocked")]
        mode: ModeArg,
        #[arg(long, value_delimiter = ',', default_value = "0,50,75,100,150")]
        domain: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "75,100,50,0")]
        designated: Vec<i64>,
        /// Edge list like 1-2,2-3; defaults to the path over all agents
        #[arg(long)]
        edges: Option<String>,
        #[arg(long, default_value_t = 5)]
        horizon: usize,
    },
    /// Firing squad
    FiringSquad {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        delay: usize,
        /// Go arrival times for agent 1, `never` allowed
        #[arg(long, default_value = "0,never")]
        window: String,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value = "common")]
        rule: RuleArg,
    },
    /// Chain of ordered actions
    Chain {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value = "0,1,never")]
        window: String,
        #[arg(long, default_value_t = 1)]
        delay: usize,
        #[arg(long)]
        horizon: Option<usize>,
        /// The last agent forgets that it acted
        #[arg(long)]
        forgetful: bool,
    },
    /// Random small system from --seed
    Random {
        #[arg(long, value_enum, default_value = "system")]
        kind: RandomKind,
    },
}

/// What a command produced: text for standard output and error, the exit
/// status, an optional JSON report, and an optional document to write.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub status: Option<ExitStatus>,
    pub report: Option<serde_json::Value>,
    pub document: Option<String>,
}

impl Output {
    fn line(&mut self, s: impl AsRef<str>) {
        self.stdout.push_str(s.as_ref());
        self.stdout.push('\n');
    }

    pub fn exit_status(&self) -> ExitStatus {
        self.status.unwrap_or(ExitStatus::Holds)
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Eval(args) => run_eval(args),
        Command::Check(args) => run_check(args),
        Command::Verify(args) => run_verify(args),
        Command::Scenario(args) => run_scenario(cli, args),
    }
}

pub fn load(path: &PathBuf, out: &mut Output) -> Result<System, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let sys = document::parse(&text).map_err(|source| CliError::Document {
        path: path.display().to_string(),
        source,
    })?;
    if let Some(t) = sys.latest_event_time() {
        if sys.horizon() >= 1 && t + 1 >= sys.horizon() {
            out.stderr.push_str(&format!(
                "warning: an action occurs at time {t}, close to the horizon {}; does is false at the horizon\n",
                sys.horizon()
            ));
        }
    }
    Ok(sys)
}

fn formula(sys: &System, text: &str) -> Result<Formula, CliError> {
    let f = parse_formula(text, sys.agent_names()).map_err(|e| input(format!("formula `{text}`: {e}")))?;
    f.validate(sys)?;
    Ok(f)
}

fn run_index(sys: &System, name: &str) -> Result<usize, CliError> {
    Ok(sys.run_by_name(name)?)
}

fn point(sys: &System, arg: &str) -> Result<Point, CliError> {
    let (run, time) = arg
        .rsplit_once(',')
        .ok_or_else(|| input(format!("point `{arg}` should be RUN,TIME")))?;
    let time: usize = time
        .trim()
        .parse()
        .map_err(|_| input(format!("bad time in `{arg}`")))?;
    let p = Point::new(run_index(sys, run.trim())?, time);
    sys.check_point(p)?;
    Ok(p)
}

fn show(sys: &System, p: Point) -> String {
    format!("({}, {})", sys.runs()[p.run].name, p.time)
}

fn agent(sys: &System, s: &str) -> Result<AgentId, CliError> {
    Ok(sys.agent_by_name(s.trim())?)
}

fn action(s: &str) -> Result<Action, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(input("empty action label"));
    }
    Ok(Action::new(s))
}

/// `act@agent`.
fn assigned(sys: &System, s: &str) -> Result<(AgentId, Action), CliError> {
    let (act, who) = s
        .rsplit_once('@')
        .ok_or_else(|| input(format!("`{s}` should be ACTION@AGENT")))?;
    Ok((agent(sys, who)?, action(act)?))
}

fn assignment(sys: &System, items: &[&str]) -> Result<ActionAssignment, CliError> {
    let pairs = items
        .iter()
        .map(|s| assigned(sys, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ActionAssignment::new(pairs)?)
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

/// Each agent's only action in the system.
fn inferred(sys: &System, agents: &[AgentId]) -> Result<ActionAssignment, CliError> {
    let actions = sys.actions();
    let pairs = agents
        .iter()
        .map(|&a| {
            let mine: Vec<&Action> = actions.iter().filter(|(b, _)| *b == a).map(|(_, x)| x).collect();
            match mine.as_slice() {
                [only] => Ok((a, (*only).clone())),
                _ => Err(input(format!(
                    "cannot infer the action of agent {}: it performs {} actions; pass them explicitly",
                    sys.agent_name(a),
                    mine.len()
                ))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ActionAssignment::new(pairs)?)
}

#[derive(Serialize)]
struct EvalReport {
    formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<(String, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    earliest: Option<Option<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extension: Option<Vec<(String, usize)>>,
}

fn run_eval(args: &EvalArgs) -> Result<Output, CliError> {
    let mut out = Output::default();
    let sys = load(&args.system, &mut out)?;
    let f = formula(&sys, &args.formula)?;
    let mut report = EvalReport {
        formula: f.to_string(),
        point: None,
        holds: None,
        valid: None,
        earliest: None,
        extension: None,
    };
    let status;
    if let Some(run) = &args.earliest {
        let r = run_index(&sys, run)?;
        let t = earliest(&sys, r, &f)?;
        match t {
            Some(t) => out.line(t.to_string()),
            None => out.line("never"),
        }
        report.earliest = Some(t);
        status = if t.is_some() { ExitStatus::Holds } else { ExitStatus::Fails };
    } else if let Some(at) = &args.at {
        let p = point(&sys, at)?;
        let holds = eval(&sys, p, &f)?;
        out.line(if holds { "T" } else { "F" });
        report.point = Some((sys.runs()[p.run].name.clone(), p.time));
        report.holds = Some(holds);
        status = if holds { ExitStatus::Holds } else { ExitStatus::Fails };
    } else {
        let ext = extension(&sys, &f)?;
        let valid = ext.is_all();
        if !args.extension {
            out.line(if valid { "T" } else { "F" });
        }
        report.valid = Some(valid);
        status = if valid { ExitStatus::Holds } else { ExitStatus::Fails };
    }
    if args.extension {
        let ext = extension(&sys, &f)?;
        let pts: Vec<Point> = ext.indices().map(|k| sys.point_at(k)).collect();
        for &p in &pts {
            out.line(show(&sys, p));
        }
        report.extension = Some(
            pts.iter()
                .map(|p| (sys.runs()[p.run].name.clone(), p.time))
                .collect(),
        );
    }
    out.status = Some(status);
    out.report = Some(serde_json::to_value(&report).expect("report serializes"));
    Ok(out)
}

fn want_args(args: &[String], n: usize, usage: &str) -> Result<(), CliError> {
    if args.len() != n {
        return Err(input(format!("usage: check SYSTEM {usage}")));
    }
    Ok(())
}

fn run_check(args: &CheckArgs) -> Result<Output, CliError> {
    let mut out = Output::default();
    let sys = load(&args.system, &mut out)?;
    let a = &args.args;
    let (name, witness) = match args.predicate.as_str() {
        "necessary" => {
            want_args(a, 3, "necessary PSI AGENT ACTION")?;
            let psi = formula(&sys, &a[0])?;
            let i = agent(&sys, &a[1])?;
            let act = action(&a[2])?;
            (
                format!("necessary({psi}, {}, {act})", sys.agent_name(i)),
                necessary_condition_counterexample(&sys, &psi, i, &act)?,
            )
        }
        "conscious" => {
            want_args(a, 2, "conscious AGENT ACTION")?;
            let i = agent(&sys, &a[0])?;
            let act = action(&a[1])?;
            (
                format!("conscious({}, {act})", sys.agent_name(i)),
                conscious_counterexample(&sys, i, &act)?,
            )
        }
        "local" => {
            want_args(a, 2, "local AGENT FORMULA")?;
            let i = agent(&sys, &a[0])?;
            let f = formula(&sys, &a[1])?;
            (
                format!("local({}, {f})", sys.agent_name(i)),
                local_counterexample(&sys, i, &f)?,
            )
        }
        "stable" => {
            want_args(a, 1, "stable FORMULA")?;
            let f = formula(&sys, &a[0])?;
            (format!("stable({f})"), stable_counterexample(&sys, &f)?)
        }
        "recalls" => {
            want_args(a, 2, "recalls AGENT FORMULA")?;
            let i = agent(&sys, &a[0])?;
            let f = formula(&sys, &a[1])?;
            (
                format!("recalls({}, {f})", sys.agent_name(i)),
                recall_counterexample(&sys, i, &f)?,
            )
        }
        "simultaneous" | "ordered" => {
            if a.len() < 2 {
                return Err(input(format!(
                    "usage: check SYSTEM {} ACTION@AGENT ACTION@AGENT...",
                    args.predicate
                )));
            }
            let items: Vec<&str> = a.iter().map(String::as_str).collect();
            let assign = assignment(&sys, &items)?;
            let listed = a.join(" ");
            if args.predicate == "ordered" {
                (format!("ordered({listed})"), ordered_counterexample(&sys, &assign)?)
            } else {
                (
                    format!("simultaneous({listed})"),
                    simultaneous_counterexample(&sys, &assign)?,
                )
            }
        }
        other => return Err(input(format!("unknown predicate `{other}`"))),
    };
    let report = VerificationReport::predicate(name.clone(), witness);
    match witness {
        Some(p) => out.line(format!("{name}: FAILS at {}", show(&sys, p))),
        None => out.line(format!("{name}: holds")),
    }
    out.status = Some(if witness.is_some() {
        ExitStatus::Fails
    } else {
        ExitStatus::Holds
    });
    out.report = Some(serde_json::to_value(&report).expect("report serializes"));
    Ok(out)
}

fn run_verify(args: &VerifyArgs) -> Result<Output, CliError> {
    let mut out = Output::default();
    let sys = load(&args.system, &mut out)?;
    let psi = formula(&sys, &args.psi)?;
    let report = match args.theorem {
        TheoremArg::Kop => {
            let i = agent(
                &sys,
                args.agent.as_deref().ok_or_else(|| input("kop needs --agent"))?,
            )?;
            let act = match &args.action {
                Some(a) => action(a)?,
                None => inferred(&sys, &[i])?.pairs()[0].1.clone(),
            };
            check_kop(&sys, i, &act, &psi)?
        }
        TheoremArg::Ckop => {
            let group: Vec<AgentId> = match &args.group {
                Some(g) => split_list(g)
                    .into_iter()
                    .map(|a| agent(&sys, a))
                    .collect::<Result<_, _>>()?,
                None => sys.agents().collect(),
            };
            let group_set: BTreeSet<AgentId> = group.iter().copied().collect();
            if group_set.is_empty() {
                return Err(input("--group is empty"));
            }
            let actions = match &args.actions {
                Some(list) => assignment(&sys, &split_list(list))?,
                None => inferred(&sys, &group_set.iter().copied().collect::<Vec<_>>())?,
            };
            let i = match &args.agent {
                Some(a) => agent(&sys, a)?,
                None => *group_set.iter().next().expect("non-empty group"),
            };
            check_ckop(&sys, &group_set, &actions, i, &psi)?
        }
        TheoremArg::Nkop => {
            let seq = match &args.seq {
                Some(list) => assignment(&sys, &split_list(list))?,
                None => inferred(&sys, &sys.agents().collect::<Vec<_>>())?,
            };
            check_nkop(&sys, &seq, &psi)?
        }
    };
    out.line(report.to_string());
    for &p in &report.counterexamples {
        out.line(format!("point {p} is {}", show(&sys, p)));
    }
    out.status = Some(match report.outcome() {
        Outcome::Holds => ExitStatus::Holds,
        Outcome::ConclusionFails => ExitStatus::Fails,
        Outcome::HypothesisFails => ExitStatus::HypothesisFails,
    });
    out.report = Some(serde_json::to_value(&report).expect("report serializes"));
    Ok(out)
}

fn window(s: &str) -> Result<Vec<Option<usize>>, CliError> {
    split_list(s)
        .into_iter()
        .map(|x| match x {
            "never" => Ok(None),
            t => t
                .parse()
                .map(Some)
                .map_err(|_| input(format!("bad window entry `{t}`, want a time or `never`"))),
        })
        .collect()
}

#[derive(Serialize)]
struct ScenarioReport {
    scenario: String,
    runs: usize,
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    designated: Option<String>,
}

pub fn build_scenario(cli: &Cli, which: &ScenarioCommand) -> Result<(String, System, Option<usize>), CliError> {
    let made = match which {
        ScenarioCommand::Lamp { no_burnout } => {
            ("lamp", if *no_burnout { lamp_without_burnout() } else { lamp() }, None)
        }
        ScenarioCommand::Message { reliable } => ("message", message(*reliable), None),
        ScenarioCommand::Atm {
            balances,
            withdrawal,
            horizon,
        } => (
            "atm",
            atm(&AtmConfig {
                balances: balances.clone(),
                withdrawal: *withdrawal,
                horizon: *horizon,
            })?,
            None,
        ),
        ScenarioCommand::Ctm {
            mode,
            domain,
            designated,
            edges,
            horizon,
        } => {
            let n = designated.len();
            let topology = match edges {
                Some(e) => NetworkTopology::parse_edges(n, e)?,
                None => NetworkTopology::path(n, 1)?,
            };
            let (sys, id) = ctm(&CtmConfig {
                topology,
                domain: domain.clone(),
                designated: designated.clone(),
                mode: match mode {
                    ModeArg::Clocked => CtmMode::ClockedFlood,
                    ModeArg::BottomUp => CtmMode::BottomUp,
                },
                horizon: *horizon,
                budget: cli.budget,
            })?;
            ("ctm", sys, Some(id))
        }
        ScenarioCommand::FiringSquad {
            n,
            delay,
            window: w,
            horizon,
            rule,
        } => (
            "firing-squad",
            firing_squad(&FiringSquadConfig {
                agents: *n,
                relay_delay: *delay,
                window: window(w)?,
                horizon: *horizon,
                rule: match rule {
                    RuleArg::Common => FireRule::Common,
                    RuleArg::Eager => FireRule::Eager,
                },
            })?,
            None,
        ),
        ScenarioCommand::Chain {
            k,
            window: w,
            delay,
            horizon,
            forgetful,
        } => (
            "chain",
            ordered_chain(&ChainConfig {
                agents: *k,
                window: window(w)?,
                relay_delay: *delay,
                horizon: *horizon,
                forgetful: *forgetful,
            })?,
            None,
        ),
        ScenarioCommand::Random { kind } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let params = RandomParams::default();
            let sys = match kind {
                RandomKind::System => random_system(&mut rng, &params),
                RandomKind::Simultaneous => random_simultaneous(&mut rng, &params).system,
                RandomKind::Ordered => random_ordered(&mut rng, &params).system,
            };
            ("random", sys, None)
        }
    };
    if made.1.runs().len() > cli.budget {
        return Err(kop_core::Error::BudgetExceeded {
            required: made.1.runs().len(),
            budget: cli.budget,
        }
        .into());
    }
    Ok((made.0.to_owned(), made.1, made.2))
}

fn run_scenario(cli: &Cli, args: &ScenarioArgs) -> Result<Output, CliError> {
    let mut out = Output::default();
    let (name, sys, designated) = build_scenario(cli, &args.scenario)?;
    let summary = format!(
        "{name}: {} runs, {} points",
        sys.runs().len(),
        sys.point_count()
    );
    let designated = designated.map(|id| sys.runs()[id].name.clone());
    let doc = document::render(&sys);
    if args.out.is_some() {
        out.line(&summary);
        if let Some(d) = &designated {
            out.line(format!("designated run: {d}"));
        }
    } else {
        out.stdout = doc.clone();
        out.stderr.push_str(&summary);
        out.stderr.push('\n');
    }
    out.document = Some(doc);
    out.report = Some(
        serde_json::to_value(ScenarioReport {
            scenario: name,
            runs: sys.runs().len(),
            points: sys.point_count(),
            designated,
        })
        .expect("report serializes"),
    );
    out.status = Some(ExitStatus::Holds);
    Ok(out)
}
