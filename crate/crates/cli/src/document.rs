//! Line-oriented text format for systems.
//!
//! ```text
//! AGENTS 2
//! AGENT 1 "Alice"
//! AGENT 2 "Bob"
//! HORIZON 1
//! PROPS 1
//! PROP "delivered"
//! RUNS 1
//! RUN 0 "r_del"
//!   STATE 0
//!     ENV 0
//!     LOCAL 1 [0 0]
//!     LOCAL 2 [0 0]
//!     HISTORY 0
//!   STATE 1
//!     ENV 0
//!     LOCAL 1 [1 1]
//!     LOCAL 2 [1 0]
//!     HISTORY 1
//!       EVENT "send" 1 0
//! INTERP
//! TRUTH "delivered" 0 0 0
//! END
//! ```
//!
//! Tokens are integers, double-quoted strings and `[ ]` lists. Indentation is
//! ignored, as are blank lines and lines starting with `#`. Nothing has a
//! default: every count, state, local state and truth row is spelled out.
//! `render` is canonical, so rendering a parsed rendering gives the same
//! bytes.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use kop_core::{
    Action, AgentId, EnvState, GlobalState, History, HistoryEvent, Interpretation, LocalState,
    Run, System, Value,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DocumentError {
    pub line: usize,
    pub message: String,
}

fn quoted(s: &str) -> String {
    Value::str(s).to_string()
}

pub fn render(sys: &System) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "AGENTS {}", sys.agent_count());
    for a in sys.agents() {
        let _ = writeln!(out, "AGENT {} {}", a.number(), quoted(sys.agent_name(a)));
    }
    let _ = writeln!(out, "HORIZON {}", sys.horizon());
    let props: Vec<&str> = sys.interpretation().prop_names().collect();
    let _ = writeln!(out, "PROPS {}", props.len());
    for p in &props {
        let _ = writeln!(out, "PROP {}", quoted(p));
    }
    let _ = writeln!(out, "RUNS {}", sys.runs().len());
    for (r, run) in sys.runs().iter().enumerate() {
        let _ = writeln!(out, "RUN {r} {}", quoted(&run.name));
        for (t, state) in run.states.iter().enumerate() {
            let _ = writeln!(out, "  STATE {t}");
            let _ = writeln!(out, "    ENV {}", state.env.payload);
            for (k, local) in state.locals.iter().enumerate() {
                let _ = writeln!(out, "    LOCAL {} {}", k + 1, local.0);
            }
            let _ = writeln!(out, "    HISTORY {}", state.env.history.len());
            for e in state.env.history.iter() {
                let _ = writeln!(
                    out,
                    "      EVENT {} {} {}",
                    quoted(e.action.label()),
                    e.agent.number(),
                    e.time
                );
            }
        }
    }
    out.push_str("INTERP\n");
    let width = sys.horizon() + 1;
    for p in &props {
        let row = sys.interpretation().row(p).expect("listed proposition");
        for r in 0..sys.runs().len() {
            let _ = write!(out, "TRUTH {} {r}", quoted(p));
            for &b in &row[r * width..(r + 1) * width] {
                out.push_str(if b { " 1" } else { " 0" });
            }
            out.push('\n');
        }
    }
    out.push_str("END\n");
    out
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Word(String),
    Int(i64),
    Str(String),
    Open,
    Close,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Token>, DocumentError> {
    let err = |col: usize, message: String| DocumentError {
        line: lineno,
        message: format!("column {}: {message}", col + 1),
    };
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        match c {
            c if c.is_whitespace() => k += 1,
            '[' => {
                tokens.push(Token::Open);
                k += 1;
            }
            ']' => {
                tokens.push(Token::Close);
                k += 1;
            }
            '"' => {
                let start = k;
                k += 1;
                let mut s = String::new();
                loop {
                    match chars.get(k) {
                        None => return Err(err(start, "unterminated string".into())),
                        Some('"') => {
                            k += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(k + 1) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                _ => return Err(err(k, "bad escape".into())),
                            }
                            k += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            k += 1;
                        }
                    }
                }
                tokens.push(Token::Str(s));
            }
            '-' | '0'..='9' => {
                let start = k;
                k += 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let text: String = chars[start..k].iter().collect();
                let v = text
                    .parse::<i64>()
                    .map_err(|_| err(start, format!("bad integer `{text}`")))?;
                tokens.push(Token::Int(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                    k += 1;
                }
                tokens.push(Token::Word(chars[start..k].iter().collect()));
            }
            other => return Err(err(k, format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

struct Line {
    no: usize,
    keyword: String,
    args: Vec<Token>,
}

struct Reader {
    lines: Vec<Line>,
    pos: usize,
    last_line: usize,
}

impl Reader {
    fn new(text: &str) -> Result<Self, DocumentError> {
        let mut lines = Vec::new();
        let mut last_line = 1;
        for (k, raw) in text.lines().enumerate() {
            let no = k + 1;
            last_line = no;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = lex(raw, no)?;
            let keyword = match tokens.first() {
                Some(Token::Word(w)) => w.clone(),
                _ => {
                    return Err(DocumentError {
                        line: no,
                        message: "expected a section keyword".into(),
                    })
                }
            };
            tokens.remove(0);
            lines.push(Line {
                no,
                keyword,
                args: tokens,
            });
        }
        Ok(Reader {
            lines,
            pos: 0,
            last_line,
        })
    }

    fn next(&mut self, keyword: &str) -> Result<(usize, Args), DocumentError> {
        let Some(line) = self.lines.get(self.pos) else {
            return Err(DocumentError {
                line: self.last_line,
                message: format!("unexpected end of document, expected {keyword}"),
            });
        };
        if line.keyword != keyword {
            return Err(DocumentError {
                line: line.no,
                message: format!("expected {keyword}, found {}", line.keyword),
            });
        }
        self.pos += 1;
        Ok((
            line.no,
            Args {
                line: line.no,
                tokens: line.args.clone(),
                pos: 0,
            },
        ))
    }

    fn peek_is(&self, keyword: &str) -> bool {
        self.lines.get(self.pos).is_some_and(|l| l.keyword == keyword)
    }
}

struct Args {
    line: usize,
    tokens: Vec<Token>,
    pos: usize,
}

impl Args {
    fn err(&self, message: impl Into<String>) -> DocumentError {
        DocumentError {
            line: self.line,
            message: message.into(),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64, DocumentError> {
        match self.tokens.get(self.pos) {
            Some(Token::Int(v)) => {
                self.pos += 1;
                Ok(*v)
            }
            _ => Err(self.err(format!("expected integer {what}"))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, DocumentError> {
        let v = self.int(what)?;
        usize::try_from(v).map_err(|_| self.err(format!("{what} must be non-negative")))
    }

    fn expect_count(&mut self, what: &str, want: usize) -> Result<(), DocumentError> {
        let got = self.count(what)?;
        if got != want {
            return Err(self.err(format!("expected {what} {want}, found {got}")));
        }
        Ok(())
    }

    fn string(&mut self, what: &str) -> Result<String, DocumentError> {
        match self.tokens.get(self.pos) {
            Some(Token::Str(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.err(format!("expected quoted {what}"))),
        }
    }

    fn value(&mut self) -> Result<Value, DocumentError> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Int(v)) => {
                self.pos += 1;
                Ok(Value::Int(v))
            }
            Some(Token::Str(s)) => {
                self.pos += 1;
                Ok(Value::Str(s))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    match self.tokens.get(self.pos) {
                        Some(Token::Close) => {
                            self.pos += 1;
                            return Ok(Value::List(items));
                        }
                        None => return Err(self.err("unclosed `[`")),
                        _ => items.push(self.value()?),
                    }
                }
            }
            _ => Err(self.err("expected a value (integer, string or list)")),
        }
    }

    fn end(&self) -> Result<(), DocumentError> {
        if self.pos < self.tokens.len() {
            return Err(self.err("unexpected trailing tokens"));
        }
        Ok(())
    }
}

pub fn parse(text: &str) -> Result<System, DocumentError> {
    let mut rd = Reader::new(text)?;

    let (_, mut a) = rd.next("AGENTS")?;
    let agent_count = a.count("agent count")?;
    a.end()?;
    if agent_count == 0 {
        return Err(a.err("at least one agent is required"));
    }
    let mut agents = Vec::with_capacity(agent_count);
    for k in 1..=agent_count {
        let (_, mut a) = rd.next("AGENT")?;
        a.expect_count("agent number", k)?;
        agents.push(a.string("agent name")?);
        a.end()?;
    }

    let (_, mut a) = rd.next("HORIZON")?;
    let horizon = a.count("horizon")?;
    a.end()?;

    let (_, mut a) = rd.next("PROPS")?;
    let prop_count = a.count("proposition count")?;
    a.end()?;
    let mut props = Vec::with_capacity(prop_count);
    for _ in 0..prop_count {
        let (_, mut a) = rd.next("PROP")?;
        let name = a.string("proposition name")?;
        a.end()?;
        if props.contains(&name) {
            return Err(a.err(format!("proposition `{name}` declared twice")));
        }
        props.push(name);
    }

    let (runs_line, mut a) = rd.next("RUNS")?;
    let run_count = a.count("run count")?;
    a.end()?;
    if run_count == 0 {
        return Err(a.err("at least one run is required"));
    }
    let mut state_lines: HashMap<(usize, usize), usize> = HashMap::new();
    let mut runs = Vec::with_capacity(run_count);
    for r in 0..run_count {
        let (_, mut a) = rd.next("RUN")?;
        a.expect_count("run number", r)?;
        let name = a.string("run name")?;
        a.end()?;
        let mut states = Vec::with_capacity(horizon + 1);
        for t in 0..=horizon {
            let (line, mut a) = rd.next("STATE")?;
            a.expect_count("time", t)?;
            a.end()?;
            state_lines.insert((r, t), line);
            let (_, mut a) = rd.next("ENV")?;
            let payload = a.value()?;
            a.end()?;
            let mut locals = Vec::with_capacity(agent_count);
            for k in 1..=agent_count {
                let (_, mut a) = rd.next("LOCAL")?;
                a.expect_count("agent number", k)?;
                locals.push(LocalState(a.value()?));
                a.end()?;
            }
            let (_, mut a) = rd.next("HISTORY")?;
            let events = a.count("event count")?;
            a.end()?;
            let mut history = History::new();
            for _ in 0..events {
                let (_, mut a) = rd.next("EVENT")?;
                let label = a.string("action")?;
                if label.is_empty() {
                    return Err(a.err("action labels must be non-empty"));
                }
                let agent = a.count("agent")?;
                if agent == 0 || agent > agent_count {
                    return Err(a.err(format!("agent {agent} outside 1..={agent_count}")));
                }
                let time = a.count("time")?;
                a.end()?;
                if !history.insert(HistoryEvent::new(Action::new(label), AgentId::new(agent), time)) {
                    return Err(a.err("duplicate event"));
                }
            }
            states.push(GlobalState {
                env: EnvState { history, payload },
                locals,
            });
        }
        runs.push(Run::new(name, states));
    }

    let (interp_line, a) = rd.next("INTERP")?;
    a.end()?;
    let width = horizon + 1;
    let mut table: BTreeMap<String, Vec<Option<bool>>> = props
        .iter()
        .map(|p| (p.clone(), vec![None; run_count * width]))
        .collect();
    while rd.peek_is("TRUTH") {
        let (_, mut a) = rd.next("TRUTH")?;
        let prop = a.string("proposition")?;
        let run = a.count("run number")?;
        let Some(row) = table.get_mut(&prop) else {
            return Err(a.err(format!("proposition `{prop}` is not declared")));
        };
        if run >= run_count {
            return Err(a.err(format!("run {run} does not exist")));
        }
        for t in 0..width {
            let bit = match a.int("truth value")? {
                0 => false,
                1 => true,
                other => return Err(a.err(format!("truth values are 0 or 1, found {other}"))),
            };
            let slot = &mut row[run * width + t];
            if slot.is_some() {
                return Err(a.err(format!("row for `{prop}` in run {run} given twice")));
            }
            *slot = Some(bit);
        }
        a.end()?;
    }
    let (end_line, a) = rd.next("END")?;
    a.end()?;
    if let Some(extra) = rd.lines.get(rd.pos) {
        return Err(DocumentError {
            line: extra.no,
            message: "content after END".into(),
        });
    }
    let mut complete = BTreeMap::new();
    for (prop, row) in table {
        if let Some(missing) = row.iter().position(Option::is_none) {
            return Err(DocumentError {
                line: end_line,
                message: format!("no TRUTH row for `{prop}` in run {}", missing / width),
            });
        }
        complete.insert(prop, row.into_iter().map(|b| b.unwrap_or(false)).collect());
    }

    System::new(agents, horizon, runs, Interpretation::from_table(complete)).map_err(|e| {
        let line = match &e {
            kop_core::Error::InvalidState { run, time, .. } => {
                state_lines.get(&(*run, *time)).copied().unwrap_or(runs_line)
            }
            kop_core::Error::InvalidSystem(_) => interp_line,
            _ => runs_line,
        };
        DocumentError {
            line,
            message: e.to_string(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kop_core::protocols::scenarios::{lamp, message};

    #[test]
    fn render_parse_render_is_identity() {
        for sys in [lamp(), message(false), message(true)] {
            let text = render(&sys);
            let back = parse(&text).unwrap();
            assert_eq!(render(&back), text);
        }
    }

    #[test]
    fn errors_point_at_the_offending_line() {
        let text = render(&message(false));
        let broken = text.replacen("HORIZON 3", "HORIZON x", 1);
        let err = parse(&broken).unwrap_err();
        assert_eq!(err.line, 4);

        // an event recorded before it happened
        let broken = text.replacen("      EVENT \"send\" 1 1", "      EVENT \"send\" 1 5", 1);
        let err = parse(&broken).unwrap_err();
        let line = broken
            .lines()
            .position(|l| l.contains("EVENT \"send\" 1 5"))
            .unwrap()
            + 1;
        // anchored at the STATE header above the event
        assert!(err.line < line && err.line > line - 8, "{err}");
        assert!(err.message.contains("time"), "{err}");

        let err = parse("AGENTS 1\nAGENT 1 \"a\nHORIZON 0\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unterminated"));
    }

    #[test]
    fn comments_and_indentation_are_ignored() {
        let text = "# tiny\nAGENTS 1\nAGENT 1 \"i\"\nHORIZON 0\nPROPS 1\nPROP \"p\"\nRUNS 1\nRUN 0 \"r\"\nSTATE 0\nENV 0\nLOCAL 1 [\"s\" -2]\nHISTORY 0\nINTERP\n   TRUTH \"p\" 0 1\nEND\n";
        let sys = parse(text).unwrap();
        assert_eq!(sys.point_count(), 1);
        assert!(sys.interpretation().row("p").unwrap()[0]);
    }

    #[test]
    fn missing_truth_rows_are_rejected() {
        let text = render(&lamp());
        let without: String = text
            .lines()
            .filter(|l| !l.starts_with("TRUTH \"lit\" 2"))
            .map(|l| format!("{l}\n"))
            .collect();
        let err = parse(&without).unwrap_err();
        assert!(err.message.contains("no TRUTH row"), "{err}");
    }
}
