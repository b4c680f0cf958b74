//! Text syntax for formulas.
//!
//! ```text
//! f ::= f -> f | f '|' f | f & f | !f | K[i] f | C[{i,j,...}] f
//!     | does[i](act) | did[i](act) | true | false | prop | (f)
//! ```
//!
//! `->` is right-associative; precedence is `!`/`K`/`C` > `&` > `|` > `->`.
//! Agents are written by number or by name. `Display` prints the same syntax
//! with agents by number, and parsing it back gives the identical tree.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::kernel::{Action, AgentId};

use super::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("formula syntax error at offset {offset}: {message}")]
pub struct FormulaParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses `src`, resolving agent names against `agents` (numbers are checked
/// against its length unless it is empty).
pub fn parse_formula(src: &str, agents: &[String]) -> Result<Formula, FormulaParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        agents,
        src_len: src.len(),
    };
    let f = p.implication()?;
    if let Some((tok, offset)) = p.tokens.get(p.pos) {
        return Err(FormulaParseError {
            offset: *offset,
            message: format!("unexpected `{tok}`"),
        });
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Bang,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Word(w) => return f.write_str(w),
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Arrow => "->",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
        };
        f.write_str(s)
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, FormulaParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        let start = k;
        let tok = match c {
            c if c.is_ascii_whitespace() => {
                k += 1;
                continue;
            }
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '-' if bytes.get(k + 1) == Some(&b'>') => {
                k += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                while k + 1 < bytes.len()
                    && ((bytes[k + 1] as char).is_ascii_alphanumeric() || bytes[k + 1] == b'_')
                {
                    k += 1;
                }
                Tok::Word(src[start..=k].to_owned())
            }
            other => {
                return Err(FormulaParseError {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        k += 1;
        out.push((tok, start));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    agents: &'a [String],
    src_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + ahead).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.src_len, |(_, off)| *off)
    }

    fn error(&self, message: impl Into<String>) -> FormulaParseError {
        FormulaParseError {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), FormulaParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!(
                "expected `{tok}`, found {}",
                self.peek().map_or("end of input".to_owned(), |t| format!("`{t}`"))
            )))
        }
    }

    fn word(&mut self, what: &str) -> Result<String, FormulaParseError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn implication(&mut self) -> Result<Formula, FormulaParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaParseError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            let g = self.conjunction()?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaParseError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let g = self.unary()?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FormulaParseError> {
        let bracket_next = self.peek_at(1) == Some(&Tok::LBracket);
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Word(w)) if w == "K" && bracket_next => {
                self.pos += 2;
                let agent = self.agent()?;
                self.expect(Tok::RBracket)?;
                Ok(Formula::know(agent, self.unary()?))
            }
            Some(Tok::Word(w)) if w == "C" && bracket_next => {
                self.pos += 2;
                self.expect(Tok::LBrace)?;
                let mut group = BTreeSet::new();
                loop {
                    group.insert(self.agent()?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                self.expect(Tok::RBracket)?;
                Ok(Formula::Common(group, Box::new(self.unary()?)))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, FormulaParseError> {
        let bracket_next = self.peek_at(1) == Some(&Tok::LBracket);
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.implication()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Word(w)) if (w == "does" || w == "did") && bracket_next => {
                self.pos += 2;
                let agent = self.agent()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::LParen)?;
                let action = Action::new(self.word("an action label")?);
                self.expect(Tok::RParen)?;
                Ok(if w == "does" {
                    Formula::Does(agent, action)
                } else {
                    Formula::Did(agent, action)
                })
            }
            Some(Tok::Word(w)) if w == "true" => {
                self.pos += 1;
                Ok(Formula::Const(true))
            }
            Some(Tok::Word(w)) if w == "false" => {
                self.pos += 1;
                Ok(Formula::Const(false))
            }
            Some(Tok::Word(w)) => {
                if w.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(self.error(format!("`{w}` is not a proposition name")));
                }
                self.pos += 1;
                Ok(Formula::Prop(w))
            }
            Some(t) => Err(self.error(format!("unexpected `{t}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn agent(&mut self) -> Result<AgentId, FormulaParseError> {
        let offset = self.offset();
        let w = self.word("an agent")?;
        let err = |message: String| FormulaParseError { offset, message };
        if let Ok(k) = w.parse::<usize>() {
            if k == 0 || (!self.agents.is_empty() && k > self.agents.len()) {
                return Err(err(format!("agent {k} is out of range")));
            }
            return Ok(AgentId::new(k));
        }
        self.agents
            .iter()
            .position(|a| *a == w)
            .map(|k| AgentId::new(k + 1))
            .ok_or_else(|| err(format!("unknown agent `{w}`")))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, false)
    }
}

/// `tight`: the context binds tighter than `&`, so a conjunction needs parens.
fn write_formula(out: &mut fmt::Formatter<'_>, f: &Formula, tight: bool) -> fmt::Result {
    match f {
        Formula::Const(b) => write!(out, "{b}"),
        Formula::Prop(name) => out.write_str(name),
        Formula::Does(a, act) => write!(out, "does[{a}]({act})"),
        Formula::Did(a, act) => write!(out, "did[{a}]({act})"),
        Formula::Not(g) => {
            out.write_str("!")?;
            write_formula(out, g, true)
        }
        Formula::Know(a, g) => {
            write!(out, "K[{a}] ")?;
            write_formula(out, g, true)
        }
        Formula::Common(group, g) => {
            out.write_str("C[{")?;
            for (k, a) in group.iter().enumerate() {
                if k > 0 {
                    out.write_str(",")?;
                }
                write!(out, "{a}")?;
            }
            out.write_str("}] ")?;
            write_formula(out, g, true)
        }
        Formula::And(g, h) => {
            if tight {
                out.write_str("(")?;
            }
            write_formula(out, g, false)?;
            out.write_str(" & ")?;
            write_formula(out, h, true)?;
            if tight {
                out.write_str(")")?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["Alice".into(), "Bob".into()]
    }

    fn parse(s: &str) -> Formula {
        parse_formula(s, &names()).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let (p, q, r) = (Formula::prop("p"), Formula::prop("q"), Formula::prop("r"));
        assert_eq!(
            parse("p | q & r"),
            Formula::or(p.clone(), Formula::and(q.clone(), r.clone()))
        );
        assert_eq!(
            parse("p -> q -> r"),
            Formula::implies(p.clone(), Formula::implies(q.clone(), r.clone()))
        );
        assert_eq!(
            parse("!p & q"),
            Formula::and(Formula::not(p.clone()), q.clone())
        );
        assert_eq!(
            parse("K[1] p & q"),
            Formula::and(Formula::know(AgentId::new(1), p.clone()), q.clone())
        );
        assert_eq!(
            parse("p & q | r -> p"),
            Formula::implies(Formula::or(Formula::and(p.clone(), q), r), p)
        );
    }

    #[test]
    fn agents_by_name_or_number() {
        assert_eq!(parse("K[Bob] p"), parse("K[2] p"));
        assert_eq!(
            parse("C[{Alice, 2}] p"),
            Formula::common([AgentId::new(1), AgentId::new(2)], Formula::prop("p"))
        );
        assert_eq!(parse("does[Alice](send)"), Formula::does(AgentId::new(1), "send"));
        assert_eq!(parse("did[2](print_100)"), Formula::did(AgentId::new(2), "print_100"));
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_formula("p & ", &names()).unwrap_err();
        assert_eq!(e.offset, 4);
        let e = parse_formula("K[Carol] p", &names()).unwrap_err();
        assert_eq!(e.offset, 2);
        let e = parse_formula("K[3] p", &names()).unwrap_err();
        assert!(e.message.contains("out of range"));
        assert!(parse_formula("p $ q", &names()).is_err());
        assert!(parse_formula("(p", &names()).is_err());
        assert!(parse_formula("p q", &names()).is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "!(p & q)",
            "K[1] !K[2] (p & does[1](a))",
            "C[{1,2}] psi_go -> K[2] did[1](fire_1)",
            "p | q | r",
            "(p & q) & !(r & true)",
        ] {
            let f = parse(s);
            assert_eq!(parse(&f.to_string()), f, "{s} => {f}");
        }
    }

    #[test]
    fn keywords_need_brackets() {
        assert_eq!(parse("K"), Formula::prop("K"));
        assert_eq!(parse("does"), Formula::prop("does"));
    }
}
