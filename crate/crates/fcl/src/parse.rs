//! Parsers and serialisers for the four text formats:
//!
//! * `.ca`  — choreography automata: `chaut NAME`, `init q0`, transition
//!   lines `q0 A->B:m q1`;
//! * `.cfsm` — systems of machines: blocks `cfsm A` / `init q0` with lines
//!   `q0 B!m q1` (send `m` to `B`) and `q0 B?m q1` (receive `m` from `B`);
//!   an `eps` label is accepted syntactically and rejected as
//!   non-deterministic;
//! * `.gt`  — global types: `end`, `rec t . G`, `t`,
//!   `A->B:{ l . G1 , r . G2 }`, with `A->B:m . G` as single-branch sugar;
//! * `.gl` / `.ll` — explicit languages: `max: <word>` and
//!   `loop: <u> ( <v> )^w` lines; `.ll` files start with `subject: A` and use
//!   action words.
//!
//! All formats are line-oriented except `.gt`, use `#` comments, and treat
//! whitespace as insignificant. Every error carries a 1-based source span.

use std::collections::BTreeMap;
use std::fmt;

use crate::alphabet::{Action, Direction, Interaction, Message, Participant};
use crate::cfsm::{Cfsm, CfsmSystem};
use crate::chaut::ChorAutomaton;
use crate::fsa::Fsa;
use crate::gtypes::GlobalType;
use crate::lang::ExplicitLanguage;
use crate::word::{PrefixOrder, Word};

/// 1-based source location of a token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl SourceSpan {
    fn new(line: usize, col_start: usize, col_end: usize) -> Self {
        SourceSpan {
            file: String::new(),
            line,
            col_start,
            col_end: col_end.max(col_start),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.file.is_empty() {
            write!(f, "{}:{}", self.line, self.col_start)
        } else {
            write!(f, "{}:{}:{}", self.file, self.line, self.col_start)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn expecting(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn in_file(mut self, file: &str) -> Self {
        self.span.file = file.to_owned();
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Comment-stripped, non-blank lines with their 1-based numbers.
fn lines(src: &str) -> Vec<(usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| {
            let content = match l.find('#') {
                Some(at) => &l[..at],
                None => l,
            };
            (i + 1, content)
        })
        .filter(|(_, l)| !l.trim().is_empty())
        .collect()
}

/// Whitespace-separated tokens of a line with 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = 1;
    for part in line.split_inclusive(char::is_whitespace) {
        let token = part.trim_end_matches(char::is_whitespace);
        if !token.is_empty() {
            out.push((col, token));
        }
        col += part.chars().count();
    }
    out
}

fn participant(name: &str, span: SourceSpan) -> Result<Participant, ParseError> {
    Participant::new(name)
        .map_err(|e| ParseError::new(span, e.to_string()).expecting(&["participant name"]))
}

fn message(name: &str, span: SourceSpan) -> Result<Message, ParseError> {
    Message::new(name)
        .map_err(|e| ParseError::new(span, e.to_string()).expecting(&["message name"]))
}

/// Parses `A->B:m`.
fn interaction(token: &str, line: usize, col: usize) -> Result<Interaction, ParseError> {
    let span = |off: usize, len: usize| SourceSpan::new(line, col + off, col + off + len);
    let whole = || SourceSpan::new(line, col, col + token.len());
    let Some((sender, rest)) = token.split_once("->") else {
        return Err(
            ParseError::new(whole(), format!("malformed interaction `{token}`"))
                .expecting(&["A->B:m"]),
        );
    };
    let Some((receiver, msg)) = rest.split_once(':') else {
        return Err(
            ParseError::new(whole(), format!("malformed interaction `{token}`"))
                .expecting(&["A->B:m"]),
        );
    };
    let s = participant(sender, span(0, sender.len()))?;
    let r = participant(receiver, span(sender.len() + 2, receiver.len()))?;
    let m = message(msg, span(sender.len() + 2 + receiver.len() + 1, msg.len()))?;
    Interaction::new(s, r, m).map_err(|e| ParseError::new(whole(), e.to_string()))
}

/// Parses an action `AB!m` / `AB?m` relative to a declared subject: the
/// subject name delimits the participant pair, so multi-letter names stay
/// unambiguous.
fn action(
    token: &str,
    subject: &Participant,
    line: usize,
    col: usize,
) -> Result<Action, ParseError> {
    let whole = || SourceSpan::new(line, col, col + token.len());
    let (pair, msg, kind) = if let Some((pair, msg)) = token.split_once('!') {
        (pair, msg, Direction::Send)
    } else if let Some((pair, msg)) = token.split_once('?') {
        (pair, msg, Direction::Receive)
    } else {
        return Err(
            ParseError::new(whole(), format!("malformed action `{token}`"))
                .expecting(&["AB!m", "AB?m"]),
        );
    };
    let name = subject.name();
    let (sender, receiver) = match kind {
        Direction::Send => match pair.strip_prefix(name) {
            Some(receiver) => (name, receiver),
            None => {
                return Err(ParseError::new(
                    whole(),
                    format!("send `{token}` does not start with subject `{name}`"),
                ));
            }
        },
        Direction::Receive => match pair.strip_suffix(name) {
            Some(sender) => (sender, name),
            None => {
                return Err(ParseError::new(
                    whole(),
                    format!("receive `{token}` does not end with subject `{name}`"),
                ));
            }
        },
    };
    let s = participant(sender, whole())?;
    let r = participant(receiver, whole())?;
    let m = message(msg, whole())?;
    Action::new(s, r, m, kind).map_err(|e| ParseError::new(whole(), e.to_string()))
}

// --------------------------------------------------------------------------
// choreography automata

pub fn parse_ca(src: &str) -> Result<ChorAutomaton, ParseError> {
    let lines = lines(src);
    let mut it = lines.iter();
    let Some(&(line, header)) = it.next() else {
        return Err(
            ParseError::new(SourceSpan::new(1, 1, 1), "empty input").expecting(&["chaut NAME"])
        );
    };
    let toks = tokens(header);
    if toks.len() != 2 || toks[0].1 != "chaut" {
        return Err(ParseError::new(
            SourceSpan::new(line, toks.first().map_or(1, |t| t.0), header.len() + 1),
            "expected automaton header",
        )
        .expecting(&["chaut NAME"]));
    }
    let Some(&(iline, init_line)) = it.next() else {
        return Err(
            ParseError::new(SourceSpan::new(line, 1, 1), "missing initial state")
                .expecting(&["init STATE"]),
        );
    };
    let itoks = tokens(init_line);
    if itoks.len() != 2 || itoks[0].1 != "init" {
        return Err(ParseError::new(
            SourceSpan::new(iline, itoks.first().map_or(1, |t| t.0), init_line.len() + 1),
            "expected initial state",
        )
        .expecting(&["init STATE"]));
    }
    let initial = itoks[1].1;
    let mut transitions = Vec::new();
    let mut seen: BTreeMap<(String, Interaction), usize> = BTreeMap::new();
    for &(lno, content) in it {
        let toks = tokens(content);
        if toks.len() != 3 {
            return Err(ParseError::new(
                SourceSpan::new(lno, toks.first().map_or(1, |t| t.0), content.len() + 1),
                "expected a transition",
            )
            .expecting(&["SRC A->B:m DST"]));
        }
        let label = interaction(toks[1].1, lno, toks[1].0)?;
        let key = (toks[0].1.to_owned(), label.clone());
        if let Some(first) = seen.insert(key, lno) {
            return Err(ParseError::new(
                SourceSpan::new(lno, toks[1].0, toks[1].0 + toks[1].1.len()),
                format!(
                    "determinism violation: state `{}` already has a `{}` transition on line {first}",
                    toks[0].1, toks[1].1
                ),
            ));
        }
        transitions.push((toks[0].1.to_owned(), Some(label), toks[2].1.to_owned()));
    }
    let fsa = Fsa::new(initial, transitions, []);
    ChorAutomaton::new(fsa)
        .map_err(|e| ParseError::new(SourceSpan::new(line, 1, header.len() + 1), e.to_string()))
}

pub fn serialize_ca(a: &ChorAutomaton, name: &str) -> String {
    let mut out = format!("chaut {name}\ninit {}\n", a.fsa().initial());
    for (src, label, dst) in a.fsa().transitions() {
        let label = label.as_ref().expect("deterministic");
        out.push_str(&format!("{src} {label} {dst}\n"));
    }
    out
}

// --------------------------------------------------------------------------
// systems of communicating machines

/// Parses the peer-relative action notation of `.cfsm` blocks: inside the
/// block of `A`, `B!m` is a send from `A` to `B` and `B?m` a receive by `A`
/// from `B`.
fn peer_action(
    token: &str,
    owner: &Participant,
    line: usize,
    col: usize,
) -> Result<Action, ParseError> {
    let whole = || SourceSpan::new(line, col, col + token.len());
    let (peer, msg, kind) = if let Some((peer, msg)) = token.split_once('!') {
        (peer, msg, Direction::Send)
    } else if let Some((peer, msg)) = token.split_once('?') {
        (peer, msg, Direction::Receive)
    } else {
        return Err(
            ParseError::new(whole(), format!("malformed action `{token}`"))
                .expecting(&["B!m", "B?m", "eps"]),
        );
    };
    let peer = participant(peer, SourceSpan::new(line, col, col + peer.len()))?;
    let m = message(msg, whole())?;
    let (sender, receiver) = match kind {
        Direction::Send => (owner.clone(), peer),
        Direction::Receive => (peer, owner.clone()),
    };
    Action::new(sender, receiver, m, kind).map_err(|e| ParseError::new(whole(), e.to_string()))
}

pub fn parse_cfsm_system(src: &str) -> Result<CfsmSystem, ParseError> {
    let lines = lines(src);
    if lines.is_empty() {
        return Err(
            ParseError::new(SourceSpan::new(1, 1, 1), "empty input").expecting(&["cfsm NAME"])
        );
    }
    struct Block {
        owner: Participant,
        header: (usize, usize),
        initial: String,
        edges: Vec<(String, Option<Action>, String)>,
        eps_line: Option<usize>,
        dup_line: Option<(usize, usize, String)>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (lno, content) = lines[i];
        let toks = tokens(content);
        if toks.len() != 2 || toks[0].1 != "cfsm" {
            return Err(ParseError::new(
                SourceSpan::new(lno, toks.first().map_or(1, |t| t.0), content.len() + 1),
                "expected machine header",
            )
            .expecting(&["cfsm NAME"]));
        }
        let owner = participant(
            toks[1].1,
            SourceSpan::new(lno, toks[1].0, toks[1].0 + toks[1].1.len()),
        )?;
        i += 1;
        let Some(&(ilno, init_line)) = lines.get(i) else {
            return Err(
                ParseError::new(SourceSpan::new(lno, 1, 1), "missing initial state")
                    .expecting(&["init STATE"]),
            );
        };
        let itoks = tokens(init_line);
        if itoks.len() != 2 || itoks[0].1 != "init" {
            return Err(ParseError::new(
                SourceSpan::new(ilno, itoks.first().map_or(1, |t| t.0), init_line.len() + 1),
                "expected initial state",
            )
            .expecting(&["init STATE"]));
        }
        let mut block = Block {
            owner,
            header: (lno, content.len() + 1),
            initial: itoks[1].1.to_owned(),
            edges: Vec::new(),
            eps_line: None,
            dup_line: None,
        };
        i += 1;
        let mut seen: BTreeMap<(String, Action), usize> = BTreeMap::new();
        while i < lines.len() {
            let (elno, econtent) = lines[i];
            let etoks = tokens(econtent);
            if etoks.first().is_some_and(|t| t.1 == "cfsm") {
                break;
            }
            if etoks.len() != 3 {
                return Err(ParseError::new(
                    SourceSpan::new(elno, etoks.first().map_or(1, |t| t.0), econtent.len() + 1),
                    "expected a transition",
                )
                .expecting(&["SRC B!m DST", "SRC B?m DST", "SRC eps DST"]));
            }
            if etoks[1].1 == "eps" {
                block.eps_line.get_or_insert(elno);
                block
                    .edges
                    .push((etoks[0].1.to_owned(), None, etoks[2].1.to_owned()));
            } else {
                let a = peer_action(etoks[1].1, &block.owner, elno, etoks[1].0)?;
                if let Some(first) = seen.insert((etoks[0].1.to_owned(), a.clone()), elno) {
                    block
                        .dup_line
                        .get_or_insert((elno, first, etoks[1].1.to_owned()));
                }
                block
                    .edges
                    .push((etoks[0].1.to_owned(), Some(a), etoks[2].1.to_owned()));
            }
            i += 1;
        }
        blocks.push(block);
    }
    let mut machines = BTreeMap::new();
    for block in blocks {
        if let Some(eline) = block.eps_line {
            return Err(ParseError::new(
                SourceSpan::new(eline, 1, 4),
                format!(
                    "machine of `{}` is not deterministic: eps transition",
                    block.owner
                ),
            ));
        }
        if let Some((dline, first, label)) = block.dup_line {
            return Err(ParseError::new(
                SourceSpan::new(dline, 1, 1 + label.len()),
                format!(
                    "machine of `{}` is not deterministic: `{label}` duplicated from line {first}",
                    block.owner
                ),
            ));
        }
        let fsa = Fsa::new(&block.initial, block.edges, []);
        let owner = block.owner.clone();
        let machine = Cfsm::new(block.owner, fsa).map_err(|e| {
            ParseError::new(
                SourceSpan::new(block.header.0, 1, block.header.1),
                e.to_string(),
            )
        })?;
        machines.insert(owner, machine);
    }
    let span = SourceSpan::new(lines[0].0, 1, lines[0].1.len() + 1);
    CfsmSystem::new(machines).map_err(|e| ParseError::new(span, e.to_string()))
}

pub fn serialize_cfsm_system(sys: &CfsmSystem) -> String {
    let mut out = String::new();
    for (owner, machine) in sys.machines() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!(
            "cfsm {owner}\ninit {}\n",
            machine.automaton().initial()
        ));
        for (src, label, dst) in machine.automaton().transitions() {
            let a = label.as_ref().expect("deterministic");
            let peer_label = match a.kind {
                Direction::Send => format!("{}!{}", a.receiver, a.msg),
                Direction::Receive => format!("{}?{}", a.sender, a.msg),
            };
            out.push_str(&format!("{src} {peer_label} {dst}\n"));
        }
    }
    out
}

// --------------------------------------------------------------------------
// global types

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Arrow,
    Colon,
    LBrace,
    RBrace,
    Comma,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
        }
    }
}

fn tokenize_gt(src: &str) -> Result<Vec<(SourceSpan, Tok)>, ParseError> {
    let mut out = Vec::new();
    for (lno, raw) in src.lines().enumerate() {
        let line = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        };
        let chars: Vec<char> = line.chars().collect();
        let mut col = 0;
        while col < chars.len() {
            let c = chars[col];
            let span1 = SourceSpan::new(lno + 1, col + 1, col + 2);
            match c {
                c if c.is_whitespace() => col += 1,
                '{' => {
                    out.push((span1, Tok::LBrace));
                    col += 1;
                }
                '}' => {
                    out.push((span1, Tok::RBrace));
                    col += 1;
                }
                ',' => {
                    out.push((span1, Tok::Comma));
                    col += 1;
                }
                '.' => {
                    out.push((span1, Tok::Dot));
                    col += 1;
                }
                ':' => {
                    out.push((span1, Tok::Colon));
                    col += 1;
                }
                '-' if chars.get(col + 1) == Some(&'>') => {
                    out.push((SourceSpan::new(lno + 1, col + 1, col + 3), Tok::Arrow));
                    col += 2;
                }
                c if c.is_ascii_alphabetic() => {
                    let start = col;
                    while col < chars.len()
                        && (chars[col].is_ascii_alphanumeric() || chars[col] == '_')
                    {
                        col += 1;
                    }
                    let ident: String = chars[start..col].iter().collect();
                    out.push((
                        SourceSpan::new(lno + 1, start + 1, col + 1),
                        Tok::Ident(ident),
                    ));
                }
                other => {
                    return Err(ParseError::new(
                        span1,
                        format!("unexpected character `{other}`"),
                    ));
                }
            }
        }
    }
    Ok(out)
}

struct GtParser {
    toks: Vec<(SourceSpan, Tok)>,
    at: usize,
}

impl GtParser {
    fn peek(&self) -> Option<&(SourceSpan, Tok)> {
        self.toks.get(self.at)
    }

    fn end_span(&self) -> SourceSpan {
        self.toks
            .last()
            .map(|(s, _)| s.clone())
            .unwrap_or_else(|| SourceSpan::new(1, 1, 1))
    }

    fn next(&mut self, expected: &[&str]) -> Result<(SourceSpan, Tok), ParseError> {
        match self.toks.get(self.at) {
            Some(t) => {
                self.at += 1;
                Ok(t.clone())
            }
            None => {
                Err(ParseError::new(self.end_span(), "unexpected end of input").expecting(expected))
            }
        }
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<SourceSpan, ParseError> {
        let (span, got) = self.next(expected)?;
        if got == tok {
            Ok(span)
        } else {
            Err(ParseError::new(span, format!("unexpected token {got}")).expecting(expected))
        }
    }

    fn ident(&mut self, expected: &[&str]) -> Result<(SourceSpan, String), ParseError> {
        let (span, tok) = self.next(expected)?;
        match tok {
            Tok::Ident(s) => Ok((span, s)),
            other => {
                Err(ParseError::new(span, format!("unexpected token {other}")).expecting(expected))
            }
        }
    }

    /// `env` maps bound recursion variables to whether an interaction guards
    /// them already.
    fn global(&mut self, env: &[(String, bool)]) -> Result<GlobalType, ParseError> {
        let (span, name) = self.ident(&["end", "rec", "participant", "variable"])?;
        match name.as_str() {
            "end" => Ok(GlobalType::End),
            "rec" => {
                let (_, var) = self.ident(&["recursion variable"])?;
                self.expect(Tok::Dot, &["."])?;
                let mut env2 = env.to_vec();
                env2.retain(|(v, _)| v != &var);
                env2.push((var.clone(), false));
                let body = self.global(&env2)?;
                Ok(GlobalType::Rec(var, Box::new(body)))
            }
            _ => {
                if matches!(self.peek(), Some((_, Tok::Arrow))) {
                    self.expect(Tok::Arrow, &["->"])?;
                    let sender = participant(&name, span)?;
                    let (rspan, rname) = self.ident(&["participant"])?;
                    let receiver = participant(&rname, rspan.clone())?;
                    if sender == receiver {
                        return Err(ParseError::new(
                            rspan,
                            format!("participant `{receiver}` cannot message itself"),
                        ));
                    }
                    self.expect(Tok::Colon, &[":"])?;
                    let guarded: Vec<(String, bool)> =
                        env.iter().map(|(v, _)| (v.clone(), true)).collect();
                    let mut branches = Vec::new();
                    if matches!(self.peek(), Some((_, Tok::LBrace))) {
                        self.expect(Tok::LBrace, &["{"])?;
                        loop {
                            branches.push(self.branch(&guarded)?);
                            let (span, tok) = self.next(&[",", "}"])?;
                            match tok {
                                Tok::Comma => continue,
                                Tok::RBrace => break,
                                other => {
                                    return Err(ParseError::new(
                                        span,
                                        format!("unexpected token {other}"),
                                    )
                                    .expecting(&[",", "}"]));
                                }
                            }
                        }
                    } else {
                        branches.push(self.branch(&guarded)?);
                    }
                    for (i, (span, label, _)) in branches.iter().enumerate() {
                        if branches[..i].iter().any(|(_, l, _)| l == label) {
                            return Err(ParseError::new(
                                span.clone(),
                                format!("duplicate branch label `{label}`"),
                            ));
                        }
                    }
                    Ok(GlobalType::Comm {
                        sender,
                        receiver,
                        branches: {
                            let mut bs: Vec<(Message, GlobalType)> =
                                branches.into_iter().map(|(_, l, g)| (l, g)).collect();
                            bs.sort_by(|a, b| a.0.cmp(&b.0));
                            bs
                        },
                    })
                } else {
                    match env.iter().find(|(v, _)| v == &name) {
                        None => Err(ParseError::new(
                            span,
                            format!("unbound recursion variable `{name}`"),
                        )),
                        Some((_, false)) => Err(ParseError::new(
                            span,
                            format!("recursion variable `{name}` is used without a guarding interaction"),
                        )),
                        Some((_, true)) => Ok(GlobalType::Var(name)),
                    }
                }
            }
        }
    }

    fn branch(
        &mut self,
        env: &[(String, bool)],
    ) -> Result<(SourceSpan, Message, GlobalType), ParseError> {
        let (span, label) = self.ident(&["branch label"])?;
        let msg = message(&label, span.clone())?;
        self.expect(Tok::Dot, &["."])?;
        let g = self.global(env)?;
        Ok((span, msg, g))
    }
}

pub fn parse_gt(src: &str) -> Result<GlobalType, ParseError> {
    let toks = tokenize_gt(src)?;
    if toks.is_empty() {
        return Err(
            ParseError::new(SourceSpan::new(1, 1, 1), "empty input").expecting(&["global type"])
        );
    }
    let mut parser = GtParser { toks, at: 0 };
    let g = parser.global(&[])?;
    if let Some((span, tok)) = parser.peek() {
        return Err(ParseError::new(
            span.clone(),
            format!("trailing token {tok}"),
        ));
    }
    debug_assert!(g.validate().is_ok());
    Ok(g)
}

pub fn serialize_gt(g: &GlobalType) -> String {
    format!("{g}\n")
}

// --------------------------------------------------------------------------
// explicit languages

enum GenLine<S> {
    Max(Word<S>),
    Loop(Word<S>),
}

fn word_tokens(line: usize, toks: &[(usize, &str)]) -> Result<Vec<Interaction>, ParseError> {
    toks.iter()
        .filter(|(_, t)| *t != ".")
        .map(|&(col, t)| interaction(t, line, col))
        .collect()
}

fn action_tokens(
    line: usize,
    toks: &[(usize, &str)],
    subject: &Participant,
) -> Result<Vec<Action>, ParseError> {
    toks.iter()
        .filter(|(_, t)| *t != ".")
        .map(|&(col, t)| action(t, subject, line, col))
        .collect()
}

/// Tokens of one line with their columns.
type TokenLine<'a> = Vec<(usize, &'a str)>;

/// Splits a generator line body into the lasso parts `u ( v )^w`, or returns
/// the whole body for a plain finite word.
fn split_lasso(
    line: usize,
    toks: TokenLine<'_>,
) -> Result<(TokenLine<'_>, Option<TokenLine<'_>>), ParseError> {
    let open = toks.iter().position(|(_, t)| *t == "(");
    let Some(open) = open else {
        return Ok((toks, None));
    };
    let close = toks.iter().position(|(_, t)| *t == ")^w");
    let Some(close) = close else {
        let (col, _) = toks[open];
        return Err(
            ParseError::new(SourceSpan::new(line, col, col + 1), "unclosed cycle")
                .expecting(&[")^w"]),
        );
    };
    if close != toks.len() - 1 || close <= open + 1 {
        let (col, t) = toks[close.min(toks.len() - 1)];
        return Err(
            ParseError::new(SourceSpan::new(line, col, col + t.len()), "malformed cycle")
                .expecting(&["<u> ( <v> )^w"]),
        );
    }
    let cycle = toks[open + 1..close].to_vec();
    let prefix = toks[..open].to_vec();
    Ok((prefix, Some(cycle)))
}

fn parse_generators<S: crate::alphabet::Symbol>(
    src: &str,
    mut parse_word: impl FnMut(usize, &[(usize, &str)]) -> Result<Vec<S>, ParseError>,
    skip_first: bool,
) -> Result<Vec<(usize, Word<S>)>, ParseError> {
    let mut out = Vec::new();
    for (idx, &(lno, content)) in lines(src).iter().enumerate() {
        if skip_first && idx == 0 {
            continue;
        }
        let toks = tokens(content);
        let (head_col, head) = toks[0];
        let body = toks[1..].to_vec();
        let gen = match head {
            "max:" => {
                let symbols = parse_word(lno, &body)?;
                GenLine::Max(Word::Finite(symbols))
            }
            "loop:" => {
                let (prefix, cycle) = split_lasso(lno, body)?;
                let cycle = cycle.ok_or_else(|| {
                    ParseError::new(
                        SourceSpan::new(lno, head_col, head_col + 5),
                        "loop without cycle",
                    )
                    .expecting(&["loop: <u> ( <v> )^w"])
                })?;
                let prefix = parse_word(lno, &prefix)?;
                let cycle = parse_word(lno, &cycle)?;
                if cycle.is_empty() {
                    return Err(ParseError::new(
                        SourceSpan::new(lno, head_col, head_col + 5),
                        "empty cycle",
                    ));
                }
                GenLine::Loop(Word::lasso(prefix, cycle))
            }
            other => {
                return Err(ParseError::new(
                    SourceSpan::new(lno, head_col, head_col + other.len()),
                    format!("unexpected line head `{other}`"),
                )
                .expecting(&["max:", "loop:"]));
            }
        };
        out.push((
            lno,
            match gen {
                GenLine::Max(w) | GenLine::Loop(w) => w,
            },
        ));
    }
    // generators must form an antichain
    for (i, (lno, w)) in out.iter().enumerate() {
        for (lno2, w2) in &out[..i] {
            match w.compare(w2) {
                PrefixOrder::StrictPrefixOfSecond | PrefixOrder::Equal => {
                    return Err(ParseError::new(
                        SourceSpan::new(*lno, 1, 5),
                        format!("generator is covered by the generator on line {lno2}"),
                    ));
                }
                PrefixOrder::StrictPrefixOfFirst => {
                    return Err(ParseError::new(
                        SourceSpan::new(*lno, 1, 5),
                        format!("generator covers the generator on line {lno2}"),
                    ));
                }
                PrefixOrder::Incomparable => {}
            }
        }
    }
    Ok(out)
}

pub fn parse_glang(src: &str) -> Result<ExplicitLanguage<Interaction>, ParseError> {
    let gens = parse_generators(src, word_tokens, false)?;
    Ok(ExplicitLanguage::from_generators(
        gens.into_iter().map(|(_, w)| w),
    ))
}

pub fn serialize_glang(lang: &ExplicitLanguage<Interaction>) -> String {
    let mut out = String::new();
    for g in lang.generators() {
        match g {
            Word::Finite(_) => out.push_str(&format!("max: {g}\n")),
            Word::Lasso { .. } => out.push_str(&format!("loop: {g}\n")),
        }
    }
    out
}

pub fn parse_llang(src: &str) -> Result<(Participant, ExplicitLanguage<Action>), ParseError> {
    let all = lines(src);
    let Some(&(lno, first)) = all.first() else {
        return Err(
            ParseError::new(SourceSpan::new(1, 1, 1), "empty input").expecting(&["subject: A"])
        );
    };
    let toks = tokens(first);
    if toks.len() != 2 || toks[0].1 != "subject:" {
        return Err(ParseError::new(
            SourceSpan::new(lno, toks.first().map_or(1, |t| t.0), first.len() + 1),
            "expected subject declaration",
        )
        .expecting(&["subject: A"]));
    }
    let subject = participant(
        toks[1].1,
        SourceSpan::new(lno, toks[1].0, toks[1].0 + toks[1].1.len()),
    )?;
    let subject2 = subject.clone();
    let gens = parse_generators(
        src,
        move |lno, toks| action_tokens(lno, toks, &subject2),
        true,
    )?;
    for (lno, w) in &gens {
        for a in w.symbols() {
            if a.subject() != &subject {
                return Err(ParseError::new(
                    SourceSpan::new(*lno, 1, 5),
                    format!("action `{a}` does not have subject `{subject}`"),
                ));
            }
        }
    }
    Ok((
        subject,
        ExplicitLanguage::from_generators(gens.into_iter().map(|(_, w)| w)),
    ))
}

pub fn serialize_llang(subject: &Participant, lang: &ExplicitLanguage<Action>) -> String {
    let mut out = format!("subject: {subject}\n");
    for g in lang.generators() {
        match g {
            Word::Finite(_) => out.push_str(&format!("max: {g}\n")),
            Word::Lasso { .. } => out.push_str(&format!("loop: {g}\n")),
        }
    }
    out
}
