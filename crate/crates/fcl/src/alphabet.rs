//! Interaction and action alphabets.
//!
//! An interaction `A->B:m` says that participant `A` sends message `m` to
//! participant `B` and `B` receives it. On the local side the same exchange
//! splits into the send action `AB!m` (subject `A`) and the receive action
//! `AB?m` (subject `B`).

use std::fmt;
use std::sync::Arc;

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Error raised when constructing alphabet values from invalid parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    InvalidName(String),
    SelfCommunication(Participant),
}

impl fmt::Display for AlphabetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphabetError::InvalidName(s) => write!(f, "invalid identifier `{s}`"),
            AlphabetError::SelfCommunication(p) => {
                write!(f, "participant `{p}` cannot communicate with itself")
            }
        }
    }
}

impl std::error::Error for AlphabetError {}

/// A named protocol participant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Participant(Arc<str>);

impl Participant {
    pub fn new(name: &str) -> Result<Self, AlphabetError> {
        if valid_ident(name) {
            Ok(Participant(name.into()))
        } else {
            Err(AlphabetError::InvalidName(name.to_owned()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A message name; messages and participants live in disjoint namespaces.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message(Arc<str>);

impl Message {
    pub fn new(name: &str) -> Result<Self, AlphabetError> {
        if valid_ident(name) {
            Ok(Message(name.into()))
        } else {
            Err(AlphabetError::InvalidName(name.to_owned()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One symbol of the interaction alphabet, rendered `A->B:m`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub sender: Participant,
    pub receiver: Participant,
    pub msg: Message,
}

impl Interaction {
    pub fn new(
        sender: Participant,
        receiver: Participant,
        msg: Message,
    ) -> Result<Self, AlphabetError> {
        if sender == receiver {
            return Err(AlphabetError::SelfCommunication(sender));
        }
        Ok(Interaction {
            sender,
            receiver,
            msg,
        })
    }

    pub fn participants(&self) -> [&Participant; 2] {
        [&self.sender, &self.receiver]
    }

    pub fn involves(&self, p: &Participant) -> bool {
        &self.sender == p || &self.receiver == p
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}", self.sender, self.receiver, self.msg)
    }
}

impl fmt::Debug for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Direction of an action: `!` marks a send, `?` a receive.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Direction {
    Send,
    Receive,
}

/// One symbol of the action alphabet, rendered `AB!m` or `AB?m`.
///
/// In both forms the first participant is the sender and the second the
/// receiver; the subject is the sender of a send and the receiver of a
/// receive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub sender: Participant,
    pub receiver: Participant,
    pub msg: Message,
    pub kind: Direction,
}

impl Action {
    pub fn new(
        sender: Participant,
        receiver: Participant,
        msg: Message,
        kind: Direction,
    ) -> Result<Self, AlphabetError> {
        if sender == receiver {
            return Err(AlphabetError::SelfCommunication(sender));
        }
        Ok(Action {
            sender,
            receiver,
            msg,
            kind,
        })
    }

    pub fn subject(&self) -> &Participant {
        match self.kind {
            Direction::Send => &self.sender,
            Direction::Receive => &self.receiver,
        }
    }

    pub fn participants(&self) -> [&Participant; 2] {
        [&self.sender, &self.receiver]
    }

    pub fn involves(&self, p: &Participant) -> bool {
        &self.sender == p || &self.receiver == p
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.kind {
            Direction::Send => '!',
            Direction::Receive => '?',
        };
        write!(f, "{}{}{}{}", self.sender, self.receiver, mark, self.msg)
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Common interface of the two alphabets; words and automata are generic
/// over it.
pub trait Symbol: Clone + Eq + Ord + std::hash::Hash + fmt::Display + fmt::Debug {
    fn participants(&self) -> [&Participant; 2];

    fn involves(&self, p: &Participant) -> bool {
        let [a, b] = self.participants();
        a == p || b == p
    }
}

impl Symbol for Interaction {
    fn participants(&self) -> [&Participant; 2] {
        self.participants()
    }
}

impl Symbol for Action {
    fn participants(&self) -> [&Participant; 2] {
        self.participants()
    }
}
