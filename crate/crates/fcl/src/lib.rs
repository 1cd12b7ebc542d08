//! Verification toolkit for synchronous choreographies.
//!
//! The crate models message-passing protocols from two complementary angles:
//! *global* descriptions (prefix-closed languages of interactions `A->B:m`,
//! choreography automata, multiparty global types) and *local* ones
//! (languages of send/receive actions, communicating finite-state machines).
//! It implements projection from global to local descriptions, the
//! synchronous semantics of local systems, and decision procedures for the
//! closure condition CUI (closure under unknown information, which
//! characterises correctness of projections), branch-awareness, and the
//! communication properties HA/DF/LF/SF/SLF, producing machine-checkable
//! witnesses for every violation.

pub mod alphabet;
pub mod cfsm;
pub mod chaut;
pub mod fsa;
pub mod gtypes;
pub mod lang;
pub mod parse;
pub mod report;
pub mod testutil;
pub mod word;

pub use alphabet::{Action, Direction, Interaction, Message, Participant, Symbol};
pub use word::{independent, project_symbol, project_word, PrefixOrder, Word};

/// Default exploration budget (number of distinct residual states).
pub const DEFAULT_BUDGET: usize = 100_000;

/// Outcome of a check: either the property holds or a witness violates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W> {
    Holds,
    Violated(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds => None,
            Verdict::Violated(w) => Some(w),
        }
    }
}
