//! Finite and ultimately periodic words.
//!
//! Infinite words are restricted to lassos `u (v)^w`, i.e. a finite prefix
//! `u` followed by a cycle `v` repeated forever. Every infinite word arising
//! from a finite automaton or a regular global type has this shape, and the
//! restriction makes equality and the prefix order decidable.
//!
//! Lassos are kept in canonical form: the cycle is primitive (not a power of
//! a shorter word) and the prefix is minimal (no rotation of the cycle can be
//! absorbed into it). Two canonical lassos denote the same infinite word iff
//! they are structurally equal.

use std::collections::BTreeSet;
use std::fmt;

use crate::alphabet::{Action, Direction, Interaction, Participant, Symbol};

/// A word over symbol type `S`: either finite or an ultimately periodic
/// infinite word.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Word<S> {
    Finite(Vec<S>),
    Lasso { prefix: Vec<S>, cycle: Vec<S> },
}

/// Result of comparing two words under the prefix order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrefixOrder {
    Equal,
    StrictPrefixOfSecond,
    StrictPrefixOfFirst,
    Incomparable,
}

fn primitive_period<S: Eq>(cycle: &[S]) -> usize {
    let n = cycle.len();
    for d in 1..=n {
        if n.is_multiple_of(d) && (d..n).all(|i| cycle[i] == cycle[i % d]) {
            return d;
        }
    }
    n
}

impl<S: Symbol> Word<S> {
    pub fn empty() -> Self {
        Word::Finite(Vec::new())
    }

    pub fn finite(symbols: Vec<S>) -> Self {
        Word::Finite(symbols)
    }

    /// Builds a canonical lasso. The cycle must be non-empty.
    pub fn lasso(prefix: Vec<S>, cycle: Vec<S>) -> Self {
        assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
        let mut prefix = prefix;
        let mut cycle = cycle;
        let d = primitive_period(&cycle);
        cycle.truncate(d);
        while let Some(last) = prefix.last() {
            if last == cycle.last().unwrap() {
                prefix.pop();
                let s = cycle.pop().unwrap();
                cycle.insert(0, s);
            } else {
                break;
            }
        }
        Word::Lasso { prefix, cycle }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Word::Finite(_))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Word::Finite(v) if v.is_empty())
    }

    /// Length of a finite word; `None` for lassos.
    pub fn len(&self) -> Option<usize> {
        match self {
            Word::Finite(v) => Some(v.len()),
            Word::Lasso { .. } => None,
        }
    }

    /// Symbol at position `i` (defined for every `i` on lassos).
    pub fn at(&self, i: usize) -> Option<&S> {
        match self {
            Word::Finite(v) => v.get(i),
            Word::Lasso { prefix, cycle } => {
                if i < prefix.len() {
                    prefix.get(i)
                } else {
                    cycle.get((i - prefix.len()) % cycle.len())
                }
            }
        }
    }

    /// The finite unrolling `u · v^k` of a lasso; finite words unroll to
    /// themselves.
    pub fn unroll(&self, k: usize) -> Vec<S> {
        match self {
            Word::Finite(v) => v.clone(),
            Word::Lasso { prefix, cycle } => {
                let mut out = prefix.clone();
                for _ in 0..k {
                    out.extend(cycle.iter().cloned());
                }
                out
            }
        }
    }

    /// All symbols occurring in the word (prefix and cycle for lassos).
    pub fn symbols(&self) -> impl Iterator<Item = &S> {
        match self {
            Word::Finite(v) => v.iter().chain([].iter()),
            Word::Lasso { prefix, cycle } => prefix.iter().chain(cycle.iter()),
        }
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = BTreeSet::new();
        for s in self.symbols() {
            let [a, b] = s.participants();
            out.insert(a.clone());
            out.insert(b.clone());
        }
        out
    }

    /// Concatenation; by convention `w · w' = w` when `w` is infinite.
    pub fn concat(&self, rest: &Word<S>) -> Word<S> {
        match self {
            Word::Lasso { .. } => self.clone(),
            Word::Finite(u) => match rest {
                Word::Finite(v) => {
                    let mut out = u.clone();
                    out.extend(v.iter().cloned());
                    Word::Finite(out)
                }
                Word::Lasso { prefix, cycle } => {
                    let mut p = u.clone();
                    p.extend(prefix.iter().cloned());
                    Word::lasso(p, cycle.clone())
                }
            },
        }
    }

    pub fn extended(&self, s: S) -> Word<S> {
        self.concat(&Word::Finite(vec![s]))
    }

    /// Decides equality and the prefix order. Both words must be canonical
    /// (guaranteed by the constructors). A lasso is never a strict prefix of
    /// anything.
    pub fn compare(&self, other: &Word<S>) -> PrefixOrder {
        match (self, other) {
            (Word::Finite(u), Word::Finite(v)) => {
                if u == v {
                    PrefixOrder::Equal
                } else if v.len() > u.len() && v[..u.len()] == u[..] {
                    PrefixOrder::StrictPrefixOfSecond
                } else if u.len() > v.len() && u[..v.len()] == v[..] {
                    PrefixOrder::StrictPrefixOfFirst
                } else {
                    PrefixOrder::Incomparable
                }
            }
            (Word::Finite(u), w @ Word::Lasso { .. }) => {
                if (0..u.len()).all(|i| w.at(i) == Some(&u[i])) {
                    PrefixOrder::StrictPrefixOfSecond
                } else {
                    PrefixOrder::Incomparable
                }
            }
            (w @ Word::Lasso { .. }, Word::Finite(v)) => {
                if (0..v.len()).all(|i| w.at(i) == Some(&v[i])) {
                    PrefixOrder::StrictPrefixOfFirst
                } else {
                    PrefixOrder::Incomparable
                }
            }
            (Word::Lasso { .. }, Word::Lasso { .. }) => {
                if self == other {
                    PrefixOrder::Equal
                } else {
                    PrefixOrder::Incomparable
                }
            }
        }
    }

    /// True iff `self` is a (not necessarily strict) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Word<S>) -> bool {
        matches!(
            self.compare(other),
            PrefixOrder::Equal | PrefixOrder::StrictPrefixOfSecond
        )
    }

    /// Ordering used for deterministic reports: finite words before lassos,
    /// shorter before longer, then lexicographic. This is not the prefix
    /// order.
    pub fn report_cmp(&self, other: &Word<S>) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (Word::Finite(u), Word::Finite(v)) => u.len().cmp(&v.len()).then_with(|| u.cmp(v)),
            (Word::Finite(_), Word::Lasso { .. }) => Ordering::Less,
            (Word::Lasso { .. }, Word::Finite(_)) => Ordering::Greater,
            (
                Word::Lasso {
                    prefix: p1,
                    cycle: c1,
                },
                Word::Lasso {
                    prefix: p2,
                    cycle: c2,
                },
            ) => (p1.len() + c1.len(), p1, c1).cmp(&(p2.len() + c2.len(), p2, c2)),
        }
    }
}

impl<S: Symbol> PartialOrd for Word<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Symbol> Ord for Word<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.report_cmp(other)
    }
}

impl<S: Symbol> fmt::Display for Word<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<S: fmt::Display>(symbols: &[S]) -> String {
            symbols
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" . ")
        }
        match self {
            Word::Finite(v) => f.write_str(&join(v)),
            Word::Lasso { prefix, cycle } => {
                if prefix.is_empty() {
                    write!(f, "( {} )^w", join(cycle))
                } else {
                    write!(f, "{} ( {} )^w", join(prefix), join(cycle))
                }
            }
        }
    }
}

/// Projection of one interaction on a participant: the send on the sender,
/// the receive on the receiver, nothing elsewhere.
pub fn project_symbol(a: &Interaction, p: &Participant) -> Option<Action> {
    let kind = if &a.sender == p {
        Direction::Send
    } else if &a.receiver == p {
        Direction::Receive
    } else {
        return None;
    };
    Some(Action {
        sender: a.sender.clone(),
        receiver: a.receiver.clone(),
        msg: a.msg.clone(),
        kind,
    })
}

/// Homomorphic extension of [`project_symbol`] to words. A lasso whose cycle
/// projects entirely to nothing collapses to the finite projection of its
/// prefix.
pub fn project_word(w: &Word<Interaction>, p: &Participant) -> Word<Action> {
    let proj = |symbols: &[Interaction]| -> Vec<Action> {
        symbols
            .iter()
            .filter_map(|a| project_symbol(a, p))
            .collect()
    };
    match w {
        Word::Finite(v) => Word::Finite(proj(v)),
        Word::Lasso { prefix, cycle } => {
            let cycle_p = proj(cycle);
            if cycle_p.is_empty() {
                Word::Finite(proj(prefix))
            } else {
                Word::lasso(proj(prefix), cycle_p)
            }
        }
    }
}

/// Two interactions are independent iff their participant sets are disjoint.
pub fn independent(a: &Interaction, b: &Interaction) -> bool {
    !a.involves(&b.sender) && !a.involves(&b.receiver)
}

/// Participants of a set of words.
pub fn participants_of_words<'a, S: Symbol + 'a>(
    words: impl IntoIterator<Item = &'a Word<S>>,
) -> BTreeSet<Participant> {
    let mut out = BTreeSet::new();
    for w in words {
        out.extend(w.participants());
    }
    out
}
