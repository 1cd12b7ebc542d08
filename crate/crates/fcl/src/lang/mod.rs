//! Explicit, generator-based global and local languages and the systems they
//! form. This module is the brute-force reference side of the toolkit: every
//! check here works directly from the definitions on the explicit
//! representation, independently of the automata procedures in
//! [`crate::chaut`].
//!
//! An explicit language is given by a finite antichain of maximal words
//! (finite words or lassos); the denoted language is the prefix closure of
//! that set. Such languages are always standard-or-continuous: if a lasso is
//! present, any infinite word all of whose prefixes belong to the language
//! must eventually follow one of the lasso generators and therefore equal it.

mod cui;
mod pos;
mod product;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::alphabet::{Action, Interaction, Participant, Symbol};
use crate::word::{independent, participants_of_words, project_word, PrefixOrder, Word};
use crate::Verdict;

pub(crate) use product::SemProduct;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LangError {
    BudgetExceeded(usize),
    /// The set of maximal words of the semantics is not finite, so it cannot
    /// be returned as an explicit antichain.
    MaximalSetNotFinite,
    /// A projection produced a local language containing only the empty
    /// word, which no communicating system admits.
    DegenerateParticipant(Participant),
    /// The language has no participants to project on.
    EmptyLanguage,
    NotLocal {
        participant: Participant,
        action: Action,
    },
    EmptyLocalLanguage(Participant),
    UnknownPeer {
        participant: Participant,
        peer: Participant,
    },
}

impl fmt::Display for LangError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangError::BudgetExceeded(n) => write!(f, "state budget of {n} exceeded"),
            LangError::MaximalSetNotFinite => {
                write!(f, "the semantics has infinitely many maximal words")
            }
            LangError::DegenerateParticipant(p) => {
                write!(f, "participant `{p}` would get the local language {{epsilon}}")
            }
            LangError::EmptyLanguage => write!(f, "language has no participants"),
            LangError::NotLocal { participant, action } => {
                write!(f, "action `{action}` does not have subject `{participant}`")
            }
            LangError::EmptyLocalLanguage(p) => {
                write!(f, "local language of `{p}` admits no communication")
            }
            LangError::UnknownPeer { participant, peer } => write!(
                f,
                "local language of `{participant}` mentions `{peer}`, which is not part of the system"
            ),
        }
    }
}

impl std::error::Error for LangError {}

/// Prefix-closed language given by a finite antichain of maximal generator
/// words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitLanguage<S: Symbol> {
    generators: Vec<Word<S>>,
}

impl<S: Symbol> ExplicitLanguage<S> {
    /// Normalises the given words into an antichain: duplicates and words
    /// that are prefixes of other generators are dropped.
    pub fn from_generators(words: impl IntoIterator<Item = Word<S>>) -> Self {
        let all: BTreeSet<Word<S>> = words.into_iter().collect();
        let generators = all
            .iter()
            .filter(|w| {
                !all.iter()
                    .any(|other| w.compare(other) == PrefixOrder::StrictPrefixOfSecond)
            })
            .cloned()
            .collect();
        ExplicitLanguage { generators }
    }

    /// The maximal words of the language; by the antichain invariant these
    /// are exactly the generators.
    pub fn generators(&self) -> &[Word<S>] {
        &self.generators
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        participants_of_words(&self.generators)
    }

    /// Membership in the prefix closure of the generators.
    pub fn contains(&self, w: &Word<S>) -> bool {
        self.generators.iter().any(|g| w.is_prefix_of(g))
    }

    pub fn all_symbols(&self) -> BTreeSet<S> {
        self.generators
            .iter()
            .flat_map(|g| g.symbols().cloned())
            .collect()
    }

    pub fn has_lasso_generator(&self) -> bool {
        self.generators.iter().any(|g| !g.is_finite())
    }

    /// All finite members of length at most `max_len`.
    pub fn members_bounded(&self, max_len: usize) -> BTreeSet<Word<S>> {
        let mut out = BTreeSet::new();
        for g in &self.generators {
            let symbols = match g {
                Word::Finite(v) => v.clone(),
                Word::Lasso { prefix, cycle } => {
                    let reps = (max_len.saturating_sub(prefix.len())) / cycle.len() + 1;
                    g.unroll(reps)
                }
            };
            let limit = symbols.len().min(max_len);
            for k in 0..=limit {
                out.insert(Word::Finite(symbols[..k].to_vec()));
            }
        }
        out
    }

    /// All finite members; defined only when every generator is finite.
    pub(crate) fn all_finite_members(&self) -> BTreeSet<Word<S>> {
        assert!(!self.has_lasso_generator());
        let max = self
            .generators
            .iter()
            .filter_map(|g| g.len())
            .max()
            .unwrap_or(0);
        self.members_bounded(max)
    }
}

// ---- verdict witnesses ----------------------------------------------------

/// Violation of closure under unknown information: `w1 . alpha`, `w2 . alpha`
/// and `w` belong to the language, `w` agrees with `w1` on the sender and
/// with `w2` on the receiver of `alpha`, yet `w . alpha` does not belong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuiWitness {
    pub alpha: Interaction,
    pub w1: Word<Interaction>,
    pub w2: Word<Interaction>,
    pub w: Word<Interaction>,
}

/// Violation of branch-awareness: both words are maximal and the projection
/// of `w1` on `participant` is a strict prefix of the projection of `w2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaWitness {
    pub participant: Participant,
    pub w1: Word<Interaction>,
    pub w2: Word<Interaction>,
}

/// The five communication properties of systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PropertyName {
    /// Harmonicity: every local word is realised by some semantics word.
    HA,
    /// Deadlock-freedom.
    DF,
    /// Lock-freedom.
    LF,
    /// Starvation-freedom.
    SF,
    /// Strong lock-freedom (equivalently SF and DF).
    SLF,
}

impl PropertyName {
    pub const ALL: [PropertyName; 5] = [
        PropertyName::HA,
        PropertyName::DF,
        PropertyName::LF,
        PropertyName::SF,
        PropertyName::SLF,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PropertyName::HA => "HA",
            PropertyName::DF => "DF",
            PropertyName::LF => "LF",
            PropertyName::SF => "SF",
            PropertyName::SLF => "SLF",
        }
    }
}

impl fmt::Display for PropertyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Word carried by a property witness: a semantics word, or a local word for
/// harmonicity violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessWord {
    Global(Word<Interaction>),
    Local(Word<Action>),
}

impl fmt::Display for WitnessWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessWord::Global(w) => w.fmt(f),
            WitnessWord::Local(w) => w.fmt(f),
        }
    }
}

/// Violation of one of the communication properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropWitness {
    pub property: PropertyName,
    pub participant: Participant,
    pub word: WitnessWord,
    pub note: String,
}

/// A communicating system: one local language per participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitSystem {
    parts: BTreeMap<Participant, ExplicitLanguage<Action>>,
}

impl ExplicitSystem {
    pub fn new(parts: BTreeMap<Participant, ExplicitLanguage<Action>>) -> Result<Self, LangError> {
        for (p, lang) in &parts {
            let mut non_empty = false;
            for g in lang.generators() {
                for a in g.symbols() {
                    non_empty = true;
                    if a.subject() != p {
                        return Err(LangError::NotLocal {
                            participant: p.clone(),
                            action: a.clone(),
                        });
                    }
                    for peer in a.participants() {
                        if !parts.contains_key(peer) {
                            return Err(LangError::UnknownPeer {
                                participant: p.clone(),
                                peer: peer.clone(),
                            });
                        }
                    }
                }
            }
            if !non_empty {
                return Err(LangError::EmptyLocalLanguage(p.clone()));
            }
        }
        Ok(ExplicitSystem { parts })
    }

    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.parts.keys()
    }

    pub fn part(&self, p: &Participant) -> Option<&ExplicitLanguage<Action>> {
        self.parts.get(p)
    }

    pub fn parts(&self) -> &BTreeMap<Participant, ExplicitLanguage<Action>> {
        &self.parts
    }

    /// Interactions `X->Y:m` whose send occurs in the language of `X` and
    /// whose receive occurs in the language of `Y`.
    pub fn alphabet(&self) -> Vec<Interaction> {
        let mut out = BTreeSet::new();
        for (p, lang) in &self.parts {
            for a in lang.all_symbols() {
                if a.subject() != p || a.kind != crate::alphabet::Direction::Send {
                    continue;
                }
                let recv = Action {
                    kind: crate::alphabet::Direction::Receive,
                    ..a.clone()
                };
                if let Some(peer) = self.parts.get(&a.receiver) {
                    if peer.all_symbols().contains(&recv) {
                        out.insert(Interaction {
                            sender: a.sender.clone(),
                            receiver: a.receiver.clone(),
                            msg: a.msg.clone(),
                        });
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Synchronous semantics membership: all participants of `w` belong to
    /// the system and every projection of `w` belongs to the corresponding
    /// local language.
    pub fn semantics_contains(&self, w: &Word<Interaction>) -> bool {
        w.participants().iter().all(|p| self.parts.contains_key(p))
            && self
                .parts
                .iter()
                .all(|(p, lang)| lang.contains(&project_word(w, p)))
    }

    /// All finite semantics words of length at most `max_len`, by
    /// breadth-first extension over the system's alphabet.
    pub fn enumerate_semantics(&self, max_len: usize) -> Vec<Word<Interaction>> {
        let alphabet = self.alphabet();
        let mut out = vec![Word::empty()];
        let mut frontier = vec![Word::<Interaction>::empty()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for a in &alphabet {
                    let w2 = w.extended(a.clone());
                    if self.semantics_contains(&w2) {
                        next.push(w2);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        out
    }

    /// The maximal words of the synchronous semantics, when they form a
    /// finite set: the finite words without any single-interaction extension
    /// plus the lassos traced by terminal cycles of the residual-state graph.
    pub fn maximal_semantics_words(
        &self,
        budget: usize,
    ) -> Result<Vec<Word<Interaction>>, LangError> {
        SemProduct::build(self, budget)?.maximal_words(budget)
    }

    /// Checks one of the five communication properties.
    pub fn check_property(
        &self,
        property: PropertyName,
        budget: usize,
    ) -> Result<Verdict<PropWitness>, LangError> {
        SemProduct::build(self, budget)?.check_property(self, property)
    }
}

/// Explicit-language operations specific to global languages.
impl ExplicitLanguage<Interaction> {
    /// Projects the language on every participant, yielding the communicating
    /// system whose local languages are generated by the projected
    /// generators.
    pub fn project(&self) -> Result<ExplicitSystem, LangError> {
        let participants = self.participants();
        if participants.is_empty() {
            return Err(LangError::EmptyLanguage);
        }
        let mut parts = BTreeMap::new();
        for p in participants {
            let lang = ExplicitLanguage::from_generators(
                self.generators.iter().map(|g| project_word(g, &p)),
            );
            if lang.generators().iter().all(|g| g.is_empty()) {
                return Err(LangError::DegenerateParticipant(p));
            }
            parts.insert(p, lang);
        }
        ExplicitSystem::new(parts)
    }

    /// A participant occurring in every interaction of every generator, if
    /// any. The existence of such a hub implies closure under unknown
    /// information.
    pub fn hub_participant(&self) -> Option<Participant> {
        let mut candidates: Option<BTreeSet<Participant>> = None;
        for g in &self.generators {
            for s in g.symbols() {
                let here: BTreeSet<Participant> = s.participants().into_iter().cloned().collect();
                candidates = Some(match candidates {
                    None => here,
                    Some(c) => c.intersection(&here).cloned().collect(),
                });
                if candidates.as_ref().is_some_and(BTreeSet::is_empty) {
                    return None;
                }
            }
        }
        // vacuously true on languages without interactions
        match candidates {
            None => self
                .participants()
                .into_iter()
                .next()
                .or_else(|| Participant::new("any").ok()),
            Some(c) => c.into_iter().next(),
        }
    }

    /// Checks closure under unknown information. The quantification ranges
    /// over the finite members only: an infinite `w` satisfies
    /// `w . alpha = w` by the concatenation convention and never violates
    /// the condition.
    pub fn check_cui(&self, budget: usize) -> Result<Verdict<CuiWitness>, LangError> {
        cui::check_cui(self, budget)
    }

    /// Checks branch-awareness: no participant may see the projection of one
    /// maximal word as a strict prefix of the projection of another.
    pub fn check_ba(&self) -> Verdict<BaWitness> {
        for x in self.participants() {
            for (i, g1) in self.generators.iter().enumerate() {
                for g2 in &self.generators[i + 1..] {
                    let p1 = project_word(g1, &x);
                    let p2 = project_word(g2, &x);
                    match p1.compare(&p2) {
                        PrefixOrder::StrictPrefixOfSecond => {
                            return Verdict::Violated(BaWitness {
                                participant: x,
                                w1: g1.clone(),
                                w2: g2.clone(),
                            });
                        }
                        PrefixOrder::StrictPrefixOfFirst => {
                            return Verdict::Violated(BaWitness {
                                participant: x,
                                w1: g2.clone(),
                                w2: g1.clone(),
                            });
                        }
                        PrefixOrder::Equal | PrefixOrder::Incomparable => {}
                    }
                }
            }
        }
        Verdict::Holds
    }

    /// Bounded concurrency-closure check: every finite member of length at
    /// most `max_len` must stay in the language under any single adjacent
    /// swap of independent interactions.
    pub fn is_concurrency_closed_bounded(
        &self,
        max_len: usize,
    ) -> Verdict<(Word<Interaction>, Word<Interaction>)> {
        for w in self.members_bounded(max_len) {
            let Word::Finite(symbols) = &w else { continue };
            for i in 0..symbols.len().saturating_sub(1) {
                if independent(&symbols[i], &symbols[i + 1]) {
                    let mut swapped = symbols.clone();
                    swapped.swap(i, i + 1);
                    let swapped = Word::Finite(swapped);
                    if !self.contains(&swapped) {
                        return Verdict::Violated((w.clone(), swapped));
                    }
                }
            }
        }
        Verdict::Holds
    }
}

/// Mazurkiewicz-trace equivalence of two finite interaction words, decided by
/// the equal-projections characterisation.
pub fn concurrency_equiv(w1: &Word<Interaction>, w2: &Word<Interaction>) -> bool {
    assert!(w1.is_finite() && w2.is_finite());
    let mut ptps = w1.participants();
    ptps.extend(w2.participants());
    ptps.iter()
        .all(|p| project_word(w1, p) == project_word(w2, p))
}
