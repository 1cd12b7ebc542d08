//! Deterministic residual automaton of an explicit language.
//!
//! A position identifies how far a word has progressed inside one generator;
//! the residual state of a word is the set of positions compatible with it.
//! Stepping is deterministic per symbol, membership is non-emptiness of the
//! residual, and a residual is maximal (admits no extension) exactly when no
//! position offers a next symbol.

use std::collections::BTreeSet;

use crate::alphabet::Symbol;
use crate::word::Word;

use super::ExplicitLanguage;

/// (generator index, offset). For a finite generator of length n the offsets
/// are 0..=n, where n has no next symbol. For a lasso the offsets are
/// 0..prefix+cycle and advancing from the last cycle offset wraps around.
pub(crate) type Pos = (usize, usize);

pub(crate) type PosSet = BTreeSet<Pos>;

#[derive(Debug, Clone)]
pub(crate) struct PosAutomaton<S: Symbol> {
    gens: Vec<Word<S>>,
}

impl<S: Symbol> PosAutomaton<S> {
    pub fn new(lang: &ExplicitLanguage<S>) -> Self {
        PosAutomaton {
            gens: lang.generators().to_vec(),
        }
    }

    pub fn initial(&self) -> PosSet {
        (0..self.gens.len()).map(|g| (g, 0)).collect()
    }

    pub fn next_symbol(&self, (g, off): Pos) -> Option<&S> {
        self.gens[g].at(off)
    }

    fn advance(&self, (g, off): Pos) -> Pos {
        match &self.gens[g] {
            Word::Finite(_) => (g, off + 1),
            Word::Lasso { prefix, cycle } => {
                let next = off + 1;
                if next >= prefix.len() + cycle.len() {
                    (g, prefix.len())
                } else {
                    (g, next)
                }
            }
        }
    }

    /// Deterministic step; `None` when the symbol extends no generator (the
    /// extended word is not in the language).
    pub fn step(&self, set: &PosSet, symbol: &S) -> Option<PosSet> {
        let out: PosSet = set
            .iter()
            .filter(|&&pos| self.next_symbol(pos) == Some(symbol))
            .map(|&pos| self.advance(pos))
            .collect();
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }

    pub fn enabled(&self, set: &PosSet) -> BTreeSet<S> {
        set.iter()
            .filter_map(|&pos| self.next_symbol(pos).cloned())
            .collect()
    }

    /// True when the residual admits no extension, i.e. the word read so far
    /// is maximal in the language.
    pub fn is_maximal(&self, set: &PosSet) -> bool {
        set.iter().all(|&pos| self.next_symbol(pos).is_none())
    }
}
