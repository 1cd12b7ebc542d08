//! Residual-state graph of the synchronous semantics of a system.
//!
//! A state is the tuple of per-participant residuals; an interaction
//! `X->Y:m` advances the residuals of `X` and `Y` and leaves the others in
//! place. Exploration is breadth-first with interactions in ascending order,
//! so the parent chain of each state spells its shortest, lexicographically
//! least witness word.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::alphabet::{Action, Interaction, Participant};
use crate::word::{project_word, Word};
use crate::Verdict;

use super::pos::{PosAutomaton, PosSet};
use super::{ExplicitSystem, LangError, PropWitness, PropertyName, WitnessWord};

pub(crate) struct SemProduct {
    pub participants: Vec<Participant>,
    pub autos: Vec<PosAutomaton<Action>>,
    pub alphabet: Vec<Interaction>,
    /// projections of each alphabet symbol on each participant index
    actions: Vec<Vec<Option<Action>>>,
    pub states: Vec<Vec<PosSet>>,
    pub edges: Vec<Vec<(usize, usize)>>,
    parents: Vec<Option<(usize, usize)>>,
}

impl SemProduct {
    pub fn build(sys: &ExplicitSystem, budget: usize) -> Result<Self, LangError> {
        let participants: Vec<Participant> = sys.participants().cloned().collect();
        let autos: Vec<PosAutomaton<Action>> = participants
            .iter()
            .map(|p| PosAutomaton::new(sys.part(p).expect("participant")))
            .collect();
        let alphabet = sys.alphabet();
        let actions: Vec<Vec<Option<Action>>> = alphabet
            .iter()
            .map(|a| {
                participants
                    .iter()
                    .map(|p| crate::word::project_symbol(a, p))
                    .collect()
            })
            .collect();

        let initial: Vec<PosSet> = autos.iter().map(|a| a.initial()).collect();
        let mut index: HashMap<Vec<PosSet>, usize> = HashMap::new();
        index.insert(initial.clone(), 0);
        let mut states = vec![initial];
        let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut parents = vec![None];
        let mut queue = VecDeque::from([0usize]);
        while let Some(sid) = queue.pop_front() {
            for (aidx, projections) in actions.iter().enumerate() {
                let state = &states[sid];
                let mut next = Vec::with_capacity(state.len());
                let mut ok = true;
                for (pidx, residual) in state.iter().enumerate() {
                    match &projections[pidx] {
                        None => next.push(residual.clone()),
                        Some(act) => match autos[pidx].step(residual, act) {
                            Some(r) => next.push(r),
                            None => {
                                ok = false;
                                break;
                            }
                        },
                    }
                }
                if !ok {
                    continue;
                }
                let dst = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        if id >= budget {
                            return Err(LangError::BudgetExceeded(budget));
                        }
                        index.insert(next.clone(), id);
                        states.push(next);
                        edges.push(Vec::new());
                        parents.push(Some((sid, aidx)));
                        queue.push_back(id);
                        id
                    }
                };
                edges[sid].push((aidx, dst));
            }
        }
        Ok(SemProduct {
            participants,
            autos,
            alphabet,
            actions,
            states,
            edges,
            parents,
        })
    }

    /// Shortest, lexicographically least word reaching `sid`.
    pub fn word_to(&self, sid: usize) -> Word<Interaction> {
        let mut symbols = Vec::new();
        let mut cur = sid;
        while let Some((parent, aidx)) = self.parents[cur] {
            symbols.push(self.alphabet[aidx].clone());
            cur = parent;
        }
        symbols.reverse();
        Word::Finite(symbols)
    }

    pub fn is_dead(&self, sid: usize) -> bool {
        self.edges[sid].is_empty()
    }

    /// The participant's residual at `sid` admits a further action.
    pub fn participant_enabled(&self, sid: usize, pidx: usize) -> bool {
        !self.autos[pidx].is_maximal(&self.states[sid][pidx])
    }

    fn involves(&self, aidx: usize, pidx: usize) -> bool {
        self.actions[aidx][pidx].is_some()
    }

    /// States from which a transition involving the participant is reachable.
    fn can_reach_involving(&self, pidx: usize) -> Vec<bool> {
        let mut reach = vec![false; self.states.len()];
        let mut queue = VecDeque::new();
        for (sid, out) in self.edges.iter().enumerate() {
            if out.iter().any(|&(aidx, _)| self.involves(aidx, pidx)) {
                reach[sid] = true;
                queue.push_back(sid);
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); self.states.len()];
        for (sid, out) in self.edges.iter().enumerate() {
            for &(_, dst) in out {
                rev[dst].push(sid);
            }
        }
        while let Some(sid) = queue.pop_front() {
            for &src in &rev[sid] {
                if !reach[src] {
                    reach[src] = true;
                    queue.push_back(src);
                }
            }
        }
        reach
    }

    /// States with an infinite continuation avoiding the participant: states
    /// that reach, inside the participant-free subgraph, a cycle of that
    /// subgraph.
    fn can_starve(&self, pidx: usize) -> Vec<bool> {
        let n = self.states.len();
        let free_edges: Vec<Vec<usize>> = (0..n)
            .map(|sid| {
                self.edges[sid]
                    .iter()
                    .filter(|&&(aidx, _)| !self.involves(aidx, pidx))
                    .map(|&(_, dst)| dst)
                    .collect()
            })
            .collect();
        let mut on_cycle = vec![false; n];
        for s in 0..n {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<usize> = free_edges[s].iter().copied().collect();
            while let Some(t) = queue.pop_front() {
                if t == s {
                    on_cycle[s] = true;
                    break;
                }
                if seen.insert(t) {
                    queue.extend(free_edges[t].iter().copied());
                }
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (sid, out) in free_edges.iter().enumerate() {
            for &dst in out {
                rev[dst].push(sid);
            }
        }
        let mut starve = on_cycle.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| starve[s]).collect();
        while let Some(sid) = queue.pop_front() {
            for &src in &rev[sid] {
                if !starve[src] {
                    starve[src] = true;
                    queue.push_back(src);
                }
            }
        }
        starve
    }

    /// Maximal words of the semantics when they form a finite set.
    pub fn maximal_words(&self, budget: usize) -> Result<Vec<Word<Interaction>>, LangError> {
        let n = self.states.len();
        let mut on_cycle = vec![false; n];
        for (s, out) in self.edges.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<usize> = out.iter().map(|&(_, d)| d).collect();
            while let Some(t) = queue.pop_front() {
                if t == s {
                    on_cycle[s] = true;
                    break;
                }
                if seen.insert(t) {
                    queue.extend(self.edges[t].iter().map(|&(_, d)| d));
                }
            }
        }
        for (s, cyc) in on_cycle.iter().enumerate() {
            if *cyc && self.edges[s].len() != 1 {
                return Err(LangError::MaximalSetNotFinite);
            }
        }
        let cycle_word = |entry: usize| -> Vec<Interaction> {
            let mut word = Vec::new();
            let mut cur = entry;
            loop {
                let (aidx, dst) = self.edges[cur][0];
                word.push(self.alphabet[aidx].clone());
                cur = dst;
                if cur == entry {
                    return word;
                }
            }
        };
        let mut out = BTreeSet::new();
        let mut work = 0usize;
        let mut stack = vec![(0usize, Vec::<Interaction>::new())];
        while let Some((sid, word)) = stack.pop() {
            work += 1;
            if work > budget {
                return Err(LangError::BudgetExceeded(budget));
            }
            if on_cycle[sid] {
                out.insert(Word::lasso(word, cycle_word(sid)));
                continue;
            }
            if self.edges[sid].is_empty() {
                out.insert(Word::Finite(word));
                continue;
            }
            for &(aidx, dst) in &self.edges[sid] {
                let mut w2 = word.clone();
                w2.push(self.alphabet[aidx].clone());
                stack.push((dst, w2));
            }
        }
        Ok(out.into_iter().collect())
    }

    pub fn check_property(
        &self,
        sys: &ExplicitSystem,
        property: PropertyName,
    ) -> Result<Verdict<PropWitness>, LangError> {
        match property {
            PropertyName::HA => Ok(self.check_harmonicity(sys)),
            PropertyName::DF => Ok(self.check_deadlock_freedom()),
            PropertyName::LF => Ok(self.check_lock_freedom()),
            PropertyName::SF => Ok(self.check_starvation_freedom()),
            PropertyName::SLF => match self.check_deadlock_freedom() {
                Verdict::Violated(mut w) => {
                    w.property = PropertyName::SLF;
                    w.note = format!("deadlock: {}", w.note);
                    Ok(Verdict::Violated(w))
                }
                Verdict::Holds => match self.check_starvation_freedom() {
                    Verdict::Violated(mut w) => {
                        w.property = PropertyName::SLF;
                        w.note = format!("starvation: {}", w.note);
                        Ok(Verdict::Violated(w))
                    }
                    Verdict::Holds => Ok(Verdict::Holds),
                },
            },
        }
    }

    fn non_maximal_note(&self, sid: usize, pidx: usize) -> String {
        let v = project_word(&self.word_to(sid), &self.participants[pidx]);
        format!("projection {} not maximal", render_local(&v))
    }

    fn check_deadlock_freedom(&self) -> Verdict<PropWitness> {
        for sid in 0..self.states.len() {
            if !self.is_dead(sid) {
                continue;
            }
            for pidx in 0..self.participants.len() {
                if self.participant_enabled(sid, pidx) {
                    return Verdict::Violated(PropWitness {
                        property: PropertyName::DF,
                        participant: self.participants[pidx].clone(),
                        word: WitnessWord::Global(self.word_to(sid)),
                        note: self.non_maximal_note(sid, pidx),
                    });
                }
            }
        }
        Verdict::Holds
    }

    fn check_lock_freedom(&self) -> Verdict<PropWitness> {
        for pidx in 0..self.participants.len() {
            let reach = self.can_reach_involving(pidx);
            for (sid, ok) in reach.iter().enumerate() {
                if self.participant_enabled(sid, pidx) && !ok {
                    return Verdict::Violated(PropWitness {
                        property: PropertyName::LF,
                        participant: self.participants[pidx].clone(),
                        word: WitnessWord::Global(self.word_to(sid)),
                        note: format!(
                            "{}; no continuation involves the participant",
                            self.non_maximal_note(sid, pidx)
                        ),
                    });
                }
            }
        }
        Verdict::Holds
    }

    fn check_starvation_freedom(&self) -> Verdict<PropWitness> {
        for pidx in 0..self.participants.len() {
            let starve = self.can_starve(pidx);
            for (sid, starving) in starve.iter().enumerate() {
                if self.participant_enabled(sid, pidx) && *starving {
                    return Verdict::Violated(PropWitness {
                        property: PropertyName::SF,
                        participant: self.participants[pidx].clone(),
                        word: WitnessWord::Global(self.word_to(sid)),
                        note: format!(
                            "{}; an infinite continuation avoids the participant",
                            self.non_maximal_note(sid, pidx)
                        ),
                    });
                }
            }
        }
        Verdict::Holds
    }

    /// Harmonicity: every local word of every participant is the projection
    /// of some semantics word. Checked as a language inclusion between the
    /// participant's residual automaton and the product relabelled by
    /// projection.
    fn check_harmonicity(&self, sys: &ExplicitSystem) -> Verdict<PropWitness> {
        for (pidx, p) in self.participants.iter().enumerate() {
            let local = PosAutomaton::new(sys.part(p).expect("participant"));
            // epsilon closure: product moves not involving the participant
            let closure = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
                let mut out = set.clone();
                let mut queue: VecDeque<usize> = set.iter().copied().collect();
                while let Some(sid) = queue.pop_front() {
                    for &(aidx, dst) in &self.edges[sid] {
                        if !self.involves(aidx, pidx) && out.insert(dst) {
                            queue.push_back(dst);
                        }
                    }
                }
                out
            };
            let start = (local.initial(), closure(&BTreeSet::from([0usize])));
            let mut seen = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([(start, Vec::<Action>::new())]);
            while let Some(((lres, tracked), word)) = queue.pop_front() {
                for a in local.enabled(&lres) {
                    let lnext = local.step(&lres, &a).expect("enabled");
                    let mut moved = BTreeSet::new();
                    for &sid in &tracked {
                        for &(aidx, dst) in &self.edges[sid] {
                            if self.actions[aidx][pidx].as_ref() == Some(&a) {
                                moved.insert(dst);
                            }
                        }
                    }
                    let mut w2 = word.clone();
                    w2.push(a.clone());
                    if moved.is_empty() {
                        return Verdict::Violated(PropWitness {
                            property: PropertyName::HA,
                            participant: p.clone(),
                            word: WitnessWord::Local(Word::Finite(w2)),
                            note: "local word is the projection of no semantics word".to_owned(),
                        });
                    }
                    let next = (lnext, closure(&moved));
                    if seen.insert(next.clone()) {
                        queue.push_back((next, w2));
                    }
                }
            }
        }
        Verdict::Holds
    }
}

fn render_local(w: &Word<Action>) -> String {
    if w.is_empty() {
        "(empty)".to_owned()
    } else {
        w.to_string()
    }
}
