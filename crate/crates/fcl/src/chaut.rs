//! Choreography automata: deterministic interaction-labelled automata, their
//! projection to CFSM systems, and the decision procedures for closure under
//! unknown information and branch-awareness.
//!
//! Projection relabels every transition by its projection on the participant
//! (yielding epsilon where the participant is absent) and determinises the
//! result; the subset states of the determinised machines are what the CUI
//! search inspects.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::alphabet::{Action, Interaction, Participant};
use crate::cfsm::{Cfsm, CfsmError, CfsmSystem};
use crate::fsa::{Determinised, Fsa};
use crate::lang::{BaWitness, CuiWitness};
use crate::word::{project_symbol, project_word, PrefixOrder, Word};
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChautError {
    DeterminismViolation { state: String, label: String },
    EpsilonLabel { state: String },
    DegenerateParticipant(Participant),
    Machine(CfsmError),
}

impl fmt::Display for ChautError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChautError::DeterminismViolation { state, label } => {
                write!(
                    f,
                    "two transitions labelled `{label}` leave state `{state}`"
                )
            }
            ChautError::EpsilonLabel { state } => {
                write!(f, "epsilon transition from state `{state}`")
            }
            ChautError::DegenerateParticipant(p) => {
                write!(f, "participant `{p}` projects to the language {{epsilon}}")
            }
            ChautError::Machine(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ChautError {}

/// A deterministic finite-state automaton over interactions, all states
/// accepting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChorAutomaton {
    fsa: Fsa<Interaction>,
}

/// Outcome of comparing an automaton with the semantics of its projection on
/// bounded words. Completeness (every word of the automaton is admitted by
/// the projection) always holds and is re-checked rather than assumed; a
/// correctness counterexample is a semantics word the automaton rejects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealisationReport {
    pub complete: bool,
    pub correct: Verdict<Word<Interaction>>,
}

impl ChorAutomaton {
    pub fn new(fsa: Fsa<Interaction>) -> Result<Self, ChautError> {
        let mut seen = BTreeSet::new();
        for (src, label, _) in fsa.transitions() {
            match label {
                None => {
                    return Err(ChautError::EpsilonLabel { state: src.clone() });
                }
                Some(l) => {
                    if !seen.insert((src.clone(), l.clone())) {
                        return Err(ChautError::DeterminismViolation {
                            state: src.clone(),
                            label: l.to_string(),
                        });
                    }
                }
            }
        }
        Ok(ChorAutomaton { fsa })
    }

    pub fn fsa(&self) -> &Fsa<Interaction> {
        &self.fsa
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = BTreeSet::new();
        for l in self.fsa.labels() {
            out.insert(l.sender.clone());
            out.insert(l.receiver.clone());
        }
        out
    }

    /// The intermediate automaton for one participant: each transition is
    /// relabelled by its projection, epsilon where the participant does not
    /// occur.
    fn intermediate(&self, p: &Participant) -> Fsa<Action> {
        Fsa::new(
            self.fsa.initial(),
            self.fsa.transitions().map(|(src, label, dst)| {
                let l = label.as_ref().expect("deterministic");
                (src.clone(), project_symbol(l, p), dst.clone())
            }),
            self.fsa.states().map(str::to_owned),
        )
    }

    fn det_projection(&self, p: &Participant) -> Determinised<Action> {
        self.intermediate(p).determinise()
    }

    /// Projects the automaton to a system of CFSMs, one deterministic local
    /// machine per participant.
    pub fn project(&self) -> Result<CfsmSystem, ChautError> {
        let mut machines = BTreeMap::new();
        for p in self.participants() {
            let det = self.det_projection(&p);
            if det.fsa.transitions().next().is_none() {
                return Err(ChautError::DegenerateParticipant(p));
            }
            let machine = Cfsm::new(p.clone(), det.fsa).map_err(ChautError::Machine)?;
            machines.insert(p, machine);
        }
        CfsmSystem::new(machines).map_err(ChautError::Machine)
    }

    /// Decides closure under unknown information by searching, for each
    /// interaction `alpha = X->Y:m`, the reachable triples
    /// `(q, Q_X, Q_Y)` where `q` tracks a word `w`, `Q_X` is the subset
    /// state of the determinised `X`-projection after the `X`-projection of
    /// `w`, and `Q_Y` likewise for `Y`. A violation is a triple where `q`
    /// does not enable `alpha` but some member of `Q_X` and some member of
    /// `Q_Y` do.
    pub fn decide_cui(&self) -> Verdict<CuiWitness> {
        let labels: Vec<Interaction> = self.fsa.labels().into_iter().collect();
        let mut projections: BTreeMap<Participant, Determinised<Action>> = BTreeMap::new();
        for p in self.participants() {
            projections.insert(p.clone(), self.det_projection(&p));
        }
        let enables = |q: &str, alpha: &Interaction| self.fsa.step(q, alpha).is_some();
        for alpha in &labels {
            let x = &alpha.sender;
            let y = &alpha.receiver;
            let det_x = &projections[x];
            let det_y = &projections[y];
            type Triple = (String, String, String);
            let start: Triple = (
                self.fsa.initial().to_owned(),
                det_x.fsa.initial().to_owned(),
                det_y.fsa.initial().to_owned(),
            );
            let mut seen = BTreeSet::from([start.clone()]);
            let mut order = Vec::new();
            let mut parent: BTreeMap<Triple, (Triple, Interaction)> = BTreeMap::new();
            let mut queue = VecDeque::from([start]);
            while let Some(t) = queue.pop_front() {
                order.push(t.clone());
                let (q, dx, dy) = &t;
                for (label, q2) in self.fsa.edges_from(q) {
                    let beta = label.as_ref().expect("deterministic");
                    let dx2 = match project_symbol(beta, x) {
                        None => dx.clone(),
                        Some(a) => det_x
                            .fsa
                            .step(dx, &a)
                            .expect("projection accepts projected words")
                            .to_owned(),
                    };
                    let dy2 = match project_symbol(beta, y) {
                        None => dy.clone(),
                        Some(a) => det_y
                            .fsa
                            .step(dy, &a)
                            .expect("projection accepts projected words")
                            .to_owned(),
                    };
                    let next = (q2.to_owned(), dx2, dy2);
                    if seen.insert(next.clone()) {
                        parent.insert(next.clone(), (t.clone(), beta.clone()));
                        queue.push_back(next);
                    }
                }
            }
            let member_enables = |det: &Determinised<Action>, dname: &str| {
                det.subsets[dname].iter().any(|q| enables(q, alpha))
            };
            let violating: Vec<&Triple> = order
                .iter()
                .filter(|(q, dx, dy)| {
                    !enables(q, alpha) && member_enables(det_x, dx) && member_enables(det_y, dy)
                })
                .collect();
            if violating.is_empty() {
                continue;
            }
            let mut candidates = Vec::new();
            for t in violating {
                let mut symbols = Vec::new();
                let mut cur = t.clone();
                while let Some((p, beta)) = parent.get(&cur) {
                    symbols.push(beta.clone());
                    cur = p.clone();
                }
                symbols.reverse();
                let w = Word::Finite(symbols);
                let w1 = self
                    .shortest_matching(x, &w, alpha)
                    .expect("witnessed by the triple");
                let w2 = self
                    .shortest_matching(y, &w, alpha)
                    .expect("witnessed by the triple");
                candidates.push((w1, w2, w));
            }
            let (w1, w2, w) = candidates.into_iter().min().expect("non-empty");
            let witness = CuiWitness {
                alpha: alpha.clone(),
                w1,
                w2,
                w,
            };
            debug_assert!(
                self.fsa.accepts(&witness.w)
                    && self
                        .fsa
                        .accepts(&witness.w1.extended(witness.alpha.clone()))
                    && self
                        .fsa
                        .accepts(&witness.w2.extended(witness.alpha.clone()))
                    && !self.fsa.accepts(&witness.w.extended(witness.alpha.clone()))
            );
            return Verdict::Violated(witness);
        }
        Verdict::Holds
    }

    /// Shortest accepted word whose projection on `p` equals that of `w` and
    /// that ends in a state enabling `alpha`.
    fn shortest_matching(
        &self,
        p: &Participant,
        w: &Word<Interaction>,
        alpha: &Interaction,
    ) -> Option<Word<Interaction>> {
        let projection = match project_word(w, p) {
            Word::Finite(v) => v,
            Word::Lasso { .. } => return None,
        };
        let start = (self.fsa.initial().to_owned(), 0usize);
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start, Vec::<Interaction>::new())]);
        while let Some(((q, matched), word)) = queue.pop_front() {
            if matched == projection.len() && self.fsa.step(&q, alpha).is_some() {
                return Some(Word::Finite(word));
            }
            for (label, dst) in self.fsa.edges_from(&q) {
                let beta = label.as_ref().expect("deterministic");
                let next = match project_symbol(beta, p) {
                    None => (dst.to_owned(), matched),
                    Some(a) => {
                        if matched < projection.len() && a == projection[matched] {
                            (dst.to_owned(), matched + 1)
                        } else {
                            continue;
                        }
                    }
                };
                if seen.insert(next.clone()) {
                    let mut w2 = word.clone();
                    w2.push(beta.clone());
                    queue.push_back((next, w2));
                }
            }
        }
        None
    }

    /// Decides branch-awareness. For every participant `X` and every pair of
    /// states `(p, q)` (including `p = q`) the search asks whether
    ///   (a) `p` and `q` are simultaneously reachable by two words with the
    ///       same `X`-projection (twin product synchronising on
    ///       `X`-actions),
    ///   (b) from `p` some maximal word has an empty `X`-projection (an
    ///       `X`-free path to a state with no outgoing transitions at all,
    ///       or an `X`-free cycle), and
    ///   (c) from `q` some `X`-involving transition is reachable.
    /// Such a pair yields two maximal words whose `X`-projections are in the
    /// strict prefix relation.
    pub fn decide_ba(&self) -> Verdict<BaWitness> {
        for x in self.participants() {
            if let Verdict::Violated(w) = self.decide_ba_for(&x) {
                return Verdict::Violated(w);
            }
        }
        Verdict::Holds
    }

    fn decide_ba_for(&self, x: &Participant) -> Verdict<BaWitness> {
        let states: Vec<String> = self.fsa.states().map(str::to_owned).collect();
        let dead: BTreeSet<&str> = states
            .iter()
            .map(String::as_str)
            .filter(|q| self.fsa.edges_from(q).next().is_none())
            .collect();
        let xfree = |q: &str| -> Vec<(Interaction, String)> {
            self.fsa
                .edges_from(q)
                .filter(|(l, _)| !l.as_ref().expect("deterministic").involves(x))
                .map(|(l, d)| (l.clone().expect("deterministic"), d.to_owned()))
                .collect()
        };
        // states on a cycle of the X-free subgraph
        let mut on_xfree_cycle: BTreeSet<String> = BTreeSet::new();
        for q in &states {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<String> = xfree(q).into_iter().map(|(_, d)| d).collect();
            while let Some(t) = queue.pop_front() {
                if &t == q {
                    on_xfree_cycle.insert(q.clone());
                    break;
                }
                if seen.insert(t.clone()) {
                    queue.extend(xfree(&t).into_iter().map(|(_, d)| d));
                }
            }
        }
        // (b): reachability, inside the X-free subgraph, of a fully dead
        // state or of an X-free cycle
        let mut maximal_empty: BTreeSet<String> = states
            .iter()
            .filter(|q| dead.contains(q.as_str()) || on_xfree_cycle.contains(*q))
            .cloned()
            .collect();
        loop {
            let mut grown = false;
            for q in &states {
                if !maximal_empty.contains(q)
                    && xfree(q).iter().any(|(_, d)| maximal_empty.contains(d))
                {
                    maximal_empty.insert(q.clone());
                    grown = true;
                }
            }
            if !grown {
                break;
            }
        }
        // (c): reachability of an X-involving transition
        let mut sees_x: BTreeSet<String> = states
            .iter()
            .filter(|q| {
                self.fsa
                    .edges_from(q)
                    .any(|(l, _)| l.as_ref().expect("deterministic").involves(x))
            })
            .cloned()
            .collect();
        loop {
            let mut grown = false;
            for q in &states {
                if !sees_x.contains(q) && self.fsa.edges_from(q).any(|(_, d)| sees_x.contains(d)) {
                    sees_x.insert(q.clone());
                    grown = true;
                }
            }
            if !grown {
                break;
            }
        }
        // (a): twin product synchronising on X-actions
        type Pair = (String, String);
        let start: Pair = (self.fsa.initial().to_owned(), self.fsa.initial().to_owned());
        enum Step {
            Left(Interaction),
            Right(Interaction),
            Both(Interaction, Interaction),
        }
        let mut parent: BTreeMap<Pair, (Pair, Step)> = BTreeMap::new();
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        let mut order = Vec::new();
        while let Some(pair) = queue.pop_front() {
            order.push(pair.clone());
            let (p, q) = &pair;
            let push = |next: Pair,
                        step: Step,
                        seen: &mut BTreeSet<Pair>,
                        queue: &mut VecDeque<Pair>,
                        parent: &mut BTreeMap<Pair, (Pair, Step)>| {
                if seen.insert(next.clone()) {
                    parent.insert(next.clone(), (pair.clone(), step));
                    queue.push_back(next);
                }
            };
            for (l, dst) in self.fsa.edges_from(p) {
                let beta = l.as_ref().expect("deterministic");
                if !beta.involves(x) {
                    push(
                        (dst.to_owned(), q.clone()),
                        Step::Left(beta.clone()),
                        &mut seen,
                        &mut queue,
                        &mut parent,
                    );
                }
            }
            for (l, dst) in self.fsa.edges_from(q) {
                let beta = l.as_ref().expect("deterministic");
                if !beta.involves(x) {
                    push(
                        (p.clone(), dst.to_owned()),
                        Step::Right(beta.clone()),
                        &mut seen,
                        &mut queue,
                        &mut parent,
                    );
                }
            }
            for (l1, d1) in self.fsa.edges_from(p) {
                let b1 = l1.as_ref().expect("deterministic");
                let Some(a1) = project_symbol(b1, x) else {
                    continue;
                };
                for (l2, d2) in self.fsa.edges_from(q) {
                    let b2 = l2.as_ref().expect("deterministic");
                    if project_symbol(b2, x).as_ref() == Some(&a1) {
                        push(
                            (d1.to_owned(), d2.to_owned()),
                            Step::Both(b1.clone(), b2.clone()),
                            &mut seen,
                            &mut queue,
                            &mut parent,
                        );
                    }
                }
            }
        }
        for pair in order {
            let (p, q) = &pair;
            if !maximal_empty.contains(p) || !sees_x.contains(q) {
                continue;
            }
            // reconstruct the two stems
            let mut stem1 = Vec::new();
            let mut stem2 = Vec::new();
            let mut cur = pair.clone();
            while let Some((prev, step)) = parent.get(&cur) {
                match step {
                    Step::Left(b) => stem1.push(b.clone()),
                    Step::Right(b) => stem2.push(b.clone()),
                    Step::Both(b1, b2) => {
                        stem1.push(b1.clone());
                        stem2.push(b2.clone());
                    }
                }
                cur = prev.clone();
            }
            stem1.reverse();
            stem2.reverse();
            let w1 = self.extend_avoiding(Word::Finite(stem1), p, x, &dead, &on_xfree_cycle);
            let w2 = self.extend_through(Word::Finite(stem2), q, x, &dead);
            debug_assert_eq!(
                project_word(&w1, x).compare(&project_word(&w2, x)),
                PrefixOrder::StrictPrefixOfSecond
            );
            return Verdict::Violated(BaWitness {
                participant: x.clone(),
                w1,
                w2,
            });
        }
        Verdict::Holds
    }

    /// Extends a stem from `p` into a maximal word with an empty
    /// `X`-projection: preferably to a dead state, otherwise around an
    /// `X`-free cycle.
    fn extend_avoiding(
        &self,
        stem: Word<Interaction>,
        p: &str,
        x: &Participant,
        dead: &BTreeSet<&str>,
        on_xfree_cycle: &BTreeSet<String>,
    ) -> Word<Interaction> {
        let xfree_path = |targets: &dyn Fn(&str) -> bool| -> Option<(Vec<Interaction>, String)> {
            let mut seen = BTreeSet::from([p.to_owned()]);
            let mut queue = VecDeque::from([(p.to_owned(), Vec::new())]);
            while let Some((q, word)) = queue.pop_front() {
                if targets(&q) {
                    return Some((word, q));
                }
                for (l, dst) in self.fsa.edges_from(&q) {
                    let beta = l.as_ref().expect("deterministic");
                    if beta.involves(x) {
                        continue;
                    }
                    if seen.insert(dst.to_owned()) {
                        let mut w2 = word.clone();
                        w2.push(beta.clone());
                        queue.push_back((dst.to_owned(), w2));
                    }
                }
            }
            None
        };
        if let Some((path, _)) = xfree_path(&|q: &str| dead.contains(q)) {
            return stem.concat(&Word::Finite(path));
        }
        let (path, entry) = xfree_path(&|q: &str| on_xfree_cycle.contains(q))
            .expect("condition (b) established a target");
        // shortest X-free cycle through the entry state
        let mut seen = BTreeSet::from([entry.clone()]);
        let mut queue: VecDeque<(String, Vec<Interaction>)> = VecDeque::new();
        for (l, dst) in self.fsa.edges_from(&entry) {
            let beta = l.as_ref().expect("deterministic");
            if !beta.involves(x) {
                queue.push_back((dst.to_owned(), vec![beta.clone()]));
            }
        }
        while let Some((q, word)) = queue.pop_front() {
            if q == entry {
                let prefix = match stem.concat(&Word::Finite(path)) {
                    Word::Finite(v) => v,
                    Word::Lasso { .. } => unreachable!(),
                };
                return Word::lasso(prefix, word);
            }
            for (l, dst) in self.fsa.edges_from(&q) {
                let beta = l.as_ref().expect("deterministic");
                if beta.involves(x) {
                    continue;
                }
                if dst == entry || seen.insert(dst.to_owned()) {
                    let mut w2 = word.clone();
                    w2.push(beta.clone());
                    queue.push_back((dst.to_owned(), w2));
                }
            }
        }
        unreachable!("entry state lies on an X-free cycle")
    }

    /// Extends a stem from `q` through a reachable `X`-involving transition
    /// and on to some maximal word.
    fn extend_through(
        &self,
        stem: Word<Interaction>,
        q: &str,
        x: &Participant,
        dead: &BTreeSet<&str>,
    ) -> Word<Interaction> {
        // shortest path to a state with an X-involving edge, then that edge
        let mut seen = BTreeSet::from([q.to_owned()]);
        let mut queue = VecDeque::from([(q.to_owned(), Vec::<Interaction>::new())]);
        let (mid, prefix) = loop {
            let (s, word) = queue
                .pop_front()
                .expect("condition (c) established a target");
            if let Some((l, dst)) = self
                .fsa
                .edges_from(&s)
                .find(|(l, _)| l.as_ref().expect("deterministic").involves(x))
            {
                let mut w2 = word.clone();
                w2.push(l.as_ref().expect("deterministic").clone());
                break (dst.to_owned(), w2);
            }
            for (l, dst) in self.fsa.edges_from(&s) {
                if seen.insert(dst.to_owned()) {
                    let mut w2 = word.clone();
                    w2.push(l.as_ref().expect("deterministic").clone());
                    queue.push_back((dst.to_owned(), w2));
                }
            }
        };
        // continue to any maximal word: a dead state if reachable, else the
        // shortest reachable cycle
        let mut seen = BTreeSet::from([mid.clone()]);
        let mut queue = VecDeque::from([(mid.clone(), Vec::<Interaction>::new())]);
        let mut to_dead: Option<Vec<Interaction>> = None;
        while let Some((s, word)) = queue.pop_front() {
            if dead.contains(s.as_str()) {
                to_dead = Some(word);
                break;
            }
            for (l, dst) in self.fsa.edges_from(&s) {
                if seen.insert(dst.to_owned()) {
                    let mut w2 = word.clone();
                    w2.push(l.as_ref().expect("deterministic").clone());
                    queue.push_back((dst.to_owned(), w2));
                }
            }
        }
        let stem_mid = stem.concat(&Word::Finite(prefix));
        if let Some(path) = to_dead {
            return stem_mid.concat(&Word::Finite(path));
        }
        // no dead state reachable: every run is infinite, follow the least
        // edges until a state repeats
        let mut seen_states = vec![mid.clone()];
        let mut cur = mid;
        let mut tail: Vec<Interaction> = Vec::new();
        loop {
            let (l, dst) = self.fsa.edges_from(&cur).next().expect("no dead state");
            tail.push(l.as_ref().expect("deterministic").clone());
            if let Some(at) = seen_states.iter().position(|s| s == dst) {
                let mut full = match stem_mid {
                    Word::Finite(v) => v,
                    Word::Lasso { .. } => unreachable!(),
                };
                let cycle = tail.split_off(at);
                full.extend(tail);
                return Word::lasso(full, cycle);
            }
            seen_states.push(dst.to_owned());
            cur = dst.to_owned();
        }
    }

    /// Compares the language of the automaton with the synchronous semantics
    /// of its projection on all finite words and lassos within `max_len`.
    pub fn check_realisation(&self, max_len: usize) -> Result<RealisationReport, ChautError> {
        let product = self.project()?.sync_product();
        let own = self.fsa.enumerate(max_len, usize::MAX);
        let complete = own
            .finite
            .iter()
            .chain(own.lassos.iter())
            .all(|w| product.accepts(w));
        let sem = product.enumerate(max_len, usize::MAX);
        let counterexample = sem
            .finite
            .iter()
            .chain(sem.lassos.iter())
            .find(|w| !self.fsa.accepts(w));
        Ok(RealisationReport {
            complete,
            correct: match counterexample {
                None => Verdict::Holds,
                Some(w) => Verdict::Violated(w.clone()),
            },
        })
    }
}
