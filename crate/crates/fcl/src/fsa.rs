//! Finite-state automata with every state accepting.
//!
//! The language of an automaton is the set of finite words labelling runs
//! from the initial state, together with the infinite words labelling
//! infinite runs (the Buchi reading where all states accept). With all states
//! accepting the language is prefix-closed and continuous: an infinite word
//! is accepted as soon as all of its finite prefixes are.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::alphabet::Symbol;
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FsaError {
    UnknownState(String),
    BudgetExceeded(usize),
    /// The language has no finite antichain of maximal generators.
    NotFinitelyGenerated,
}

impl fmt::Display for FsaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FsaError::UnknownState(q) => write!(f, "transition mentions unknown state `{q}`"),
            FsaError::BudgetExceeded(n) => write!(f, "state budget of {n} exceeded"),
            FsaError::NotFinitelyGenerated => {
                write!(f, "language has no finite set of maximal generators")
            }
        }
    }
}

impl std::error::Error for FsaError {}

/// A finite-state automaton; `None` labels are epsilon transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fsa<L> {
    states: BTreeSet<String>,
    initial: String,
    transitions: BTreeSet<(String, Option<L>, String)>,
}

/// Witness run for the acceptance of an ultimately periodic word.
#[derive(Debug, Clone)]
pub struct LassoRun<L> {
    pub stem: Vec<(String, L, String)>,
    pub cycle: Vec<(String, L, String)>,
}

/// Result of subset determinisation. Each state of `fsa` is named after its
/// member set (`{q0,q1}`) and `subsets` records that set, which the
/// choreography-automata procedures inspect.
#[derive(Debug, Clone)]
pub struct Determinised<L> {
    pub fsa: Fsa<L>,
    pub subsets: BTreeMap<String, BTreeSet<String>>,
}

/// Bounded enumeration of an automaton's language.
#[derive(Debug, Clone)]
pub struct Enumeration<L> {
    pub finite: Vec<Word<L>>,
    pub lassos: Vec<Word<L>>,
}

impl<L: Symbol> Fsa<L> {
    /// Builds an automaton from its initial state and transitions. States are
    /// collected from transition endpoints; `extra_states` adds isolated
    /// ones.
    pub fn new(
        initial: &str,
        transitions: impl IntoIterator<Item = (String, Option<L>, String)>,
        extra_states: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut states: BTreeSet<String> = extra_states.into_iter().collect();
        states.insert(initial.to_owned());
        let transitions: BTreeSet<_> = transitions.into_iter().collect();
        for (src, _, dst) in &transitions {
            states.insert(src.clone());
            states.insert(dst.clone());
        }
        Fsa {
            states,
            initial: initial.to_owned(),
            transitions,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = &str> {
        self.states.iter().map(String::as_str)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn transitions(&self) -> impl Iterator<Item = &(String, Option<L>, String)> {
        self.transitions.iter()
    }

    pub fn edges_from<'a>(
        &'a self,
        q: &'a str,
    ) -> impl Iterator<Item = (&'a Option<L>, &'a str)> + 'a {
        self.transitions
            .iter()
            .filter(move |(src, _, _)| src == q)
            .map(|(_, l, dst)| (l, dst.as_str()))
    }

    pub fn labels(&self) -> BTreeSet<L> {
        self.transitions
            .iter()
            .filter_map(|(_, l, _)| l.clone())
            .collect()
    }

    /// No epsilon labels and no two transitions from the same state with the
    /// same label.
    pub fn is_deterministic(&self) -> bool {
        let mut seen = BTreeSet::new();
        for (src, l, _) in &self.transitions {
            match l {
                None => return false,
                Some(l) => {
                    if !seen.insert((src, l)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Unique successor under a label, for deterministic automata.
    pub fn step(&self, q: &str, label: &L) -> Option<&str> {
        self.transitions
            .iter()
            .find(|(src, l, _)| src == q && l.as_ref() == Some(label))
            .map(|(_, _, dst)| dst.as_str())
    }

    /// Restriction to the states reachable from the initial one.
    pub fn reachable(&self) -> Fsa<L> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([self.initial.clone()]);
        seen.insert(self.initial.clone());
        while let Some(q) = queue.pop_front() {
            for (_, dst) in self.edges_from(&q) {
                if seen.insert(dst.to_owned()) {
                    queue.push_back(dst.to_owned());
                }
            }
        }
        Fsa {
            states: seen.clone(),
            initial: self.initial.clone(),
            transitions: self
                .transitions
                .iter()
                .filter(|(src, _, dst)| seen.contains(src) && seen.contains(dst))
                .cloned()
                .collect(),
        }
    }

    fn epsilon_closure(&self, from: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = from.clone();
        let mut queue: VecDeque<String> = from.iter().cloned().collect();
        while let Some(q) = queue.pop_front() {
            for (l, dst) in self.edges_from(&q) {
                if l.is_none() && out.insert(dst.to_owned()) {
                    queue.push_back(dst.to_owned());
                }
            }
        }
        out
    }

    fn subset_name(set: &BTreeSet<String>) -> String {
        let mut s = String::from("{");
        for (i, q) in set.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(q);
        }
        s.push('}');
        s
    }

    /// Subset construction with epsilon closure. Preserves the accepted
    /// language, including the ultimately periodic words: with all states
    /// accepting, an infinite word is accepted iff all its finite prefixes
    /// are, and determinisation preserves the finite-word language.
    pub fn determinise(&self) -> Determinised<L> {
        let labels = self.labels();
        let start = self.epsilon_closure(&BTreeSet::from([self.initial.clone()]));
        let start_name = Self::subset_name(&start);
        let mut subsets = BTreeMap::from([(start_name.clone(), start.clone())]);
        let mut transitions = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(set) = queue.pop_front() {
            let name = Self::subset_name(&set);
            for l in &labels {
                let mut targets = BTreeSet::new();
                for q in &set {
                    for (lab, dst) in self.edges_from(q) {
                        if lab.as_ref() == Some(l) {
                            targets.insert(dst.to_owned());
                        }
                    }
                }
                if targets.is_empty() {
                    continue;
                }
                let closed = self.epsilon_closure(&targets);
                let dst_name = Self::subset_name(&closed);
                if !subsets.contains_key(&dst_name) {
                    subsets.insert(dst_name.clone(), closed.clone());
                    queue.push_back(closed);
                }
                transitions.insert((name.clone(), Some(l.clone()), dst_name));
            }
        }
        Determinised {
            fsa: Fsa::new(&start_name, transitions, subsets.keys().cloned()),
            subsets,
        }
    }

    /// Word acceptance; finite words by run existence, lassos by running the
    /// prefix and pumping the cycle until a state repeats.
    pub fn accepts(&self, w: &Word<L>) -> bool {
        if self.is_deterministic() {
            self.accepts_det(w)
        } else {
            self.determinise().fsa.accepts_det(w)
        }
    }

    fn accepts_det(&self, w: &Word<L>) -> bool {
        match w {
            Word::Finite(symbols) => {
                let mut q = self.initial.as_str();
                for s in symbols {
                    match self.step(q, s) {
                        Some(next) => q = next,
                        None => return false,
                    }
                }
                true
            }
            Word::Lasso { prefix, cycle } => {
                let mut q = self.initial.as_str();
                for s in prefix {
                    match self.step(q, s) {
                        Some(next) => q = next,
                        None => return false,
                    }
                }
                let mut boundaries = BTreeSet::from([q.to_owned()]);
                loop {
                    for s in cycle {
                        match self.step(q, s) {
                            Some(next) => q = next,
                            None => return false,
                        }
                    }
                    if !boundaries.insert(q.to_owned()) {
                        return true;
                    }
                }
            }
        }
    }

    /// Witness run for an accepted lasso, on a deterministic automaton.
    pub fn find_lasso_run(&self, prefix: &[L], cycle: &[L]) -> Option<LassoRun<L>> {
        assert!(self.is_deterministic());
        let mut run = Vec::new();
        let mut q = self.initial.clone();
        for s in prefix {
            let next = self.step(&q, s)?.to_owned();
            run.push((q.clone(), s.clone(), next.clone()));
            q = next;
        }
        let mut boundaries = vec![(q.clone(), run.len())];
        loop {
            for s in cycle {
                let next = self.step(&q, s)?.to_owned();
                run.push((q.clone(), s.clone(), next.clone()));
                q = next;
            }
            if let Some((_, at)) = boundaries.iter().find(|(b, _)| *b == q) {
                let cycle_part = run.split_off(*at);
                return Some(LassoRun {
                    stem: run,
                    cycle: cycle_part,
                });
            }
            boundaries.push((q.clone(), run.len()));
        }
    }

    /// Synchronous product driven by the labels of `self`: on a transition
    /// labelled `l`, the `other` automaton takes label `sync(l)` or stays put
    /// when `sync(l)` is `None`. With the identity map this is language
    /// intersection on finite words. `other` must be epsilon-free.
    pub fn product_by<M: Symbol>(&self, other: &Fsa<M>, sync: impl Fn(&L) -> Option<M>) -> Fsa<L> {
        assert!(
            other.transitions.iter().all(|(_, l, _)| l.is_some()),
            "product requires an epsilon-free second component"
        );
        let name = |p: &str, q: &str| format!("({p},{q})");
        let start = (self.initial.clone(), other.initial.clone());
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        let mut transitions = BTreeSet::new();
        while let Some((p, q)) = queue.pop_front() {
            for (l, p2) in self.edges_from(&p) {
                let moves: Vec<String> = match l.as_ref().map(&sync) {
                    // epsilon transition of self: other stays
                    None | Some(None) => vec![q.clone()],
                    Some(Some(m)) => other
                        .edges_from(&q)
                        .filter(|(lab, _)| lab.as_ref() == Some(&m))
                        .map(|(_, dst)| dst.to_owned())
                        .collect(),
                };
                for q2 in moves {
                    let pair = (p2.to_owned(), q2.clone());
                    transitions.insert((name(&p, &q), l.clone(), name(p2, &q2)));
                    if seen.insert(pair.clone()) {
                        queue.push_back(pair);
                    }
                }
            }
        }
        Fsa::new(
            &name(&self.initial, &other.initial),
            transitions,
            seen.iter().map(|(p, q)| name(p, q)),
        )
    }

    /// All accepted finite words of length at most `max_len`, plus canonical
    /// lassos assembled from simple cycles reachable within the same bound
    /// (at most `max_lassos` of them).
    pub fn enumerate(&self, max_len: usize, max_lassos: usize) -> Enumeration<L> {
        let det = if self.is_deterministic() {
            self.clone()
        } else {
            self.determinise().fsa
        };
        let mut finite = Vec::new();
        let mut queue = VecDeque::from([(det.initial.clone(), Vec::<L>::new())]);
        let mut stems: BTreeMap<String, Vec<L>> = BTreeMap::new();
        stems.insert(det.initial.clone(), Vec::new());
        while let Some((q, word)) = queue.pop_front() {
            finite.push(Word::Finite(word.clone()));
            if word.len() == max_len {
                continue;
            }
            for (l, dst) in det.edges_from(&q) {
                let l = l.clone().expect("determinised");
                let mut w2 = word.clone();
                w2.push(l);
                stems.entry(dst.to_owned()).or_insert_with(|| w2.clone());
                queue.push_back((dst.to_owned(), w2));
            }
        }
        finite.sort();

        let mut lassos = BTreeSet::new();
        if max_lassos > 0 {
            for (state, stem) in &stems {
                if stem.len() >= max_len {
                    continue;
                }
                det.simple_cycles_from(state, max_len - stem.len(), &mut |cycle| {
                    lassos.insert(Word::lasso(stem.clone(), cycle.to_vec()));
                });
            }
        }
        Enumeration {
            finite,
            lassos: lassos.into_iter().take(max_lassos).collect(),
        }
    }

    /// Calls `emit` with the label word of every simple cycle through `start`
    /// of length at most `max_len`.
    fn simple_cycles_from(&self, start: &str, max_len: usize, emit: &mut impl FnMut(&[L])) {
        fn go<L: Symbol>(
            fsa: &Fsa<L>,
            start: &str,
            q: &str,
            path: &mut Vec<L>,
            visited: &mut BTreeSet<String>,
            max_len: usize,
            emit: &mut impl FnMut(&[L]),
        ) {
            if path.len() >= max_len {
                return;
            }
            for (l, dst) in fsa.edges_from(q) {
                let l = l.clone().expect("epsilon-free");
                path.push(l);
                if dst == start {
                    emit(path);
                } else if visited.insert(dst.to_owned()) {
                    go(fsa, start, dst, path, visited, max_len, emit);
                    visited.remove(dst);
                }
                path.pop();
            }
        }
        let mut visited = BTreeSet::from([start.to_owned()]);
        go(
            self,
            start,
            start,
            &mut Vec::new(),
            &mut visited,
            max_len,
            emit,
        );
    }

    /// The antichain of maximal words generating the language, when it is
    /// finite: one finite word per run ending in a state without outgoing
    /// transitions, one lasso per run entering a terminal cycle. Fails with
    /// [`FsaError::NotFinitelyGenerated`] when some state on a cycle has more
    /// than one outgoing transition (the maximal-word set is infinite then).
    pub fn maximal_generators(&self, budget: usize) -> Result<Vec<Word<L>>, FsaError> {
        let det = if self.is_deterministic() {
            self.reachable()
        } else {
            self.determinise().fsa
        };
        // states lying on some cycle
        let mut on_cycle = BTreeSet::new();
        for q in &det.states {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<String> =
                det.edges_from(q).map(|(_, d)| d.to_owned()).collect();
            while let Some(s) = queue.pop_front() {
                if &s == q {
                    on_cycle.insert(q.clone());
                    break;
                }
                if seen.insert(s.clone()) {
                    queue.extend(det.edges_from(&s).map(|(_, d)| d.to_owned()));
                }
            }
        }
        for q in &on_cycle {
            if det.edges_from(q).count() != 1 {
                return Err(FsaError::NotFinitelyGenerated);
            }
        }
        let cycle_word = |entry: &str| -> Vec<L> {
            let mut word = Vec::new();
            let mut q = entry.to_owned();
            loop {
                let (l, dst) = det.edges_from(&q).next().expect("cycle edge");
                word.push(l.clone().expect("deterministic"));
                q = dst.to_owned();
                if q == entry {
                    return word;
                }
            }
        };
        let mut out = BTreeSet::new();
        let mut work = 0usize;
        let mut stack = vec![(det.initial.clone(), Vec::<L>::new())];
        while let Some((q, word)) = stack.pop() {
            work += 1;
            if work > budget {
                return Err(FsaError::BudgetExceeded(budget));
            }
            if on_cycle.contains(&q) {
                out.insert(Word::lasso(word, cycle_word(&q)));
                continue;
            }
            let edges: Vec<_> = det.edges_from(&q).collect();
            if edges.is_empty() {
                out.insert(Word::Finite(word));
                continue;
            }
            for (l, dst) in edges {
                let mut w2 = word.clone();
                w2.push(l.clone().expect("deterministic"));
                stack.push((dst.to_owned(), w2));
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Deterministic DOT rendering; the initial state is marked with an entry
    /// arrow.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("digraph \"{name}\" {{\n"));
        out.push_str("  rankdir=LR;\n");
        out.push_str("  __init [shape=point, label=\"\"];\n");
        for q in &self.states {
            out.push_str(&format!("  \"{q}\" [shape=circle];\n"));
        }
        out.push_str(&format!("  __init -> \"{}\";\n", self.initial));
        for (src, l, dst) in &self.transitions {
            let label = match l {
                Some(l) => l.to_string(),
                None => "eps".to_owned(),
            };
            out.push_str(&format!("  \"{src}\" -> \"{dst}\" [label=\"{label}\"];\n"));
        }
        out.push_str("}\n");
        out
    }
}
