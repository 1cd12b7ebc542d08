//! Closure under unknown information, decided on the explicit
//! representation.
//!
//! When every generator is finite the language has finitely many members and
//! the definition is checked by direct enumeration. With lasso generators
//! the finite members are grouped by residual state and the check runs on
//! the residual graph, pairing each word with the sets of residuals
//! reachable under the same sender-side and receiver-side projections.
//!
//! Reported witnesses are deterministic: among all violations of the least
//! interaction `alpha`, the one minimising `(w1, w2, w)` in the
//! shortest-then-lexicographic word order (for the residual path, with `w`
//! ranging over per-state canonical words).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::alphabet::{Action, Interaction, Participant};
use crate::word::{project_symbol, project_word, Word};
use crate::Verdict;

use super::pos::{PosAutomaton, PosSet};
use super::{CuiWitness, ExplicitLanguage, LangError};

pub(super) fn check_cui(
    lang: &ExplicitLanguage<Interaction>,
    budget: usize,
) -> Result<Verdict<CuiWitness>, LangError> {
    if lang.has_lasso_generator() {
        check_cui_residual(lang, budget)
    } else {
        Ok(check_cui_enumerated(lang))
    }
}

/// Direct enumeration over all finite members.
pub(super) fn check_cui_enumerated(lang: &ExplicitLanguage<Interaction>) -> Verdict<CuiWitness> {
    let members: Vec<Word<Interaction>> = lang.all_finite_members().into_iter().collect();
    let alphabet: BTreeSet<Interaction> = lang.all_symbols();
    for alpha in alphabet {
        let x = alpha.sender.clone();
        let y = alpha.receiver.clone();
        // candidate w1/w2 grouped by the relevant projection
        let mut by_x: BTreeMap<Word<Action>, Vec<&Word<Interaction>>> = BTreeMap::new();
        let mut by_y: BTreeMap<Word<Action>, Vec<&Word<Interaction>>> = BTreeMap::new();
        for w in &members {
            if lang.contains(&w.extended(alpha.clone())) {
                by_x.entry(project_word(w, &x)).or_default().push(w);
                by_y.entry(project_word(w, &y)).or_default().push(w);
            }
        }
        let violating: Vec<&Word<Interaction>> = members
            .iter()
            .filter(|w| {
                !lang.contains(&w.extended(alpha.clone()))
                    && by_x.contains_key(&project_word(w, &x))
                    && by_y.contains_key(&project_word(w, &y))
            })
            .collect();
        if violating.is_empty() {
            continue;
        }
        let w1 = violating
            .iter()
            .map(|w| by_x[&project_word(w, &x)][0])
            .min()
            .expect("non-empty");
        let v1: Vec<&Word<Interaction>> = violating
            .iter()
            .copied()
            .filter(|w| project_word(w, &x) == project_word(w1, &x))
            .collect();
        let w2 = v1
            .iter()
            .map(|w| by_y[&project_word(w, &y)][0])
            .min()
            .expect("non-empty");
        let w = v1
            .into_iter()
            .filter(|w| project_word(w, &y) == project_word(w2, &y))
            .min()
            .expect("non-empty");
        let witness = CuiWitness {
            alpha,
            w1: (*w1).clone(),
            w2: (*w2).clone(),
            w: w.clone(),
        };
        debug_assert!(witness_members_of(lang, &witness));
        return Verdict::Violated(witness);
    }
    Verdict::Holds
}

/// Witness words must belong to the language under test.
fn witness_members_of(lang: &ExplicitLanguage<Interaction>, w: &CuiWitness) -> bool {
    lang.contains(&w.w)
        && lang.contains(&w.w1.extended(w.alpha.clone()))
        && lang.contains(&w.w2.extended(w.alpha.clone()))
        && !lang.contains(&w.w.extended(w.alpha.clone()))
}

/// Residual graph of the language itself: deterministic over interactions.
struct LangGraph {
    alphabet: Vec<Interaction>,
    edges: Vec<Vec<(usize, usize)>>,
}

impl LangGraph {
    fn build(
        lang: &ExplicitLanguage<Interaction>,
        budget: usize,
    ) -> Result<(PosAutomaton<Interaction>, Self), LangError> {
        let auto = PosAutomaton::new(lang);
        let alphabet: Vec<Interaction> = lang.all_symbols().into_iter().collect();
        let initial = auto.initial();
        let mut index: HashMap<PosSet, usize> = HashMap::new();
        index.insert(initial.clone(), 0);
        let mut states = vec![initial];
        let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(sid) = queue.pop_front() {
            for (aidx, a) in alphabet.iter().enumerate() {
                let Some(next) = auto.step(&states[sid], a) else {
                    continue;
                };
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
                        queue.push_back(id);
                        id
                    }
                };
                edges[sid].push((aidx, dst));
            }
        }
        Ok((auto, LangGraph { alphabet, edges }))
    }

    fn enables(&self, sid: usize, aidx: usize) -> bool {
        self.edges[sid].iter().any(|&(a, _)| a == aidx)
    }

    /// Closure of a state set under transitions projecting to nothing on `p`.
    fn silent_closure(&self, set: &BTreeSet<usize>, p: &Participant) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut queue: VecDeque<usize> = set.iter().copied().collect();
        while let Some(sid) = queue.pop_front() {
            for &(aidx, dst) in &self.edges[sid] {
                if !self.alphabet[aidx].involves(p) && out.insert(dst) {
                    queue.push_back(dst);
                }
            }
        }
        out
    }

    /// Advance a tracked residual set by one observed action of `p`.
    fn observe(&self, set: &BTreeSet<usize>, p: &Participant, action: &Action) -> BTreeSet<usize> {
        let mut moved = BTreeSet::new();
        for &sid in set {
            for &(aidx, dst) in &self.edges[sid] {
                if project_symbol(&self.alphabet[aidx], p).as_ref() == Some(action) {
                    moved.insert(dst);
                }
            }
        }
        self.silent_closure(&moved, p)
    }

    /// Shortest word with the given projection on `p` that reaches a state
    /// enabling `alpha`.
    fn shortest_matching(
        &self,
        p: &Participant,
        projection: &[Action],
        aidx: usize,
    ) -> Option<Word<Interaction>> {
        let start = (0usize, 0usize);
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([(start, Vec::<Interaction>::new())]);
        while let Some(((sid, matched), word)) = queue.pop_front() {
            if matched == projection.len() && self.enables(sid, aidx) {
                return Some(Word::Finite(word));
            }
            for &(eidx, dst) in &self.edges[sid] {
                let next = match project_symbol(&self.alphabet[eidx], p) {
                    None => (dst, matched),
                    Some(a) => {
                        if matched < projection.len() && a == projection[matched] {
                            (dst, matched + 1)
                        } else {
                            continue;
                        }
                    }
                };
                if seen.insert(next) {
                    let mut w2 = word.clone();
                    w2.push(self.alphabet[eidx].clone());
                    queue.push_back((next, w2));
                }
            }
        }
        None
    }
}

/// Residual-graph check for languages with lasso generators.
pub(super) fn check_cui_residual(
    lang: &ExplicitLanguage<Interaction>,
    budget: usize,
) -> Result<Verdict<CuiWitness>, LangError> {
    let (_auto, graph) = LangGraph::build(lang, budget)?;
    for (aidx, alpha) in graph.alphabet.iter().enumerate() {
        let x = alpha.sender.clone();
        let y = alpha.receiver.clone();
        // triple product: residual of w, residuals compatible with the
        // X-projection of w, residuals compatible with the Y-projection
        type Triple = (usize, BTreeSet<usize>, BTreeSet<usize>);
        let start: Triple = (
            0,
            graph.silent_closure(&BTreeSet::from([0]), &x),
            graph.silent_closure(&BTreeSet::from([0]), &y),
        );
        let mut seen: BTreeSet<Triple> = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        let mut order: Vec<Triple> = Vec::new();
        let mut parent: BTreeMap<Triple, (Triple, usize)> = BTreeMap::new();
        while let Some(t) = queue.pop_front() {
            order.push(t.clone());
            if seen.len() > budget {
                return Err(LangError::BudgetExceeded(budget));
            }
            let (sid, tx, ty) = &t;
            for &(eidx, dst) in &graph.edges[*sid] {
                let beta = &graph.alphabet[eidx];
                let tx2 = match project_symbol(beta, &x) {
                    None => tx.clone(),
                    Some(a) => graph.observe(tx, &x, &a),
                };
                let ty2 = match project_symbol(beta, &y) {
                    None => ty.clone(),
                    Some(a) => graph.observe(ty, &y, &a),
                };
                let next = (dst, tx2, ty2);
                if seen.insert(next.clone()) {
                    parent.insert(next.clone(), (t.clone(), eidx));
                    queue.push_back(next);
                }
            }
        }
        let violating: Vec<&Triple> = order
            .iter()
            .filter(|(sid, tx, ty)| {
                !graph.enables(*sid, aidx)
                    && tx.iter().any(|&s| graph.enables(s, aidx))
                    && ty.iter().any(|&s| graph.enables(s, aidx))
            })
            .collect();
        if violating.is_empty() {
            continue;
        }
        // canonical central word per violating triple, then tuple minimisation
        let mut candidates = Vec::new();
        for t in violating {
            let mut symbols = Vec::new();
            let mut cur = t.clone();
            while let Some((p, eidx)) = parent.get(&cur) {
                symbols.push(graph.alphabet[*eidx].clone());
                cur = p.clone();
            }
            symbols.reverse();
            let w = Word::Finite(symbols);
            let vx = match project_word(&w, &x) {
                Word::Finite(v) => v,
                Word::Lasso { .. } => unreachable!("finite central word"),
            };
            let vy = match project_word(&w, &y) {
                Word::Finite(v) => v,
                Word::Lasso { .. } => unreachable!("finite central word"),
            };
            let w1 = graph
                .shortest_matching(&x, &vx, aidx)
                .expect("witnessed by the triple");
            let w2 = graph
                .shortest_matching(&y, &vy, aidx)
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
        debug_assert!(witness_members_of(lang, &witness));
        return Ok(Verdict::Violated(witness));
    }
    Ok(Verdict::Holds)
}
