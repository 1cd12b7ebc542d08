//! Shared fixtures, random generators and definitional validators for the
//! integration suites. The validators re-check every reported witness
//! directly against the definitions, independently of the code that produced
//! it.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use fcl::cfsm::{Cfsm, CfsmSystem};
use fcl::chaut::ChorAutomaton;
use fcl::fsa::Fsa;
use fcl::gtypes::GlobalType;
use fcl::lang::{BaWitness, CuiWitness, ExplicitLanguage, ExplicitSystem};
use fcl::word::{independent, participants_of_words, project_word, PrefixOrder, Word};
use fcl::{Action, Direction, Interaction, Message, Participant, DEFAULT_BUDGET};

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn ca_fixture(name: &str) -> ChorAutomaton {
    fcl::parse::parse_ca(&fixture(name)).expect("valid fixture")
}

pub fn gl_fixture(name: &str) -> ExplicitLanguage<Interaction> {
    fcl::parse::parse_glang(&fixture(name)).expect("valid fixture")
}

pub fn cfsm_fixture(name: &str) -> CfsmSystem {
    fcl::parse::parse_cfsm_system(&fixture(name)).expect("valid fixture")
}

pub fn gt_fixture(name: &str) -> GlobalType {
    fcl::parse::parse_gt(&fixture(name)).expect("valid fixture")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ptp(name: &str) -> Participant {
    Participant::new(name).unwrap()
}

pub fn msg(name: &str) -> Message {
    Message::new(name).unwrap()
}

/// All interactions over the given participants and messages.
pub fn interaction_alphabet(ptps: &[&str], msgs: &[&str]) -> Vec<Interaction> {
    let mut out = Vec::new();
    for s in ptps {
        for r in ptps {
            if s == r {
                continue;
            }
            for m in msgs {
                out.push(Interaction::new(ptp(s), ptp(r), msg(m)).unwrap());
            }
        }
    }
    out
}

/// Random explicit global language with finite generators.
pub fn rand_glang(rng: &mut ChaCha8Rng) -> ExplicitLanguage<Interaction> {
    let alphabet = interaction_alphabet(&["A", "B", "C"], &["m", "n"]);
    let gens = rng.gen_range(1..=4);
    let words = (0..gens).map(|_| {
        let len = rng.gen_range(0..=4);
        Word::Finite(
            (0..len)
                .map(|_| alphabet.choose(rng).unwrap().clone())
                .collect(),
        )
    });
    ExplicitLanguage::from_generators(words)
}

/// Random communicating system over `A`, `B`, `C` with finite local words.
pub fn rand_system(rng: &mut ChaCha8Rng) -> ExplicitSystem {
    let ptps = ["A", "B", "C"].map(ptp);
    let msgs = ["m", "n"].map(msg);
    let mut parts = BTreeMap::new();
    for subject in &ptps {
        // actions with this subject
        let mut actions = Vec::new();
        for peer in &ptps {
            if peer == subject {
                continue;
            }
            for m in &msgs {
                actions.push(
                    Action::new(subject.clone(), peer.clone(), m.clone(), Direction::Send).unwrap(),
                );
                actions.push(
                    Action::new(peer.clone(), subject.clone(), m.clone(), Direction::Receive)
                        .unwrap(),
                );
            }
        }
        let gens = rng.gen_range(1..=3);
        let words: Vec<Word<Action>> = (0..gens)
            .map(|_| {
                let len = rng.gen_range(1..=3);
                Word::Finite(
                    (0..len)
                        .map(|_| actions.choose(rng).unwrap().clone())
                        .collect(),
                )
            })
            .collect();
        parts.insert(subject.clone(), ExplicitLanguage::from_generators(words));
    }
    ExplicitSystem::new(parts).expect("generator respects the invariants")
}

/// Random deterministic choreography automaton: a DAG over at most
/// `max_states` states, optionally closed off with terminal cycles so the
/// language stays finitely generated.
pub fn rand_chaut(rng: &mut ChaCha8Rng, cyclic: bool) -> ChorAutomaton {
    let alphabet = interaction_alphabet(&["A", "B", "C"], &["m", "n"]);
    let n = rng.gen_range(2..=6);
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let mut used: BTreeSet<(usize, Interaction)> = BTreeSet::new();
    let mut transitions = Vec::new();
    let edges = rng.gen_range(1..=(2 * n));
    for _ in 0..edges {
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        let label = alphabet.choose(rng).unwrap().clone();
        if used.insert((i, label.clone())) {
            transitions.push((states[i].clone(), Some(label), states[j].clone()));
        }
    }
    if cyclic {
        // attach a loop of fresh states to one dead state
        let mut outgoing: BTreeSet<usize> = BTreeSet::new();
        for (src, _, _) in &transitions {
            outgoing.insert(src[1..].parse().unwrap());
        }
        let dead: Vec<usize> = (0..n).filter(|i| !outgoing.contains(i)).collect();
        if let Some(&anchor) = dead.first() {
            let len = rng.gen_range(1..=2);
            let mut cur = states[anchor].clone();
            for k in 0..len {
                let next = if k == len - 1 {
                    states[anchor].clone()
                } else {
                    format!("c{k}")
                };
                let label = alphabet.choose(rng).unwrap().clone();
                transitions.push((cur.clone(), Some(label), next.clone()));
                cur = next;
            }
        }
    }
    ChorAutomaton::new(Fsa::new("q0", transitions, states))
        .expect("generated transitions are deterministic")
}

/// Random deterministic CFSM system whose machine languages are finitely
/// generated (DAG machines with optional terminal self-loops).
pub fn rand_cfsm_system(rng: &mut ChaCha8Rng) -> CfsmSystem {
    let ptps = ["A", "B", "C"].map(ptp);
    let msgs = ["m", "n"].map(msg);
    let mut machines = BTreeMap::new();
    for subject in &ptps {
        let mut actions = Vec::new();
        for peer in &ptps {
            if peer == subject {
                continue;
            }
            for m in &msgs {
                actions.push(
                    Action::new(subject.clone(), peer.clone(), m.clone(), Direction::Send).unwrap(),
                );
                actions.push(
                    Action::new(peer.clone(), subject.clone(), m.clone(), Direction::Receive)
                        .unwrap(),
                );
            }
        }
        let n = rng.gen_range(1..=4);
        let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let mut used: BTreeSet<(usize, Action)> = BTreeSet::new();
        let mut transitions = Vec::new();
        for _ in 0..rng.gen_range(0..=n) {
            if n < 2 {
                break;
            }
            let i = rng.gen_range(0..n - 1);
            let j = rng.gen_range(i + 1..n);
            let a = actions.choose(rng).unwrap().clone();
            if used.insert((i, a.clone())) {
                transitions.push((states[i].clone(), Some(a), states[j].clone()));
            }
        }
        if rng.gen_bool(0.3) {
            // terminal self-loop on one dead state
            let mut outgoing: BTreeSet<usize> = BTreeSet::new();
            for (src, _, _) in &transitions {
                outgoing.insert(src[1..].parse().unwrap());
            }
            if let Some(&anchor) = (0..n)
                .filter(|i| !outgoing.contains(i))
                .collect::<Vec<_>>()
                .first()
            {
                let a = actions.choose(rng).unwrap().clone();
                transitions.push((states[anchor].clone(), Some(a), states[anchor].clone()));
            }
        }
        let machine = Cfsm::new(subject.clone(), Fsa::new("q0", transitions, states))
            .expect("generated machines are deterministic and local");
        machines.insert(subject.clone(), machine);
    }
    CfsmSystem::new(machines).expect("all peers have machines")
}

/// Exact explicit language of a choreography automaton; requires the
/// language to be finitely generated.
pub fn explicit_of_chaut(a: &ChorAutomaton) -> Option<ExplicitLanguage<Interaction>> {
    a.fsa()
        .maximal_generators(DEFAULT_BUDGET)
        .ok()
        .map(ExplicitLanguage::from_generators)
}

/// Checks a CUI witness against the definition, on any membership oracle.
pub fn cui_witness_is_valid(contains: &dyn Fn(&Word<Interaction>) -> bool, w: &CuiWitness) -> bool {
    let x = &w.alpha.sender;
    let y = &w.alpha.receiver;
    w.w.is_finite()
        && w.w1.is_finite()
        && w.w2.is_finite()
        && contains(&w.w1.extended(w.alpha.clone()))
        && contains(&w.w2.extended(w.alpha.clone()))
        && contains(&w.w)
        && !contains(&w.w.extended(w.alpha.clone()))
        && project_word(&w.w, x) == project_word(&w.w1, x)
        && project_word(&w.w, y) == project_word(&w.w2, y)
}

/// Checks a BA witness against the definition: both words maximal in the
/// language of the automaton (no accepted single-symbol extension for finite
/// words, every infinite word being maximal) and the projections on the
/// participant in the strict prefix relation.
pub fn ba_witness_is_valid_on(a: &ChorAutomaton, w: &BaWitness) -> bool {
    let labels: Vec<Interaction> = a.fsa().labels().into_iter().collect();
    let maximal = |word: &Word<Interaction>| -> bool {
        if !a.fsa().accepts(word) {
            return false;
        }
        match word {
            Word::Lasso { .. } => true,
            Word::Finite(_) => !labels
                .iter()
                .any(|l| a.fsa().accepts(&word.extended(l.clone()))),
        }
    };
    maximal(&w.w1)
        && maximal(&w.w2)
        && project_word(&w.w1, &w.participant).compare(&project_word(&w.w2, &w.participant))
            == PrefixOrder::StrictPrefixOfSecond
}

/// BA witness validity on an explicit language (maximal words are the
/// generators).
pub fn ba_witness_is_valid_on_lang(lang: &ExplicitLanguage<Interaction>, w: &BaWitness) -> bool {
    lang.generators().contains(&w.w1)
        && lang.generators().contains(&w.w2)
        && project_word(&w.w1, &w.participant).compare(&project_word(&w.w2, &w.participant))
            == PrefixOrder::StrictPrefixOfSecond
}

/// Closure of a set of finite words under adjacent swaps of independent
/// interactions.
pub fn swap_closure(words: BTreeSet<Vec<Interaction>>) -> BTreeSet<Vec<Interaction>> {
    let mut out = words;
    let mut frontier: Vec<Vec<Interaction>> = out.iter().cloned().collect();
    while let Some(w) = frontier.pop() {
        for i in 0..w.len().saturating_sub(1) {
            if independent(&w[i], &w[i + 1]) {
                let mut s = w.clone();
                s.swap(i, i + 1);
                if out.insert(s.clone()) {
                    frontier.push(s);
                }
            }
        }
    }
    out
}

/// Brute-force reachability under adjacent independent swaps.
pub fn swap_reachable(w1: &Word<Interaction>, w2: &Word<Interaction>) -> bool {
    let (Word::Finite(v1), Word::Finite(v2)) = (w1, w2) else {
        panic!("finite words expected");
    };
    swap_closure(BTreeSet::from([v1.clone()])).contains(v2)
}

/// Participants of a language's generators.
pub fn participants(lang: &ExplicitLanguage<Interaction>) -> BTreeSet<Participant> {
    participants_of_words(lang.generators())
}
