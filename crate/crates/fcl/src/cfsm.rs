//! Communicating finite-state machines and their synchronous product.
//!
//! A CFSM is a deterministic automaton over actions, all of which have the
//! same subject. A system maps each participant to its machine; the
//! synchronous semantics is an interaction-labelled automaton over reachable
//! configurations where a transition `X->Y:m` pairs a send of `X` with the
//! matching receive of `Y`.
//!
//! Non-deterministic machines are rejected outright instead of being
//! determinised: determinisation preserves the language but not the
//! state-based property verdicts, so accepting them silently would be wrong.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::alphabet::{Action, Direction, Interaction, Participant};
use crate::fsa::{Fsa, FsaError};
use crate::lang::{ExplicitLanguage, ExplicitSystem, LangError};
use crate::word::Word;
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfsmError {
    NonDeterministicMachine(Participant),
    NonLocalAction {
        owner: Participant,
        action: Action,
    },
    UnknownParticipant {
        owner: Participant,
        peer: Participant,
    },
    OwnerMismatch {
        key: Participant,
        owner: Participant,
    },
    StateBudgetExceeded(usize),
    DegenerateMachine(Participant),
}

impl fmt::Display for CfsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfsmError::NonDeterministicMachine(p) => {
                write!(f, "machine of `{p}` is not deterministic")
            }
            CfsmError::NonLocalAction { owner, action } => {
                write!(
                    f,
                    "machine of `{owner}` carries action `{action}` with a different subject"
                )
            }
            CfsmError::UnknownParticipant { owner, peer } => {
                write!(
                    f,
                    "machine of `{owner}` mentions `{peer}`, which has no machine"
                )
            }
            CfsmError::OwnerMismatch { key, owner } => {
                write!(f, "machine stored under `{key}` is owned by `{owner}`")
            }
            CfsmError::StateBudgetExceeded(n) => write!(f, "state budget of {n} exceeded"),
            CfsmError::DegenerateMachine(p) => {
                write!(f, "machine of `{p}` accepts only the empty word")
            }
        }
    }
}

impl std::error::Error for CfsmError {}

/// A deterministic, participant-local machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfsm {
    owner: Participant,
    automaton: Fsa<Action>,
}

impl Cfsm {
    pub fn new(owner: Participant, automaton: Fsa<Action>) -> Result<Self, CfsmError> {
        if !automaton.is_deterministic() {
            return Err(CfsmError::NonDeterministicMachine(owner));
        }
        for (_, label, _) in automaton.transitions() {
            let action = label.as_ref().expect("deterministic machines are eps-free");
            if action.subject() != &owner {
                return Err(CfsmError::NonLocalAction {
                    owner,
                    action: action.clone(),
                });
            }
        }
        Ok(Cfsm { owner, automaton })
    }

    pub fn owner(&self) -> &Participant {
        &self.owner
    }

    pub fn automaton(&self) -> &Fsa<Action> {
        &self.automaton
    }
}

/// The three communication properties checked directly on systems of CFSMs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfsmProperty {
    DeadlockFreedom,
    Liveness,
    LockFreedom,
}

impl CfsmProperty {
    pub const ALL: [CfsmProperty; 3] = [
        CfsmProperty::DeadlockFreedom,
        CfsmProperty::Liveness,
        CfsmProperty::LockFreedom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CfsmProperty::DeadlockFreedom => "deadlock-freedom",
            CfsmProperty::Liveness => "liveness",
            CfsmProperty::LockFreedom => "lock-freedom",
        }
    }
}

impl fmt::Display for CfsmProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Violation of a CFSM property: the configuration, the participant stuck
/// there, and the trace leading to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfsmViolation {
    pub property: CfsmProperty,
    pub configuration: String,
    pub participant: Participant,
    pub trace: Word<Interaction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfsmSystem {
    machines: BTreeMap<Participant, Cfsm>,
}

/// Reachable-configuration graph of the synchronous product.
struct ConfigGraph {
    participants: Vec<Participant>,
    alphabet: Vec<Interaction>,
    configs: Vec<Vec<String>>,
    edges: Vec<Vec<(usize, usize)>>,
    parents: Vec<Option<(usize, usize)>>,
}

impl CfsmSystem {
    pub fn new(machines: BTreeMap<Participant, Cfsm>) -> Result<Self, CfsmError> {
        for (key, m) in &machines {
            if key != &m.owner {
                return Err(CfsmError::OwnerMismatch {
                    key: key.clone(),
                    owner: m.owner.clone(),
                });
            }
            for (_, label, _) in m.automaton.transitions() {
                let action = label.as_ref().expect("eps-free");
                for peer in action.participants() {
                    if !machines.contains_key(peer) {
                        return Err(CfsmError::UnknownParticipant {
                            owner: key.clone(),
                            peer: peer.clone(),
                        });
                    }
                }
            }
        }
        Ok(CfsmSystem { machines })
    }

    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.machines.keys()
    }

    pub fn machine(&self, p: &Participant) -> Option<&Cfsm> {
        self.machines.get(p)
    }

    pub fn machines(&self) -> &BTreeMap<Participant, Cfsm> {
        &self.machines
    }

    /// Interactions both sides of which occur as machine labels.
    fn alphabet(&self) -> Vec<Interaction> {
        let mut out = BTreeSet::new();
        for m in self.machines.values() {
            for send in m.automaton.labels() {
                if send.kind != Direction::Send {
                    continue;
                }
                let recv = Action {
                    kind: Direction::Receive,
                    ..send.clone()
                };
                if let Some(peer) = self.machines.get(&send.receiver) {
                    if peer.automaton.labels().contains(&recv) {
                        out.insert(Interaction {
                            sender: send.sender.clone(),
                            receiver: send.receiver.clone(),
                            msg: send.msg.clone(),
                        });
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    fn config_graph(&self) -> ConfigGraph {
        let participants: Vec<Participant> = self.machines.keys().cloned().collect();
        let alphabet = self.alphabet();
        let initial: Vec<String> = participants
            .iter()
            .map(|p| self.machines[p].automaton.initial().to_owned())
            .collect();
        let mut index: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        index.insert(initial.clone(), 0);
        let mut configs = vec![initial];
        let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut parents = vec![None];
        let mut queue = VecDeque::from([0usize]);
        while let Some(cid) = queue.pop_front() {
            for (aidx, interaction) in alphabet.iter().enumerate() {
                let config = &configs[cid];
                let send = crate::word::project_symbol(interaction, &interaction.sender)
                    .expect("sender involved");
                let recv = crate::word::project_symbol(interaction, &interaction.receiver)
                    .expect("receiver involved");
                let si = participants
                    .binary_search(&interaction.sender)
                    .expect("validated");
                let ri = participants
                    .binary_search(&interaction.receiver)
                    .expect("validated");
                let s_next = self.machines[&interaction.sender]
                    .automaton
                    .step(&config[si], &send);
                let r_next = self.machines[&interaction.receiver]
                    .automaton
                    .step(&config[ri], &recv);
                let (Some(s_next), Some(r_next)) = (s_next, r_next) else {
                    continue;
                };
                let mut next = config.clone();
                next[si] = s_next.to_owned();
                next[ri] = r_next.to_owned();
                let dst = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = configs.len();
                        index.insert(next.clone(), id);
                        configs.push(next);
                        edges.push(Vec::new());
                        parents.push(Some((cid, aidx)));
                        queue.push_back(id);
                        id
                    }
                };
                edges[cid].push((aidx, dst));
            }
        }
        ConfigGraph {
            participants,
            alphabet,
            configs,
            edges,
            parents,
        }
    }

    /// The synchronous product as an interaction-labelled automaton over
    /// reachable configurations.
    pub fn sync_product(&self) -> Fsa<Interaction> {
        let graph = self.config_graph();
        let mut transitions = Vec::new();
        for (cid, out) in graph.edges.iter().enumerate() {
            for &(aidx, dst) in out {
                transitions.push((
                    graph.render_config(cid),
                    Some(graph.alphabet[aidx].clone()),
                    graph.render_config(dst),
                ));
            }
        }
        let states: Vec<String> = (0..graph.configs.len())
            .map(|c| graph.render_config(c))
            .collect();
        Fsa::new(&graph.render_config(0), transitions, states)
    }

    /// Checks one of the CFSM communication properties on the reachable
    /// configuration graph.
    pub fn check(&self, property: CfsmProperty) -> Verdict<CfsmViolation> {
        let graph = self.config_graph();
        match property {
            CfsmProperty::DeadlockFreedom => self.check_deadlock(&graph),
            CfsmProperty::Liveness => self.check_liveness(&graph),
            CfsmProperty::LockFreedom => self.check_lock_freedom(&graph),
        }
    }

    fn machine_enabled(&self, graph: &ConfigGraph, cid: usize, pidx: usize) -> bool {
        let p = &graph.participants[pidx];
        let state = &graph.configs[cid][pidx];
        self.machines[p]
            .automaton
            .edges_from(state)
            .next()
            .is_some()
    }

    fn violation(
        &self,
        graph: &ConfigGraph,
        property: CfsmProperty,
        cid: usize,
        pidx: usize,
    ) -> CfsmViolation {
        CfsmViolation {
            property,
            configuration: graph.render_config(cid),
            participant: graph.participants[pidx].clone(),
            trace: graph.trace_to(cid),
        }
    }

    fn check_deadlock(&self, graph: &ConfigGraph) -> Verdict<CfsmViolation> {
        for cid in 0..graph.configs.len() {
            if !graph.edges[cid].is_empty() {
                continue;
            }
            for pidx in 0..graph.participants.len() {
                if self.machine_enabled(graph, cid, pidx) {
                    return Verdict::Violated(self.violation(
                        graph,
                        CfsmProperty::DeadlockFreedom,
                        cid,
                        pidx,
                    ));
                }
            }
        }
        Verdict::Holds
    }

    fn check_liveness(&self, graph: &ConfigGraph) -> Verdict<CfsmViolation> {
        for pidx in 0..graph.participants.len() {
            let reach = graph.can_reach_involving(pidx);
            for (cid, ok) in reach.iter().enumerate() {
                if self.machine_enabled(graph, cid, pidx) && !ok {
                    return Verdict::Violated(self.violation(
                        graph,
                        CfsmProperty::Liveness,
                        cid,
                        pidx,
                    ));
                }
            }
        }
        Verdict::Holds
    }

    /// A lock is a configuration from which some maximal run avoids the
    /// participant: inside the participant-free subgraph either a
    /// configuration that is dead in the full graph is reachable, or a cycle
    /// of the subgraph is.
    fn check_lock_freedom(&self, graph: &ConfigGraph) -> Verdict<CfsmViolation> {
        for pidx in 0..graph.participants.len() {
            let locked = graph.can_avoid_forever(pidx);
            for (cid, stuck) in locked.iter().enumerate() {
                if self.machine_enabled(graph, cid, pidx) && *stuck {
                    return Verdict::Violated(self.violation(
                        graph,
                        CfsmProperty::LockFreedom,
                        cid,
                        pidx,
                    ));
                }
            }
        }
        Verdict::Holds
    }

    /// The abstract communicating system assigning each participant the
    /// language of its machine.
    pub fn to_explicit(&self, budget: usize) -> Result<ExplicitSystem, CfsmError> {
        let mut parts = BTreeMap::new();
        for (p, m) in &self.machines {
            let generators = m
                .automaton
                .maximal_generators(budget)
                .map_err(|e| match e {
                    FsaError::BudgetExceeded(n) => CfsmError::StateBudgetExceeded(n),
                    _ => CfsmError::StateBudgetExceeded(budget),
                })?;
            parts.insert(p.clone(), ExplicitLanguage::from_generators(generators));
        }
        ExplicitSystem::new(parts).map_err(|e| match e {
            LangError::EmptyLocalLanguage(p) => CfsmError::DegenerateMachine(p),
            LangError::BudgetExceeded(n) => CfsmError::StateBudgetExceeded(n),
            _ => unreachable!("machine locality was validated"),
        })
    }
}

impl ConfigGraph {
    fn render_config(&self, cid: usize) -> String {
        self.participants
            .iter()
            .zip(&self.configs[cid])
            .map(|(p, q)| format!("{p}:{q}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn trace_to(&self, cid: usize) -> Word<Interaction> {
        let mut symbols = Vec::new();
        let mut cur = cid;
        while let Some((parent, aidx)) = self.parents[cur] {
            symbols.push(self.alphabet[aidx].clone());
            cur = parent;
        }
        symbols.reverse();
        Word::Finite(symbols)
    }

    fn involves(&self, aidx: usize, pidx: usize) -> bool {
        self.alphabet[aidx].involves(&self.participants[pidx])
    }

    fn can_reach_involving(&self, pidx: usize) -> Vec<bool> {
        let n = self.configs.len();
        let mut reach = vec![false; n];
        let mut queue = VecDeque::new();
        for (cid, out) in self.edges.iter().enumerate() {
            if out.iter().any(|&(aidx, _)| self.involves(aidx, pidx)) {
                reach[cid] = true;
                queue.push_back(cid);
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (cid, out) in self.edges.iter().enumerate() {
            for &(_, dst) in out {
                rev[dst].push(cid);
            }
        }
        while let Some(cid) = queue.pop_front() {
            for &src in &rev[cid] {
                if !reach[src] {
                    reach[src] = true;
                    queue.push_back(src);
                }
            }
        }
        reach
    }

    fn can_avoid_forever(&self, pidx: usize) -> Vec<bool> {
        let n = self.configs.len();
        let free: Vec<Vec<usize>> = (0..n)
            .map(|cid| {
                self.edges[cid]
                    .iter()
                    .filter(|&&(aidx, _)| !self.involves(aidx, pidx))
                    .map(|&(_, dst)| dst)
                    .collect()
            })
            .collect();
        let mut target = vec![false; n];
        // dead in the full graph
        for (cid, out) in self.edges.iter().enumerate() {
            if out.is_empty() {
                target[cid] = true;
            }
        }
        // on a cycle of the participant-free subgraph
        for s in 0..n {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<usize> = free[s].iter().copied().collect();
            while let Some(t) = queue.pop_front() {
                if t == s {
                    target[s] = true;
                    break;
                }
                if seen.insert(t) {
                    queue.extend(free[t].iter().copied());
                }
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (cid, out) in free.iter().enumerate() {
            for &dst in out {
                rev[dst].push(cid);
            }
        }
        let mut out = target.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&c| out[c]).collect();
        while let Some(cid) = queue.pop_front() {
            for &src in &rev[cid] {
                if !out[src] {
                    out[src] = true;
                    queue.push_back(src);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{act, iword, law, llw, ptp};
    use crate::DEFAULT_BUDGET;

    fn machine(owner: &str, init: &str, edges: &[(&str, &str, &str)]) -> Cfsm {
        let fsa = Fsa::new(
            init,
            edges
                .iter()
                .map(|(s, a, d)| (s.to_string(), Some(act(a)), d.to_string())),
            [],
        );
        Cfsm::new(ptp(owner), fsa).unwrap()
    }

    fn system(machines: Vec<Cfsm>) -> CfsmSystem {
        CfsmSystem::new(
            machines
                .into_iter()
                .map(|m| (m.owner().clone(), m))
                .collect(),
        )
        .unwrap()
    }

    fn handshake() -> CfsmSystem {
        system(vec![
            machine("A", "q0", &[("q0", "AB!m", "q1")]),
            machine("B", "p0", &[("p0", "AB?m", "p1")]),
        ])
    }

    /// Machines realising the projection of the closnodl language.
    pub(crate) fn closnodl_machines() -> CfsmSystem {
        system(vec![
            machine(
                "A",
                "a0",
                &[
                    ("a0", "AC!l", "a1"),
                    ("a1", "AB!m", "a2"),
                    ("a2", "AC!m", "a3"),
                    ("a0", "AC!r", "a4"),
                    ("a4", "AB!m", "a5"),
                ],
            ),
            machine("B", "b0", &[("b0", "AB?m", "b1"), ("b1", "BC!m", "b2")]),
            machine(
                "C",
                "c0",
                &[
                    ("c0", "AC?l", "c1"),
                    ("c1", "AC?m", "c2"),
                    ("c0", "AC?r", "c3"),
                    ("c3", "BC?m", "c4"),
                ],
            ),
        ])
    }

    /// Machines realising the projection of the deadlock-free but not
    /// lock-free language.
    pub(crate) fn df_not_lf_machines() -> CfsmSystem {
        system(vec![
            machine(
                "A",
                "a0",
                &[
                    ("a0", "AC!n", "a1"),
                    ("a1", "AB!m", "a2"),
                    ("a2", "AC!m", "a2"),
                    ("a0", "AC!m", "a3"),
                    ("a3", "AB!m", "a4"),
                    ("a4", "AC!m", "a4"),
                ],
            ),
            machine("B", "b0", &[("b0", "AB?m", "b1"), ("b1", "BC!m", "b2")]),
            machine(
                "C",
                "c0",
                &[
                    ("c0", "AC?n", "c1"),
                    ("c1", "AC?m", "c1"),
                    ("c0", "AC?m", "c2"),
                    ("c2", "BC?m", "c3"),
                    ("c3", "AC?m", "c3"),
                ],
            ),
        ])
    }

    #[test]
    fn handshake_product_and_properties() {
        let sys = handshake();
        let product = sys.sync_product();
        assert_eq!(product.state_count(), 2);
        assert!(product.accepts(&iword("A->B:m")));
        assert!(!product.accepts(&iword("A->B:m . A->B:m")));
        for p in CfsmProperty::ALL {
            assert!(sys.check(p).holds());
        }
    }

    #[test]
    fn closnodl_product_deadlocks() {
        let sys = closnodl_machines();
        let product = sys.sync_product();
        assert!(product.accepts(&iword("A->C:l . A->B:m . A->C:m")));
        assert!(product.accepts(&iword("A->C:r . A->B:m . B->C:m")));
        assert!(!product.accepts(&iword("A->C:l . A->B:m . B->C:m")));
        let verdict = sys.check(CfsmProperty::DeadlockFreedom);
        let v = verdict.witness().expect("deadlock");
        assert_eq!(v.participant, ptp("B"));
        assert_eq!(v.trace, iword("A->C:l . A->B:m . A->C:m"));
    }

    #[test]
    fn df_not_lf_machine_properties() {
        let sys = df_not_lf_machines();
        assert!(sys.check(CfsmProperty::DeadlockFreedom).holds());
        let verdict = sys.check(CfsmProperty::LockFreedom);
        let v = verdict.witness().expect("lock");
        assert_eq!(v.participant, ptp("B"));
        // liveness fails too: from the lock, B is never involved again
        assert!(!sys.check(CfsmProperty::Liveness).holds());
    }

    #[test]
    fn non_deterministic_machines_are_rejected() {
        let fsa = Fsa::new(
            "q0",
            [
                ("q0".to_string(), Some(act("AB?m")), "q1".to_string()),
                ("q0".to_string(), Some(act("AB?m")), "q2".to_string()),
            ],
            [],
        );
        assert!(matches!(
            Cfsm::new(ptp("B"), fsa),
            Err(CfsmError::NonDeterministicMachine(_))
        ));
        let eps = Fsa::new("q0", [("q0".to_string(), None, "q1".to_string())], []);
        assert!(matches!(
            Cfsm::new(ptp("B"), eps),
            Err(CfsmError::NonDeterministicMachine(_))
        ));
    }

    #[test]
    fn locality_is_enforced() {
        let fsa = Fsa::new(
            "q0",
            [("q0".to_string(), Some(act("AB!m")), "q1".to_string())],
            [],
        );
        assert!(matches!(
            Cfsm::new(ptp("B"), fsa),
            Err(CfsmError::NonLocalAction { .. })
        ));
    }

    #[test]
    fn to_explicit_shapes() {
        let sys = handshake();
        let explicit = sys.to_explicit(DEFAULT_BUDGET).unwrap();
        assert_eq!(
            explicit.part(&ptp("A")).unwrap().generators(),
            &[law("AB!m")]
        );
        assert_eq!(
            explicit.part(&ptp("B")).unwrap().generators(),
            &[law("AB?m")]
        );

        let looped = system(vec![
            machine("A", "q0", &[("q0", "AB!m", "q0")]),
            machine("B", "p0", &[("p0", "AB?m", "p0")]),
        ]);
        let explicit = looped.to_explicit(DEFAULT_BUDGET).unwrap();
        assert_eq!(
            explicit.part(&ptp("A")).unwrap().generators(),
            &[llw("", "AB!m")]
        );

        let closnodl = closnodl_machines().to_explicit(DEFAULT_BUDGET).unwrap();
        assert_eq!(
            closnodl.part(&ptp("B")).unwrap().generators(),
            &[law("AB?m . BC!m")]
        );
        assert_eq!(
            closnodl.part(&ptp("A")).unwrap().generators(),
            &[law("AC!r . AB!m"), law("AC!l . AB!m . AC!m")]
        );
    }

    #[test]
    fn product_transitions_move_exactly_the_involved_machines() {
        let graph = closnodl_machines().config_graph();
        for (cid, out) in graph.edges.iter().enumerate() {
            for &(aidx, dst) in out {
                let alpha = &graph.alphabet[aidx];
                for (pidx, p) in graph.participants.iter().enumerate() {
                    let moved = graph.configs[cid][pidx] != graph.configs[dst][pidx];
                    if !alpha.involves(p) {
                        assert!(!moved, "{p} moved on {alpha}");
                    }
                }
            }
        }
    }

    #[test]
    fn df_not_lf_lasso_languages() {
        let explicit = df_not_lf_machines().to_explicit(DEFAULT_BUDGET).unwrap();
        let mut expected = vec![llw("AC!n . AB!m", "AC!m"), llw("AC!m . AB!m", "AC!m")];
        expected.sort();
        assert_eq!(explicit.part(&ptp("A")).unwrap().generators(), &expected);
    }
}
