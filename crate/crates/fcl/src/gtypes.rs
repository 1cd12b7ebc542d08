//! Multiparty global types with explicit recursion binders, their
//! out-of-order operational semantics, projection onto local processes, and
//! multiparty sessions.
//!
//! Regular coinductive trees are represented with `rec t . G` binders;
//! unfolding is transparent everywhere and term equality compares the
//! top-normalised forms. The step relation allows an interaction to run
//! ahead of a syntactically earlier choice when it occurs in every branch
//! and involves neither chooser; enabledness under recursion is the least
//! fixpoint over the finite closure of unfolded subterms, computed by
//! chaotic iteration with missing entries read as "not enabled".

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::alphabet::{Action, Direction, Interaction, Message, Participant};
use crate::chaut::ChorAutomaton;
use crate::fsa::Fsa;
use crate::lang::{ExplicitLanguage, ExplicitSystem, LangError};
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GtError {
    UnboundVariable(String),
    UnguardedRecursion(String),
    DuplicateLabel(Message),
    EmptyChoice,
    SelfCommunication(Participant),
    BudgetExceeded(usize),
}

impl fmt::Display for GtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GtError::UnboundVariable(v) => write!(f, "unbound recursion variable `{v}`"),
            GtError::UnguardedRecursion(v) => {
                write!(
                    f,
                    "recursion variable `{v}` is used without a guarding interaction"
                )
            }
            GtError::DuplicateLabel(m) => write!(f, "duplicate branch label `{m}`"),
            GtError::EmptyChoice => write!(f, "a choice needs at least one branch"),
            GtError::SelfCommunication(p) => {
                write!(f, "participant `{p}` cannot message itself")
            }
            GtError::BudgetExceeded(n) => write!(f, "state budget of {n} exceeded"),
        }
    }
}

impl std::error::Error for GtError {}

/// Reason a projection is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Undefined {
    /// Branch projections overlap on a label.
    MergeClash,
    /// Branch projections are not all inputs from one sender (nor, in
    /// generalised mode, all outputs to one receiver).
    MixedDirections,
    /// The participant occurs at unbounded depth: a cycle avoiding it can
    /// reach one of its interactions.
    UnboundedDepth,
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Undefined::MergeClash => write!(f, "merge clash"),
            Undefined::MixedDirections => write!(f, "mixed branch directions"),
            Undefined::UnboundedDepth => write!(f, "participant occurs at unbounded depth"),
        }
    }
}

impl std::error::Error for Undefined {}

/// Projection mode: the standard definition merges input branches only; the
/// generalised one also merges all-output branches towards one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Standard,
    Generalised,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GlobalType {
    End,
    Var(String),
    Rec(String, Box<GlobalType>),
    Comm {
        sender: Participant,
        receiver: Participant,
        branches: Vec<(Message, GlobalType)>,
    },
}

impl GlobalType {
    pub fn comm(
        sender: Participant,
        receiver: Participant,
        branches: impl IntoIterator<Item = (Message, GlobalType)>,
    ) -> Result<GlobalType, GtError> {
        if sender == receiver {
            return Err(GtError::SelfCommunication(sender));
        }
        let mut branches: Vec<(Message, GlobalType)> = branches.into_iter().collect();
        if branches.is_empty() {
            return Err(GtError::EmptyChoice);
        }
        branches.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in branches.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(GtError::DuplicateLabel(pair[0].0.clone()));
            }
        }
        Ok(GlobalType::Comm {
            sender,
            receiver,
            branches,
        })
    }

    /// Checks closedness and guardedness of recursion.
    pub fn validate(&self) -> Result<(), GtError> {
        fn go(
            g: &GlobalType,
            bound: &mut BTreeSet<String>,
            unguarded: &BTreeSet<String>,
        ) -> Result<(), GtError> {
            match g {
                GlobalType::End => Ok(()),
                GlobalType::Var(v) => {
                    if !bound.contains(v) {
                        Err(GtError::UnboundVariable(v.clone()))
                    } else if unguarded.contains(v) {
                        Err(GtError::UnguardedRecursion(v.clone()))
                    } else {
                        Ok(())
                    }
                }
                GlobalType::Rec(v, body) => {
                    let fresh = bound.insert(v.clone());
                    let mut ug = unguarded.clone();
                    ug.insert(v.clone());
                    go(body, bound, &ug)?;
                    if fresh {
                        bound.remove(v);
                    }
                    Ok(())
                }
                GlobalType::Comm { branches, .. } => {
                    for (_, b) in branches {
                        go(b, bound, &BTreeSet::new())?;
                    }
                    Ok(())
                }
            }
        }
        go(self, &mut BTreeSet::new(), &BTreeSet::new())
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = BTreeSet::new();
        fn go(g: &GlobalType, out: &mut BTreeSet<Participant>) {
            match g {
                GlobalType::End | GlobalType::Var(_) => {}
                GlobalType::Rec(_, body) => go(body, out),
                GlobalType::Comm {
                    sender,
                    receiver,
                    branches,
                } => {
                    out.insert(sender.clone());
                    out.insert(receiver.clone());
                    for (_, b) in branches {
                        go(b, out);
                    }
                }
            }
        }
        go(self, &mut out);
        out
    }

    fn subst(&self, var: &str, replacement: &GlobalType) -> GlobalType {
        match self {
            GlobalType::End => GlobalType::End,
            GlobalType::Var(v) if v == var => replacement.clone(),
            GlobalType::Var(v) => GlobalType::Var(v.clone()),
            GlobalType::Rec(v, _) if v == var => self.clone(),
            GlobalType::Rec(v, body) => {
                GlobalType::Rec(v.clone(), Box::new(body.subst(var, replacement)))
            }
            GlobalType::Comm {
                sender,
                receiver,
                branches,
            } => GlobalType::Comm {
                sender: sender.clone(),
                receiver: receiver.clone(),
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), b.subst(var, replacement)))
                    .collect(),
            },
        }
    }

    /// Unfolds top-level recursion until the head is a communication or
    /// `end`.
    pub fn normalize(&self) -> GlobalType {
        let mut g = self.clone();
        while let GlobalType::Rec(v, body) = &g {
            let unfolded = body.subst(v, &g);
            g = unfolded;
        }
        g
    }
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::End => write!(f, "end"),
            GlobalType::Var(v) => write!(f, "{v}"),
            GlobalType::Rec(v, body) => write!(f, "rec {v} . {body}"),
            GlobalType::Comm {
                sender,
                receiver,
                branches,
            } => {
                if branches.len() == 1 {
                    let (l, b) = &branches[0];
                    write!(f, "{sender}->{receiver}:{l} . {b}")
                } else {
                    write!(f, "{sender}->{receiver}:{{ ")?;
                    for (i, (l, b)) in branches.iter().enumerate() {
                        if i > 0 {
                            write!(f, " , ")?;
                        }
                        write!(f, "{l} . {b}")?;
                    }
                    write!(f, " }}")
                }
            }
        }
    }
}

fn term_size(g: &GlobalType) -> usize {
    match g {
        GlobalType::End | GlobalType::Var(_) => 1,
        GlobalType::Rec(_, body) => 1 + term_size(body),
        GlobalType::Comm { branches, .. } => {
            1 + branches.iter().map(|(_, b)| term_size(b)).sum::<usize>()
        }
    }
}

/// Memoised step relation of global types. The budget is charged per term
/// node: under out-of-order execution the reachable terms can grow without
/// bound (pending interactions pile up syntactically), and charging nodes
/// keeps both the state count and the term depth in check.
pub struct GtLts {
    budget: usize,
    nodes: usize,
    steps: HashMap<GlobalType, BTreeMap<Interaction, GlobalType>>,
}

impl GtLts {
    pub fn new(budget: usize) -> Self {
        GtLts {
            budget,
            nodes: 0,
            steps: HashMap::new(),
        }
    }

    /// Transitions of a (closed, guarded) global type.
    pub fn steps(&mut self, g: &GlobalType) -> Result<BTreeMap<Interaction, GlobalType>, GtError> {
        let g = g.normalize();
        self.ensure(&g)?;
        Ok(self.steps[&g].clone())
    }

    fn ensure(&mut self, root: &GlobalType) -> Result<(), GtError> {
        if self.steps.contains_key(root) {
            return Ok(());
        }
        // dependency closure: normalised subterms reachable through branches
        let mut new_terms: Vec<GlobalType> = Vec::new();
        let mut seen: HashSet<GlobalType> = HashSet::new();
        let mut stack = vec![root.clone()];
        while let Some(t) = stack.pop() {
            if self.steps.contains_key(&t) || !seen.insert(t.clone()) {
                continue;
            }
            self.nodes += term_size(&t);
            if self.nodes > self.budget {
                return Err(GtError::BudgetExceeded(self.budget));
            }
            if let GlobalType::Comm { branches, .. } = &t {
                for (_, b) in branches {
                    stack.push(b.normalize());
                }
            }
            new_terms.push(t);
        }
        // least fixpoint by chaotic iteration; in-progress entries are empty
        let mut work: HashMap<GlobalType, BTreeMap<Interaction, GlobalType>> = new_terms
            .iter()
            .map(|t| (t.clone(), BTreeMap::new()))
            .collect();
        loop {
            let mut changed = false;
            for t in &new_terms {
                let GlobalType::Comm {
                    sender,
                    receiver,
                    branches,
                } = t
                else {
                    continue;
                };
                let mut m: BTreeMap<Interaction, GlobalType> = BTreeMap::new();
                for (l, b) in branches {
                    let alpha = Interaction {
                        sender: sender.clone(),
                        receiver: receiver.clone(),
                        msg: l.clone(),
                    };
                    m.insert(alpha, b.normalize());
                }
                let lookup = |term: &GlobalType| -> BTreeMap<Interaction, GlobalType> {
                    work.get(term)
                        .or_else(|| self.steps.get(term))
                        .cloned()
                        .unwrap_or_default()
                };
                let mut candidates: Option<BTreeSet<Interaction>> = None;
                for (_, b) in branches {
                    let labels: BTreeSet<Interaction> =
                        lookup(&b.normalize()).keys().cloned().collect();
                    candidates = Some(match candidates {
                        None => labels,
                        Some(c) => c.intersection(&labels).cloned().collect(),
                    });
                }
                for alpha in candidates.unwrap_or_default() {
                    if alpha.involves(sender) || alpha.involves(receiver) {
                        continue;
                    }
                    let new_branches: Vec<(Message, GlobalType)> = branches
                        .iter()
                        .map(|(l, b)| (l.clone(), lookup(&b.normalize())[&alpha].clone()))
                        .collect();
                    m.insert(
                        alpha,
                        GlobalType::Comm {
                            sender: sender.clone(),
                            receiver: receiver.clone(),
                            branches: new_branches,
                        },
                    );
                }
                if work[t] != m {
                    work.insert(t.clone(), m);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.steps.extend(work);
        Ok(())
    }
}

/// One-step transitions of a global type, sorted by interaction.
pub fn gt_step(g: &GlobalType, budget: usize) -> Result<Vec<(Interaction, GlobalType)>, GtError> {
    Ok(GtLts::new(budget).steps(g)?.into_iter().collect())
}

/// The traces of the step relation up to `max_len`, as a bounded explicit
/// language generated by the maximal traces within the bound.
pub fn gt_language(
    g: &GlobalType,
    max_len: usize,
    budget: usize,
) -> Result<ExplicitLanguage<Interaction>, GtError> {
    Ok(ExplicitLanguage::from_generators(
        gt_traces(g, max_len, budget)?.0,
    ))
}

/// Maximal bounded traces plus the full bounded trace set.
pub type BoundedTraces = (Vec<Word<Interaction>>, BTreeSet<Word<Interaction>>);

pub fn gt_traces(g: &GlobalType, max_len: usize, budget: usize) -> Result<BoundedTraces, GtError> {
    let mut lts = GtLts::new(budget);
    let mut maximal = Vec::new();
    let mut all = BTreeSet::new();
    let mut queue = VecDeque::from([(g.normalize(), Vec::<Interaction>::new())]);
    while let Some((term, word)) = queue.pop_front() {
        all.insert(Word::Finite(word.clone()));
        let steps = lts.steps(&term)?;
        if word.len() == max_len || steps.is_empty() {
            maximal.push(Word::Finite(word));
            continue;
        }
        for (alpha, succ) in steps {
            let mut w2 = word.clone();
            w2.push(alpha);
            queue.push_back((succ, w2));
        }
    }
    Ok((maximal, all))
}

/// Finite-state quotient of the step relation, as a choreography automaton.
/// The reachable-term set is not finite in general; exceeding the budget is
/// an error, never a silent truncation.
pub fn gt_to_chaut(g: &GlobalType, budget: usize) -> Result<ChorAutomaton, GtError> {
    let mut lts = GtLts::new(budget);
    let root = g.normalize();
    let mut names: HashMap<GlobalType, String> = HashMap::new();
    names.insert(root.clone(), "g0".to_owned());
    let mut order = vec![root.clone()];
    let mut transitions = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(term) = queue.pop_front() {
        let src = names[&term].clone();
        for (alpha, succ) in lts.steps(&term)? {
            let dst = match names.get(&succ) {
                Some(n) => n.clone(),
                None => {
                    if names.len() >= budget {
                        return Err(GtError::BudgetExceeded(budget));
                    }
                    let n = format!("g{}", names.len());
                    names.insert(succ.clone(), n.clone());
                    order.push(succ.clone());
                    queue.push_back(succ.clone());
                    n
                }
            };
            transitions.push((src.clone(), Some(alpha), dst));
        }
    }
    let fsa = Fsa::new("g0", transitions, names.values().cloned());
    Ok(ChorAutomaton::new(fsa).expect("the step relation is deterministic"))
}

/// Local processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Nil,
    In {
        peer: Participant,
        branches: Vec<(Message, Process)>,
    },
    Out {
        peer: Participant,
        branches: Vec<(Message, Process)>,
    },
    PRec(String, Box<Process>),
    PVar(String),
}

impl Process {
    fn subst(&self, var: &str, replacement: &Process) -> Process {
        match self {
            Process::Nil => Process::Nil,
            Process::PVar(v) if v == var => replacement.clone(),
            Process::PVar(v) => Process::PVar(v.clone()),
            Process::PRec(v, _) if v == var => self.clone(),
            Process::PRec(v, body) => {
                Process::PRec(v.clone(), Box::new(body.subst(var, replacement)))
            }
            Process::In { peer, branches } => Process::In {
                peer: peer.clone(),
                branches: branches
                    .iter()
                    .map(|(l, p)| (l.clone(), p.subst(var, replacement)))
                    .collect(),
            },
            Process::Out { peer, branches } => Process::Out {
                peer: peer.clone(),
                branches: branches
                    .iter()
                    .map(|(l, p)| (l.clone(), p.subst(var, replacement)))
                    .collect(),
            },
        }
    }

    /// Unfolds top-level recursion.
    pub fn normalize(&self) -> Process {
        let mut p = self.clone();
        while let Process::PRec(v, body) = &p {
            let unfolded = body.subst(v, &p);
            p = unfolded;
        }
        p
    }

    /// Maximal words of the process language within `max_len`, from the
    /// given owner's point of view.
    pub fn bounded_words(&self, owner: &Participant, max_len: usize) -> BTreeSet<Word<Action>> {
        fn go(
            p: &Process,
            owner: &Participant,
            word: &mut Vec<Action>,
            max_len: usize,
            out: &mut BTreeSet<Word<Action>>,
        ) {
            if word.len() == max_len {
                out.insert(Word::Finite(word.clone()));
                return;
            }
            match p.normalize() {
                Process::Nil => {
                    out.insert(Word::Finite(word.clone()));
                }
                Process::In { peer, branches } => {
                    for (l, cont) in branches {
                        word.push(Action {
                            sender: peer.clone(),
                            receiver: owner.clone(),
                            msg: l.clone(),
                            kind: Direction::Receive,
                        });
                        go(&cont, owner, word, max_len, out);
                        word.pop();
                    }
                }
                Process::Out { peer, branches } => {
                    for (l, cont) in branches {
                        word.push(Action {
                            sender: owner.clone(),
                            receiver: peer.clone(),
                            msg: l.clone(),
                            kind: Direction::Send,
                        });
                        go(&cont, owner, word, max_len, out);
                        word.pop();
                    }
                }
                Process::PRec(..) => unreachable!("normalised"),
                Process::PVar(v) => panic!("free process variable `{v}`"),
            }
        }
        let mut out = BTreeSet::new();
        go(self, owner, &mut Vec::new(), max_len, &mut out);
        out
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Process::Nil => write!(f, "0"),
            Process::PVar(v) => write!(f, "{v}"),
            Process::PRec(v, body) => write!(f, "rec {v} . {body}"),
            Process::In { peer, branches } | Process::Out { peer, branches } => {
                let mark = if matches!(self, Process::In { .. }) {
                    '?'
                } else {
                    '!'
                };
                if branches.len() == 1 {
                    let (l, p) = &branches[0];
                    write!(f, "{peer}{mark}{l} . {p}")
                } else {
                    write!(f, "{peer}{mark}{{ ")?;
                    for (i, (l, p)) in branches.iter().enumerate() {
                        if i > 0 {
                            write!(f, " , ")?;
                        }
                        write!(f, "{l} . {p}")?;
                    }
                    write!(f, " }}")
                }
            }
        }
    }
}

/// Closure of the distinct normalised subterms of a global type, with the
/// branch edges between them.
struct TermGraph {
    terms: Vec<GlobalType>,
    index: HashMap<GlobalType, usize>,
    edges: Vec<Vec<usize>>,
}

impl TermGraph {
    fn build(g: &GlobalType) -> TermGraph {
        let root = g.normalize();
        let mut index = HashMap::new();
        index.insert(root.clone(), 0);
        let mut terms = vec![root.clone()];
        let mut edges: Vec<Vec<usize>> = vec![Vec::new()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let term = terms[i].clone();
            if let GlobalType::Comm { branches, .. } = &term {
                for (_, b) in branches {
                    let bn = b.normalize();
                    let j = match index.get(&bn) {
                        Some(&j) => j,
                        None => {
                            let j = terms.len();
                            index.insert(bn.clone(), j);
                            terms.push(bn);
                            edges.push(Vec::new());
                            queue.push_back(j);
                            j
                        }
                    };
                    edges[i].push(j);
                }
            }
        }
        TermGraph {
            terms,
            index,
            edges,
        }
    }

    fn top_involves(&self, i: usize, x: &Participant) -> bool {
        matches!(&self.terms[i], GlobalType::Comm { sender, receiver, .. }
            if sender == x || receiver == x)
    }

    /// Terms from which an interaction of `x` is reachable (including at the
    /// top).
    fn involving(&self, x: &Participant) -> Vec<bool> {
        let n = self.terms.len();
        let mut out: Vec<bool> = (0..n).map(|i| self.top_involves(i, x)).collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                if !out[i] && self.edges[i].iter().any(|&j| out[j]) {
                    out[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// Whether some cycle avoiding `x` can reach an interaction of `x`,
    /// which makes the occurrence depth of `x` unbounded.
    fn unbounded_depth(&self, x: &Participant) -> bool {
        let n = self.terms.len();
        let involving = self.involving(x);
        // cycles within the x-free subgraph
        let free: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                if self.top_involves(i, x) {
                    Vec::new()
                } else {
                    self.edges[i]
                        .iter()
                        .copied()
                        .filter(|&j| !self.top_involves(j, x))
                        .collect()
                }
            })
            .collect();
        for s in 0..n {
            if self.top_involves(s, x) || !involving[s] {
                continue;
            }
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<usize> = free[s].iter().copied().collect();
            while let Some(t) = queue.pop_front() {
                if t == s {
                    return true;
                }
                if seen.insert(t) {
                    queue.extend(free[t].iter().copied());
                }
            }
        }
        false
    }
}

/// Projection of a global type on one participant.
pub fn project_gt(g: &GlobalType, x: &Participant, mode: Mode) -> Result<Process, Undefined> {
    let graph = TermGraph::build(g);
    if graph.unbounded_depth(x) {
        return Err(Undefined::UnboundedDepth);
    }
    let involving = graph.involving(x);
    let mut in_progress: HashMap<usize, (String, bool)> = HashMap::new();
    let mut counter = 0usize;
    build(
        &graph,
        &involving,
        x,
        mode,
        0,
        &mut in_progress,
        &mut counter,
    )
}

fn build(
    graph: &TermGraph,
    involving: &[bool],
    x: &Participant,
    mode: Mode,
    i: usize,
    in_progress: &mut HashMap<usize, (String, bool)>,
    counter: &mut usize,
) -> Result<Process, Undefined> {
    if !involving[i] {
        return Ok(Process::Nil);
    }
    if let Some((var, used)) = in_progress.get_mut(&i) {
        *used = true;
        return Ok(Process::PVar(var.clone()));
    }
    let GlobalType::Comm {
        sender,
        receiver,
        branches,
    } = &graph.terms[i]
    else {
        return Ok(Process::Nil);
    };
    let var = format!("p{counter}");
    *counter += 1;
    in_progress.insert(i, (var.clone(), false));
    let child = |l: &Message,
                 b: &GlobalType,
                 in_progress: &mut HashMap<usize, (String, bool)>,
                 counter: &mut usize|
     -> Result<(Message, Process), Undefined> {
        let j = graph.index[&b.normalize()];
        Ok((
            l.clone(),
            build(graph, involving, x, mode, j, in_progress, counter)?,
        ))
    };
    let result = (|| {
        if x == sender || x == receiver {
            let mut new_branches = Vec::new();
            for (l, b) in branches {
                new_branches.push(child(l, b, in_progress, counter)?);
            }
            let peer = if x == sender { receiver } else { sender };
            return Ok(if x == sender {
                Process::Out {
                    peer: peer.clone(),
                    branches: new_branches,
                }
            } else {
                Process::In {
                    peer: peer.clone(),
                    branches: new_branches,
                }
            });
        }
        if branches.len() == 1 {
            let (l, b) = &branches[0];
            return Ok(child(l, b, in_progress, counter)?.1);
        }
        // merge of the branch projections
        let mut projections = Vec::new();
        for (l, b) in branches {
            projections.push(child(l, b, in_progress, counter)?.1.normalize());
        }
        let mut in_peer: Option<&Participant> = None;
        let mut out_peer: Option<&Participant> = None;
        for p in &projections {
            match p {
                Process::In { peer, .. } => {
                    if in_peer.is_some_and(|q| q != peer) || out_peer.is_some() {
                        return Err(Undefined::MixedDirections);
                    }
                    in_peer = Some(peer);
                }
                Process::Out { peer, .. } => {
                    if out_peer.is_some_and(|q| q != peer) || in_peer.is_some() {
                        return Err(Undefined::MixedDirections);
                    }
                    out_peer = Some(peer);
                }
                _ => return Err(Undefined::MixedDirections),
            }
        }
        if out_peer.is_some() && mode == Mode::Standard {
            return Err(Undefined::MixedDirections);
        }
        let is_input = in_peer.is_some();
        let peer = in_peer.or(out_peer).expect("non-empty branches").clone();
        let mut merged: BTreeMap<Message, Process> = BTreeMap::new();
        for p in projections {
            let (Process::In { branches, .. } | Process::Out { branches, .. }) = p else {
                unreachable!("checked above");
            };
            for (l, cont) in branches {
                if merged.insert(l, cont).is_some() {
                    return Err(Undefined::MergeClash);
                }
            }
        }
        let merged: Vec<(Message, Process)> = merged.into_iter().collect();
        Ok(if is_input {
            Process::In {
                peer,
                branches: merged,
            }
        } else {
            Process::Out {
                peer,
                branches: merged,
            }
        })
    })();
    let (_, used) = in_progress.remove(&i).expect("marked above");
    let result = result?;
    Ok(if used {
        debug_assert!(result != Process::PVar(var.clone()));
        Process::PRec(var, Box::new(result))
    } else {
        result
    })
}

/// A multiparty session: one process per participant, none mentioning its
/// own name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mps {
    parts: BTreeMap<Participant, Process>,
}

impl Mps {
    pub fn new(parts: BTreeMap<Participant, Process>) -> Self {
        for (p, proc) in &parts {
            debug_assert!(!process_mentions(proc, p), "{p} occurs in its own process");
        }
        Mps { parts }
    }

    pub fn parts(&self) -> &BTreeMap<Participant, Process> {
        &self.parts
    }

    /// Synchronisations currently enabled: a send of `A` to `B` matched by
    /// an input of `B` from `A` on the same label.
    pub fn step(&self) -> Vec<(Interaction, Mps)> {
        let mut out = Vec::new();
        for (a, pa) in &self.parts {
            let Process::Out {
                peer: b,
                branches: out_branches,
            } = pa.normalize()
            else {
                continue;
            };
            let Some(pb) = self.parts.get(&b) else {
                continue;
            };
            let Process::In {
                peer: from,
                branches: in_branches,
            } = pb.normalize()
            else {
                continue;
            };
            if &from != a {
                continue;
            }
            debug_assert!(distinct_labels(&out_branches) && distinct_labels(&in_branches));
            for (label, cont_a) in &out_branches {
                let Some((_, cont_b)) = in_branches.iter().find(|(l, _)| l == label) else {
                    continue;
                };
                let mut next = self.parts.clone();
                next.insert(a.clone(), cont_a.clone());
                next.insert(b.clone(), cont_b.clone());
                out.push((
                    Interaction {
                        sender: a.clone(),
                        receiver: b.clone(),
                        msg: label.clone(),
                    },
                    Mps::new(next),
                ));
            }
        }
        out.sort_by(|(a, _), (b, _)| a.cmp(b));
        out
    }

    /// All traces of the session up to `max_len`. Each label sequence
    /// determines its run (one rule instance per interaction), so the
    /// breadth-first walk meets every trace exactly once.
    pub fn traces(&self, max_len: usize) -> BTreeSet<Word<Interaction>> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([(self.clone(), Vec::<Interaction>::new())]);
        while let Some((m, word)) = queue.pop_front() {
            out.insert(Word::Finite(word.clone()));
            if word.len() == max_len {
                continue;
            }
            for (alpha, next) in m.step() {
                let mut w2 = word.clone();
                w2.push(alpha);
                queue.push_back((next, w2));
            }
        }
        out
    }

    /// The communicating system assigning each participant the bounded
    /// language of its process.
    pub fn to_explicit(&self, max_len: usize) -> Result<ExplicitSystem, LangError> {
        let mut parts = BTreeMap::new();
        for (p, proc) in &self.parts {
            parts.insert(
                p.clone(),
                ExplicitLanguage::from_generators(proc.bounded_words(p, max_len)),
            );
        }
        ExplicitSystem::new(parts)
    }

    /// The system of machines whose languages are exactly the process
    /// languages: states are the distinct unfolded subprocesses.
    pub fn to_cfsm_system(&self) -> Result<crate::cfsm::CfsmSystem, crate::cfsm::CfsmError> {
        let mut machines = BTreeMap::new();
        for (p, proc) in &self.parts {
            machines.insert(p.clone(), process_to_cfsm(p, proc));
        }
        crate::cfsm::CfsmSystem::new(machines)
    }
}

fn process_to_cfsm(owner: &Participant, proc: &Process) -> crate::cfsm::Cfsm {
    let root = proc.normalize();
    let mut names: HashMap<Process, String> = HashMap::new();
    names.insert(root.clone(), "s0".to_owned());
    let mut transitions = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(term) = queue.pop_front() {
        let src = names[&term].clone();
        let branch_actions: Vec<(Action, Process)> = match &term {
            Process::Nil => Vec::new(),
            Process::In { peer, branches } => branches
                .iter()
                .map(|(l, cont)| {
                    (
                        Action {
                            sender: peer.clone(),
                            receiver: owner.clone(),
                            msg: l.clone(),
                            kind: Direction::Receive,
                        },
                        cont.normalize(),
                    )
                })
                .collect(),
            Process::Out { peer, branches } => branches
                .iter()
                .map(|(l, cont)| {
                    (
                        Action {
                            sender: owner.clone(),
                            receiver: peer.clone(),
                            msg: l.clone(),
                            kind: Direction::Send,
                        },
                        cont.normalize(),
                    )
                })
                .collect(),
            Process::PRec(..) | Process::PVar(_) => unreachable!("normalised closed process"),
        };
        for (action, cont) in branch_actions {
            let dst = match names.get(&cont) {
                Some(n) => n.clone(),
                None => {
                    let n = format!("s{}", names.len());
                    names.insert(cont.clone(), n.clone());
                    queue.push_back(cont);
                    n
                }
            };
            transitions.push((src.clone(), Some(action), dst));
        }
    }
    let fsa = Fsa::new("s0", transitions, names.values().cloned());
    crate::cfsm::Cfsm::new(owner.clone(), fsa).expect("projection machines are deterministic")
}

/// The disjoint-union decomposition of branch maps is defined exactly when
/// labels are pairwise distinct.
fn distinct_labels(branches: &[(Message, Process)]) -> bool {
    let labels: BTreeSet<&Message> = branches.iter().map(|(l, _)| l).collect();
    labels.len() == branches.len()
}

fn process_mentions(p: &Process, x: &Participant) -> bool {
    match p {
        Process::Nil | Process::PVar(_) => false,
        Process::PRec(_, body) => process_mentions(body, x),
        Process::In { peer, branches } | Process::Out { peer, branches } => {
            peer == x || branches.iter().any(|(_, b)| process_mentions(b, x))
        }
    }
}

/// Projects a global type on all of its participants.
pub fn mps_of(g: &GlobalType, mode: Mode) -> Result<Mps, Undefined> {
    let mut parts = BTreeMap::new();
    for p in g.participants() {
        parts.insert(p.clone(), project_gt(g, &p, mode)?);
    }
    Ok(Mps::new(parts))
}
