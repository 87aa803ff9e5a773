//! Target-state reachability for nondeterministic braidlike machines.
//!
//! The exact procedure works on *frontier nodes* `(context, b, p)`: the head
//! is on cell `c` holding `b`, every cell right of `c` is blank, the control
//! state is `p`, and `context` summarizes the prefix `0..c` as seen from cell
//! `c`. A context is a set-valued tour guide restricted to what reachability
//! needs: for each state `q` the head might arrive on cell `c-1` in,
//!
//! * `ret[q]`: the states in which it can first come back to cell `c` without
//!   writing;
//! * `win[q]`: whether the target can be reached from there by a run that
//!   either stays left of `c` without writing, or writes at some cell `< c`
//!   (the write erases everything right of it, so what follows no longer
//!   depends on cell `c` or beyond).
//!
//! From a frontier node, a write stays on the same context, a right move
//! extends the context by `b`, and a left move is answered by the context.
//! Extending a context needs to know whether writes on its last cell lead to
//! the target, which is a reachability fact about the parent's frontier
//! nodes, so contexts and reachability are computed together as a least
//! fixpoint: rounds alternate forward exploration and backward propagation
//! until no new fact appears. Contexts come from a finite set, so this
//! terminates, and every derived fact is witnessed by a real run.
//!
//! `prune` instead runs an explicit search over configurations with the
//! chain of set-valued guides attached, discarding configurations in which
//! two alive guides agree on answers and creation state. That rule omits the
//! destiny annotation, so it is only an experimental accelerator.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::guide::{cell_cap_from_bound, nondet_guide_bound, GuideError, Response};
use crate::oracle::{Trace, TraceStep, MAX_STORED_CELLS};
use crate::tm::{labeled_successors, Action, Configuration, MachineSpec, State, Symbol, TmError, BLANK};

/// Default bound on configurations stored by the pruned search.
pub const DEFAULT_PRUNE_BUDGET: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachVerdict {
    Reached,
    NotReached,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    /// Configurations discarded because of a duplicated guide.
    pub fired: usize,
    pub explored: usize,
    /// False when the search ran out of budget and the exact procedure
    /// supplied the verdict.
    pub resolved: bool,
    pub verdict: Option<ReachVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachDecision {
    pub verdict: ReachVerdict,
    pub contexts: usize,
    pub nodes: usize,
    pub rounds: usize,
    pub prune: Option<PruneReport>,
    pub witness: Option<Trace>,
}

/// Decides whether `spec` can enter its target state from the blank tape.
pub fn decide_reachability(spec: &MachineSpec, prune: bool) -> Result<ReachDecision, GuideError> {
    decide_reachability_with_budget(spec, prune, DEFAULT_PRUNE_BUDGET)
}

pub fn decide_reachability_with_budget(
    spec: &MachineSpec,
    prune: bool,
    prune_budget: usize,
) -> Result<ReachDecision, GuideError> {
    let target = spec.target().ok_or(TmError::NoTarget)?;
    if prune {
        let cap = cell_cap_from_bound(&nondet_guide_bound(spec.num_states()));
        let report = pruned_search(spec, target, cap, prune_budget);
        if let (true, Some(verdict)) = (report.0.resolved, report.0.verdict) {
            return Ok(ReachDecision {
                verdict,
                contexts: 0,
                nodes: report.0.explored,
                rounds: 0,
                prune: Some(report.0),
                witness: report.1,
            });
        }
        let mut exact = SummaryEngine::new(spec, target).run();
        exact.prune = Some(report.0);
        return Ok(exact);
    }
    Ok(SummaryEngine::new(spec, target).run())
}

type CtxId = usize;
type Node = (CtxId, Symbol, State);

const WALL: CtxId = 0;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Context {
    Wall,
    Cells {
        ret: Vec<Vec<State>>,
        win: Vec<bool>,
    },
}

struct SummaryEngine<'a> {
    spec: &'a MachineSpec,
    target: State,
    contexts: Vec<Context>,
    index: HashMap<Context, CtxId>,
    reach: HashSet<Node>,
}

impl<'a> SummaryEngine<'a> {
    fn new(spec: &'a MachineSpec, target: State) -> Self {
        let mut index = HashMap::new();
        index.insert(Context::Wall, WALL);
        Self {
            spec,
            target,
            contexts: vec![Context::Wall],
            index,
            reach: HashSet::new(),
        }
    }

    fn intern(&mut self, c: Context) -> CtxId {
        if let Some(&id) = self.index.get(&c) {
            return id;
        }
        let id = self.contexts.len();
        self.contexts.push(c.clone());
        self.index.insert(c, id);
        id
    }

    /// Context of `prefix ++ [b]` given the context of `prefix`, plus the
    /// frontier nodes that writes on the new cell lead to.
    fn extend(&self, parent: CtxId, b: Symbol) -> (Context, Vec<Node>) {
        let n = self.spec.num_states();
        let mut ret = vec![Vec::new(); n];
        let mut win = vec![false; n];
        let mut write_nodes = Vec::new();
        let mut seen = vec![false; n];
        for q in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            let mut returns = BTreeSet::new();
            let mut stack = vec![q];
            seen[q] = true;
            while let Some(x) = stack.pop() {
                if x == self.target {
                    win[q] = true;
                }
                for t in self.spec.transitions(x, b) {
                    match t.action {
                        Action::MoveRight => {
                            returns.insert(t.next);
                        }
                        Action::Write(w) => {
                            let node = (parent, w, t.next);
                            write_nodes.push(node);
                            if self.reach.contains(&node) {
                                win[q] = true;
                            }
                        }
                        Action::MoveLeft => {
                            if let Context::Cells { ret: pr, win: pw } = &self.contexts[parent] {
                                if pw[t.next] {
                                    win[q] = true;
                                }
                                for &y in &pr[t.next] {
                                    if !seen[y] {
                                        seen[y] = true;
                                        stack.push(y);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            ret[q] = returns.into_iter().collect();
        }
        (Context::Cells { ret, win }, write_nodes)
    }

    fn run(mut self) -> ReachDecision {
        let root: Node = (WALL, BLANK, self.spec.start());
        let mut rounds = 0;
        let mut nodes: HashSet<Node> = HashSet::new();
        loop {
            rounds += 1;
            // forward: explore frontier nodes under the current knowledge
            let mut child: HashMap<(CtxId, Symbol), CtxId> = HashMap::new();
            let mut succ: HashMap<Node, Vec<Node>> = HashMap::new();
            let mut left_win: HashSet<Node> = HashSet::new();
            let mut queue: VecDeque<Node> = VecDeque::from([root]);
            let mut explored: HashSet<Node> = HashSet::from([root]);
            while let Some(node @ (ctx, b, p)) = queue.pop_front() {
                let mut out = Vec::new();
                for t in self.spec.transitions(p, b) {
                    match t.action {
                        Action::Write(w) => out.push((ctx, w, t.next)),
                        Action::MoveRight => {
                            let id = match child.get(&(ctx, b)) {
                                Some(&id) => id,
                                None => {
                                    let (c, writes) = self.extend(ctx, b);
                                    let id = self.intern(c);
                                    child.insert((ctx, b), id);
                                    for w in writes {
                                        if explored.insert(w) {
                                            queue.push_back(w);
                                        }
                                    }
                                    id
                                }
                            };
                            out.push((id, BLANK, t.next));
                        }
                        Action::MoveLeft => {
                            if let Context::Cells { ret, win } = &self.contexts[ctx] {
                                if win[t.next] {
                                    left_win.insert(node);
                                }
                                out.extend(ret[t.next].iter().map(|&x| (ctx, b, x)));
                            }
                        }
                    }
                }
                for &o in &out {
                    if explored.insert(o) {
                        queue.push_back(o);
                    }
                }
                succ.insert(node, out);
            }

            // backward: propagate reachability to a fixpoint
            let before = self.reach.len();
            let mut changed = true;
            while changed {
                changed = false;
                for (&node, out) in &succ {
                    if self.reach.contains(&node) {
                        continue;
                    }
                    if node.2 == self.target
                        || left_win.contains(&node)
                        || out.iter().any(|o| self.reach.contains(o))
                    {
                        self.reach.insert(node);
                        changed = true;
                    }
                }
            }
            let grew_nodes = explored.iter().any(|n| !nodes.contains(n));
            nodes.extend(explored);
            if self.reach.contains(&root) || (self.reach.len() == before && !grew_nodes) {
                break;
            }
        }
        let verdict = if self.reach.contains(&root) {
            ReachVerdict::Reached
        } else {
            ReachVerdict::NotReached
        };
        ReachDecision {
            verdict,
            contexts: self.contexts.len(),
            nodes: nodes.len(),
            rounds,
            prune: None,
            witness: None,
        }
    }
}

/// What a nondeterministic guide will eventually be told about its fate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Destiny {
    SurviveForever,
    DestroyedWithLastRightState(State),
}

/// A tour guide answering with the set of possible responses.
///
/// `Accept` here means the excursion can enter an accepting state or the
/// target. `destiny` is carried for completeness of the data model; the
/// pruning rule compares only `answers` and `creation_state`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NTourGuide {
    pub answers: Vec<BTreeSet<Response>>,
    pub creation_state: State,
    pub destiny: Option<Destiny>,
}

impl NTourGuide {
    fn same_summary(&self, other: &NTourGuide) -> bool {
        self.answers == other.answers && self.creation_state == other.creation_state
    }
}

/// Set-valued analogue of [`crate::guide::compute_guide`]: local
/// reachability on the cell, closed under the left neighbour's returns.
pub fn compute_nguide(
    left: Option<&NTourGuide>,
    cell_symbol: Symbol,
    spec: &MachineSpec,
    creation_state: State,
) -> NTourGuide {
    let n = spec.num_states();
    let accepting = |q: State| spec.is_accepting(q) || spec.target() == Some(q);
    let mut answers = Vec::with_capacity(n);
    for q in 0..n {
        let mut responses = BTreeSet::new();
        // local graph: state on this cell -> states it can come back in
        let mut edges: HashMap<State, Vec<State>> = HashMap::new();
        let mut order = vec![q];
        let mut seen = HashSet::from([q]);
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            if accepting(x) {
                responses.insert(Response::Accept);
            }
            let ts = spec.transitions(x, cell_symbol);
            if ts.is_empty() {
                responses.insert(Response::Reject);
            }
            let mut next = Vec::new();
            for t in ts {
                match t.action {
                    Action::MoveRight => {
                        responses.insert(Response::ReturnInState(t.next));
                    }
                    Action::Write(_) => {
                        responses.insert(Response::DestroyMe);
                    }
                    Action::MoveLeft => match left {
                        None => {
                            responses.insert(Response::Reject);
                        }
                        Some(g) => {
                            for &r in &g.answers[t.next] {
                                match r {
                                    Response::ReturnInState(y) => next.push(y),
                                    other => {
                                        responses.insert(other);
                                    }
                                }
                            }
                        }
                    },
                }
            }
            for &y in &next {
                if seen.insert(y) {
                    order.push(y);
                }
            }
            edges.insert(x, next);
        }
        if has_cycle(&edges, q) {
            responses.insert(Response::LoopForever);
        }
        answers.push(responses);
    }
    NTourGuide {
        answers,
        creation_state,
        destiny: None,
    }
}

fn has_cycle(edges: &HashMap<State, Vec<State>>, from: State) -> bool {
    // iterative three-colour DFS
    let mut colour: HashMap<State, u8> = HashMap::new();
    let mut stack: Vec<(State, usize)> = vec![(from, 0)];
    colour.insert(from, 1);
    while let Some(&mut (x, ref mut i)) = stack.last_mut() {
        let out = edges.get(&x).map(Vec::as_slice).unwrap_or(&[]);
        if *i < out.len() {
            let y = out[*i];
            *i += 1;
            match colour.get(&y) {
                Some(1) => return true,
                Some(_) => {}
                None => {
                    colour.insert(y, 1);
                    stack.push((y, 0));
                }
            }
        } else {
            colour.insert(x, 2);
            stack.pop();
        }
    }
    false
}

/// Guides alive on cells `0..len`, stored as an interned linked list so
/// configurations sharing a prefix of the tape share its guides.
struct Link {
    guide: NTourGuide,
    parent: Option<usize>,
    len: usize,
}

#[derive(Default)]
struct ChainArena {
    links: Vec<Link>,
    index: HashMap<(Option<usize>, Symbol, State), usize>,
}

impl ChainArena {
    fn len(&self, chain: Option<usize>) -> usize {
        chain.map_or(0, |i| self.links[i].len)
    }

    fn truncate(&self, mut chain: Option<usize>, len: usize) -> Option<usize> {
        while let Some(i) = chain {
            if self.links[i].len <= len {
                break;
            }
            chain = self.links[i].parent;
        }
        chain
    }

    fn holds_same(&self, mut chain: Option<usize>, g: &NTourGuide) -> bool {
        while let Some(i) = chain {
            if self.links[i].guide.same_summary(g) {
                return true;
            }
            chain = self.links[i].parent;
        }
        false
    }

    fn push(&mut self, chain: Option<usize>, symbol: Symbol, guide: NTourGuide) -> usize {
        let key = (chain, symbol, guide.creation_state);
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.links.len();
        self.links.push(Link {
            guide,
            parent: chain,
            len: self.len(chain) + 1,
        });
        self.index.insert(key, i);
        i
    }
}

struct PruneNode {
    config: Rc<Configuration>,
    chain: Option<usize>,
    parent: Option<(usize, TraceStep)>,
}

/// Returns the report and, when the target was reached, a witness.
fn pruned_search(
    spec: &MachineSpec,
    target: State,
    cell_cap: usize,
    budget: usize,
) -> (PruneReport, Option<Trace>) {
    let start = Rc::new(spec.initial_config());
    let mut arena = ChainArena::default();
    let mut stored_cells = start.tape.len();
    let mut index: HashMap<(Rc<Configuration>, Option<usize>), usize> =
        HashMap::from([((start.clone(), None), 0)]);
    let mut nodes = vec![PruneNode {
        config: start,
        chain: None,
        parent: None,
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut fired = 0usize;

    while let Some(i) = queue.pop_front() {
        let config = nodes[i].config.clone();
        let chain = nodes[i].chain;
        if config.state == target {
            let mut steps = Vec::new();
            let mut cur = i;
            while let Some((prev, step)) = nodes[cur].parent {
                steps.push(step);
                cur = prev;
            }
            steps.reverse();
            let report = PruneReport {
                fired,
                explored: nodes.len(),
                resolved: true,
                verdict: Some(ReachVerdict::Reached),
            };
            return (report, Some(Trace { steps }));
        }
        for (t, next) in labeled_successors(spec, &config) {
            if next.head >= cell_cap || next.tape.len() > cell_cap {
                continue;
            }
            let next_chain = match t.action {
                Action::Write(_) => arena.truncate(chain, config.head),
                Action::MoveLeft => chain,
                Action::MoveRight if arena.len(chain) == config.head => {
                    let tail = chain.map(|c| &arena.links[c].guide);
                    let g = compute_nguide(tail, config.read(), spec, t.next);
                    if arena.holds_same(chain, &g) {
                        fired += 1;
                        continue;
                    }
                    Some(arena.push(chain, config.read(), g))
                }
                Action::MoveRight => chain,
            };
            let next = Rc::new(next);
            let k = (next.clone(), next_chain);
            if index.contains_key(&k) {
                continue;
            }
            if nodes.len() >= budget || stored_cells >= MAX_STORED_CELLS {
                let report = PruneReport {
                    fired,
                    explored: nodes.len(),
                    resolved: false,
                    verdict: None,
                };
                return (report, None);
            }
            stored_cells += next.tape.len();
            let step = TraceStep {
                state: config.state,
                read: config.read(),
                head: config.head,
                action: t.action,
                next: t.next,
            };
            index.insert(k, nodes.len());
            queue.push_back(nodes.len());
            nodes.push(PruneNode {
                config: next,
                chain: next_chain,
                parent: Some((i, step)),
            });
        }
    }
    let report = PruneReport {
        fired,
        explored: nodes.len(),
        resolved: true,
        verdict: Some(ReachVerdict::NotReached),
    };
    (report, None)
}
