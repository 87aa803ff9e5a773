//! Brute-force baselines over concrete configurations.
//!
//! Nothing here consults tour guides; these searches only use the step
//! functions in [`crate::tm`], so agreement with the deciders in
//! [`crate::guide`] and [`crate::reach`] is an independent check.

use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tm::{
    apply_action, labeled_successors, Action, Configuration, MachineSpec, State, Symbol, TmError,
    Transition, BLANK,
};

/// Default bound on distinct configurations stored by [`reach_bfs`].
pub const DEFAULT_MAX_EXPLORED: usize = 2_000_000;

/// Bound on the total tape cells held by one search, to keep memory flat
/// when configurations are long.
pub const MAX_STORED_CELLS: usize = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Reached,
    NotReachedWithinCaps,
    Accept,
    Reject,
    LoopProven,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub kind: VerdictKind,
    pub explored: usize,
    pub witness: Option<Trace>,
}

impl OracleVerdict {
    fn bare(kind: VerdictKind, explored: usize) -> Self {
        Self {
            kind,
            explored,
            witness: None,
        }
    }
}

/// One executed transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: State,
    pub read: Symbol,
    pub head: usize,
    pub action: Action,
    pub next: State,
}

/// A run from the blank-tape start configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {index}: expected state {expected}, machine is in {actual}")]
    StateMismatch {
        index: usize,
        expected: State,
        actual: State,
    },
    #[error("step {index}: transition not in the machine's table")]
    NoSuchTransition { index: usize },
    #[error("step {index}: head or read symbol disagrees with the tape")]
    TapeMismatch { index: usize },
    #[error("step {index}: left move from cell 0")]
    Stuck { index: usize },
}

impl Trace {
    /// Re-executes the trace, checking every step against `spec`, and returns
    /// the final configuration.
    pub fn replay(&self, spec: &MachineSpec) -> Result<Configuration, ReplayError> {
        let mut c = spec.initial_config();
        for (index, s) in self.steps.iter().enumerate() {
            if s.state != c.state {
                return Err(ReplayError::StateMismatch {
                    index,
                    expected: s.state,
                    actual: c.state,
                });
            }
            if s.head != c.head || s.read != c.read() {
                return Err(ReplayError::TapeMismatch { index });
            }
            let t = Transition {
                action: s.action,
                next: s.next,
            };
            if !spec.transitions(c.state, c.read()).contains(&t) {
                return Err(ReplayError::NoSuchTransition { index });
            }
            c = apply_action(&c, s.action, s.next).ok_or(ReplayError::Stuck { index })?;
        }
        Ok(c)
    }

    pub fn final_state(&self, spec: &MachineSpec) -> State {
        self.steps.last().map_or(spec.start(), |s| s.next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Machine(#[from] TmError),
    #[error("cell cap must be at least 1")]
    ZeroCap,
}

/// One stored configuration with the index of its predecessor.
struct Visited {
    config: Rc<Configuration>,
    parent: Option<(usize, Transition)>,
}

fn rebuild_trace(nodes: &[Visited], end: usize) -> Trace {
    let mut steps = Vec::new();
    let mut cur = end;
    while let Some((prev, t)) = nodes[cur].parent {
        let p = &nodes[prev].config;
        steps.push(TraceStep {
            state: p.state,
            read: p.read(),
            head: p.head,
            action: t.action,
            next: t.next,
        });
        cur = prev;
    }
    steps.reverse();
    Trace { steps }
}

/// Breadth-first reachability of the target state, keeping only
/// configurations whose head and tape fit in `cell_cap` cells.
pub fn reach_bfs(spec: &MachineSpec, cell_cap: usize) -> Result<OracleVerdict, OracleError> {
    reach_bfs_with_budget(spec, cell_cap, DEFAULT_MAX_EXPLORED)
}

/// As [`reach_bfs`] with an explicit bound on stored configurations. The
/// search also stops once the stored tapes total [`MAX_STORED_CELLS`]. When
/// either limit is hit the verdict is `NotReachedWithinCaps` if
/// [`abstract_unreachable`] proves the target unreachable, else `Unresolved`.
pub fn reach_bfs_with_budget(
    spec: &MachineSpec,
    cell_cap: usize,
    max_explored: usize,
) -> Result<OracleVerdict, OracleError> {
    let target = spec.target().ok_or(TmError::NoTarget)?;
    if cell_cap == 0 {
        return Err(OracleError::ZeroCap);
    }
    let start = Rc::new(spec.initial_config());
    let mut stored_cells = start.tape.len();
    let mut index: HashMap<Rc<Configuration>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![Visited {
        config: start,
        parent: None,
    }];
    let mut queue = VecDeque::from([0usize]);
    let fits = |c: &Configuration| c.head < cell_cap && c.tape.len() <= cell_cap;

    while let Some(i) = queue.pop_front() {
        let c = nodes[i].config.clone();
        if c.state == target {
            return Ok(OracleVerdict {
                kind: VerdictKind::Reached,
                explored: nodes.len(),
                witness: Some(rebuild_trace(&nodes, i)),
            });
        }
        for (t, next) in labeled_successors(spec, &c) {
            if !fits(&next) || index.contains_key(&next) {
                continue;
            }
            if nodes.len() >= max_explored || stored_cells >= MAX_STORED_CELLS {
                let kind = if abstract_unreachable(spec) {
                    VerdictKind::NotReachedWithinCaps
                } else {
                    VerdictKind::Unresolved
                };
                return Ok(OracleVerdict::bare(kind, nodes.len()));
            }
            stored_cells += next.tape.len();
            let next = Rc::new(next);
            index.insert(next.clone(), nodes.len());
            queue.push_back(nodes.len());
            nodes.push(Visited {
                config: next,
                parent: Some((i, t)),
            });
        }
    }
    Ok(OracleVerdict::bare(
        VerdictKind::NotReachedWithinCaps,
        nodes.len(),
    ))
}

/// Sound over-approximation: returns true only if no run can enter the
/// target. Tracks which states are enterable and which symbols can ever be
/// under the head (blank, plus anything some enabled transition writes),
/// ignoring positions entirely.
pub fn abstract_unreachable(spec: &MachineSpec) -> bool {
    let Some(target) = spec.target() else {
        return true;
    };
    let mut states = vec![false; spec.num_states()];
    let mut symbols = vec![false; spec.num_symbols()];
    states[spec.start()] = true;
    symbols[BLANK as usize] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for (q, a, t) in spec.iter_transitions() {
            if !states[q] || !symbols[a as usize] {
                continue;
            }
            if !states[t.next] {
                states[t.next] = true;
                changed = true;
            }
            if let Action::Write(b) = t.action {
                if !symbols[b as usize] {
                    symbols[b as usize] = true;
                    changed = true;
                }
            }
        }
    }
    !states[target]
}

/// Direct simulation of a deterministic machine from the blank tape,
/// proving loops by exact configuration repetition.
pub fn det_behavior_oracle(
    spec: &MachineSpec,
    max_steps: u64,
    max_cells: usize,
) -> Result<OracleVerdict, OracleError> {
    if !spec.is_deterministic() {
        return Err(TmError::NotDeterministic.into());
    }
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut c = spec.initial_config();
    let mut trace = Trace::default();
    loop {
        if spec.is_accepting(c.state) {
            return Ok(OracleVerdict {
                kind: VerdictKind::Accept,
                explored: seen.len(),
                witness: Some(trace),
            });
        }
        if !seen.insert(c.clone()) {
            return Ok(OracleVerdict::bare(VerdictKind::LoopProven, seen.len()));
        }
        if c.steps >= max_steps || c.head > max_cells {
            return Ok(OracleVerdict::bare(VerdictKind::Unresolved, seen.len()));
        }
        let Some(&t) = spec.transitions(c.state, c.read()).first() else {
            return Ok(OracleVerdict::bare(VerdictKind::Reject, seen.len()));
        };
        let Some(next) = apply_action(&c, t.action, t.next) else {
            return Ok(OracleVerdict::bare(VerdictKind::Reject, seen.len()));
        };
        trace.steps.push(TraceStep {
            state: c.state,
            read: c.read(),
            head: c.head,
            action: t.action,
            next: t.next,
        });
        c = next;
    }
}

/// Step ceiling for [`read_only_oracle`]; reaching it means the loop rules
/// below are broken, not that the machine is slow.
const READ_ONLY_HARD_CEILING: u64 = 50_000_000;

/// Deterministic simulation of a read-only machine on `input` (cells
/// `0..input.len()`, blank afterwards).
///
/// Inside the input region plus one blank cell, a repeated `(state, head)`
/// pair proves a loop. Past that the head only reads blanks, so its state
/// sequence ignores the input: within `N` steps a state repeats, and the
/// displacement `d` over that cycle decides the excursion. With `d > 0` the
/// head drifts right forever, with `d = 0` it oscillates in place forever,
/// and with `d < 0` it is fast-forwarded over whole cycles until it is about
/// to re-enter the input region.
pub fn read_only_oracle(spec: &MachineSpec, input: &[Symbol]) -> Result<OracleVerdict, OracleError> {
    if !spec.is_deterministic() {
        return Err(TmError::NotDeterministic.into());
    }
    if !spec.is_read_only() {
        return Err(TmError::NotReadOnly.into());
    }
    if let Some(&bad) = input.iter().find(|&&a| a as usize >= spec.num_symbols()) {
        return Err(TmError::Invalid(format!("input symbol {bad} out of range")).into());
    }
    let n = input.len();
    let read = |h: usize| input.get(h).copied().unwrap_or(BLANK);
    let mut seen: HashSet<(State, usize)> = HashSet::new();
    let mut state = spec.start();
    let mut head = 0usize;
    let mut meter = 0u64;

    let verdict = |kind, seen: &HashSet<(State, usize)>| Ok(OracleVerdict::bare(kind, seen.len()));

    loop {
        meter += 1;
        assert!(meter < READ_ONLY_HARD_CEILING, "read-only oracle failed to terminate");
        if spec.is_accepting(state) {
            return verdict(VerdictKind::Accept, &seen);
        }
        if head > n {
            // Blank excursion starting at cell n+1: simulate until a state
            // repeats or the head comes back to cell n.
            let mut first_visit: HashMap<State, (usize, usize)> = HashMap::new();
            // (state, head) per excursion step
            let mut path: Vec<(State, usize)> = Vec::new();
            let (mut q, mut h) = (state, head);
            loop {
                if spec.is_accepting(q) {
                    return verdict(VerdictKind::Accept, &seen);
                }
                if h <= n {
                    break;
                }
                if let Some(&(i, hi)) = first_visit.get(&q) {
                    let d = h as isize - hi as isize;
                    if d >= 0 {
                        return verdict(VerdictKind::LoopProven, &seen);
                    }
                    // lowest head reached during one cycle, relative to its start
                    let dip = path[i..]
                        .iter()
                        .map(|&(_, ph)| ph as isize - hi as isize)
                        .min()
                        .unwrap_or(0);
                    let drop = -d;
                    // skip whole cycles while the next one stays right of n
                    let room = h as isize + dip - (n as isize + 1);
                    if room > 0 {
                        let skips = room / drop;
                        h = (h as isize - skips * drop) as usize;
                    }
                    first_visit.clear();
                    path.clear();
                    // walk concretely from the new position until back at n
                    loop {
                        if spec.is_accepting(q) {
                            return verdict(VerdictKind::Accept, &seen);
                        }
                        if h <= n {
                            break;
                        }
                        meter += 1;
                        assert!(meter < READ_ONLY_HARD_CEILING, "read-only oracle failed to terminate");
                        let Some(&t) = spec.transitions(q, BLANK).first() else {
                            return verdict(VerdictKind::Reject, &seen);
                        };
                        q = t.next;
                        match t.action {
                            Action::MoveLeft => h -= 1,
                            Action::MoveRight => h += 1,
                            Action::Write(_) => unreachable!("read-only machine"),
                        }
                    }
                    break;
                }
                first_visit.insert(q, (path.len(), h));
                path.push((q, h));
                meter += 1;
                assert!(meter < READ_ONLY_HARD_CEILING, "read-only oracle failed to terminate");
                let Some(&t) = spec.transitions(q, BLANK).first() else {
                    return verdict(VerdictKind::Reject, &seen);
                };
                q = t.next;
                match t.action {
                    Action::MoveLeft => h -= 1,
                    Action::MoveRight => h += 1,
                    Action::Write(_) => unreachable!("read-only machine"),
                }
            }
            state = q;
            head = h;
            continue;
        }
        if !seen.insert((state, head)) {
            return verdict(VerdictKind::LoopProven, &seen);
        }
        let Some(&t) = spec.transitions(state, read(head)).first() else {
            return verdict(VerdictKind::Reject, &seen);
        };
        state = t.next;
        match t.action {
            Action::MoveLeft if head == 0 => return verdict(VerdictKind::Reject, &seen),
            Action::MoveLeft => head -= 1,
            Action::MoveRight => head += 1,
            Action::Write(_) => unreachable!("read-only machine"),
        }
    }
}
