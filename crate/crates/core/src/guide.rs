//! Tour guides: per-boundary summaries of what happens when the head steps
//! left across a boundary, and the deciders built on them for read-only and
//! deterministic braidlike machines.
//!
//! The guide standing on boundary `(k, k+1)` answers, for every state `q`
//! the head could be in on arriving at cell `k`, one of:
//!
//! * `ReturnInState(x)`: the head comes back to cell `k+1` in state `x`
//!   without having written anything;
//! * `Accept` / `Reject`: the machine halts during the excursion;
//! * `LoopForever`: the excursion never ends;
//! * `DestroyMe`: the head writes at some cell `<= k` before returning,
//!   which erases the guide along with the tape right of the write.
//!
//! A guide depends only on its left neighbour and the symbol on cell `k`,
//! plus the state the head was in when it crossed the boundary for the first
//! time (`creation_state`).

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tm::{Action, MachineSpec, State, Symbol, TmError, BLANK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Response {
    ReturnInState(State),
    Accept,
    Reject,
    LoopForever,
    DestroyMe,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TourGuide {
    /// Indexed by the state the head is in on arriving at the left cell.
    pub answers: Vec<Response>,
    pub creation_state: State,
}

impl TourGuide {
    pub fn answer(&self, q: State) -> Response {
        self.answers[q]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuideError {
    #[error(transparent)]
    Machine(#[from] TmError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// `(N+4)^N * N`: the number of distinct deterministic tour guides.
pub fn det_guide_bound(num_states: usize) -> BigUint {
    let n = BigUint::from(num_states);
    (&n + 4u32).pow(num_states as u32) * n
}

/// `(2^(N+4))^N * N * (N+1)`: response-set maps, times creation states,
/// times destinies (survive, or destroyed with one of `N` last states).
pub fn nondet_guide_bound(num_states: usize) -> BigUint {
    let n = num_states as u64;
    let maps = BigUint::one() << (n * (n + 4));
    maps * BigUint::from(n) * BigUint::from(n + 1)
}

/// Converts a guide bound plus one into a usable cell cap, saturating at
/// `usize::MAX`.
pub fn cell_cap_from_bound(bound: &BigUint) -> usize {
    (bound + 1u32).to_usize().unwrap_or(usize::MAX)
}

/// Computes the guide for boundary `(k, k+1)` from the guide on `(k-1, k)`
/// (`None` at the left wall) and the symbol on cell `k`.
///
/// For each arrival state the head walks locally on cell `k`: a right move
/// returns, a write destroys the guide, and a left move is answered by the
/// left neighbour. Since any write ends the walk, the cell's symbol is fixed
/// throughout, so a repeated state means a loop.
pub fn compute_guide(
    left: Option<&TourGuide>,
    cell_symbol: Symbol,
    spec: &MachineSpec,
    creation_state: State,
) -> Result<TourGuide, GuideError> {
    if !spec.is_deterministic() {
        return Err(TmError::NotDeterministic.into());
    }
    let n = spec.num_states();
    let mut answers = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for q in 0..n {
        visited.iter_mut().for_each(|v| *v = false);
        let mut x = q;
        let answer = loop {
            if spec.is_accepting(x) {
                break Response::Accept;
            }
            if visited[x] {
                break Response::LoopForever;
            }
            visited[x] = true;
            let Some(t) = spec.transitions(x, cell_symbol).first() else {
                break Response::Reject;
            };
            match t.action {
                Action::MoveRight => break Response::ReturnInState(t.next),
                Action::Write(_) => break Response::DestroyMe,
                Action::MoveLeft => match left {
                    // the left move off cell 0 is disabled
                    None => break Response::Reject,
                    Some(g) => match g.answer(t.next) {
                        Response::ReturnInState(y) => x = y,
                        other => break other,
                    },
                },
            }
        };
        answers.push(answer);
    }
    Ok(TourGuide {
        answers,
        creation_state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Accept,
    Reject,
    LoopForever,
}

/// Why a decider concluded [`Behavior::LoopForever`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopReason {
    /// A newly created guide equals a guide that is still alive.
    DuplicateGuide,
    /// The full configuration together with the guide chain repeated.
    RepeatedConfiguration,
    /// A guide answered `LoopForever`.
    GuideAnswer,
    /// The head passed the guide-count cap.
    CellCap,
    /// The head cycled on one cell.
    LocalCycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub behavior: Behavior,
    pub loop_reason: Option<LoopReason>,
    /// Abstract steps: every guide consultation counts as one.
    pub steps: u64,
    pub guides_created: usize,
    pub max_head: usize,
}

impl Decision {
    fn new(behavior: Behavior, loop_reason: Option<LoopReason>, steps: u64, guides_created: usize, max_head: usize) -> Self {
        Self {
            behavior,
            loop_reason,
            steps,
            guides_created,
            max_head,
        }
    }
}

/// Decides a read-only machine on `input` by building guides left to right.
/// The head never moves left concretely; past the input every cell is blank,
/// so a guide repeating there (same answers, same arrival state) means the
/// head marches right forever.
pub fn decide_read_only(spec: &MachineSpec, input: &[Symbol]) -> Result<Decision, GuideError> {
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
    let mut chain: Vec<TourGuide> = Vec::new();
    let mut blank_guides: HashSet<TourGuide> = HashSet::new();
    let mut visited = vec![false; spec.num_states()];
    let mut state = spec.start();
    let mut head = 0usize;
    let mut steps = 0u64;

    let done = |b, r, steps, chain: &Vec<TourGuide>| Ok(Decision::new(b, r, steps, chain.len(), chain.len()));

    loop {
        if spec.is_accepting(state) {
            return done(Behavior::Accept, None, steps, &chain);
        }
        if visited[state] {
            return done(Behavior::LoopForever, Some(LoopReason::LocalCycle), steps, &chain);
        }
        visited[state] = true;
        let symbol = input.get(head).copied().unwrap_or(BLANK);
        let Some(&t) = spec.transitions(state, symbol).first() else {
            return done(Behavior::Reject, None, steps, &chain);
        };
        steps += 1;
        match t.action {
            Action::MoveRight => {
                let guide = compute_guide(chain.last(), symbol, spec, t.next)?;
                if head >= n && !blank_guides.insert(guide.clone()) {
                    return done(Behavior::LoopForever, Some(LoopReason::DuplicateGuide), steps, &chain);
                }
                chain.push(guide);
                head += 1;
                state = t.next;
                visited.iter_mut().for_each(|v| *v = false);
            }
            Action::MoveLeft => {
                if head == 0 {
                    return done(Behavior::Reject, None, steps, &chain);
                }
                match chain[head - 1].answer(t.next) {
                    Response::ReturnInState(y) => state = y,
                    Response::Accept => return done(Behavior::Accept, None, steps, &chain),
                    Response::Reject => return done(Behavior::Reject, None, steps, &chain),
                    Response::LoopForever => {
                        return done(Behavior::LoopForever, Some(LoopReason::GuideAnswer), steps, &chain)
                    }
                    Response::DestroyMe => {
                        return Err(GuideError::Invariant(
                            "read-only guide answered DestroyMe".into(),
                        ))
                    }
                }
            }
            Action::Write(_) => unreachable!("checked read-only"),
        }
    }
}

/// Decides a deterministic braidlike machine started on the blank tape.
///
/// The head carries a chain of guides, one per boundary left of it. Left
/// moves are answered by the top guide; a `DestroyMe` answer pops the guide
/// and the excursion is simulated concretely, and the runtime checks that a
/// write at or left of that boundary happens before the head crosses it
/// rightward again. A write at cell `j` truncates tape and chain to `j`.
pub fn decide_det_braidlike(spec: &MachineSpec) -> Result<Decision, GuideError> {
    decide_det_braidlike_with_cap(spec, cell_cap_from_bound(&det_guide_bound(spec.num_states())))
}

/// As [`decide_det_braidlike`], reporting [`LoopReason::CellCap`] once the
/// head passes `cap`. Below the guide bound plus one that verdict is only a
/// guess.
pub fn decide_det_braidlike_with_cap(spec: &MachineSpec, cap: usize) -> Result<Decision, GuideError> {
    if !spec.is_deterministic() {
        return Err(TmError::NotDeterministic.into());
    }
    let mut state = spec.start();
    let mut head = 0usize;
    let mut tape: Vec<Symbol> = Vec::new();
    let mut chain: Vec<TourGuide> = Vec::new();
    // boundaries whose guide answered DestroyMe and is still owed a write
    let mut owed: Vec<usize> = Vec::new();
    let mut seen: HashSet<(State, usize, Vec<Symbol>, Vec<State>)> = HashSet::new();
    let mut steps = 0u64;
    let mut created = 0usize;
    let mut max_head = 0usize;

    macro_rules! conclude {
        ($b:expr, $r:expr) => {
            return Ok(Decision::new($b, $r, steps, created, max_head))
        };
    }

    loop {
        debug_assert_eq!(chain.len(), head);
        if spec.is_accepting(state) {
            conclude!(Behavior::Accept, None);
        }
        if head > cap {
            conclude!(Behavior::LoopForever, Some(LoopReason::CellCap));
        }
        let creations: Vec<State> = chain.iter().map(|g| g.creation_state).collect();
        if !seen.insert((state, head, tape.clone(), creations)) {
            conclude!(Behavior::LoopForever, Some(LoopReason::RepeatedConfiguration));
        }
        let symbol = tape.get(head).copied().unwrap_or(BLANK);
        let Some(&t) = spec.transitions(state, symbol).first() else {
            conclude!(Behavior::Reject, None);
        };
        steps += 1;
        match t.action {
            Action::Write(b) => {
                tape.truncate(head);
                if b != BLANK {
                    tape.resize(head, BLANK);
                    tape.push(b);
                }
                while tape.last() == Some(&BLANK) {
                    tape.pop();
                }
                chain.truncate(head);
                owed.retain(|&k| k < head);
                state = t.next;
            }
            Action::MoveRight => {
                if owed.contains(&head) {
                    return Err(GuideError::Invariant(format!(
                        "guide on boundary ({head},{}) predicted its destruction, \
                         but the head crossed it without writing",
                        head + 1
                    )));
                }
                let guide = compute_guide(chain.last(), symbol, spec, t.next)?;
                created += 1;
                if chain.contains(&guide) {
                    conclude!(Behavior::LoopForever, Some(LoopReason::DuplicateGuide));
                }
                chain.push(guide);
                head += 1;
                max_head = max_head.max(head);
                state = t.next;
            }
            Action::MoveLeft => {
                if head == 0 {
                    conclude!(Behavior::Reject, None);
                }
                match chain[head - 1].answer(t.next) {
                    Response::ReturnInState(y) => state = y,
                    Response::Accept => conclude!(Behavior::Accept, None),
                    Response::Reject => conclude!(Behavior::Reject, None),
                    Response::LoopForever => {
                        conclude!(Behavior::LoopForever, Some(LoopReason::GuideAnswer))
                    }
                    Response::DestroyMe => {
                        chain.pop();
                        head -= 1;
                        owed.push(head);
                        state = t.next;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(n: usize, s: usize, trans: &[(State, Symbol, Action, State)]) -> MachineSpec {
        let mut m = MachineSpec::new(n, s, true).unwrap();
        for &(q, a, act, nx) in trans {
            m.add_transition(q, a, act, nx).unwrap();
        }
        m
    }

    #[test]
    fn bounds_match_formula() {
        assert_eq!(det_guide_bound(1), BigUint::from(5u32));
        assert_eq!(det_guide_bound(2), BigUint::from(72u32));
        assert_eq!(det_guide_bound(3), BigUint::from(1029u32));
        assert_eq!(nondet_guide_bound(1), BigUint::from(64u32));
        assert_eq!(nondet_guide_bound(2), BigUint::from(24576u32));
        for n in 1..8 {
            assert!(nondet_guide_bound(n) >= det_guide_bound(n));
        }
        assert_eq!(cell_cap_from_bound(&det_guide_bound(2)), 73);
        assert_eq!(cell_cap_from_bound(&nondet_guide_bound(40)), usize::MAX);
    }

    #[test]
    fn guide_all_right_moves() {
        let m = machine(3, 2, &[(0, 1, Action::MoveRight, 1), (1, 1, Action::MoveRight, 2), (2, 1, Action::MoveRight, 0)]);
        let g = compute_guide(None, 1, &m, 0).unwrap();
        assert_eq!(
            g.answers,
            vec![
                Response::ReturnInState(1),
                Response::ReturnInState(2),
                Response::ReturnInState(0)
            ]
        );
    }

    #[test]
    fn guide_write_destroys() {
        let m = machine(2, 2, &[(0, 1, Action::Write(0), 1)]);
        let g = compute_guide(None, 1, &m, 0).unwrap();
        assert_eq!(g.answer(0), Response::DestroyMe);
        assert_eq!(g.answer(1), Response::Reject);
    }

    #[test]
    fn guide_local_two_cycle_loops() {
        // q0 steps left, the left guide sends it back as q1; q1 likewise
        // comes back as q0: the local walk repeats a state.
        let left = TourGuide {
            answers: vec![Response::ReturnInState(1), Response::ReturnInState(0)],
            creation_state: 0,
        };
        let m = machine(2, 2, &[(0, 0, Action::MoveLeft, 0), (1, 0, Action::MoveLeft, 1)]);
        let g = compute_guide(Some(&left), 0, &m, 0).unwrap();
        assert_eq!(g.answer(0), Response::LoopForever);
        assert_eq!(g.answer(1), Response::LoopForever);
    }

    #[test]
    fn guide_wall_and_propagation() {
        let m = machine(2, 2, &[(0, 0, Action::MoveLeft, 1)]);
        assert_eq!(compute_guide(None, 0, &m, 0).unwrap().answer(0), Response::Reject);
        let left = TourGuide {
            answers: vec![Response::Accept, Response::DestroyMe],
            creation_state: 1,
        };
        assert_eq!(compute_guide(Some(&left), 0, &m, 0).unwrap().answer(0), Response::DestroyMe);
    }

    #[test]
    fn nondeterministic_rejected() {
        let m = MachineSpec::new(1, 1, false).unwrap();
        assert!(compute_guide(None, 0, &m, 0).is_err());
        assert!(decide_det_braidlike(&m).is_err());
    }

    #[test]
    fn read_only_scanner() {
        // letters '0'/'1' are symbols 1/2
        let mut m = machine(
            3,
            3,
            &[
                (0, 0, Action::MoveLeft, 1),
                (0, 1, Action::MoveRight, 0),
                (0, 2, Action::MoveRight, 0),
                (1, 2, Action::MoveRight, 2),
            ],
        );
        m.add_accept(2).unwrap();
        assert_eq!(decide_read_only(&m, &[1, 2]).unwrap().behavior, Behavior::Accept);
        assert_eq!(decide_read_only(&m, &[2, 1]).unwrap().behavior, Behavior::Reject);
    }

    #[test]
    fn read_only_drifter_loops() {
        let m = machine(1, 2, &[(0, 0, Action::MoveRight, 0)]);
        let d = decide_read_only(&m, &[]).unwrap();
        assert_eq!(d.behavior, Behavior::LoopForever);
        assert_eq!(d.loop_reason, Some(LoopReason::DuplicateGuide));
    }

    #[test]
    fn det_drifter_duplicate_guides() {
        let m = machine(1, 2, &[(0, 0, Action::MoveRight, 0)]);
        let d = decide_det_braidlike(&m).unwrap();
        assert_eq!(d.behavior, Behavior::LoopForever);
        assert_eq!(d.loop_reason, Some(LoopReason::DuplicateGuide));
    }

    #[test]
    fn det_write_blank_repeats() {
        let m = machine(1, 2, &[(0, 0, Action::Write(0), 0)]);
        let d = decide_det_braidlike(&m).unwrap();
        assert_eq!(d.behavior, Behavior::LoopForever);
        assert_eq!(d.loop_reason, Some(LoopReason::RepeatedConfiguration));
    }

    #[test]
    fn det_destroy_then_write() {
        // write 1, step right, step back left; the guide answers DestroyMe
        // because state 2 overwrites cell 0, then the write accepts
        let mut m = machine(
            4,
            2,
            &[
                (0, 0, Action::Write(1), 1),
                (1, 1, Action::MoveRight, 1),
                (1, 0, Action::MoveLeft, 2),
                (2, 1, Action::Write(0), 3),
            ],
        );
        m.add_accept(3).unwrap();
        let d = decide_det_braidlike(&m).unwrap();
        assert_eq!(d.behavior, Behavior::Accept);
    }
}
