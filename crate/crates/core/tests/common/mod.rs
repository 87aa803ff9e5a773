#![allow(dead_code)]

use braidlike::timeline::{GameMove, GameSpec};
use braidlike::tm::{Action, MachineSpec, State, Symbol};
use rand::Rng;

/// Random nondeterministic machine: `n` states, `s` symbols, up to
/// `max_succ` transitions per (state, symbol), random target.
pub fn random_nondet(rng: &mut impl Rng, n: usize, s: usize, max_succ: usize) -> MachineSpec {
    let mut m = MachineSpec::new(n, s, false).unwrap();
    for q in 0..n {
        for a in 0..s {
            let k = rng.gen_range(0..=max_succ);
            for _ in 0..k {
                let action = random_action(rng, s);
                let next = rng.gen_range(0..n);
                m.add_transition(q, a as Symbol, action, next).unwrap();
            }
        }
    }
    m.set_target(Some(rng.gen_range(0..n))).unwrap();
    m
}

pub fn random_action(rng: &mut impl Rng, s: usize) -> Action {
    match rng.gen_range(0..3) {
        0 => Action::Write(rng.gen_range(0..s) as Symbol),
        1 => Action::MoveLeft,
        _ => Action::MoveRight,
    }
}

/// Every deterministic machine with `n` states over `s` symbols where each
/// (state, symbol) pair has one of: write b, left, right, or nothing, times a
/// next state. Index `i` in `0..count` decodes to one machine.
pub struct DetEnumeration {
    pub n: usize,
    pub s: usize,
    options: Vec<Option<(Action, State)>>,
}

impl DetEnumeration {
    pub fn new(n: usize, s: usize) -> Self {
        let mut options = vec![None];
        let mut actions: Vec<Action> = (0..s).map(|b| Action::Write(b as Symbol)).collect();
        actions.push(Action::MoveLeft);
        actions.push(Action::MoveRight);
        for a in actions {
            for q in 0..n {
                options.push(Some((a, q)));
            }
        }
        Self { n, s, options }
    }

    /// Number of transition tables (accept sets are enumerated separately).
    pub fn tables(&self) -> u64 {
        (self.options.len() as u64).pow((self.n * self.s) as u32)
    }

    pub fn machine(&self, mut index: u64, accept_mask: u32) -> MachineSpec {
        let mut m = MachineSpec::new(self.n, self.s, true).unwrap();
        let base = self.options.len() as u64;
        for q in 0..self.n {
            for a in 0..self.s {
                let pick = (index % base) as usize;
                index /= base;
                if let Some((action, next)) = self.options[pick] {
                    m.add_transition(q, a as Symbol, action, next).unwrap();
                }
            }
        }
        for q in 0..self.n {
            if accept_mask & (1 << q) != 0 {
                m.add_accept(q).unwrap();
            }
        }
        m
    }
}

/// A random toy game: 2 to 4 immune states, 2 timed values, speed 1 to 3,
/// up to two moves per (immune, timed) pair and up to two goal pairs.
pub fn random_game(rng: &mut impl Rng) -> GameSpec {
    let ni = rng.gen_range(2..=4);
    let nt = 2;
    let mut moves = Vec::new();
    for immune in 0..ni {
        for timed in 0..nt {
            for _ in 0..rng.gen_range(0..=2) {
                moves.push(GameMove {
                    immune,
                    timed,
                    next_immune: rng.gen_range(0..ni),
                    next_timed: rng.gen_range(0..nt),
                });
            }
        }
    }
    let goal = (0..rng.gen_range(0..=2))
        .map(|_| (rng.gen_range(0..ni), rng.gen_range(0..nt)))
        .collect();
    GameSpec {
        timed: (0..nt).map(|t| format!("t{t}")).collect(),
        immune: (0..ni).map(|i| format!("i{i}")).collect(),
        moves,
        max_speed: rng.gen_range(1..=3),
        init_immune: 0,
        init_timed: rng.gen_range(0..nt),
        goal,
    }
}
