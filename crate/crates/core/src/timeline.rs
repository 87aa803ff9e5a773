//! Rewind timelines, and small time-travel games compiled to braidlike
//! machines.
//!
//! A [`Timeline`] is the undo/redo history of a game: one snapshot per
//! timestep and a cursor on the present. Seeking moves the cursor and never
//! erases anything; recording a new state after seeking back throws away the
//! redo future. That is the braidlike write rule, with the cursor as the
//! head and snapshots as tape cells.
//!
//! Games are read from a small text format:
//!
//! ```text
//! # a door that stays open only in the past
//! timed closed open          # tape alphabet, one value per timestep
//! immune outside inside      # state carried across rewinds
//! speed 2                    # rewind and fast-forward up to 2 steps at once
//! init outside closed
//! move outside closed -> outside open
//! move outside open -> inside open
//! goal inside open
//! ```
//!
//! `speed` defaults to 8. A `move` line is one player action: from the
//! immune state and the current snapshot, it records a new snapshot and sets
//! the immune state. Seeking by up to `speed` steps either way is always
//! allowed and clamps at both ends of the timeline.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tm::{Action, MachineSpec, State, Symbol, TmError, BLANK};

/// Largest `|timed| * |immune|` that [`build_braidlike_from_game`] accepts.
pub const MAX_GAME_PAIRS: usize = 1 << 16;
pub const DEFAULT_MAX_SPEED: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("seek by {delta} exceeds the maximum speed {max_speed}")]
    TooFast { delta: i64, max_speed: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Timeline<T> {
    snapshots: Vec<T>,
    cursor: usize,
}

impl<T: Clone> Timeline<T> {
    pub fn new(initial: T) -> Self {
        Self {
            snapshots: vec![initial],
            cursor: 0,
        }
    }

    pub fn snapshots(&self) -> &[T] {
        &self.snapshots
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn current(&self) -> &T {
        &self.snapshots[self.cursor]
    }

    /// Drops every snapshot after the cursor, appends `s` and moves onto it.
    pub fn record(mut self, s: T) -> Self {
        self.snapshots.truncate(self.cursor + 1);
        self.snapshots.push(s);
        self.cursor += 1;
        self
    }

    /// Moves the cursor by `delta`, clamped to the recorded snapshots.
    pub fn seek(mut self, delta: i64, max_speed: u32) -> Result<Self, TimelineError> {
        if delta.unsigned_abs() > u64::from(max_speed) {
            return Err(TimelineError::TooFast { delta, max_speed });
        }
        self.cursor = self.clamped(delta);
        Ok(self)
    }

    fn clamped(&self, delta: i64) -> usize {
        let last = self.snapshots.len() as i64 - 1;
        (self.cursor as i64).saturating_add(delta).clamp(0, last) as usize
    }

    /// The unit head moves a braidlike machine makes for the same seek.
    pub fn seek_actions(&self, delta: i64) -> Vec<Action> {
        let to = self.clamped(delta);
        if to >= self.cursor {
            vec![Action::MoveRight; to - self.cursor]
        } else {
            vec![Action::MoveLeft; self.cursor - to]
        }
    }
}

/// Tape symbol of timed value `t`; symbol 0 stays blank.
pub fn timed_symbol(t: usize) -> Symbol {
    (t + 1) as Symbol
}

/// The head actions that record timed value `t`.
pub fn record_actions(t: usize) -> [Action; 2] {
    [Action::MoveRight, Action::Write(timed_symbol(t))]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown {kind} state `{name}`")]
    UnknownState {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("game has {pairs} (immune, timed) pairs, more than the cap of {cap}")]
    TooLarge { pairs: usize, cap: usize },
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error(transparent)]
    Machine(#[from] TmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GameMove {
    pub immune: usize,
    pub timed: usize,
    pub next_immune: usize,
    pub next_timed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub timed: Vec<String>,
    pub immune: Vec<String>,
    pub moves: Vec<GameMove>,
    pub max_speed: u32,
    pub init_immune: usize,
    pub init_timed: usize,
    /// `(immune, timed)` pairs in which the player has won.
    pub goal: BTreeSet<(usize, usize)>,
}

impl GameSpec {
    /// Checks every index is in range and the speed is positive.
    pub fn validate(&self) -> Result<(), GameError> {
        let (ni, nt) = (self.immune.len(), self.timed.len());
        let bad = |m: String| Err(GameError::Invalid(m));
        if ni == 0 || nt == 0 {
            return bad("needs at least one timed and one immune state".into());
        }
        if self.max_speed == 0 {
            return bad("speed must be at least 1".into());
        }
        if self.init_immune >= ni || self.init_timed >= nt {
            return bad("initial state out of range".into());
        }
        for m in &self.moves {
            if m.immune >= ni || m.next_immune >= ni || m.timed >= nt || m.next_timed >= nt {
                return bad(format!("move {m:?} out of range"));
            }
        }
        if self.goal.iter().any(|&(i, t)| i >= ni || t >= nt) {
            return bad("goal state out of range".into());
        }
        Ok(())
    }

    pub fn is_goal(&self, immune: usize, timed: usize) -> bool {
        self.goal.contains(&(immune, timed))
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "timed {}", self.timed.join(" "))?;
        writeln!(f, "immune {}", self.immune.join(" "))?;
        writeln!(f, "speed {}", self.max_speed)?;
        writeln!(f, "init {} {}", self.immune[self.init_immune], self.timed[self.init_timed])?;
        for m in &self.moves {
            writeln!(
                f,
                "move {} {} -> {} {}",
                self.immune[m.immune], self.timed[m.timed], self.immune[m.next_immune], self.timed[m.next_timed]
            )?;
        }
        for &(i, t) in &self.goal {
            writeln!(f, "goal {} {}", self.immune[i], self.timed[t])?;
        }
        Ok(())
    }
}

pub fn parse_game(text: &str) -> Result<GameSpec, GameError> {
    let mut timed: Option<Vec<String>> = None;
    let mut immune: Option<Vec<String>> = None;
    let mut speed = DEFAULT_MAX_SPEED;
    let mut init = None;
    let mut moves = Vec::new();
    let mut goal = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let syntax = |message: &str| GameError::Syntax {
            line,
            message: message.to_string(),
        };
        let lookup = |names: &Option<Vec<String>>, kind: &'static str, name: &str| {
            let names = names.as_ref().ok_or(GameError::Syntax {
                line,
                message: format!("`{kind}` must be declared before use"),
            })?;
            names.iter().position(|n| n == name).ok_or(GameError::UnknownState {
                line,
                kind,
                name: name.to_string(),
            })
        };
        let pair = |i: &str, t: &str| -> Result<(usize, usize), GameError> {
            Ok((lookup(&immune, "immune", i)?, lookup(&timed, "timed", t)?))
        };
        match words[0].to_ascii_lowercase().as_str() {
            kw @ ("timed" | "immune") => {
                let names: Vec<String> = words[1..].iter().map(|w| w.to_string()).collect();
                if names.is_empty() {
                    return Err(syntax(&format!("`{kw}` needs at least one state name")));
                }
                if names.iter().collect::<HashSet<_>>().len() != names.len() {
                    return Err(syntax(&format!("duplicate name in `{kw}`")));
                }
                if kw == "timed" {
                    timed = Some(names);
                } else {
                    immune = Some(names);
                }
            }
            "speed" => {
                speed = match words[..] {
                    [_, v] => v.parse().map_err(|_| syntax("expected `speed <k>`"))?,
                    _ => return Err(syntax("expected `speed <k>`")),
                };
            }
            "init" => {
                let [_, i, t] = words[..] else {
                    return Err(syntax("expected `init <immune> <timed>`"));
                };
                init = Some(pair(i, t)?);
            }
            "move" => {
                let [_, i, t, "->", i2, t2] = words[..] else {
                    return Err(syntax("expected `move <immune> <timed> -> <immune> <timed>`"));
                };
                let (immune, timed) = pair(i, t)?;
                let (next_immune, next_timed) = pair(i2, t2)?;
                moves.push(GameMove {
                    immune,
                    timed,
                    next_immune,
                    next_timed,
                });
            }
            "goal" => {
                let [_, i, t] = words[..] else {
                    return Err(syntax("expected `goal <immune> <timed>`"));
                };
                goal.insert(pair(i, t)?);
            }
            other => return Err(syntax(&format!("unknown keyword `{other}`"))),
        }
    }
    let (init_immune, init_timed) = init.ok_or(GameError::Missing("init"))?;
    let game = GameSpec {
        timed: timed.ok_or(GameError::Missing("timed"))?,
        immune: immune.ok_or(GameError::Missing("immune"))?,
        moves,
        max_speed: speed,
        init_immune,
        init_timed,
        goal,
    };
    game.validate()?;
    Ok(game)
}

/// Where each kind of control state of a compiled game lives.
///
/// * `immune(i)`: head on the present snapshot, immune state `i`.
/// * `pending(i, t)`: one cell right of the present, about to record `t`.
/// * `hop_right(i, r)` and `hop_left(i, r)`: mid-seek, `r` more unit moves
///   to go.
/// * `start` writes the initial snapshot; `target` is entered on a win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameLayout {
    pub immune: usize,
    pub timed: usize,
    pub max_speed: u32,
}

impl GameLayout {
    pub fn immune_state(&self, i: usize) -> State {
        i
    }

    pub fn pending(&self, i: usize, t: usize) -> State {
        self.immune + i * self.timed + t
    }

    fn hops(&self) -> usize {
        self.max_speed as usize - 1
    }

    /// `r` in `1..max_speed`.
    pub fn hop_right(&self, i: usize, r: usize) -> State {
        self.immune * (1 + self.timed) + i * self.hops() + (r - 1)
    }

    pub fn hop_left(&self, i: usize, r: usize) -> State {
        self.immune * (1 + self.timed + self.hops()) + i * self.hops() + (r - 1)
    }

    pub fn start(&self) -> State {
        self.immune * (1 + self.timed + 2 * self.hops())
    }

    pub fn target(&self) -> State {
        self.start() + 1
    }

    pub fn num_states(&self) -> usize {
        self.start() + 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameMachine {
    pub spec: MachineSpec,
    pub layout: GameLayout,
}

/// Encodes `game` as a nondeterministic braidlike machine whose target is
/// reachable exactly when the game can be won.
///
/// The tape is the timeline, one timed value per cell, and the head is the
/// cursor. Recording `t` is a right move into `pending(i, t)` followed by
/// writing `t`, which erases the redo future. A seek by `k` is `k` unit
/// moves through hop states. A seek past either end would walk onto a blank
/// cell or off cell 0 and get stuck, which loses nothing: the clamped seek is
/// the same as a shorter one. The target is entered from a winning state by
/// rewriting the current snapshot.
pub fn build_braidlike_from_game(game: &GameSpec) -> Result<GameMachine, GameError> {
    game.validate()?;
    let (ni, nt) = (game.immune.len(), game.timed.len());
    let pairs = ni.saturating_mul(nt);
    if pairs > MAX_GAME_PAIRS || game.max_speed as usize > MAX_GAME_PAIRS {
        return Err(GameError::TooLarge {
            pairs,
            cap: MAX_GAME_PAIRS,
        });
    }
    let layout = GameLayout {
        immune: ni,
        timed: nt,
        max_speed: game.max_speed,
    };
    let mut m = MachineSpec::new(layout.num_states(), nt + 1, false)?;
    m.set_start(layout.start())?;
    m.set_target(Some(layout.target()))?;

    let first = if game.is_goal(game.init_immune, game.init_timed) {
        layout.target()
    } else {
        layout.immune_state(game.init_immune)
    };
    m.add_transition(layout.start(), BLANK, Action::Write(timed_symbol(game.init_timed)), first)?;

    let speed = game.max_speed as usize;
    let mut pending_used = BTreeSet::new();
    for i in 0..ni {
        for t in 0..nt {
            let here = layout.immune_state(i);
            let sym = timed_symbol(t);
            if game.is_goal(i, t) {
                m.add_transition(here, sym, Action::Write(sym), layout.target())?;
            }
            for mv in game.moves.iter().filter(|mv| mv.immune == i && mv.timed == t) {
                let p = layout.pending(mv.next_immune, mv.next_timed);
                m.add_transition(here, sym, Action::MoveRight, p)?;
                pending_used.insert((mv.next_immune, mv.next_timed));
            }
            m.add_transition(here, sym, Action::MoveRight, here)?;
            m.add_transition(here, sym, Action::MoveLeft, here)?;
            for r in 1..speed {
                m.add_transition(here, sym, Action::MoveRight, layout.hop_right(i, r))?;
                m.add_transition(here, sym, Action::MoveLeft, layout.hop_left(i, r))?;
                let (right, left) = if r == 1 {
                    (here, here)
                } else {
                    (layout.hop_right(i, r - 1), layout.hop_left(i, r - 1))
                };
                m.add_transition(layout.hop_right(i, r), sym, Action::MoveRight, right)?;
                m.add_transition(layout.hop_left(i, r), sym, Action::MoveLeft, left)?;
            }
        }
    }
    for (i, t) in pending_used {
        // the cell right of the present may hold stale future or be blank
        for a in 0..=nt as Symbol {
            m.add_transition(
                layout.pending(i, t),
                a,
                Action::Write(timed_symbol(t)),
                layout.immune_state(i),
            )?;
        }
    }
    Ok(GameMachine { spec: m, layout })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameCaps {
    /// Longest timeline kept.
    pub max_len: usize,
    /// Most (timeline, immune state) pairs stored.
    pub max_explored: usize,
}

impl Default for GameCaps {
    fn default() -> Self {
        Self {
            max_len: 16,
            max_explored: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GameVerdict {
    /// `moves` is the length of a shortest winning play.
    Winnable { moves: usize, explored: usize },
    /// `capped` is false when nothing was cut off, so the game is lost
    /// outright.
    NotWinnableWithinCaps { explored: usize, capped: bool },
}

/// Breadth-first search of the game over timelines, without the machine
/// encoding.
pub fn game_search(game: &GameSpec, caps: GameCaps) -> Result<GameVerdict, GameError> {
    game.validate()?;
    type Node = (Timeline<usize>, usize);
    let start: Node = (Timeline::new(game.init_timed), game.init_immune);
    let mut depth: HashMap<Node, usize> = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    let mut capped = false;
    let speed = i64::from(game.max_speed);

    while let Some(node) = queue.pop_front() {
        let (tl, i) = &node;
        let d = depth[&node];
        if game.is_goal(*i, *tl.current()) {
            return Ok(GameVerdict::Winnable {
                moves: d,
                explored: depth.len(),
            });
        }
        let mut next: Vec<Node> = Vec::new();
        for mv in game.moves.iter().filter(|mv| mv.immune == *i && mv.timed == *tl.current()) {
            if tl.cursor() + 2 > caps.max_len {
                capped = true;
                continue;
            }
            next.push((tl.clone().record(mv.next_timed), mv.next_immune));
        }
        for delta in (-speed..=speed).filter(|&k| k != 0) {
            let seeked = tl.clone().seek(delta, game.max_speed).expect("delta within speed");
            next.push((seeked, *i));
        }
        for n in next {
            if depth.contains_key(&n) {
                continue;
            }
            if depth.len() >= caps.max_explored {
                return Ok(GameVerdict::NotWinnableWithinCaps {
                    explored: depth.len(),
                    capped: true,
                });
            }
            depth.insert(n.clone(), d + 1);
            queue.push_back(n);
        }
    }
    Ok(GameVerdict::NotWinnableWithinCaps {
        explored: depth.len(),
        capped,
    })
}
