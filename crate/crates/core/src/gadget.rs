//! Counter programs compiled to gadget levels, and the token semantics that
//! runs them.
//!
//! A level is a graph of gadgets. Tim walks the Tim edges one gadget per
//! tick; the counters are monstar tokens held in counter stations. Pulling a
//! lever fires a signal:
//!
//! * `add1 c` puts one more monstar in station `c`;
//! * `remove1 c` releases one monstar from station `c` towards its trap
//!   router, or does nothing when the station is empty;
//! * `open_door r d` drops every monstar waiting at router `r` into the slot
//!   of the branch behind door `d`.
//!
//! A branch sends Tim down its `present` exit (killing the monstar) when its
//! slot holds one, and down its `absent` exit otherwise. Monstars settle
//! before Tim enters his next gadget, so Tim can never beat a monstar to a
//! branch.
//!
//! Compilation is one instruction at a time:
//!
//! | instruction  | gadgets                                                 |
//! |--------------|---------------------------------------------------------|
//! | `add c`      | lever `add1 c`                                          |
//! | `subb c t`   | lever `remove1 c`, lever `open_door`, branch            |
//! | `halt`       | goal                                                    |
//!
//! The branch's `present` exit continues with the next instruction and its
//! `absent` exit jumps to `t`. Running off the end of the program leads to
//! one shared goal. One instruction therefore costs at most 3 ticks and
//! reaching a goal costs 1 more, so a program that halts after `k` steps
//! gives a level solved within `3k + 1` ticks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counter_machine::{cm_step, CounterError, CounterProgram, Instruction, Pc};

pub type GadgetId = usize;
pub type SignalId = usize;

/// Ticks per counter-machine step, at most. See the module docs.
pub const TICKS_PER_STEP: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("malformed level: {0}")]
    Malformed(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid level JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Program(#[from] CounterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Signal {
    Add1 { counter: usize },
    Remove1 { counter: usize },
    OpenDoor { router: GadgetId, door: usize },
}

/// A trap door of a router: opened by `signal`, it drops monstars into the
/// slot of `branch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Door {
    pub signal: SignalId,
    pub branch: GadgetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gadget {
    LeverPull { signal: SignalId },
    /// Its monstar slot is fed through a door of `router`.
    Branch { router: GadgetId },
    CounterStation { counter: usize },
    TrapRouter { counter: usize, doors: Vec<Door> },
    Goal,
    Junction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetNode {
    pub id: GadgetId,
    #[serde(flatten)]
    pub gadget: Gadget,
    /// The instruction this gadget was compiled from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    Next,
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimEdge {
    pub from: GadgetId,
    pub to: GadgetId,
    pub exit: Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonstarEdge {
    pub from: GadgetId,
    pub to: GadgetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub gadgets: Vec<GadgetNode>,
    pub tim_edges: Vec<TimEdge>,
    pub monstar_edges: Vec<MonstarEdge>,
    pub signals: Vec<Signal>,
    pub entry: GadgetId,
    /// Number of counters, and their starting occupancies.
    pub init: Vec<u64>,
    /// First gadget of each instruction, indexed by instruction.
    #[serde(default)]
    pub instruction_entries: Vec<GadgetId>,
    /// Crossings a planar drawing would need; see [`count_crossovers`].
    #[serde(default)]
    pub crossovers: usize,
}

/// Where a released monstar currently is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "at", content = "gadget", rename_all = "snake_case")]
pub enum MonstarAt {
    Router(GadgetId),
    Slot(GadgetId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelConfig {
    pub tim_at: GadgetId,
    /// Occupancy of each counter station, indexed by counter.
    pub counters: Vec<u64>,
    /// Released monstars, sorted so equal multisets compare equal.
    pub in_flight: Vec<MonstarAt>,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LevelStep {
    Moved { config: LevelConfig },
    Solved { ticks: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LevelRun {
    Solved { ticks: u64 },
    NotSolvedWithinBudget { config: LevelConfig },
}

impl Level {
    pub fn gadget(&self, id: GadgetId) -> Option<&Gadget> {
        self.gadgets.get(id).map(|n| &n.gadget)
    }

    pub fn initial_config(&self) -> LevelConfig {
        LevelConfig {
            tim_at: self.entry,
            counters: self.init.clone(),
            in_flight: Vec::new(),
            ticks: 0,
        }
    }

    /// The instruction whose first gadget is `id`.
    pub fn boundary(&self, id: GadgetId) -> Option<usize> {
        self.instruction_entries.iter().position(|&g| g == id)
    }

    fn exit(&self, from: GadgetId, exit: Exit) -> Option<GadgetId> {
        self.tim_edges
            .iter()
            .find(|e| e.from == from && e.exit == exit)
            .map(|e| e.to)
    }

    /// The router a station releases monstars towards.
    fn router_of(&self, counter: usize) -> Option<GadgetId> {
        let station = self
            .gadgets
            .iter()
            .find(|n| n.gadget == Gadget::CounterStation { counter })?
            .id;
        self.monstar_edges
            .iter()
            .find(|e| e.from == station)
            .map(|e| e.to)
    }

    /// Checks the structural invariants every well-formed level satisfies.
    pub fn validate(&self) -> Result<(), LevelError> {
        let bad = |m: String| Err(LevelError::Malformed(m));
        let n = self.gadgets.len();
        for (i, node) in self.gadgets.iter().enumerate() {
            if node.id != i {
                return bad(format!("gadget at position {i} has id {}", node.id));
            }
        }
        if self.entry >= n {
            return bad(format!("entry {} is not a gadget", self.entry));
        }
        for e in &self.tim_edges {
            if e.from >= n || e.to >= n {
                return bad(format!("Tim edge {} -> {} leaves the level", e.from, e.to));
            }
        }
        for e in &self.monstar_edges {
            if e.from >= n || e.to >= n {
                return bad(format!("monstar edge {} -> {} leaves the level", e.from, e.to));
            }
        }
        for &g in &self.instruction_entries {
            if g >= n {
                return bad(format!("instruction entry {g} is not a gadget"));
            }
        }
        let counters = self.init.len();
        let out = |id: GadgetId| -> Vec<Exit> {
            self.tim_edges.iter().filter(|e| e.from == id).map(|e| e.exit).collect()
        };
        for node in &self.gadgets {
            let exits = out(node.id);
            match &node.gadget {
                Gadget::LeverPull { signal } => {
                    if *signal >= self.signals.len() {
                        return bad(format!("lever {} fires undeclared signal {signal}", node.id));
                    }
                    if exits != [Exit::Next] {
                        return bad(format!("lever {} needs exactly one `next` exit", node.id));
                    }
                }
                Gadget::Junction => {
                    if exits != [Exit::Next] {
                        return bad(format!("junction {} needs exactly one `next` exit", node.id));
                    }
                }
                Gadget::Branch { router } => {
                    let mut sorted = exits.clone();
                    sorted.sort_by_key(|e| *e as u8);
                    if sorted != [Exit::Present, Exit::Absent] {
                        return bad(format!(
                            "branch {} needs one `present` and one `absent` exit",
                            node.id
                        ));
                    }
                    if !matches!(self.gadget(*router), Some(Gadget::TrapRouter { .. })) {
                        return bad(format!("branch {} is fed by non-router {router}", node.id));
                    }
                }
                Gadget::Goal | Gadget::CounterStation { .. } | Gadget::TrapRouter { .. } => {
                    if !exits.is_empty() {
                        return bad(format!("gadget {} is not walkable but has Tim exits", node.id));
                    }
                }
            }
            match &node.gadget {
                Gadget::CounterStation { counter } | Gadget::TrapRouter { counter, .. }
                    if *counter >= counters =>
                {
                    return bad(format!("gadget {} names counter {counter} of {counters}", node.id));
                }
                Gadget::TrapRouter { doors, .. } => {
                    for d in doors {
                        if d.signal >= self.signals.len() {
                            return bad(format!("router {} door uses undeclared signal", node.id));
                        }
                        if !matches!(self.gadget(d.branch), Some(Gadget::Branch { router }) if *router == node.id) {
                            return bad(format!("router {} door leads to {} which it does not feed", node.id, d.branch));
                        }
                        if !self.monstar_edges.contains(&MonstarEdge { from: node.id, to: d.branch }) {
                            return bad(format!("router {} has no monstar edge to {}", node.id, d.branch));
                        }
                    }
                }
                _ => {}
            }
        }
        for (id, signal) in self.signals.iter().enumerate() {
            match *signal {
                Signal::Add1 { counter } | Signal::Remove1 { counter } if counter >= counters => {
                    return bad(format!("signal {id} names counter {counter} of {counters}"));
                }
                Signal::Remove1 { counter } => {
                    let station = self
                        .gadgets
                        .iter()
                        .filter(|n| n.gadget == Gadget::CounterStation { counter })
                        .map(|n| n.id)
                        .collect::<Vec<_>>();
                    let [station] = station[..] else {
                        return bad(format!("counter {counter} needs exactly one station"));
                    };
                    let routers = self
                        .monstar_edges
                        .iter()
                        .filter(|e| e.from == station)
                        .filter(|e| matches!(self.gadget(e.to), Some(Gadget::TrapRouter { .. })))
                        .count();
                    if routers != 1 {
                        return bad(format!(
                            "counter {counter} feeds {routers} routers, expected exactly one"
                        ));
                    }
                }
                Signal::OpenDoor { router, door } => {
                    let Some(Gadget::TrapRouter { doors, .. }) = self.gadget(router) else {
                        return bad(format!("signal {id} opens a door of non-router {router}"));
                    };
                    if doors.get(door).map(|d| d.signal) != Some(id) {
                        return bad(format!("signal {id} opens door {door} of {router}, which is not wired to it"));
                    }
                }
                Signal::Add1 { .. } => {}
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("levels always serialize")
    }

    /// Parses and validates a level.
    pub fn from_json(text: &str) -> Result<Self, LevelError> {
        let level: Level = serde_json::from_str(text).map_err(|e| LevelError::Json(e.to_string()))?;
        level.validate()?;
        Ok(level)
    }

    /// Graphviz rendering: Tim edges solid, monstar edges dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph level {\n  rankdir=LR;\n");
        for node in &self.gadgets {
            let (label, shape) = match &node.gadget {
                Gadget::LeverPull { signal } => {
                    let what = match self.signals.get(*signal) {
                        Some(Signal::Add1 { counter }) => format!("add1 c{counter}"),
                        Some(Signal::Remove1 { counter }) => format!("remove1 c{counter}"),
                        Some(Signal::OpenDoor { router, door }) => format!("open g{router}.{door}"),
                        None => "?".into(),
                    };
                    (format!("lever\\n{what}"), "box")
                }
                Gadget::Branch { .. } => ("branch".into(), "diamond"),
                Gadget::CounterStation { counter } => (format!("counter c{counter}"), "cylinder"),
                Gadget::TrapRouter { counter, .. } => (format!("router c{counter}"), "trapezium"),
                Gadget::Goal => ("goal".into(), "doublecircle"),
                Gadget::Junction => ("junction".into(), "point"),
            };
            let tag = node.instruction.map(|i| format!(" [{i}]")).unwrap_or_default();
            let _ = writeln!(out, "  g{} [label=\"g{}{tag}\\n{label}\", shape={shape}];", node.id, node.id);
        }
        for e in &self.tim_edges {
            let label = match e.exit {
                Exit::Next => String::new(),
                Exit::Present => ", label=\"present\"".into(),
                Exit::Absent => ", label=\"absent\"".into(),
            };
            let _ = writeln!(out, "  g{} -> g{} [style=solid{label}];", e.from, e.to);
        }
        for e in &self.monstar_edges {
            let _ = writeln!(out, "  g{} -> g{} [style=dashed];", e.from, e.to);
        }
        out.push_str("}\n");
        out
    }
}

/// Compiles `program` into a level whose gadgets are numbered counter
/// stations first, then routers, then instructions in program order, then
/// the shared goal for running off the end.
pub fn compile(program: &CounterProgram) -> Level {
    let ins = program.instructions();
    let len = ins.len();
    let mut used = BTreeSet::new();
    let mut subtracted = BTreeSet::new();
    for i in ins {
        match *i {
            Instruction::Add { counter } => {
                used.insert(counter);
            }
            Instruction::SubBranch { counter, .. } => {
                used.insert(counter);
                subtracted.insert(counter);
            }
            Instruction::Halt => {}
        }
    }

    let mut gadgets: Vec<GadgetNode> = Vec::new();
    let push = |gadgets: &mut Vec<GadgetNode>, gadget: Gadget, instruction: Option<usize>| {
        gadgets.push(GadgetNode {
            id: gadgets.len(),
            gadget,
            instruction,
        });
        gadgets.len() - 1
    };
    let mut station = vec![None; program.num_counters()];
    for &c in &used {
        station[c] = Some(push(&mut gadgets, Gadget::CounterStation { counter: c }, None));
    }
    let mut router = vec![None; program.num_counters()];
    for &c in &subtracted {
        router[c] = Some(push(
            &mut gadgets,
            Gadget::TrapRouter {
                counter: c,
                doors: Vec::new(),
            },
            None,
        ));
    }

    // ids of each instruction's gadgets are fixed before wiring
    let mut entries = Vec::with_capacity(len);
    let mut next_id = gadgets.len();
    for i in ins {
        entries.push(next_id);
        next_id += match i {
            Instruction::SubBranch { .. } => 3,
            _ => 1,
        };
    }
    let falls_off = match ins.last() {
        Some(Instruction::Halt) => false,
        _ => true,
    };
    let end_goal = next_id;
    let target = |pc: usize| if pc < len { entries[pc] } else { end_goal };

    let mut signals = Vec::new();
    let mut tim_edges = Vec::new();
    let mut monstar_edges = Vec::new();
    for (pc, instruction) in ins.iter().enumerate() {
        match *instruction {
            Instruction::Add { counter } => {
                signals.push(Signal::Add1 { counter });
                let lever = push(&mut gadgets, Gadget::LeverPull { signal: signals.len() - 1 }, Some(pc));
                tim_edges.push(TimEdge { from: lever, to: target(pc + 1), exit: Exit::Next });
            }
            Instruction::SubBranch { counter, target: goto } => {
                let r = router[counter].expect("router exists for every subtracted counter");
                signals.push(Signal::Remove1 { counter });
                let remove = push(&mut gadgets, Gadget::LeverPull { signal: signals.len() - 1 }, Some(pc));
                let Gadget::TrapRouter { doors, .. } = &gadgets[r].gadget else {
                    unreachable!("router ids point at routers")
                };
                let door = doors.len();
                signals.push(Signal::OpenDoor { router: r, door });
                let open = push(&mut gadgets, Gadget::LeverPull { signal: signals.len() - 1 }, Some(pc));
                let branch = push(&mut gadgets, Gadget::Branch { router: r }, Some(pc));
                if let Gadget::TrapRouter { doors, .. } = &mut gadgets[r].gadget {
                    doors.push(Door { signal: signals.len() - 1, branch });
                }
                monstar_edges.push(MonstarEdge { from: r, to: branch });
                tim_edges.push(TimEdge { from: remove, to: open, exit: Exit::Next });
                tim_edges.push(TimEdge { from: open, to: branch, exit: Exit::Next });
                tim_edges.push(TimEdge { from: branch, to: target(pc + 1), exit: Exit::Present });
                tim_edges.push(TimEdge { from: branch, to: target(goto), exit: Exit::Absent });
            }
            Instruction::Halt => {
                push(&mut gadgets, Gadget::Goal, Some(pc));
            }
        }
    }
    if falls_off {
        push(&mut gadgets, Gadget::Goal, None);
    }
    for &c in &subtracted {
        monstar_edges.insert(0, MonstarEdge {
            from: station[c].expect("station exists for every used counter"),
            to: router[c].expect("router exists for every subtracted counter"),
        });
    }
    monstar_edges.sort_by_key(|e| (e.from, e.to));

    let mut level = Level {
        gadgets,
        tim_edges,
        monstar_edges,
        signals,
        entry: entries[0],
        init: program.init().to_vec(),
        instruction_entries: entries,
        crossovers: 0,
    };
    level.crossovers = count_crossovers(&level);
    level
}

/// Crossings in a one-page drawing: gadgets on a line in id order, every
/// edge drawn as an arc above it. Two arcs cross when their endpoints
/// interleave. Only an estimate of the crossover gadgets a real course needs.
pub fn count_crossovers(level: &Level) -> usize {
    let arcs: Vec<(usize, usize)> = level
        .tim_edges
        .iter()
        .map(|e| (e.from, e.to))
        .chain(level.monstar_edges.iter().map(|e| (e.from, e.to)))
        .map(|(a, b)| (a.min(b), a.max(b)))
        .filter(|(a, b)| b > a)
        .collect();
    let mut crossings = 0;
    for (i, &(a, b)) in arcs.iter().enumerate() {
        for &(c, d) in &arcs[i + 1..] {
            if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                crossings += 1;
            }
        }
    }
    crossings
}

/// One tick: Tim acts on the gadget he stands on and walks to the next.
pub fn level_step(level: &Level, c: &LevelConfig) -> Result<LevelStep, LevelError> {
    let gadget = level
        .gadget(c.tim_at)
        .ok_or_else(|| LevelError::Malformed(format!("Tim stands on missing gadget {}", c.tim_at)))?;
    let mut next = c.clone();
    next.ticks += 1;
    let missing = |exit: Exit| {
        LevelError::Malformed(format!("gadget {} has no {exit:?} exit", c.tim_at))
    };
    match gadget {
        Gadget::Goal => return Ok(LevelStep::Solved { ticks: next.ticks }),
        Gadget::Junction => {
            next.tim_at = level.exit(c.tim_at, Exit::Next).ok_or_else(|| missing(Exit::Next))?;
        }
        Gadget::LeverPull { signal } => {
            fire(level, &mut next, *signal)?;
            next.tim_at = level.exit(c.tim_at, Exit::Next).ok_or_else(|| missing(Exit::Next))?;
        }
        Gadget::Branch { .. } => {
            let slot = MonstarAt::Slot(c.tim_at);
            let exit = match next.in_flight.iter().position(|&m| m == slot) {
                Some(i) => {
                    next.in_flight.remove(i);
                    Exit::Present
                }
                None => Exit::Absent,
            };
            next.tim_at = level.exit(c.tim_at, exit).ok_or_else(|| missing(exit))?;
        }
        Gadget::CounterStation { .. } | Gadget::TrapRouter { .. } => {
            return Err(LevelError::Malformed(format!(
                "Tim cannot stand on gadget {}",
                c.tim_at
            )));
        }
    }
    Ok(LevelStep::Moved { config: next })
}

fn occupancy(c: &mut LevelConfig, counter: usize) -> Result<&mut u64, LevelError> {
    let len = c.counters.len();
    c.counters
        .get_mut(counter)
        .ok_or_else(|| LevelError::Malformed(format!("counter {counter} out of range ({len} counters)")))
}

fn fire(level: &Level, c: &mut LevelConfig, signal: SignalId) -> Result<(), LevelError> {
    let effect = *level
        .signals
        .get(signal)
        .ok_or_else(|| LevelError::Malformed(format!("signal {signal} is not declared")))?;
    match effect {
        Signal::Add1 { counter } => {
            let slot = occupancy(c, counter)?;
            *slot = slot
                .checked_add(1)
                .ok_or(LevelError::Program(CounterError::Overflow { counter }))?;
        }
        Signal::Remove1 { counter } => {
            let slot = occupancy(c, counter)?;
            // an empty counter leaves the bunny nothing to stand on
            if *slot > 0 {
                *slot -= 1;
                let router = level.router_of(counter).ok_or_else(|| {
                    LevelError::Malformed(format!("counter {counter} has no router"))
                })?;
                c.in_flight.push(MonstarAt::Router(router));
            }
        }
        Signal::OpenDoor { router, door } => {
            let Some(Gadget::TrapRouter { doors, .. }) = level.gadget(router) else {
                return Err(LevelError::Malformed(format!("{router} is not a router")));
            };
            let branch = doors
                .get(door)
                .ok_or_else(|| LevelError::Malformed(format!("router {router} has no door {door}")))?
                .branch;
            for m in c.in_flight.iter_mut() {
                if *m == MonstarAt::Router(router) {
                    *m = MonstarAt::Slot(branch);
                }
            }
            let in_slot = c.in_flight.iter().filter(|&&m| m == MonstarAt::Slot(branch)).count();
            if in_slot > 1 {
                return Err(LevelError::Invariant(format!(
                    "branch {branch} holds {in_slot} monstars"
                )));
            }
        }
    }
    c.in_flight.sort();
    Ok(())
}

pub fn level_run(level: &Level, max_ticks: u64) -> Result<LevelRun, LevelError> {
    let mut c = level.initial_config();
    while c.ticks < max_ticks {
        match level_step(level, &c)? {
            LevelStep::Solved { ticks } => return Ok(LevelRun::Solved { ticks }),
            LevelStep::Moved { config } => c = config,
        }
    }
    Ok(LevelRun::NotSolvedWithinBudget { config: c })
}

/// One instruction boundary seen from both sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub step: u64,
    pub pc: Pc,
    pub counters: Vec<u64>,
    /// Instruction whose first gadget Tim stands on; `Halted` once solved.
    pub tim: Pc,
    pub occupancies: Vec<u64>,
    pub ticks: u64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BisimReport {
    pub rows: Vec<BoundaryRow>,
    pub halted: bool,
    pub solved: bool,
    pub steps: u64,
    pub ticks: u64,
    pub pass: bool,
}

/// Runs the counter machine and the compiled level side by side, comparing
/// them at every instruction boundary for up to `max_steps` machine steps.
pub fn bisimulate(program: &CounterProgram, max_steps: u64) -> Result<BisimReport, LevelError> {
    let level = compile(program);
    let mut cm = program.initial_config();
    let mut lv = level.initial_config();
    let mut solved = false;
    let mut rows = Vec::new();
    let row = |cm: &crate::counter_machine::CounterConfig, lv: &LevelConfig, solved: bool| {
        let tim = if solved {
            Pc::Halted
        } else {
            level.boundary(lv.tim_at).map_or(Pc::Halted, Pc::At)
        };
        let matches = cm.pc == tim && cm.counters == lv.counters && lv.in_flight.is_empty();
        BoundaryRow {
            step: cm.steps,
            pc: cm.pc,
            counters: cm.counters.clone(),
            tim,
            occupancies: lv.counters.clone(),
            ticks: lv.ticks,
            matches,
        }
    };
    rows.push(row(&cm, &lv, solved));
    while cm.pc != Pc::Halted && cm.steps < max_steps {
        cm = cm_step(program, &cm)?;
        // walk Tim to the next instruction boundary or the end
        loop {
            match level_step(&level, &lv)? {
                LevelStep::Solved { ticks } => {
                    lv.ticks = ticks;
                    solved = true;
                    break;
                }
                LevelStep::Moved { config } => lv = config,
            }
            if level.boundary(lv.tim_at).is_some() {
                break;
            }
        }
        rows.push(row(&cm, &lv, solved));
        if solved {
            break;
        }
    }
    let halted = cm.pc == Pc::Halted;
    let pass = rows.iter().all(|r| r.matches) && halted == solved;
    Ok(BisimReport {
        rows,
        halted,
        solved,
        steps: cm.steps,
        ticks: lv.ticks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter_machine::{cm_run, parse_counter_program, RunResult};

    fn prog(src: &str) -> CounterProgram {
        parse_counter_program(src).unwrap()
    }

    fn lever_signal(level: &Level, id: GadgetId) -> Signal {
        match level.gadget(id) {
            Some(Gadget::LeverPull { signal }) => level.signals[*signal],
            other => panic!("expected a lever, got {other:?}"),
        }
    }

    #[test]
    fn halt_compiles_to_a_goal_entry() {
        let level = compile(&prog("counters 1\n0: halt"));
        assert_eq!(level.gadget(level.entry), Some(&Gadget::Goal));
        assert!(!level.gadgets.iter().any(|n| matches!(n.gadget, Gadget::CounterStation { .. })));
        assert_eq!(level_run(&level, 10).unwrap(), LevelRun::Solved { ticks: 1 });
    }

    #[test]
    fn add_compiles_to_one_lever_then_goal() {
        let level = compile(&prog("counters 1\n0: add 0\n1: halt"));
        assert_eq!(lever_signal(&level, level.entry), Signal::Add1 { counter: 0 });
        assert_eq!(level.signals.len(), 1);
        assert_eq!(level.exit(level.entry, Exit::Next).and_then(|g| level.gadget(g)), Some(&Gadget::Goal));
        level.validate().unwrap();
    }

    #[test]
    fn subb_compiles_to_two_levers_and_a_branch_looping_back() {
        let level = compile(&prog("counters 1\n0: subb 0 0\n1: halt"));
        let remove = level.entry;
        assert_eq!(lever_signal(&level, remove), Signal::Remove1 { counter: 0 });
        let open = level.exit(remove, Exit::Next).unwrap();
        assert!(matches!(lever_signal(&level, open), Signal::OpenDoor { .. }));
        let branch = level.exit(open, Exit::Next).unwrap();
        assert!(matches!(level.gadget(branch), Some(Gadget::Branch { .. })));
        assert_eq!(level.exit(branch, Exit::Absent), Some(remove));
        assert_eq!(level.gadget(level.exit(branch, Exit::Present).unwrap()), Some(&Gadget::Goal));
        let levers = level.gadgets.iter().filter(|n| matches!(n.gadget, Gadget::LeverPull { .. })).count();
        assert_eq!(levers, 2);
        level.validate().unwrap();
    }

    #[test]
    fn goal_step_solves() {
        let level = compile(&prog("counters 1\n0: halt"));
        let step = level_step(&level, &level.initial_config()).unwrap();
        assert_eq!(step, LevelStep::Solved { ticks: 1 });
    }

    #[test]
    fn add_lever_increments_occupancy() {
        let level = compile(&prog("counters 1\n0: add 0\n1: halt"));
        let LevelStep::Moved { config } = level_step(&level, &level.initial_config()).unwrap() else {
            panic!("lever should not solve");
        };
        assert_eq!(config.counters, vec![1]);
        assert_eq!(level.gadget(config.tim_at), Some(&Gadget::Goal));
    }

    #[test]
    fn remove_on_empty_counter_releases_nothing() {
        let level = compile(&prog("counters 1\n0: subb 0 1\n1: halt"));
        let LevelStep::Moved { config } = level_step(&level, &level.initial_config()).unwrap() else {
            panic!()
        };
        assert_eq!(config.counters, vec![0]);
        assert!(config.in_flight.is_empty());
    }

    #[test]
    fn released_monstar_reaches_the_branch_slot() {
        let level = compile(&prog("counters 1\ninit 1\n0: subb 0 1\n1: halt"));
        let mut c = level.initial_config();
        let mut seen = Vec::new();
        for _ in 0..2 {
            let LevelStep::Moved { config } = level_step(&level, &c).unwrap() else { panic!() };
            seen.push(config.in_flight.clone());
            c = config;
        }
        assert!(matches!(seen[0][..], [MonstarAt::Router(_)]));
        assert_eq!(seen[1], vec![MonstarAt::Slot(c.tim_at)]);
        let LevelStep::Moved { config } = level_step(&level, &c).unwrap() else { panic!() };
        assert!(config.in_flight.is_empty());
        assert_eq!(config.counters, vec![0]);
    }

    #[test]
    fn looper_is_not_solved() {
        let level = compile(&prog("counters 2\n0: add 0\n1: subb 1 0"));
        assert!(matches!(
            level_run(&level, 10_000).unwrap(),
            LevelRun::NotSolvedWithinBudget { .. }
        ));
    }

    #[test]
    fn adder_solved_within_constant_factor() {
        let p = prog("counters 2\ninit 3 4\n0: subb 1 3\n1: add 0\n2: subb 1 0\n3: halt");
        let RunResult::Halted(end) = cm_run(&p, &p.initial_config(), 1000).unwrap() else {
            panic!("adder halts")
        };
        let LevelRun::Solved { ticks } = level_run(&compile(&p), 10_000).unwrap() else {
            panic!("level should be solved")
        };
        assert!(ticks <= TICKS_PER_STEP * end.steps + 1, "{ticks} ticks for {} steps", end.steps);
        assert!(ticks >= end.steps);
    }

    #[test]
    fn bisim_double_add_traces_occupancies() {
        let r = bisimulate(&prog("counters 1\n0: add 0\n1: add 0\n2: halt"), 100).unwrap();
        assert!(r.pass);
        let occ: Vec<Vec<u64>> = r.rows.iter().map(|r| r.occupancies.clone()).collect();
        assert_eq!(occ, vec![vec![0], vec![1], vec![2], vec![2]]);
        assert!(r.halted && r.solved);
    }

    #[test]
    fn bisim_zero_branch_takes_absent_exit() {
        let r = bisimulate(&prog("counters 1\n0: subb 0 1\n1: halt"), 100).unwrap();
        assert!(r.pass);
        assert_eq!(r.rows[1].tim, Pc::At(1));
    }

    #[test]
    fn bisim_looper_passes_unfinished() {
        let r = bisimulate(&prog("counters 2\n0: add 0\n1: subb 1 0"), 1000).unwrap();
        assert!(r.pass);
        assert!(!r.halted && !r.solved);
        assert_eq!(r.steps, 1000);
    }

    #[test]
    fn bisim_fall_off_end() {
        let r = bisimulate(&prog("counters 1\n0: add 0"), 10).unwrap();
        assert!(r.pass && r.halted && r.solved);
        assert_eq!(r.ticks, 2);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let level = compile(&prog("counters 2\n0: subb 1 2\n1: add 0\n2: subb 0 4\n3: add 1\n4: halt"));
        let back = Level::from_json(&level.to_json()).unwrap();
        assert_eq!(back, level);
        let mut broken = level.clone();
        broken.tim_edges.retain(|e| e.exit != Exit::Absent);
        assert!(matches!(broken.validate(), Err(LevelError::Malformed(_))));
    }

    #[test]
    fn dot_styles_edges() {
        let dot = compile(&prog("counters 1\n0: subb 0 0\n1: halt")).to_dot();
        assert!(dot.starts_with("digraph level {"));
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("style=solid, label=\"absent\""));
    }

    #[test]
    fn crossing_count_of_interleaved_gotos() {
        // gadgets 0..4 with arcs (0,2) and (1,3) interleave once
        let level = Level {
            gadgets: (0..4).map(|id| GadgetNode { id, gadget: Gadget::Junction, instruction: None }).collect(),
            tim_edges: vec![
                TimEdge { from: 0, to: 2, exit: Exit::Next },
                TimEdge { from: 3, to: 1, exit: Exit::Next },
            ],
            monstar_edges: vec![],
            signals: vec![],
            entry: 0,
            init: vec![],
            instruction_entries: vec![],
            crossovers: 0,
        };
        assert_eq!(count_crossovers(&level), 1);
    }
}
