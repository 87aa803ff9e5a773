//! Half-infinite-tape Turing machines with the erase-right write rule.
//!
//! Every transition performs exactly one action: write a symbol, move left,
//! or move right. Writing symbol `b` at cell `h` replaces the tape with
//! `tape[0..h] ++ [b]`, erasing everything to the right of the head. Symbol 0
//! is the blank; cells past the end of the stored tape read as blank, and
//! stored tapes never end in a blank.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type State = usize;
pub type Symbol = u32;

pub const BLANK: Symbol = 0;

/// Upper bound on the symbol alphabet; symbols are stored as `u32`.
pub const MAX_SYMBOLS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {what} {value} out of range (limit {limit})")]
    OutOfRange {
        line: usize,
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("line {line}: deterministic machine has two transitions from state {state} on symbol {symbol}")]
    Nondeterministic {
        line: usize,
        state: State,
        symbol: Symbol,
    },
    #[error("missing `{0}` declaration")]
    Missing(&'static str),
    #[error("operation requires a deterministic machine")]
    NotDeterministic,
    #[error("operation requires a read-only machine")]
    NotReadOnly,
    #[error("machine declares no target state")]
    NoTarget,
    #[error("invalid machine: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "symbol", rename_all = "snake_case")]
pub enum Action {
    Write(Symbol),
    MoveLeft,
    MoveRight,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Write(b) => write!(f, "write {b}"),
            Action::MoveLeft => f.write_str("left"),
            Action::MoveRight => f.write_str("right"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub action: Action,
    pub next: State,
}

/// A braidlike machine. Built with [`MachineSpec::new`] plus
/// [`MachineSpec::add_transition`], or parsed from `.btm` text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    num_states: usize,
    num_symbols: usize,
    start: State,
    accept: BTreeSet<State>,
    target: Option<State>,
    deterministic: bool,
    // indexed by state * num_symbols + symbol
    table: Vec<Vec<Transition>>,
}

impl MachineSpec {
    pub fn new(num_states: usize, num_symbols: usize, deterministic: bool) -> Result<Self, TmError> {
        if num_states == 0 {
            return Err(TmError::Invalid("at least one state is required".into()));
        }
        if num_symbols == 0 || num_symbols > MAX_SYMBOLS {
            return Err(TmError::Invalid(format!(
                "symbol count must be in 1..={MAX_SYMBOLS}"
            )));
        }
        Ok(Self {
            num_states,
            num_symbols,
            start: 0,
            accept: BTreeSet::new(),
            target: None,
            deterministic,
            table: vec![Vec::new(); num_states * num_symbols],
        })
    }

    fn check_state(&self, q: State, line: usize) -> Result<(), TmError> {
        if q >= self.num_states {
            return Err(TmError::OutOfRange {
                line,
                what: "state",
                value: q,
                limit: self.num_states,
            });
        }
        Ok(())
    }

    fn check_symbol(&self, a: Symbol, line: usize) -> Result<(), TmError> {
        if a as usize >= self.num_symbols {
            return Err(TmError::OutOfRange {
                line,
                what: "symbol",
                value: a as usize,
                limit: self.num_symbols,
            });
        }
        Ok(())
    }

    pub fn set_start(&mut self, q: State) -> Result<(), TmError> {
        self.check_state(q, 0)?;
        self.start = q;
        Ok(())
    }

    pub fn add_accept(&mut self, q: State) -> Result<(), TmError> {
        self.check_state(q, 0)?;
        self.accept.insert(q);
        Ok(())
    }

    pub fn set_target(&mut self, q: Option<State>) -> Result<(), TmError> {
        if let Some(q) = q {
            self.check_state(q, 0)?;
        }
        self.target = q;
        Ok(())
    }

    pub fn add_transition(
        &mut self,
        state: State,
        symbol: Symbol,
        action: Action,
        next: State,
    ) -> Result<(), TmError> {
        self.add_transition_at(state, symbol, action, next, 0)
    }

    fn add_transition_at(
        &mut self,
        state: State,
        symbol: Symbol,
        action: Action,
        next: State,
        line: usize,
    ) -> Result<(), TmError> {
        self.check_state(state, line)?;
        self.check_state(next, line)?;
        self.check_symbol(symbol, line)?;
        if let Action::Write(b) = action {
            self.check_symbol(b, line)?;
        }
        let idx = state * self.num_symbols + symbol as usize;
        let t = Transition { action, next };
        let slot = &mut self.table[idx];
        if slot.contains(&t) {
            return Ok(());
        }
        if self.deterministic && !slot.is_empty() {
            return Err(TmError::Nondeterministic { line, state, symbol });
        }
        slot.push(t);
        slot.sort();
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn start(&self) -> State {
        self.start
    }

    pub fn accept_states(&self) -> &BTreeSet<State> {
        &self.accept
    }

    pub fn is_accepting(&self, q: State) -> bool {
        self.accept.contains(&q)
    }

    pub fn target(&self) -> Option<State> {
        self.target
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    /// True iff no transition writes.
    pub fn is_read_only(&self) -> bool {
        self.table
            .iter()
            .flatten()
            .all(|t| !matches!(t.action, Action::Write(_)))
    }

    /// Transitions enabled in `state` reading `symbol`. Out-of-range symbols
    /// have none.
    pub fn transitions(&self, state: State, symbol: Symbol) -> &[Transition] {
        if state >= self.num_states || symbol as usize >= self.num_symbols {
            return &[];
        }
        &self.table[state * self.num_symbols + symbol as usize]
    }

    pub fn transition_count(&self) -> usize {
        self.table.iter().map(Vec::len).sum()
    }

    /// Every `(state, symbol, transition)` triple, in table order.
    pub fn iter_transitions(&self) -> impl Iterator<Item = (State, Symbol, Transition)> + '_ {
        self.table.iter().enumerate().flat_map(move |(idx, ts)| {
            let q = idx / self.num_symbols;
            let a = (idx % self.num_symbols) as Symbol;
            ts.iter().map(move |&t| (q, a, t))
        })
    }

    /// The blank-tape start configuration.
    pub fn initial_config(&self) -> Configuration {
        Configuration::new(self.start, 0, Vec::new())
    }

    /// Renders the machine as `.btm` text.
    pub fn to_btm_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("states {}\n", self.num_states));
        out.push_str(&format!("symbols {}\n", self.num_symbols));
        out.push_str(&format!("start {}\n", self.start));
        out.push_str("accept");
        for q in &self.accept {
            out.push_str(&format!(" {q}"));
        }
        out.push('\n');
        if let Some(t) = self.target {
            out.push_str(&format!("target {t}\n"));
        }
        out.push_str(&format!("deterministic {}\n", self.deterministic));
        for (q, a, t) in self.iter_transitions() {
            out.push_str(&format!("trans {q} {a} {} {}\n", t.action, t.next));
        }
        out
    }
}

/// A tape prefix, head position and control state.
///
/// Equality and hashing ignore `steps`; two configurations reached after
/// different numbers of steps are the same configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Configuration {
    pub state: State,
    pub head: usize,
    pub tape: Vec<Symbol>,
    pub steps: u64,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.state == other.state && self.head == other.head && self.tape == other.tape
    }
}

impl Eq for Configuration {}

impl Hash for Configuration {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.state.hash(h);
        self.head.hash(h);
        self.tape.hash(h);
    }
}

impl Configuration {
    /// Builds a canonical configuration (trailing blanks stripped).
    pub fn new(state: State, head: usize, tape: Vec<Symbol>) -> Self {
        let mut c = Self {
            state,
            head,
            tape,
            steps: 0,
        };
        c.canonicalize();
        c
    }

    pub fn read(&self) -> Symbol {
        self.tape.get(self.head).copied().unwrap_or(BLANK)
    }

    pub fn symbol_at(&self, cell: usize) -> Symbol {
        self.tape.get(cell).copied().unwrap_or(BLANK)
    }

    pub fn is_canonical(&self) -> bool {
        self.tape.last() != Some(&BLANK)
    }

    fn canonicalize(&mut self) {
        while self.tape.last() == Some(&BLANK) {
            self.tape.pop();
        }
    }
}

/// Applies one action; `None` when moving left off cell 0.
pub fn apply_action(c: &Configuration, action: Action, next_state: State) -> Option<Configuration> {
    let mut out = c.clone();
    match action {
        // a blank write never needs padding, which matters far from the data
        Action::Write(BLANK) => out.tape.truncate(c.head),
        Action::Write(b) => {
            out.tape.resize(c.head, BLANK);
            out.tape.push(b);
        }
        Action::MoveLeft => out.head = c.head.checked_sub(1)?,
        Action::MoveRight => out.head += 1,
    }
    out.state = next_state;
    out.steps += 1;
    out.canonicalize();
    Some(out)
}

/// Successors paired with the transition that produced them.
pub fn labeled_successors(spec: &MachineSpec, c: &Configuration) -> Vec<(Transition, Configuration)> {
    let mut out: Vec<(Transition, Configuration)> = Vec::new();
    for &t in spec.transitions(c.state, c.read()) {
        if let Some(next) = apply_action(c, t.action, t.next) {
            if !out.iter().any(|(_, o)| *o == next) {
                out.push((t, next));
            }
        }
    }
    out
}

/// All distinct non-stuck successors of `c`.
pub fn successors(spec: &MachineSpec, c: &Configuration) -> Vec<Configuration> {
    labeled_successors(spec, c).into_iter().map(|(_, c)| c).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DetOutcome {
    Accept { steps: u64 },
    Reject { steps: u64 },
    Budget { config: Configuration },
}

/// Runs a deterministic machine from the blank tape.
pub fn run_det(spec: &MachineSpec, max_steps: u64, max_cells: usize) -> Result<DetOutcome, TmError> {
    if !spec.is_deterministic() {
        return Err(TmError::NotDeterministic);
    }
    let mut c = spec.initial_config();
    loop {
        if spec.is_accepting(c.state) {
            return Ok(DetOutcome::Accept { steps: c.steps });
        }
        if c.steps >= max_steps || c.head > max_cells {
            return Ok(DetOutcome::Budget { config: c });
        }
        let Some(&t) = spec.transitions(c.state, c.read()).first() else {
            return Ok(DetOutcome::Reject { steps: c.steps });
        };
        match apply_action(&c, t.action, t.next) {
            Some(next) => c = next,
            None => return Ok(DetOutcome::Reject { steps: c.steps }),
        }
    }
}

/// Parses the `.btm` text format.
pub fn parse_btm(text: &str) -> Result<MachineSpec, TmError> {
    struct Header {
        states: Option<usize>,
        symbols: Option<usize>,
        start: Option<(usize, State)>,
        accept: Option<(usize, Vec<State>)>,
        target: Option<(usize, State)>,
        deterministic: Option<bool>,
    }
    let mut h = Header {
        states: None,
        symbols: None,
        start: None,
        accept: None,
        target: None,
        deterministic: None,
    };
    let mut trans: Vec<(usize, State, Symbol, Action, State)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let lower = content.to_ascii_lowercase();
        let words: Vec<&str> = lower.split_whitespace().collect();
        let syntax = |message: String| TmError::Syntax { line, message };
        let num = |w: &str| -> Result<usize, TmError> {
            w.parse().map_err(|_| TmError::Syntax {
                line,
                message: format!("expected a non-negative integer, found `{w}`"),
            })
        };
        let single = |words: &[&str]| -> Result<usize, TmError> {
            match words {
                [_, v] => num(v),
                _ => Err(TmError::Syntax {
                    line,
                    message: format!("expected `{} <n>`", words[0]),
                }),
            }
        };
        match words[0] {
            "states" => h.states = Some(single(&words)?),
            "symbols" => h.symbols = Some(single(&words)?),
            "start" => h.start = Some((line, single(&words)?)),
            "target" => h.target = Some((line, single(&words)?)),
            "accept" => {
                let qs = words[1..].iter().map(|w| num(w)).collect::<Result<Vec<_>, _>>()?;
                h.accept = Some((line, qs));
            }
            "deterministic" => {
                h.deterministic = Some(match words.get(1..) {
                    Some(["true"]) => true,
                    Some(["false"]) => false,
                    _ => return Err(syntax("expected `deterministic true|false`".into())),
                });
            }
            "trans" => {
                let (q, a, action, next) = match &words[1..] {
                    [q, a, "write", b, n] => (q, a, Action::Write(num(b)? as Symbol), n),
                    [q, a, "left", n] => (q, a, Action::MoveLeft, n),
                    [q, a, "right", n] => (q, a, Action::MoveRight, n),
                    _ => return Err(syntax(format!("malformed transition `{content}`"))),
                };
                let a = num(a)?;
                if a >= MAX_SYMBOLS {
                    return Err(TmError::OutOfRange {
                        line,
                        what: "symbol",
                        value: a,
                        limit: MAX_SYMBOLS,
                    });
                }
                trans.push((line, num(q)?, a as Symbol, action, num(next)?));
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    let states = h.states.ok_or(TmError::Missing("states"))?;
    let symbols = h.symbols.ok_or(TmError::Missing("symbols"))?;
    let mut spec = MachineSpec::new(states, symbols, h.deterministic.unwrap_or(false))?;
    let at_line = |e: TmError, line: usize| match e {
        TmError::OutOfRange {
            what, value, limit, ..
        } => TmError::OutOfRange {
            line,
            what,
            value,
            limit,
        },
        e => e,
    };
    let (line, start) = h.start.ok_or(TmError::Missing("start"))?;
    spec.set_start(start).map_err(|e| at_line(e, line))?;
    if let Some((line, qs)) = h.accept {
        for q in qs {
            spec.add_accept(q).map_err(|e| at_line(e, line))?;
        }
    }
    if let Some((line, t)) = h.target {
        spec.set_target(Some(t)).map_err(|e| at_line(e, line))?;
    }
    for (line, q, a, action, next) in trans {
        spec.add_transition_at(q, a, action, next, line)?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "states 2\nsymbols 3\nstart 0\naccept 1\ndeterministic true\n";

    #[test]
    fn parse_minimal() {
        let spec = parse_btm(&format!("{HEADER}trans 0 0 right 1\n")).unwrap();
        assert_eq!(spec.transition_count(), 1);
        assert!(spec.is_read_only());
        assert!(spec.is_deterministic());
        assert_eq!(spec.target(), None);
    }

    #[test]
    fn parse_rejects_duplicate_deterministic_key() {
        let err = parse_btm(&format!("{HEADER}trans 0 0 right 1\ntrans 0 0 left 0\n")).unwrap_err();
        assert!(matches!(
            err,
            TmError::Nondeterministic {
                line: 7,
                state: 0,
                symbol: 0
            }
        ));
    }

    #[test]
    fn parse_write_is_not_read_only() {
        let spec = parse_btm(&format!("{HEADER}trans 0 0 write 1 0\n")).unwrap();
        assert!(!spec.is_read_only());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_btm("symbols 2\nstart 0\n"),
            Err(TmError::Missing("states"))
        ));
        assert!(matches!(
            parse_btm(&format!("{HEADER}trans 0 5 right 1\n")),
            Err(TmError::OutOfRange { line: 6, what: "symbol", .. })
        ));
        assert!(matches!(
            parse_btm(&format!("{HEADER}trans 0 0 write 3 1\n")),
            Err(TmError::OutOfRange { line: 6, what: "symbol", .. })
        ));
        assert!(matches!(
            parse_btm(&format!("{HEADER}trans 0 0 jump 1\n")),
            Err(TmError::Syntax { line: 6, .. })
        ));
        assert!(matches!(
            parse_btm("states 2\nsymbols 2\nstart 4\n"),
            Err(TmError::OutOfRange { line: 3, what: "state", .. })
        ));
    }

    #[test]
    fn btm_text_round_trips() {
        let text = "states 3\nsymbols 2\nstart 1\naccept\ntarget 2\ndeterministic false\n\
                    trans 1 0 write 1 0\ntrans 1 0 right 2\ntrans 0 1 left 1\n";
        let spec = parse_btm(text).unwrap();
        assert_eq!(parse_btm(&spec.to_btm_string()).unwrap(), spec);
    }

    #[test]
    fn write_erases_right() {
        let c = Configuration::new(0, 0, vec![1, 2, 1]);
        let n = apply_action(&c, Action::Write(2), 0).unwrap();
        assert_eq!(n.tape, vec![2]);
        assert_eq!(n.head, 0);
        assert_eq!(n.steps, 1);
    }

    #[test]
    fn move_left_at_zero_is_stuck() {
        let c = Configuration::new(0, 0, vec![1]);
        assert!(apply_action(&c, Action::MoveLeft, 0).is_none());
    }

    #[test]
    fn write_past_tape_materializes_blanks() {
        let c = Configuration::new(0, 3, vec![1]);
        let n = apply_action(&c, Action::Write(1), 0).unwrap();
        assert_eq!(n.tape, vec![1, 0, 0, 1]);
        assert_eq!(n.head, 3);
    }

    #[test]
    fn writing_blank_truncates() {
        let c = Configuration::new(0, 1, vec![1, 1, 1]);
        let n = apply_action(&c, Action::Write(BLANK), 0).unwrap();
        assert_eq!(n.tape, vec![1]);
        assert!(n.is_canonical());
    }

    #[test]
    fn successors_cases() {
        let mut spec = MachineSpec::new(2, 2, false).unwrap();
        let c = Configuration::new(0, 0, vec![1]);
        assert!(successors(&spec, &c).is_empty());
        spec.add_transition(0, 1, Action::Write(1), 1).unwrap();
        spec.add_transition(0, 1, Action::MoveRight, 0).unwrap();
        let succ = successors(&spec, &c);
        assert_eq!(succ.len(), 2);
        assert!(succ.contains(&Configuration::new(1, 0, vec![1])));
        assert!(succ.contains(&Configuration::new(0, 1, vec![1])));
        let written = succ.iter().find(|s| s.state == 1).unwrap();
        assert_eq!(written.tape.len(), 1);
    }

    #[test]
    fn run_det_cases() {
        let mut accepting = MachineSpec::new(1, 2, true).unwrap();
        accepting.add_accept(0).unwrap();
        assert_eq!(
            run_det(&accepting, 10, 10).unwrap(),
            DetOutcome::Accept { steps: 0 }
        );

        let mut drifter = MachineSpec::new(1, 2, true).unwrap();
        drifter.add_transition(0, 0, Action::MoveRight, 0).unwrap();
        assert!(matches!(
            run_det(&drifter, 1000, 50).unwrap(),
            DetOutcome::Budget { .. }
        ));

        let mut two = MachineSpec::new(2, 2, true).unwrap();
        two.add_transition(0, 0, Action::Write(1), 1).unwrap();
        two.add_transition(1, 1, Action::MoveRight, 0).unwrap();
        two.add_accept(1).unwrap();
        assert_eq!(run_det(&two, 10, 10).unwrap(), DetOutcome::Accept { steps: 1 });

        let nondet = MachineSpec::new(1, 2, false).unwrap();
        assert_eq!(run_det(&nondet, 1, 1), Err(TmError::NotDeterministic));
    }

    #[test]
    fn dead_and_stuck_reject() {
        let mut stuck = MachineSpec::new(1, 2, true).unwrap();
        stuck.add_transition(0, 0, Action::MoveLeft, 0).unwrap();
        assert_eq!(run_det(&stuck, 10, 10).unwrap(), DetOutcome::Reject { steps: 0 });
        let dead = MachineSpec::new(1, 2, true).unwrap();
        assert_eq!(run_det(&dead, 10, 10).unwrap(), DetOutcome::Reject { steps: 0 });
    }
}
