//! The `braidlike` command-line front end.
//!
//! Every subcommand prints a verdict in plain text, or one JSON object with
//! `--format json` (the fields are listed in `docs/cli-json.md`). Exit codes:
//! 0 when a verdict was produced, 1 for usage and input errors, 2 when an
//! internal invariant check failed.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::counter_machine::{cm_run, parse_counter_program, CounterError, CounterProgram, Pc, RunResult};
use crate::gadget::{bisimulate, compile, level_run, Level, LevelError, LevelRun};
use crate::guide::{
    cell_cap_from_bound, decide_det_braidlike_with_cap, decide_read_only, det_guide_bound, nondet_guide_bound,
    Behavior, Decision, GuideError,
};
use crate::oracle::{
    det_behavior_oracle, read_only_oracle, reach_bfs_with_budget, OracleError, OracleVerdict, Trace,
    DEFAULT_MAX_EXPLORED,
};
use crate::reach::{decide_reachability, ReachVerdict};
use crate::timeline::{build_braidlike_from_game, parse_game, GameError};
use crate::tm::{parse_btm, MachineSpec, Symbol, TmError};

#[derive(Debug, Parser)]
#[command(name = "braidlike", version, about = "Counter machines, gadget levels and braidlike Turing machines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Step budget for counter machines, levels (ticks) and simulations.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub max_steps: u64,
    /// Cell cap; defaults to the applicable guide bound plus one.
    #[arg(long, global = true)]
    pub max_cells: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Try the pruned explicit search before the exact reachability procedure.
    #[arg(long, global = true)]
    pub prune: bool,
    /// Write the witness trace, if any, to this file as JSON.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a `.cm` counter program.
    CmRun { file: PathBuf },
    /// Compile a `.cm` program to level JSON.
    CmCompile { file: PathBuf },
    /// Run a level, given as `.cm` source or level JSON.
    LevelSim { file: PathBuf },
    /// Render a level, given as `.cm` source or level JSON, as Graphviz DOT.
    LevelDot { file: PathBuf },
    /// Decide a deterministic `.btm` machine; read-only machines with `--input`.
    BtmDecide {
        file: PathBuf,
        /// Input word: digits, or symbols separated by spaces or commas.
        #[arg(long)]
        input: Option<String>,
    },
    /// Decide whether a `.btm` machine can enter its target state.
    BtmReach { file: PathBuf },
    /// Brute-force baseline for a `.btm` machine.
    BtmOracle {
        file: PathBuf,
        #[arg(long)]
        input: Option<String>,
    },
    /// Print the tour-guide bounds for a number of states.
    Bounds {
        #[arg(long)]
        states: usize,
    },
    /// Compile a game description to a `.btm` machine.
    GameToBtm { file: PathBuf },
    /// Check a `.cm` program against its compiled level, step by step.
    Bisim { file: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Invariant(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Invariant(_) => 2,
        }
    }
}

fn input(e: impl Display) -> CliError {
    CliError::Input(e.to_string())
}

impl From<CounterError> for CliError {
    fn from(e: CounterError) -> Self {
        input(e)
    }
}

impl From<TmError> for CliError {
    fn from(e: TmError) -> Self {
        input(e)
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        input(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        input(e)
    }
}

impl From<GuideError> for CliError {
    fn from(e: GuideError) -> Self {
        match e {
            GuideError::Invariant(_) => CliError::Invariant(e.to_string()),
            GuideError::Machine(m) => input(m),
        }
    }
}

impl From<LevelError> for CliError {
    fn from(e: LevelError) -> Self {
        match e {
            LevelError::Invariant(_) => CliError::Invariant(e.to_string()),
            _ => input(e),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let msg = match &e {
                CliError::Input(m) => format!("error: {m}"),
                CliError::Invariant(m) => format!("internal error: {m}"),
            };
            let _ = writeln!(err, "{msg}");
            e.code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<CounterProgram, CliError> {
    parse_counter_program(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_machine(path: &Path) -> Result<MachineSpec, CliError> {
    parse_btm(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Level JSON when the file is JSON, otherwise `.cm` source to compile.
fn load_level(path: &Path) -> Result<Level, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Level::from_json(&text).map_err(|e| input(format!("{}: {e}", path.display())))
    } else {
        let program = parse_counter_program(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        Ok(compile(&program))
    }
}

/// `0110` or `0 1 1 0` or `0,1,1,0`.
fn parse_input(text: &str) -> Result<Vec<Symbol>, CliError> {
    let bad = |w: &str| input(format!("bad input symbol `{w}`"));
    if text.contains([' ', ',']) {
        text.split([' ', ','])
            .filter(|w| !w.is_empty())
            .map(|w| w.parse().map_err(|_| bad(w)))
            .collect()
    } else {
        text.chars()
            .map(|c| c.to_digit(10).ok_or_else(|| bad(&c.to_string())))
            .collect()
    }
}

fn emit(out: &mut dyn Write, format: Format, text: &str, value: Value) -> Result<(), CliError> {
    let written = match format {
        Format::Text => writeln!(out, "{text}"),
        Format::Json => writeln!(out, "{value}"),
    };
    written.map_err(|e| input(format!("writing output: {e}")))
}

fn warn_if_capped(err: &mut dyn Write, cap: usize, exact: usize) {
    if cap < exact {
        let _ = writeln!(
            err,
            "warning: --max-cells {cap} is below the guide bound plus one ({exact}); the verdict only holds within the cap"
        );
    }
}

/// Checks `trace` leads to `target` (or any state, when `None`) and writes
/// it to `--trace` if requested.
fn handle_trace(
    cli: &Cli,
    spec: &MachineSpec,
    trace: Option<&Trace>,
    verdict: &str,
    expect: Option<usize>,
) -> Result<Value, CliError> {
    if let Some(t) = trace {
        let end = t
            .replay(spec)
            .map_err(|e| CliError::Invariant(format!("witness does not replay: {e}")))?;
        if let Some(q) = expect {
            if end.state != q {
                return Err(CliError::Invariant(format!("witness ends in state {} instead of {q}", end.state)));
            }
        }
    }
    let value = trace.map_or(Value::Null, |t| serde_json::to_value(t).expect("traces serialize"));
    if let Some(path) = &cli.trace {
        let doc = json!({ "verdict": verdict, "witness": value });
        std::fs::write(path, format!("{doc}\n")).map_err(|e| input(format!("{}: {e}", path.display())))?;
    }
    Ok(value)
}

fn pc_value(pc: Pc) -> Value {
    match pc {
        Pc::At(i) => json!(i),
        Pc::Halted => Value::Null,
    }
}

fn decision_text(d: &Decision) -> String {
    match (d.behavior, d.loop_reason) {
        (Behavior::LoopForever, Some(r)) => format!("LoopForever ({})", snake(&r)),
        (b, _) => format!("{b:?}"),
    }
}

fn snake<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let fmt = cli.format;
    match &cli.command {
        Command::CmRun { file } => {
            let p = load_program(file)?;
            let r = cm_run(&p, &p.initial_config(), cli.max_steps)?;
            let (verdict, c) = match &r {
                RunResult::Halted(c) => ("halted", c),
                RunResult::Budget(c) => ("budget", c),
            };
            let text = match r {
                RunResult::Halted(_) => format!("Halted after {} steps; counters {:?}", c.steps, c.counters),
                RunResult::Budget(_) => format!(
                    "Budget exhausted after {} steps at pc {}; counters {:?}",
                    c.steps,
                    pc_value(c.pc),
                    c.counters
                ),
            };
            let value = json!({
                "command": "cm-run",
                "verdict": verdict,
                "steps": c.steps,
                "pc": pc_value(c.pc),
                "counters": c.counters,
            });
            emit(out, fmt, &text, value)
        }
        Command::CmCompile { file } => {
            let level = compile(&load_program(file)?);
            let value = json!({ "command": "cm-compile", "level": level });
            emit(out, fmt, &level.to_json(), value)
        }
        Command::LevelSim { file } => {
            let level = load_level(file)?;
            let (text, value) = match level_run(&level, cli.max_steps)? {
                LevelRun::Solved { ticks } => (
                    format!("Solved after {ticks} ticks"),
                    json!({ "command": "level-sim", "verdict": "solved", "ticks": ticks }),
                ),
                LevelRun::NotSolvedWithinBudget { config } => (
                    format!(
                        "Not solved within {} ticks; Tim at gadget {}, occupancies {:?}",
                        config.ticks, config.tim_at, config.counters
                    ),
                    json!({
                        "command": "level-sim",
                        "verdict": "not_solved_within_budget",
                        "ticks": config.ticks,
                        "config": config,
                    }),
                ),
            };
            emit(out, fmt, &text, value)
        }
        Command::LevelDot { file } => {
            let dot = load_level(file)?.to_dot();
            let value = json!({ "command": "level-dot", "dot": dot });
            emit(out, fmt, dot.trim_end(), value)
        }
        Command::BtmDecide { file, input: word } => {
            let spec = load_machine(file)?;
            let decision = match word {
                Some(w) => {
                    let word = parse_input(w)?;
                    decide_read_only(&spec, &word)?
                }
                None => {
                    if !spec.is_deterministic() {
                        return Err(input("machine is nondeterministic; use btm-reach"));
                    }
                    let exact = cell_cap_from_bound(&det_guide_bound(spec.num_states()));
                    let cap = cli.max_cells.unwrap_or(exact);
                    warn_if_capped(err, cap, exact);
                    decide_det_braidlike_with_cap(&spec, cap)?
                }
            };
            let value = json!({
                "command": "btm-decide",
                "verdict": decision.behavior,
                "loop_reason": decision.loop_reason,
                "steps": decision.steps,
                "guides_created": decision.guides_created,
                "max_head": decision.max_head,
            });
            emit(out, fmt, &decision_text(&decision), value)
        }
        Command::BtmReach { file } => {
            let spec = load_machine(file)?;
            let target = spec.target().ok_or(TmError::NoTarget)?;
            let mut decision = decide_reachability(&spec, cli.prune)?;
            let exact = cell_cap_from_bound(&nondet_guide_bound(spec.num_states()));
            let cap = cli.max_cells.unwrap_or(exact);
            if decision.verdict == ReachVerdict::Reached && decision.witness.is_none() {
                // the exact procedure has no trace; breadth-first search finds a shortest one
                decision.witness = reach_bfs_with_budget(&spec, cap, DEFAULT_MAX_EXPLORED)?.witness;
            }
            let verdict = snake(&decision.verdict);
            let witness = handle_trace(cli, &spec, decision.witness.as_ref(), &verdict, Some(target))?;
            let text = match (&decision.verdict, &decision.witness) {
                (ReachVerdict::Reached, Some(w)) => format!("Reached (witness of {} steps)", w.steps.len()),
                (v, _) => format!("{v:?}"),
            };
            let value = json!({
                "command": "btm-reach",
                "verdict": verdict,
                "contexts": decision.contexts,
                "nodes": decision.nodes,
                "rounds": decision.rounds,
                "prune": decision.prune,
                "witness": witness,
            });
            emit(out, fmt, &text, value)
        }
        Command::BtmOracle { file, input: word } => {
            let spec = load_machine(file)?;
            let (verdict, exact, expect): (OracleVerdict, usize, Option<usize>) = match (word, spec.target()) {
                (Some(w), _) => (read_only_oracle(&spec, &parse_input(w)?)?, 0, None),
                (None, Some(t)) => {
                    let exact = cell_cap_from_bound(&nondet_guide_bound(spec.num_states()));
                    let cap = cli.max_cells.unwrap_or(exact);
                    (reach_bfs_with_budget(&spec, cap, DEFAULT_MAX_EXPLORED)?, exact, Some(t))
                }
                (None, None) => {
                    let exact = cell_cap_from_bound(&det_guide_bound(spec.num_states()));
                    let cap = cli.max_cells.unwrap_or(exact);
                    (det_behavior_oracle(&spec, cli.max_steps, cap)?, exact, None)
                }
            };
            if let Some(cap) = cli.max_cells {
                warn_if_capped(err, cap, exact);
            }
            let kind = snake(&verdict.kind);
            let witness = handle_trace(cli, &spec, verdict.witness.as_ref(), &kind, expect)?;
            let text = format!("{:?} (explored {})", verdict.kind, verdict.explored);
            let value = json!({
                "command": "btm-oracle",
                "verdict": kind,
                "explored": verdict.explored,
                "witness": witness,
            });
            emit(out, fmt, &text, value)
        }
        Command::Bounds { states } => {
            if *states == 0 {
                return Err(input("--states must be at least 1"));
            }
            let det = det_guide_bound(*states).to_string();
            let nondet = nondet_guide_bound(*states).to_string();
            let text = format!("det={det} nondet={nondet}");
            let value = json!({ "command": "bounds", "states": states, "det": det, "nondet": nondet });
            emit(out, fmt, &text, value)
        }
        Command::GameToBtm { file } => {
            let game = parse_game(&read(file)?).map_err(|e| input(format!("{}: {e}", file.display())))?;
            let m = build_braidlike_from_game(&game)?;
            let btm = m.spec.to_btm_string();
            let value = json!({
                "command": "game-to-btm",
                "states": m.spec.num_states(),
                "symbols": m.spec.num_symbols(),
                "target": m.layout.target(),
                "btm": btm,
            });
            emit(out, fmt, btm.trim_end(), value)
        }
        Command::Bisim { file } => {
            let report = bisimulate(&load_program(file)?, cli.max_steps)?;
            let mut text = format!(
                "{}: {} boundaries, halted={} solved={}, {} steps, {} ticks",
                if report.pass { "pass" } else { "FAIL" },
                report.rows.len(),
                report.halted,
                report.solved,
                report.steps,
                report.ticks
            );
            if let Some(r) = report.rows.iter().find(|r| !r.matches) {
                text.push_str(&format!(
                    "\nfirst mismatch at step {}: pc {:?} counters {:?} vs Tim {:?} occupancies {:?}",
                    r.step, r.pc, r.counters, r.tim, r.occupancies
                ));
            }
            let pass = report.pass;
            let mut value = serde_json::to_value(&report).expect("reports serialize");
            value["command"] = json!("bisim");
            emit(out, fmt, &text, value)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Invariant("level does not track the counter program".into()))
            }
        }
    }
}
