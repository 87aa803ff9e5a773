//! Three-instruction counter machines: `add`, `subb` (subtract, or branch
//! when zero) and `halt`.
//!
//! Programs are read from the `.cm` text format:
//!
//! ```text
//! # moves counter 1 into counter 0
//! counters 3
//! init 3 4 0
//! 0: subb 1 3      # counter 1 empty: jump to 3
//! 1: add 0
//! 2: subb 2 0      # counter 2 is always 0: unconditional goto
//! 3: halt
//! ```
//!
//! Execution falls off the end of the program into an implicit halt.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: counter index {counter} out of range (program has {num_counters} counters)")]
    CounterOutOfRange {
        line: usize,
        counter: usize,
        num_counters: usize,
    },
    #[error("line {line}: goto target {target} out of range (program has {len} instructions)")]
    TargetOutOfRange {
        line: usize,
        target: usize,
        len: usize,
    },
    #[error("missing `counters <k>` header")]
    MissingCounters,
    #[error("program has no instructions")]
    Empty,
    #[error("counter {counter} overflowed")]
    Overflow { counter: usize },
    #[error("machine already halted")]
    Halted,
    #[error("invalid program: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    Add { counter: usize },
    SubBranch { counter: usize, target: usize },
    Halt,
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Add { counter } => write!(f, "add {counter}"),
            Instruction::SubBranch { counter, target } => write!(f, "subb {counter} {target}"),
            Instruction::Halt => write!(f, "halt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterProgram {
    num_counters: usize,
    instructions: Vec<Instruction>,
    init: Vec<u64>,
}

impl CounterProgram {
    /// Builds a program whose counters start at zero.
    pub fn new(num_counters: usize, instructions: Vec<Instruction>) -> Result<Self, CounterError> {
        Self::with_init(num_counters, instructions, vec![0; num_counters])
    }

    pub fn with_init(
        num_counters: usize,
        instructions: Vec<Instruction>,
        init: Vec<u64>,
    ) -> Result<Self, CounterError> {
        if num_counters == 0 {
            return Err(CounterError::Invalid("at least one counter is required".into()));
        }
        if instructions.is_empty() {
            return Err(CounterError::Empty);
        }
        if init.len() != num_counters {
            return Err(CounterError::Invalid(format!(
                "init lists {} values for {} counters",
                init.len(),
                num_counters
            )));
        }
        let len = instructions.len();
        for (i, ins) in instructions.iter().enumerate() {
            match *ins {
                Instruction::Add { counter } | Instruction::SubBranch { counter, .. }
                    if counter >= num_counters =>
                {
                    return Err(CounterError::CounterOutOfRange {
                        line: i,
                        counter,
                        num_counters,
                    });
                }
                Instruction::SubBranch { target, .. } if target >= len => {
                    return Err(CounterError::TargetOutOfRange { line: i, target, len });
                }
                _ => {}
            }
        }
        Ok(Self {
            num_counters,
            instructions,
            init,
        })
    }

    pub fn num_counters(&self) -> usize {
        self.num_counters
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn init(&self) -> &[u64] {
        &self.init
    }

    pub fn initial_config(&self) -> CounterConfig {
        CounterConfig {
            pc: Pc::At(0),
            counters: self.init.clone(),
            steps: 0,
        }
    }

    /// Renders the program back into `.cm` text.
    pub fn to_cm_string(&self) -> String {
        let mut out = format!("counters {}\n", self.num_counters);
        if self.init.iter().any(|&v| v != 0) {
            out.push_str("init");
            for v in &self.init {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        for (i, ins) in self.instructions.iter().enumerate() {
            out.push_str(&format!("{i}: {ins}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pc {
    At(usize),
    Halted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CounterConfig {
    pub pc: Pc,
    pub counters: Vec<u64>,
    pub steps: u64,
}

impl CounterConfig {
    pub fn is_halted(&self) -> bool {
        self.pc == Pc::Halted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "config", rename_all = "snake_case")]
pub enum RunResult {
    Halted(CounterConfig),
    Budget(CounterConfig),
}

impl RunResult {
    pub fn config(&self) -> &CounterConfig {
        match self {
            RunResult::Halted(c) | RunResult::Budget(c) => c,
        }
    }

    pub fn halted(&self) -> bool {
        matches!(self, RunResult::Halted(_))
    }
}

/// Executes one instruction.
///
/// A pc that leaves the instruction list becomes [`Pc::Halted`].
pub fn cm_step(program: &CounterProgram, c: &CounterConfig) -> Result<CounterConfig, CounterError> {
    let pc = match c.pc {
        Pc::At(pc) => pc,
        Pc::Halted => return Err(CounterError::Halted),
    };
    let mut next = c.clone();
    next.steps += 1;
    let advance = |pc: usize| {
        if pc + 1 < program.len() {
            Pc::At(pc + 1)
        } else {
            Pc::Halted
        }
    };
    match program.instructions.get(pc) {
        None | Some(Instruction::Halt) => next.pc = Pc::Halted,
        Some(&Instruction::Add { counter }) => {
            next.counters[counter] = next.counters[counter]
                .checked_add(1)
                .ok_or(CounterError::Overflow { counter })?;
            next.pc = advance(pc);
        }
        Some(&Instruction::SubBranch { counter, target }) => {
            if next.counters[counter] > 0 {
                next.counters[counter] -= 1;
                next.pc = advance(pc);
            } else {
                next.pc = Pc::At(target);
            }
        }
    }
    Ok(next)
}

pub fn cm_run(
    program: &CounterProgram,
    init: &CounterConfig,
    max_steps: u64,
) -> Result<RunResult, CounterError> {
    let mut c = init.clone();
    let mut taken = 0u64;
    loop {
        if c.is_halted() {
            return Ok(RunResult::Halted(c));
        }
        if taken >= max_steps {
            return Ok(RunResult::Budget(c));
        }
        c = cm_step(program, &c)?;
        taken += 1;
    }
}

/// Parses the `.cm` text format.
pub fn parse_counter_program(text: &str) -> Result<CounterProgram, CounterError> {
    let mut num_counters: Option<usize> = None;
    let mut init: Option<(usize, Vec<u64>)> = None;
    // (source line, instruction)
    let mut body: Vec<(usize, Instruction)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| CounterError::Syntax { line, message };
        let lower = content.to_ascii_lowercase();
        let words: Vec<&str> = lower.split_whitespace().collect();
        match words[0] {
            "counters" => {
                if num_counters.is_some() {
                    return Err(syntax("duplicate `counters` header".into()));
                }
                if words.len() != 2 {
                    return Err(syntax("expected `counters <k>`".into()));
                }
                let k = parse_num::<usize>(words[1], line)?;
                if k == 0 {
                    return Err(syntax("counter count must be at least 1".into()));
                }
                num_counters = Some(k);
            }
            "init" => {
                if init.is_some() {
                    return Err(syntax("duplicate `init` line".into()));
                }
                let values = words[1..]
                    .iter()
                    .map(|w| parse_num::<u64>(w, line))
                    .collect::<Result<Vec<_>, _>>()?;
                init = Some((line, values));
            }
            first => {
                let Some(index) = first.strip_suffix(':') else {
                    return Err(syntax(format!("unexpected token `{first}`")));
                };
                let index = parse_num::<usize>(index, line)?;
                if index != body.len() {
                    return Err(syntax(format!(
                        "instruction index {index} out of sequence (expected {})",
                        body.len()
                    )));
                }
                let ins = match &words[1..] {
                    ["add", c] => Instruction::Add {
                        counter: parse_num(c, line)?,
                    },
                    ["subb", c, t] => Instruction::SubBranch {
                        counter: parse_num(c, line)?,
                        target: parse_num(t, line)?,
                    },
                    ["halt"] => Instruction::Halt,
                    _ => return Err(syntax(format!("malformed instruction `{content}`"))),
                };
                body.push((line, ins));
            }
        }
    }

    let num_counters = num_counters.ok_or(CounterError::MissingCounters)?;
    if body.is_empty() {
        return Err(CounterError::Empty);
    }
    let len = body.len();
    for &(line, ins) in &body {
        match ins {
            Instruction::Add { counter } | Instruction::SubBranch { counter, .. }
                if counter >= num_counters =>
            {
                return Err(CounterError::CounterOutOfRange {
                    line,
                    counter,
                    num_counters,
                });
            }
            Instruction::SubBranch { target, .. } if target >= len => {
                return Err(CounterError::TargetOutOfRange { line, target, len });
            }
            _ => {}
        }
    }
    let init = match init {
        Some((line, values)) if values.len() != num_counters => {
            return Err(CounterError::Syntax {
                line,
                message: format!("init lists {} values for {num_counters} counters", values.len()),
            });
        }
        Some((_, values)) => values,
        None => vec![0; num_counters],
    };
    CounterProgram::with_init(num_counters, body.into_iter().map(|(_, i)| i).collect(), init)
}

fn parse_num<T: std::str::FromStr>(word: &str, line: usize) -> Result<T, CounterError> {
    word.parse().map_err(|_| CounterError::Syntax {
        line,
        message: format!("expected a non-negative integer, found `{word}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(k: usize, ins: Vec<Instruction>) -> CounterProgram {
        CounterProgram::new(k, ins).unwrap()
    }

    fn at(pc: usize, counters: Vec<u64>) -> CounterConfig {
        CounterConfig {
            pc: Pc::At(pc),
            counters,
            steps: 0,
        }
    }

    #[test]
    fn parses_add_halt() {
        let p = parse_counter_program("counters 1\n0: add 0\n1: halt").unwrap();
        assert_eq!(
            p.instructions(),
            &[Instruction::Add { counter: 0 }, Instruction::Halt]
        );
    }

    #[test]
    fn parses_self_branch() {
        let p = parse_counter_program("counters 1\n0: subb 0 0").unwrap();
        assert_eq!(
            p.instructions(),
            &[Instruction::SubBranch {
                counter: 0,
                target: 0
            }]
        );
    }

    #[test]
    fn rejects_counter_out_of_range() {
        let err = parse_counter_program("counters 1\n0: add 5").unwrap_err();
        assert_eq!(
            err,
            CounterError::CounterOutOfRange {
                line: 2,
                counter: 5,
                num_counters: 1
            }
        );
    }

    #[test]
    fn parse_errors_carry_lines() {
        assert_eq!(
            parse_counter_program("0: halt").unwrap_err(),
            CounterError::MissingCounters
        );
        assert!(matches!(
            parse_counter_program("counters 1\n\n0: jump 3"),
            Err(CounterError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            parse_counter_program("counters 1\n0: subb 0 9\n1: halt"),
            Err(CounterError::TargetOutOfRange { line: 2, target: 9, len: 2 })
        ));
        assert!(matches!(
            parse_counter_program("counters 1\n1: halt"),
            Err(CounterError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_counter_program("counters 2\ninit 1\n0: halt"),
            Err(CounterError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn keywords_are_case_insensitive_and_comments_ignored() {
        let p = parse_counter_program("# header\nCOUNTERS 2\nInit 4 5\n0: ADD 1 # bump\n1: Halt\n")
            .unwrap();
        assert_eq!(p.init(), &[4, 5]);
        assert_eq!(p.len(), 2);
        assert_eq!(parse_counter_program(&p.to_cm_string()).unwrap(), p);
    }

    #[test]
    fn step_add() {
        let p = prog(1, vec![Instruction::Add { counter: 0 }, Instruction::Halt]);
        let c = cm_step(&p, &at(0, vec![3])).unwrap();
        assert_eq!(c.counters, vec![4]);
        assert_eq!(c.pc, Pc::At(1));
        assert_eq!(c.steps, 1);
    }

    #[test]
    fn step_sub_branch() {
        let mut ins = vec![Instruction::Halt; 8];
        ins[0] = Instruction::SubBranch {
            counter: 0,
            target: 7,
        };
        let p = prog(1, ins);
        let zero = cm_step(&p, &at(0, vec![0])).unwrap();
        assert_eq!((zero.pc, zero.counters), (Pc::At(7), vec![0]));
        let two = cm_step(&p, &at(0, vec![2])).unwrap();
        assert_eq!((two.pc, two.counters), (Pc::At(1), vec![1]));
    }

    #[test]
    fn step_on_halted_is_an_error() {
        let p = prog(1, vec![Instruction::Halt]);
        let h = cm_step(&p, &p.initial_config()).unwrap();
        assert!(h.is_halted());
        assert_eq!(cm_step(&p, &h), Err(CounterError::Halted));
    }

    #[test]
    fn overflow_is_reported() {
        let p = CounterProgram::with_init(1, vec![Instruction::Add { counter: 0 }], vec![u64::MAX])
            .unwrap();
        assert_eq!(
            cm_step(&p, &p.initial_config()),
            Err(CounterError::Overflow { counter: 0 })
        );
        let big = CounterProgram::with_init(1, vec![Instruction::Add { counter: 0 }], vec![i64::MAX as u64])
            .unwrap();
        assert_eq!(
            cm_step(&big, &big.initial_config()).unwrap().counters,
            vec![i64::MAX as u64 + 1]
        );
    }

    #[test]
    fn run_two_increments() {
        let p = prog(
            1,
            vec![
                Instruction::Add { counter: 0 },
                Instruction::Add { counter: 0 },
                Instruction::Halt,
            ],
        );
        let r = cm_run(&p, &p.initial_config(), 10).unwrap();
        assert!(r.halted());
        assert_eq!(r.config().counters, vec![2]);
        assert_eq!(r.config().steps, 3);
    }

    #[test]
    fn run_add_sub_cycle_exhausts_budget() {
        let p = prog(
            1,
            vec![
                Instruction::Add { counter: 0 },
                Instruction::SubBranch {
                    counter: 0,
                    target: 0,
                },
            ],
        );
        // subb on the positive counter advances past the last line
        let r = cm_run(&p, &p.initial_config(), 100).unwrap();
        assert!(r.halted());
        assert_eq!(r.config().steps, 2);

        let looping = prog(
            1,
            vec![
                Instruction::Add { counter: 0 },
                Instruction::SubBranch {
                    counter: 0,
                    target: 0,
                },
                Instruction::SubBranch {
                    counter: 0,
                    target: 0,
                },
            ],
        );
        let r = cm_run(&looping, &looping.initial_config(), 100).unwrap();
        assert!(!r.halted());
        assert_eq!(r.config().steps, 100);
    }

    #[test]
    fn zero_budget() {
        let p = prog(1, vec![Instruction::Halt]);
        let r = cm_run(&p, &p.initial_config(), 0).unwrap();
        assert_eq!(r, RunResult::Budget(p.initial_config()));
    }

    #[test]
    fn falling_off_the_end_halts() {
        let p = prog(1, vec![Instruction::Add { counter: 0 }]);
        let r = cm_run(&p, &p.initial_config(), 5).unwrap();
        assert!(r.halted());
        assert_eq!(r.config().counters, vec![1]);
    }
}
