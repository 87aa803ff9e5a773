use braidlike::counter_machine::{cm_run, CounterProgram, Instruction, RunResult};
use braidlike::gadget::{bisimulate, compile, level_step, Level, LevelStep, TICKS_PER_STEP};
use braidlike::timeline::{record_actions, timed_symbol, Timeline};
use braidlike::tm::{apply_action, successors, Action, Configuration, MachineSpec, Symbol, BLANK};
use proptest::prelude::*;

fn tape(max_symbol: Symbol) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(0..max_symbol, 0..10)
}

fn action(num_symbols: Symbol) -> impl Strategy<Value = Action> {
    prop_oneof![
        (0..num_symbols).prop_map(Action::Write),
        Just(Action::MoveLeft),
        Just(Action::MoveRight),
    ]
}

fn program() -> impl Strategy<Value = CounterProgram> {
    (1usize..4, 1usize..8).prop_flat_map(|(k, len)| {
        let ins = prop_oneof![
            (0..k).prop_map(|counter| Instruction::Add { counter }),
            (0..k, 0..len).prop_map(|(counter, target)| Instruction::SubBranch { counter, target }),
            Just(Instruction::Halt),
        ];
        (prop::collection::vec(ins, len), prop::collection::vec(0u64..4, k))
            .prop_map(move |(instructions, init)| CounterProgram::with_init(k, instructions, init).unwrap())
    })
}

/// (record?, timed value or seek delta) pairs.
fn timeline_ops() -> impl Strategy<Value = Vec<(bool, i64)>> {
    prop::collection::vec(prop_oneof![(Just(true), 0i64..3), (Just(false), -3i64..=3)], 0..30)
}

fn machine() -> impl Strategy<Value = MachineSpec> {
    (1usize..4, 1usize..3).prop_flat_map(|(n, s)| {
        let entry = (0..n, 0..s as Symbol, action(s as Symbol), 0..n);
        prop::collection::vec(entry, 0..8).prop_map(move |entries| {
            let mut m = MachineSpec::new(n, s, false).unwrap();
            for (q, a, act, next) in entries {
                m.add_transition(q, a, act, next).unwrap();
            }
            m
        })
    })
}

proptest! {
    #[test]
    fn writes_erase_everything_right_of_the_head(t in tape(4), head in 0usize..14, b in 0u32..4) {
        let c = Configuration::new(0, head, t);
        let next = apply_action(&c, Action::Write(b), 1).unwrap();
        prop_assert_eq!(next.symbol_at(head), b);
        prop_assert!(next.tape.len() <= head + 1);
        prop_assert!((0..head).all(|j| next.symbol_at(j) == c.symbol_at(j)));
        prop_assert!((head + 1..head + 20).all(|j| next.symbol_at(j) == BLANK));
    }

    #[test]
    fn successors_are_canonical_and_distinct(m in machine(), t in tape(2), head in 0usize..6, q in 0usize..3) {
        let c = Configuration::new(q % m.num_states(), head, t);
        let next = successors(&m, &c);
        for (i, s) in next.iter().enumerate() {
            prop_assert!(s.is_canonical());
            prop_assert!(!next[..i].contains(s));
        }
    }

    #[test]
    fn moves_never_change_the_tape(t in tape(3), head in 0usize..12, left in any::<bool>()) {
        let c = Configuration::new(0, head, t);
        let a = if left { Action::MoveLeft } else { Action::MoveRight };
        match apply_action(&c, a, 0) {
            None => prop_assert!(left && head == 0),
            Some(next) => prop_assert_eq!(next.tape, c.tape),
        }
    }

    #[test]
    fn timeline_follows_the_tape(ops in timeline_ops(), first in 0usize..3) {
        let mut tl = Timeline::new(first);
        let mut c = Configuration::new(0, 0, vec![timed_symbol(first)]);
        for (record, v) in ops {
            let actions: Vec<Action> = if record { record_actions(v as usize).to_vec() } else { tl.seek_actions(v) };
            for a in actions {
                c = apply_action(&c, a, 0).unwrap();
            }
            tl = if record { tl.record(v as usize) } else { tl.seek(v, 3).unwrap() };
            let expected: Vec<Symbol> = tl.snapshots().iter().map(|&t| timed_symbol(t)).collect();
            prop_assert_eq!(&c.tape, &expected);
            prop_assert_eq!(c.head, tl.cursor());
        }
    }

    #[test]
    fn compiled_levels_are_well_formed(p in program()) {
        let level = compile(&p);
        prop_assert!(level.validate().is_ok());
        let back = Level::from_json(&level.to_json()).unwrap();
        prop_assert_eq!(back, level);
    }

    #[test]
    fn compiled_levels_bisimulate(p in program()) {
        let report = bisimulate(&p, 200).unwrap();
        prop_assert!(report.pass, "{:?}", report.rows.iter().find(|r| !r.matches));
        prop_assert!(report.ticks <= TICKS_PER_STEP * report.steps + 1);
        let run = cm_run(&p, &p.initial_config(), 200).unwrap();
        prop_assert_eq!(run.config().counters.clone(), report.rows.last().unwrap().counters.clone());
        prop_assert_eq!(matches!(run, RunResult::Halted(_)), report.halted);
    }

    #[test]
    fn levels_step_without_errors(p in program()) {
        // an empty station releases nothing on Remove1, so occupancies stay
        // at or above zero and no branch slot ever holds two monstars
        let level = compile(&p);
        let mut c = level.initial_config();
        for _ in 0..300 {
            match level_step(&level, &c) {
                Ok(LevelStep::Moved { config }) => c = config,
                Ok(LevelStep::Solved { .. }) => break,
                Err(e) => prop_assert!(false, "level step failed: {e}"),
            }
        }
    }
}
