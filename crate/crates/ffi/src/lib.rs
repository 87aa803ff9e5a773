//! C interface to the braidlike workbench.
//!
//! Programs and machines live behind opaque handles created by the `*_parse`
//! functions and released with the matching `*_free`. Every function returns
//! a [`BlStatus`]; on failure [`bl_last_error`] describes what went wrong.
//! Strings handed out by the library must be released with
//! [`bl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use braidlike::counter_machine::{cm_run, parse_counter_program, CounterProgram, Pc, RunResult};
use braidlike::gadget::{bisimulate, compile, LevelError};
use braidlike::guide::{decide_det_braidlike, decide_read_only, det_guide_bound, nondet_guide_bound, Behavior, GuideError};
use braidlike::reach::{decide_reachability, ReachVerdict};
use braidlike::tm::{parse_btm, MachineSpec, Symbol};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not UTF-8.
    InvalidUtf8 = 2,
    /// Program or machine text did not parse.
    Parse = 3,
    /// The arguments do not fit the operation, such as a nondeterministic
    /// machine given to the deterministic decider or a short buffer.
    Invalid = 4,
    /// An internal consistency check failed.
    Invariant = 5,
    /// A result does not fit the output type.
    Overflow = 6,
    /// The library panicked; the handle involved should be freed.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlBehavior {
    Accept = 0,
    Reject = 1,
    LoopForever = 2,
}

/// Opaque counter program.
pub struct BlProgram(CounterProgram);

/// Opaque braidlike machine.
pub struct BlMachine(MachineSpec);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlRunResult {
    pub halted: bool,
    pub steps: u64,
    /// Instruction about to run, or -1 once halted.
    pub pc: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("nul bytes removed"));
}

struct Failure(BlStatus, String);

impl From<GuideError> for Failure {
    fn from(e: GuideError) -> Self {
        match e {
            GuideError::Invariant(_) => Failure(BlStatus::Invariant, e.to_string()),
            GuideError::Machine(_) => Failure(BlStatus::Invalid, e.to_string()),
        }
    }
}

impl From<LevelError> for Failure {
    fn from(e: LevelError) -> Self {
        match e {
            LevelError::Invariant(_) => Failure(BlStatus::Invariant, e.to_string()),
            _ => Failure(BlStatus::Invalid, e.to_string()),
        }
    }
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guarded(body: impl FnOnce() -> Result<(), Failure>) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            BlStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {message}"));
            BlStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BlStatus::NullArgument, format!("`{what}` is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(BlStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

/// # Safety
/// `p` must be null or valid for the lifetime `'a`.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn put<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Parses `.cm` source into a new program handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_program_parse(source: *const c_char, out: *mut *mut BlProgram) -> BlStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let program = parse_counter_program(text(source, "source")?)
            .map_err(|e| Failure(BlStatus::Parse, e.to_string()))?;
        out.write(Box::into_raw(Box::new(BlProgram(program))));
        Ok(())
    })
}

/// # Safety
/// `program` must be null or a handle from [`bl_program_parse`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn bl_program_free(program: *mut BlProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Number of counters, which is the length [`bl_program_run`] needs.
///
/// # Safety
/// `program` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_program_num_counters(program: *const BlProgram, out: *mut usize) -> BlStatus {
    guarded(|| put(out, handle(program, "program")?.0.num_counters(), "out"))
}

/// Runs the program for at most `max_steps` steps from its initial counters.
/// The final counters are copied to `counters`, which holds `counters_len`
/// values; pass null with length 0 to skip them.
///
/// # Safety
/// `program` must be a live handle, `out` valid for writes, and `counters`
/// valid for `counters_len` writes unless null.
#[no_mangle]
pub unsafe extern "C" fn bl_program_run(
    program: *const BlProgram,
    max_steps: u64,
    out: *mut BlRunResult,
    counters: *mut u64,
    counters_len: usize,
) -> BlStatus {
    guarded(|| {
        let p = &handle(program, "program")?.0;
        let result = cm_run(p, &p.initial_config(), max_steps)
            .map_err(|e| Failure(BlStatus::Overflow, e.to_string()))?;
        let (halted, c) = match &result {
            RunResult::Halted(c) => (true, c),
            RunResult::Budget(c) => (false, c),
        };
        if !counters.is_null() {
            if counters_len < c.counters.len() {
                return Err(Failure(
                    BlStatus::Invalid,
                    format!("counter buffer holds {counters_len}, program has {}", c.counters.len()),
                ));
            }
            ptr::copy_nonoverlapping(c.counters.as_ptr(), counters, c.counters.len());
        }
        let pc = match c.pc {
            Pc::At(i) => i as i64,
            Pc::Halted => -1,
        };
        put(out, BlRunResult { halted, steps: c.steps, pc }, "out")
    })
}

/// Compiles the program and returns the level as JSON.
///
/// # Safety
/// `program` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_program_level_json(program: *const BlProgram, out: *mut *mut c_char) -> BlStatus {
    guarded(|| {
        let level = compile(&handle(program, "program")?.0);
        put(out, string_out(level.to_json()), "out")
    })
}

/// Runs the program against its compiled level for up to `max_steps`
/// steps. `pass` is set when every instruction boundary matched and the
/// level was solved exactly when the program halted; `report_json`, if not
/// null, receives the full report.
///
/// # Safety
/// `program` must be a live handle, `pass` valid for writes, and
/// `report_json` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_program_bisimulate(
    program: *const BlProgram,
    max_steps: u64,
    pass: *mut bool,
    report_json: *mut *mut c_char,
) -> BlStatus {
    guarded(|| {
        let report = bisimulate(&handle(program, "program")?.0, max_steps)?;
        put(pass, report.pass, "pass")?;
        if !report_json.is_null() {
            let json = serde_json::to_string(&report).expect("reports serialize");
            report_json.write(string_out(json));
        }
        Ok(())
    })
}

/// Parses `.btm` source into a new machine handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_machine_parse(source: *const c_char, out: *mut *mut BlMachine) -> BlStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let spec = parse_btm(text(source, "source")?).map_err(|e| Failure(BlStatus::Parse, e.to_string()))?;
        out.write(Box::into_raw(Box::new(BlMachine(spec))));
        Ok(())
    })
}

/// # Safety
/// `machine` must be null or a handle from [`bl_machine_parse`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn bl_machine_free(machine: *mut BlMachine) {
    if !machine.is_null() {
        drop(Box::from_raw(machine));
    }
}

fn behavior(b: Behavior) -> BlBehavior {
    match b {
        Behavior::Accept => BlBehavior::Accept,
        Behavior::Reject => BlBehavior::Reject,
        Behavior::LoopForever => BlBehavior::LoopForever,
    }
}

/// Decides a deterministic machine started on the blank tape.
///
/// # Safety
/// `machine` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_machine_decide(machine: *const BlMachine, out: *mut BlBehavior) -> BlStatus {
    guarded(|| {
        let d = decide_det_braidlike(&handle(machine, "machine")?.0)?;
        put(out, behavior(d.behavior), "out")
    })
}

/// Decides a deterministic read-only machine on `input[0..len]`.
///
/// # Safety
/// `machine` must be a live handle, `input` valid for `len` reads (or null
/// with `len` 0), and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_machine_decide_read_only(
    machine: *const BlMachine,
    input: *const u32,
    len: usize,
    out: *mut BlBehavior,
) -> BlStatus {
    guarded(|| {
        let word: &[Symbol] = if len == 0 {
            &[]
        } else if input.is_null() {
            return Err(null("input"));
        } else {
            std::slice::from_raw_parts(input, len)
        };
        let d = decide_read_only(&handle(machine, "machine")?.0, word)?;
        put(out, behavior(d.behavior), "out")
    })
}

/// Decides whether the machine can enter its target state.
///
/// # Safety
/// `machine` must be a live handle and `reached` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_machine_reach(machine: *const BlMachine, prune: bool, reached: *mut bool) -> BlStatus {
    guarded(|| {
        let d = decide_reachability(&handle(machine, "machine")?.0, prune)?;
        put(reached, d.verdict == ReachVerdict::Reached, "reached")
    })
}

/// Tour-guide bounds for `states` states. Fails with `Overflow` when a bound
/// does not fit in 64 bits.
///
/// # Safety
/// `det` and `nondet` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bl_guide_bounds(states: usize, det: *mut u64, nondet: *mut u64) -> BlStatus {
    guarded(|| {
        if states == 0 {
            return Err(Failure(BlStatus::Invalid, "states must be at least 1".into()));
        }
        let (d, n) = (det_guide_bound(states), nondet_guide_bound(states));
        let overflow = |b: String| Failure(BlStatus::Overflow, format!("bound {b} exceeds 64 bits"));
        put(det, u64::try_from(&d).map_err(|_| overflow(d.to_string()))?, "det")?;
        put(nondet, u64::try_from(&n).map_err(|_| overflow(n.to_string()))?, "nondet")
    })
}
