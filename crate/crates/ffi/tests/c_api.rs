use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use braidlike_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bl_last_error()) }.to_string_lossy().into_owned()
}

fn program(src: &str) -> *mut BlProgram {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bl_program_parse(src.as_ptr(), &mut p) }, BlStatus::Ok);
    p
}

fn machine(src: &str) -> *mut BlMachine {
    let src = CString::new(src).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { bl_machine_parse(src.as_ptr(), &mut m) }, BlStatus::Ok);
    m
}

#[test]
fn run_program_and_read_counters() {
    let p = program("counters 3\ninit 3 4 0\n0: subb 1 3\n1: add 0\n2: subb 2 0\n3: halt\n");
    let mut n = 0usize;
    assert_eq!(unsafe { bl_program_num_counters(p, &mut n) }, BlStatus::Ok);
    assert_eq!(n, 3);
    let mut result = BlRunResult { halted: false, steps: 0, pc: 0 };
    let mut counters = [0u64; 3];
    let status = unsafe { bl_program_run(p, 1000, &mut result, counters.as_mut_ptr(), counters.len()) };
    assert_eq!(status, BlStatus::Ok);
    assert!(result.halted);
    assert_eq!(result.pc, -1);
    assert_eq!(counters, [7, 0, 0]);
    let status = unsafe { bl_program_run(p, 1000, &mut result, counters.as_mut_ptr(), 1) };
    assert_eq!(status, BlStatus::Invalid);
    assert!(last_error().contains("counter buffer"));
    unsafe { bl_program_free(p) };
}

#[test]
fn parse_error_reports_line() {
    let src = CString::new("counters 1\n0: add 5\n").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bl_program_parse(src.as_ptr(), &mut p) }, BlStatus::Parse);
    assert!(p.is_null());
    assert!(last_error().contains("out of range"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bl_program_parse(ptr::null(), &mut p) }, BlStatus::NullArgument);
    assert_eq!(unsafe { bl_machine_reach(ptr::null(), false, ptr::null_mut()) }, BlStatus::NullArgument);
    unsafe { bl_program_free(ptr::null_mut()) };
    unsafe { bl_string_free(ptr::null_mut()) };
}

#[test]
fn level_json_and_bisimulation() {
    let p = program("counters 1\n0: add 0\n1: add 0\n2: halt\n");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { bl_program_level_json(p, &mut json) }, BlStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    unsafe { bl_string_free(json) };
    assert!(text.contains("\"tim_edges\""));
    let mut pass = false;
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { bl_program_bisimulate(p, 100, &mut pass, &mut report) }, BlStatus::Ok);
    assert!(pass);
    let report_text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_string();
    unsafe { bl_string_free(report) };
    assert!(report_text.contains("\"pass\":true"));
    unsafe { bl_program_free(p) };
}

#[test]
fn machines_decide_and_reach() {
    let m = machine("states 2\nsymbols 2\nstart 0\naccept 1\ndeterministic true\ntrans 0 0 write 1 1\n");
    let mut b = BlBehavior::Reject;
    assert_eq!(unsafe { bl_machine_decide(m, &mut b) }, BlStatus::Ok);
    assert_eq!(b, BlBehavior::Accept);
    unsafe { bl_machine_free(m) };

    let scanner = machine(
        "states 4\nsymbols 3\nstart 0\naccept 3\ndeterministic true\n\
         trans 0 1 right 0\ntrans 0 2 right 0\ntrans 0 0 left 1\ntrans 1 2 right 3\n",
    );
    let word = [1u32, 2];
    assert_eq!(unsafe { bl_machine_decide_read_only(scanner, word.as_ptr(), 2, &mut b) }, BlStatus::Ok);
    assert_eq!(b, BlBehavior::Accept);
    assert_eq!(unsafe { bl_machine_decide_read_only(scanner, ptr::null(), 0, &mut b) }, BlStatus::Ok);
    assert_eq!(b, BlBehavior::Reject);
    unsafe { bl_machine_free(scanner) };

    let nd = machine("states 2\nsymbols 1\nstart 0\ntarget 1\ndeterministic false\ntrans 0 0 right 0\ntrans 0 0 right 1\n");
    let mut reached = false;
    assert_eq!(unsafe { bl_machine_reach(nd, true, &mut reached) }, BlStatus::Ok);
    assert!(reached);
    assert_eq!(unsafe { bl_machine_decide(nd, &mut b) }, BlStatus::Invalid);
    unsafe { bl_machine_free(nd) };
}

#[test]
fn bounds_fit_or_overflow() {
    let (mut det, mut nondet) = (0u64, 0u64);
    assert_eq!(unsafe { bl_guide_bounds(2, &mut det, &mut nondet) }, BlStatus::Ok);
    assert_eq!((det, nondet), (72, 24576));
    assert_eq!(unsafe { bl_guide_bounds(9, &mut det, &mut nondet) }, BlStatus::Overflow);
    assert_eq!(unsafe { bl_guide_bounds(0, &mut det, &mut nondet) }, BlStatus::Invalid);
}

/// Builds and runs a C program against the generated header and the static
/// library, when a C compiler and the archive are available.
#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/braidlike.h");
    assert!(header.exists(), "build script should have written {}", header.display());
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let archive = profile_dir.join("libbraidlike_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !archive.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or no {}", archive.display());
        return;
    }
    let out = std::env::temp_dir().join(format!("braidlike_c_smoke_{}", std::process::id()));
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to build");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "halted=1 steps=3 c0=2 det=72");
}
