use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use ffa_ffi::*;

const PROGRAM: &str = include_str!("../../core/fixtures/running.mcbl");
const FORMAT: &str = include_str!("../../core/fixtures/running.ffs");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn open() -> *mut FfaSession {
    let (p, f) = (c(PROGRAM), c(FORMAT));
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ffa_session_new(p.as_ptr(), f.as_ptr(), &mut s) }, FfaStatus::Ok);
    assert!(!s.is_null());
    s
}

/// Take ownership of a returned string.
fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { ffa_string_free(p) };
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ffa_last_error()) }.to_str().unwrap().to_owned()
}

#[test]
fn analyze_returns_json_facts() {
    let s = open();
    let (a, d) = (c("same_only"), c("cp"));
    let mut out = ptr::null_mut();
    let st = unsafe { ffa_analyze(s, a.as_ptr(), d.as_ptr(), FfaFormat::Json, &mut out) };
    assert_eq!(st, FfaStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert!(v.is_object());
    unsafe { ffa_session_free(s) };
}

#[test]
fn conformance_status_reflects_warnings() {
    let s = open();
    let (a, d) = (c("wellformed"), c("cp"));
    let mut out = ptr::null_mut();
    let st = unsafe { ffa_conformance(s, a.as_ptr(), FfaMode::Under, d.as_ptr(), &mut out) };
    assert_eq!(st, FfaStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["reject_lines"], serde_json::json!([34]));
    unsafe { ffa_session_free(s) };

    let (p, f) = (c(include_str!("../../core/fixtures/running_no_trl_check.mcbl")), c(FORMAT));
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ffa_session_new(p.as_ptr(), f.as_ptr(), &mut s) }, FfaStatus::Ok);
    let st = unsafe { ffa_conformance(s, a.as_ptr(), FfaMode::Over, d.as_ptr(), &mut out) };
    assert_eq!(st, FfaStatus::Findings);
    assert!(take(out).contains("q_x"));
    unsafe { ffa_session_free(s) };
}

#[test]
fn specialize_and_pfsg() {
    let s = open();
    let crit = c("same_only, diff_only");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ffa_specialize(s, crit.as_ptr(), true, &mut out) }, FfaStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["criteria"].as_array().unwrap().len(), 2);
    assert!(v["criteria"][0]["source"].as_str().unwrap().contains("PROCEDURE DIVISION."));

    let (a, d) = (c("wellformed"), c("cp"));
    assert_eq!(unsafe { ffa_pfsg_dot(s, a.as_ptr(), d.as_ptr(), &mut out) }, FfaStatus::Ok);
    assert!(take(out).starts_with("digraph pfsg {"));
    unsafe { ffa_session_free(s) };
}

#[test]
fn verify_runs_the_oracle() {
    let s = open();
    let (a, d) = (c("wellformed"), c("cp*uninit"));
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ffa_verify(s, a.as_ptr(), d.as_ptr(), 3, &mut out) }, FfaStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert!(v["violation"].is_null());
    unsafe { ffa_session_free(s) };
}

#[test]
fn errors_are_reported() {
    let bad = c("PROCEDURE DIVISION.\n    MOVE .\n");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ffa_session_new(bad.as_ptr(), ptr::null(), &mut s) }, FfaStatus::InputError);
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { ffa_session_new(ptr::null(), ptr::null(), &mut s) }, FfaStatus::NullArgument);

    let s = open();
    let (a, d) = (c("no_such_automaton"), c("cp"));
    let mut out = ptr::null_mut();
    let st = unsafe { ffa_analyze(s, a.as_ptr(), d.as_ptr(), FfaFormat::Text, &mut out) };
    assert_eq!(st, FfaStatus::InputError);
    assert!(out.is_null());
    assert!(last_error().contains("no_such_automaton"), "{}", last_error());

    let (a, d) = (c("wellformed"), c("bogus"));
    let st = unsafe { ffa_analyze(s, a.as_ptr(), d.as_ptr(), FfaFormat::Text, &mut out) };
    assert_eq!(st, FfaStatus::InputError);
    let st = unsafe { ffa_analyze(s, a.as_ptr(), d.as_ptr(), FfaFormat::Text, ptr::null_mut()) };
    assert_eq!(st, FfaStatus::NullArgument);
    unsafe { ffa_session_free(s) };
    unsafe { ffa_session_free(ptr::null_mut()) };
}

#[test]
fn tables_can_be_attached() {
    let s = open();
    let t = c(r#"{"payees": ["ACME1"]}"#);
    assert_eq!(unsafe { ffa_session_set_tables(s, t.as_ptr()) }, FfaStatus::Ok);
    let bad = c("[1, 2");
    assert_eq!(unsafe { ffa_session_set_tables(s, bad.as_ptr()) }, FfaStatus::InputError);
    unsafe { ffa_session_free(s) };
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(ffa_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/ffa.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "ffa_session_new",
        "ffa_session_free",
        "ffa_analyze",
        "ffa_conformance",
        "ffa_specialize",
        "ffa_pfsg_dot",
        "ffa_string_free",
        "ffa_last_error",
        "typedef struct FfaSession FfaSession",
    ] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", header]).output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
