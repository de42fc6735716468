//! C interface to the analysis library.
//!
//! A session is created from program text (and optionally a format
//! description) and freed with `ffa_session_free`. Commands write a newly
//! allocated NUL-terminated string through an out-pointer; release it with
//! `ffa_string_free`. On failure the message is available from
//! `ffa_last_error` until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ffa_core::conformance::Mode;
use ffa_core::domains::Selector;
use ffa_core::formatspec::Tables;
use ffa_core::oracle::{Bounds, DEFAULT_FUEL};
use ffa_core::session::pretty;
use ffa_core::{FfaError, OutputFormat, Session};

/// Opaque handle to a loaded program.
pub struct FfaSession {
    inner: Session,
}

/// Result of every call. The numeric values match the `ffa` exit codes
/// where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfaStatus {
    Ok = 0,
    /// The command ran and reported warnings or violations.
    Findings = 1,
    /// Bad program, format, name or argument.
    InputError = 2,
    /// A broken invariant or a panic inside the library.
    InternalError = 3,
    /// A required pointer argument was null.
    NullArgument = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfaFormat {
    Text = 0,
    Json = 1,
    Dot = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfaMode {
    Under = 0,
    Over = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(FfaStatus, String);

impl From<FfaError> for Fail {
    fn from(e: FfaError) -> Fail {
        let code = if e.is_input_error() { FfaStatus::InputError } else { FfaStatus::InternalError };
        Fail(code, e.to_string())
    }
}

/// Borrow a required C string.
unsafe fn arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(FfaStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(FfaStatus::InputError, format!("{name} is not UTF-8")))
}

unsafe fn opt_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        arg(p, name).map(Some)
    }
}

unsafe fn borrow<'a>(s: *const FfaSession) -> Result<&'a Session, Fail> {
    s.as_ref().map(|s| &s.inner).ok_or_else(|| Fail(FfaStatus::NullArgument, "session is null".into()))
}

fn selector(s: &str) -> Result<Selector, Fail> {
    s.parse().map_err(|e| Fail(FfaStatus::InputError, e))
}

fn format(f: FfaFormat) -> OutputFormat {
    match f {
        FfaFormat::Text => OutputFormat::Text,
        FfaFormat::Json => OutputFormat::Json,
        FfaFormat::Dot => OutputFormat::Dot,
    }
}

/// Run `f`, convert its outcome to a status, store the produced text in
/// `out` and record any error message.
fn guard(out: *mut *mut c_char, f: impl FnOnce() -> Result<(String, bool), Fail>) -> FfaStatus {
    if out.is_null() {
        set_error("out is null");
        return FfaStatus::NullArgument;
    }
    // SAFETY: checked non-null; the caller provides a writable slot.
    unsafe { *out = ptr::null_mut() };
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok((text, findings))) => {
            let c = CString::new(text.replace('\0', " ")).unwrap_or_default();
            unsafe { *out = c.into_raw() };
            if findings {
                FfaStatus::Findings
            } else {
                FfaStatus::Ok
            }
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            FfaStatus::InternalError
        }
    }
}

/// Parse `program` and, when `format_spec` is not null, a format
/// description. On success `*out` owns a new session.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ffa_session_new(
    program: *const c_char,
    format_spec: *const c_char,
    out: *mut *mut FfaSession,
) -> FfaStatus {
    if out.is_null() {
        set_error("out is null");
        return FfaStatus::NullArgument;
    }
    *out = ptr::null_mut();
    let r = catch_unwind(AssertUnwindSafe(|| -> Result<Session, Fail> {
        Ok(Session::new(arg(program, "program")?, opt_arg(format_spec, "format_spec")?)?)
    }));
    match r {
        Ok(Ok(inner)) => {
            *out = Box::into_raw(Box::new(FfaSession { inner }));
            FfaStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            FfaStatus::InternalError
        }
    }
}

/// Attach a table snapshot (JSON object from table name to key list).
///
/// # Safety
/// `session` must come from `ffa_session_new`; `tables_json` must be a
/// valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ffa_session_set_tables(session: *mut FfaSession, tables_json: *const c_char) -> FfaStatus {
    let Some(s) = session.as_mut() else {
        set_error("session is null");
        return FfaStatus::NullArgument;
    };
    let tables = match arg(tables_json, "tables_json")
        .and_then(|t| Tables::from_json(t).map_err(|e| Fail(FfaStatus::InputError, e.to_string())))
    {
        Ok(t) => t,
        Err(Fail(code, msg)) => {
            set_error(&msg);
            return code;
        }
    };
    s.inner.tables = Some(tables);
    FfaStatus::Ok
}

/// # Safety
/// `session` must be null or come from `ffa_session_new`, and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ffa_session_free(session: *mut FfaSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Facts per program point and file state. A null `automaton` analyzes
/// the plain control flow graph.
///
/// # Safety
/// Pointers as for `ffa_session_new`; `out` receives a string to release
/// with `ffa_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ffa_analyze(
    session: *const FfaSession,
    automaton: *const c_char,
    domain: *const c_char,
    fmt: FfaFormat,
    out: *mut *mut c_char,
) -> FfaStatus {
    guard(out, || {
        let s = borrow(session)?;
        let text = s.analyze(opt_arg(automaton, "automaton")?, selector(arg(domain, "domain")?)?, format(fmt))?;
        Ok((text, false))
    })
}

/// Conformance report as JSON. Returns `Findings` when there are warnings.
///
/// # Safety
/// As for `ffa_analyze`.
#[no_mangle]
pub unsafe extern "C" fn ffa_conformance(
    session: *const FfaSession,
    automaton: *const c_char,
    mode: FfaMode,
    domain: *const c_char,
    out: *mut *mut c_char,
) -> FfaStatus {
    guard(out, || {
        let s = borrow(session)?;
        let mode = match mode {
            FfaMode::Under => Mode::Under,
            FfaMode::Over => Mode::Over,
        };
        let r = s.conformance(arg(automaton, "automaton")?, mode, selector(arg(domain, "domain")?)?)?;
        Ok((pretty(&r.to_json()), !r.is_clean()))
    })
}

/// Specialize for each comma-separated criterion. The JSON result holds
/// every specialized source, its rewrites and the commonality summary.
///
/// # Safety
/// As for `ffa_analyze`.
#[no_mangle]
pub unsafe extern "C" fn ffa_specialize(
    session: *const FfaSession,
    criteria: *const c_char,
    simplify: bool,
    out: *mut *mut c_char,
) -> FfaStatus {
    guard(out, || {
        let s = borrow(session)?;
        let names: Vec<&str> = arg(criteria, "criteria")?.split(',').map(str::trim).filter(|c| !c.is_empty()).collect();
        if names.is_empty() {
            return Err(Fail(FfaStatus::InputError, "no criteria given".into()));
        }
        let results = s.specialize(&names, simplify)?;
        Ok((pretty(&Session::specialize_report(&results)), false))
    })
}

/// The program file state graph in DOT.
///
/// # Safety
/// As for `ffa_analyze`.
#[no_mangle]
pub unsafe extern "C" fn ffa_pfsg_dot(
    session: *const FfaSession,
    automaton: *const c_char,
    domain: *const c_char,
    out: *mut *mut c_char,
) -> FfaStatus {
    guard(out, || {
        let s = borrow(session)?;
        let g = s.pfsg(arg(automaton, "automaton")?, selector(arg(domain, "domain")?)?)?;
        Ok((g.export_dot(&s.cfg), false))
    })
}

/// Bounded soundness check as JSON. Returns `Findings` on a violation.
///
/// # Safety
/// As for `ffa_analyze`.
#[no_mangle]
pub unsafe extern "C" fn ffa_verify(
    session: *const FfaSession,
    automaton: *const c_char,
    domain: *const c_char,
    max_records: u32,
    out: *mut *mut c_char,
) -> FfaStatus {
    guard(out, || {
        let s = borrow(session)?;
        let bounds = Bounds { max_records: max_records as usize, fuel: DEFAULT_FUEL };
        let r = s.verify(opt_arg(automaton, "automaton")?, selector(arg(domain, "domain")?)?, bounds)?;
        let json = pretty(&serde_json::to_value(&r).expect("reports serialize"));
        Ok((json, r.violation.is_some()))
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ffa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ffa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn ffa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
