//! C interface to the monitor.
//!
//! A monitor is an opaque handle created from specification source. Events
//! go in as JSON object lines; resolved rows come out as JSON strings, one
//! per call to [`lola_monitor_next_row`]. Every function returns a
//! [`LolaStatus`]; on failure [`lola_last_error`] describes the error on the
//! calling thread. Strings handed out by the library are released with
//! [`lola_string_free`].

use std::cell::RefCell;
use std::collections::VecDeque;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lola_core::analysis::analyze;
use lola_core::ast::TypedSpec;
use lola_core::engine::{Engine, EngineError, EngineOptions, OutputRow};
use lola_core::io::{read_event_line, row_to_json};
use lola_core::{compile_with_bundles, LoadError};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LolaStatus {
    Ok = 0,
    /// No resolved row is waiting.
    Empty = 1,
    NullArgument = -1,
    InvalidUtf8 = -2,
    /// Source failed to parse, expand or type check.
    SpecError = -3,
    /// A closed dependency path has weight zero.
    ZeroCycle = -4,
    /// A positive dependency cycle rules out online monitoring.
    NotMonitorable = -5,
    InputError = -6,
    EvalError = -7,
    /// Event after finish, or finish twice.
    StateError = -8,
    Panic = -9,
}

/// Evaluate applications only once all arguments are known.
pub const LOLA_FLAG_NO_SIMPLIFY: u32 = 1;
/// Make every shipped template library available.
pub const LOLA_FLAG_STDLIB: u32 = 2;

/// Opaque monitor handle.
pub struct LolaMonitor {
    spec: TypedSpec,
    engine: Engine,
    rows: VecDeque<CString>,
    lines: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LolaStatus, String);

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<LolaStatus, Failure>) -> LolaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LolaStatus::Panic
        }
    }
}

fn engine_failure(e: EngineError) -> Failure {
    let status = match e {
        EngineError::ZeroCycle(_) => LolaStatus::ZeroCycle,
        EngineError::NotEfficientlyMonitorable { .. } => LolaStatus::NotMonitorable,
        EngineError::MissingInput(_)
        | EngineError::UnknownInput(_)
        | EngineError::Arity { .. }
        | EngineError::TypeMismatch { .. } => LolaStatus::InputError,
        EngineError::EventAfterFinish | EngineError::DoubleFinish => LolaStatus::StateError,
        _ => LolaStatus::EvalError,
    };
    Failure(status, e.to_string())
}

fn load_failure(e: LoadError) -> Failure {
    Failure(LolaStatus::SpecError, e.to_string())
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(
            LolaStatus::NullArgument,
            "null string argument".into(),
        ));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(LolaStatus::InvalidUtf8, e.to_string()))
}

fn to_c(s: String) -> Result<CString, Failure> {
    CString::new(s).map_err(|e| Failure(LolaStatus::InvalidUtf8, e.to_string()))
}

fn compile(src: &str, flags: u32) -> Result<TypedSpec, Failure> {
    let bundles: &[&str] = if flags & LOLA_FLAG_STDLIB != 0 {
        &["all"]
    } else {
        &[]
    };
    compile_with_bundles(src, bundles).map_err(load_failure)
}

impl LolaMonitor {
    fn queue(&mut self, rows: Vec<OutputRow>) -> Result<(), Failure> {
        for row in rows {
            self.rows.push_back(to_c(row_to_json(&row).to_string())?);
        }
        Ok(())
    }
}

/// Creates a monitor for the Lola source `spec`.
///
/// # Safety
/// `spec` is a NUL-terminated UTF-8 string; `out` is a valid pointer. On
/// success `*out` owns a monitor to be released with [`lola_monitor_free`].
#[no_mangle]
pub unsafe extern "C" fn lola_monitor_new(
    spec: *const c_char,
    flags: u32,
    out: *mut *mut LolaMonitor,
) -> LolaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(
                LolaStatus::NullArgument,
                "null output pointer".into(),
            ));
        }
        *out = ptr::null_mut();
        let spec = compile(str_arg(spec)?, flags)?;
        let options = EngineOptions {
            simplify: flags & LOLA_FLAG_NO_SIMPLIFY == 0,
        };
        let engine = Engine::new(spec.clone(), options).map_err(engine_failure)?;
        *out = Box::into_raw(Box::new(LolaMonitor {
            spec,
            engine,
            rows: VecDeque::new(),
            lines: 0,
        }));
        Ok(LolaStatus::Ok)
    })
}

/// Feeds one event, a JSON object with one field per input stream. Blank
/// lines are ignored.
///
/// # Safety
/// `m` is a live monitor; `event` is a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn lola_monitor_push_json(
    m: *mut LolaMonitor,
    event: *const c_char,
) -> LolaStatus {
    guard(|| {
        let m = m
            .as_mut()
            .ok_or_else(|| Failure(LolaStatus::NullArgument, "null monitor".into()))?;
        let line = str_arg(event)?;
        m.lines += 1;
        let Some(values) = read_event_line(line, m.lines, &m.spec)
            .map_err(|e| Failure(LolaStatus::InputError, e.to_string()))?
        else {
            return Ok(LolaStatus::Ok);
        };
        let rows = m.engine.push_values(values).map_err(engine_failure)?;
        m.queue(rows)?;
        Ok(LolaStatus::Ok)
    })
}

/// Signals the end of the trace; every remaining row becomes available.
///
/// # Safety
/// `m` is a live monitor.
#[no_mangle]
pub unsafe extern "C" fn lola_monitor_finish(m: *mut LolaMonitor) -> LolaStatus {
    guard(|| {
        let m = m
            .as_mut()
            .ok_or_else(|| Failure(LolaStatus::NullArgument, "null monitor".into()))?;
        let rows = m.engine.finish().map_err(engine_failure)?;
        m.queue(rows)?;
        Ok(LolaStatus::Ok)
    })
}

/// Takes the oldest resolved row as a JSON string, or returns
/// [`LolaStatus::Empty`] and sets `*out` to null.
///
/// # Safety
/// `m` is a live monitor; `out` is a valid pointer. The row is released
/// with [`lola_string_free`].
#[no_mangle]
pub unsafe extern "C" fn lola_monitor_next_row(
    m: *mut LolaMonitor,
    out: *mut *mut c_char,
) -> LolaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(
                LolaStatus::NullArgument,
                "null output pointer".into(),
            ));
        }
        *out = ptr::null_mut();
        let m = m
            .as_mut()
            .ok_or_else(|| Failure(LolaStatus::NullArgument, "null monitor".into()))?;
        match m.rows.pop_front() {
            Some(row) => {
                *out = row.into_raw();
                Ok(LolaStatus::Ok)
            }
            None => Ok(LolaStatus::Empty),
        }
    })
}

/// Writes the run counters as a JSON object
/// `{"events","rows","max_retained","max_lookahead"}`.
///
/// # Safety
/// `m` is a live monitor; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lola_monitor_stats_json(
    m: *const LolaMonitor,
    out: *mut *mut c_char,
) -> LolaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(
                LolaStatus::NullArgument,
                "null output pointer".into(),
            ));
        }
        *out = ptr::null_mut();
        let m = m
            .as_ref()
            .ok_or_else(|| Failure(LolaStatus::NullArgument, "null monitor".into()))?;
        *out = to_c(lola_core::cli::stats_json(&m.engine.stats()).to_string())?.into_raw();
        Ok(LolaStatus::Ok)
    })
}

/// # Safety
/// `m` is null or a monitor from [`lola_monitor_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lola_monitor_free(m: *mut LolaMonitor) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Analyzes a specification and writes the result as JSON: streams, edges,
/// memory bounds, evaluation order and efficient monitorability. A zero
/// cycle is reported as [`LolaStatus::ZeroCycle`].
///
/// # Safety
/// `spec` is a NUL-terminated UTF-8 string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lola_analyze_json(
    spec: *const c_char,
    flags: u32,
    out: *mut *mut c_char,
) -> LolaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(
                LolaStatus::NullArgument,
                "null output pointer".into(),
            ));
        }
        *out = ptr::null_mut();
        let spec = compile(str_arg(spec)?, flags)?;
        let a = analyze(&spec).map_err(|e| Failure(LolaStatus::ZeroCycle, e.to_string()))?;
        let edges: Vec<_> = a
            .graph
            .edges()
            .iter()
            .map(|e| serde_json::json!({"from": e.from, "to": e.to, "weight": e.weight}))
            .collect();
        let json = serde_json::json!({
            "streams": a.graph.vertices(),
            "edges": edges,
            "min_back_ref": a.min_back_ref,
            "max_latency": a.max_latency,
            "evaluation_order": a.zero_order,
            "efficiently_monitorable": a.efficiently_monitorable,
        });
        *out = to_c(json.to_string())?.into_raw();
        Ok(LolaStatus::Ok)
    })
}

/// The last error message on this thread, or null. Valid until the next
/// failing call on the same thread; not to be freed.
#[no_mangle]
pub extern "C" fn lola_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lola_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn lola_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
