//! C interface to the cutblur analyses.
//!
//! Frames and analyses are opaque handles owned by the caller and released
//! with their `_free` functions. Every fallible call returns a [`CbStatus`];
//! on failure [`cb_last_error`] describes the problem. Strings returned
//! through out-parameters are released with [`cb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cutblur::disclosure::no_disclosure;
use cutblur::enumerate::{Bound, OrderSemantics, Universe};
use cutblur::format::{parse_frame, FormatError, FrameDocument};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArg = 1,
    /// The frame text is not a well-formed document.
    Parse = 2,
    /// The document parsed but describes an invalid frame.
    InvalidFrame = 3,
    /// A channel or set name is unknown.
    UnknownName = 4,
    /// A string argument is not valid UTF-8.
    Utf8 = 5,
    /// The library panicked; the handle arguments should be discarded.
    Panic = 6,
    /// The bound is inconsistent or admits too many executions.
    Bound = 7,
}

/// A parsed frame document.
pub struct CbFrame {
    doc: FrameDocument,
}

/// A frame's executions within a bound.
pub struct CbAnalysis {
    doc: FrameDocument,
    universe: Universe,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: CbStatus, msg: impl Into<String>) -> CbStatus {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
    status
}

fn guard<F: FnOnce() -> Result<(), (CbStatus, String)>>(body: F) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
            CbStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(CbStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CbStatus, String)> {
    if p.is_null() {
        return Err((CbStatus::NullArg, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (CbStatus::Utf8, format!("{what}: {e}")))
}

fn null<T>(p: *const T, what: &str) -> Result<(), (CbStatus, String)> {
    if p.is_null() {
        Err((CbStatus::NullArg, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn format_error(e: FormatError) -> (CbStatus, String) {
    let status = match e {
        FormatError::Invalid(_) => CbStatus::InvalidFrame,
        FormatError::Set { .. } => CbStatus::UnknownName,
        _ => CbStatus::Parse,
    };
    (status, e.to_string())
}

/// Parses a frame document. On success `*out` receives a handle to free
/// with [`cb_frame_free`].
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_frame_from_toml(toml: *const c_char, out: *mut *mut CbFrame) -> CbStatus {
    guard(|| {
        null(out, "out")?;
        *out = ptr::null_mut();
        let doc = parse_frame(text(toml, "toml")?).map_err(format_error)?;
        *out = Box::into_raw(Box::new(CbFrame { doc }));
        Ok(())
    })
}

/// Releases a frame. Null is ignored.
///
/// # Safety
/// `frame` must come from [`cb_frame_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_frame_free(frame: *mut CbFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Enumerates the executions of `frame` with at most `bound` events in total
/// and, when `per_location` is nonzero, at most that many at any location.
/// `total_order` selects totally ordered executions instead of minimal ones.
/// The analysis keeps its own copy of the frame.
///
/// # Safety
/// `frame` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_analysis_new(
    frame: *const CbFrame,
    bound: usize,
    per_location: usize,
    total_order: bool,
    out: *mut *mut CbAnalysis,
) -> CbStatus {
    guard(|| {
        null(out, "out")?;
        *out = ptr::null_mut();
        null(frame, "frame")?;
        let doc = (*frame).doc.clone();
        let mut b = Bound::total(bound);
        if per_location > 0 {
            b = b.with_per_location(per_location);
        }
        let semantics = if total_order { OrderSemantics::Total } else { OrderSemantics::Minimal };
        let universe = Universe::new(doc.frame.clone(), b, semantics).map_err(|e| (CbStatus::Bound, e.to_string()))?;
        *out = Box::into_raw(Box::new(CbAnalysis { doc, universe }));
        Ok(())
    })
}

/// Releases an analysis. Null is ignored.
///
/// # Safety
/// `analysis` must come from [`cb_analysis_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_analysis_free(analysis: *mut CbAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Number of executions within the bound.
///
/// # Safety
/// `analysis` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_analysis_executions(analysis: *const CbAnalysis, out: *mut usize) -> CbStatus {
    guard(|| {
        null(analysis, "analysis")?;
        null(out, "out")?;
        *out = (*analysis).universe.len();
        Ok(())
    })
}

/// Decides whether observing `observed` reveals nothing about `source`.
/// Both name a set declared in the frame or list channels separated by
/// commas.
///
/// # Safety
/// `analysis` must be a live handle, the names NUL-terminated strings and
/// `holds` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_no_disclosure(
    analysis: *const CbAnalysis,
    source: *const c_char,
    observed: *const c_char,
    holds: *mut bool,
) -> CbStatus {
    guard(|| {
        null(analysis, "analysis")?;
        null(holds, "holds")?;
        let a = &*analysis;
        let s = a.doc.channels(text(source, "source")?).map_err(format_error)?;
        let o = a.doc.channels(text(observed, "observed")?).map_err(format_error)?;
        *holds = no_disclosure(&a.universe, &s, &o).holds;
        Ok(())
    })
}

/// The local runs on `channels` as a JSON array of strings in run syntax.
/// `*out` must be released with [`cb_string_free`].
///
/// # Safety
/// `analysis` must be a live handle, `channels` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_runs_json(
    analysis: *const CbAnalysis,
    channels: *const c_char,
    out: *mut *mut c_char,
) -> CbStatus {
    guard(|| {
        null(out, "out")?;
        *out = ptr::null_mut();
        null(analysis, "analysis")?;
        let a = &*analysis;
        let c = a.doc.channels(text(channels, "channels")?).map_err(format_error)?;
        let frame = a.universe.frame();
        let runs: Vec<String> = a.universe.runs(&c).runs.iter().map(|r| r.display(frame).to_string()).collect();
        let json = serde_json::to_string(&runs).expect("strings serialize");
        *out = CString::new(json).expect("run syntax has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Description of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn cb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
