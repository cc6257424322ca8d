//! C ABI over the core library.
//!
//! Graphs cross the boundary as opaque `AeGraph` handles created by
//! [`ae_graph_parse`] and released with [`ae_graph_free`]. Every fallible call
//! returns an [`AeStatus`]; on failure [`ae_last_error`] describes it until the
//! next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use anonelect::tasks::{is_feasible, s_index, z_index_bruteforce, IndexError, TaskId};
use anonelect::view::refine_classes;
use anonelect::{parse_plg, serialize_plg, PortGraph};

/// Opaque graph handle.
pub struct AeGraph(PortGraph);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    Infeasible = 4,
    BufferTooSmall = 5,
    InvalidArgument = 6,
    /// No solution up to `max_k`.
    NotFound = 7,
    BudgetExceeded = 8,
}

/// Task ids accepted by [`ae_election_index`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeTask {
    Selection = 0,
    PortElection = 1,
    PortPathElection = 2,
    CompletePortPathElection = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: AeStatus, msg: impl ToString) -> AeStatus {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
    status
}

fn index_status(e: IndexError) -> AeStatus {
    let status = match e {
        IndexError::Infeasible => AeStatus::Infeasible,
        IndexError::MaxKExceeded { .. } => AeStatus::NotFound,
        IndexError::BudgetExceeded { .. } => AeStatus::BudgetExceeded,
        IndexError::TooLarge { .. } => AeStatus::InvalidArgument,
    };
    fail(status, e)
}

/// Borrows the graph behind a handle, or reports a null pointer.
unsafe fn graph<'a>(g: *const AeGraph) -> Result<&'a PortGraph, AeStatus> {
    g.as_ref().map(|h| &h.0).ok_or_else(|| fail(AeStatus::NullPointer, "null graph handle"))
}

/// Message for the last failed call on this thread; empty if none. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn ae_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses PLG text into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ae_graph_parse(text: *const c_char, out: *mut *mut AeGraph) -> AeStatus {
    if text.is_null() || out.is_null() {
        return fail(AeStatus::NullPointer, "null argument");
    }
    let s = match CStr::from_ptr(text).to_str() {
        Ok(s) => s,
        Err(e) => return fail(AeStatus::InvalidUtf8, e),
    };
    match parse_plg(s) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(AeGraph(g)));
            AeStatus::Ok
        }
        Err(e) => {
            *out = ptr::null_mut();
            fail(AeStatus::ParseError, e)
        }
    }
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `g` must come from [`ae_graph_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ae_graph_free(g: *mut AeGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ae_graph_node_count(g: *const AeGraph, out: *mut usize) -> AeStatus {
    let g = match graph(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    if out.is_null() {
        return fail(AeStatus::NullPointer, "null output");
    }
    *out = g.n();
    AeStatus::Ok
}

/// Serializes to PLG text; free the result with [`ae_string_free`].
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ae_graph_serialize(g: *const AeGraph, out: *mut *mut c_char) -> AeStatus {
    let g = match graph(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    if out.is_null() {
        return fail(AeStatus::NullPointer, "null output");
    }
    // PLG text never contains NUL
    *out = CString::new(serialize_plg(g)).expect("PLG text has no NUL").into_raw();
    AeStatus::Ok
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ae_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Whether all views are pairwise distinct.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ae_is_feasible(g: *const AeGraph, out: *mut bool) -> AeStatus {
    let g = match graph(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    if out.is_null() {
        return fail(AeStatus::NullPointer, "null output");
    }
    *out = is_feasible(g);
    AeStatus::Ok
}

/// Writes the depth-`depth` class of every node to `classes[0..n]`.
///
/// # Safety
/// `g` must be a live handle and `classes` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ae_refine_classes(g: *const AeGraph, depth: usize, classes: *mut u32, len: usize) -> AeStatus {
    let g = match graph(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    if classes.is_null() {
        return fail(AeStatus::NullPointer, "null output");
    }
    if len < g.n() {
        return fail(AeStatus::BufferTooSmall, format!("need {} entries, got {len}", g.n()));
    }
    let part = refine_classes(g, depth);
    std::slice::from_raw_parts_mut(classes, g.n()).copy_from_slice(part.classes_at(depth));
    AeStatus::Ok
}

/// Least depth at which some node has a unique view.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ae_s_index(g: *const AeGraph, out: *mut usize) -> AeStatus {
    let g = match graph(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    if out.is_null() {
        return fail(AeStatus::NullPointer, "null output");
    }
    match s_index(g) {
        Ok(h) => {
            *out = h;
            AeStatus::Ok
        }
        Err(e) => index_status(e),
    }
}

/// Brute-force election index of `task`, with the elected node.
///
/// # Safety
/// `g` must be a live handle; `k_out` and `leader_out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ae_election_index(
    g: *const AeGraph,
    task: AeTask,
    max_k: usize,
    budget: u64,
    k_out: *mut usize,
    leader_out: *mut usize,
) -> AeStatus {
    let g = match graph(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    if k_out.is_null() || leader_out.is_null() {
        return fail(AeStatus::NullPointer, "null output");
    }
    let task = match task {
        AeTask::Selection => TaskId::S,
        AeTask::PortElection => TaskId::PE,
        AeTask::PortPathElection => TaskId::PPE,
        AeTask::CompletePortPathElection => TaskId::CPPE,
    };
    match z_index_bruteforce(g, task, max_k, budget) {
        Ok(r) => {
            *k_out = r.k;
            *leader_out = r.leader;
            AeStatus::Ok
        }
        Err(e) => index_status(e),
    }
}
