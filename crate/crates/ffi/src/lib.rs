//! C ABI for pattern construction and geometry metrics.
//!
//! Patterns are opaque handles created by the constructor functions and
//! released with [`mcc_pattern_free`]. Every fallible call returns an
//! [`MccStatus`] code and writes its result through out-pointers; a non-OK
//! status leaves out-pointers untouched. The header is generated by cbindgen
//! into `include/mcc_pilot.h` at build time.

use std::ffi::c_char;
#[cfg(test)]
use std::ptr;
use std::time::Duration;

use mcc_pilot::geometry::{
    coherence_map, collinearity_census, coverage, symmetric_triples, LineSet,
};
use mcc_pilot::pattern::{baseline_3gpp, baseline_chirp, baseline_random, PilotPattern};
use mcc_pilot::solver::{solve_mcc, tighten_budget, SolveStatus, SolverConfig};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MccStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// The design problem is proven infeasible under the requested rules.
    Infeasible = 2,
    /// The solver hit its time limit before finishing.
    Timeout = 3,
    InternalError = 4,
}

/// Opaque pilot pattern handle.
pub struct MccPattern {
    inner: PilotPattern,
}

/// Geometry metrics of a pattern (see the `metrics` CLI subcommand).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MccMetrics {
    pub radius: u64,
    pub coverage_total: u64,
    pub redundant_lines: u64,
    pub has_four_collinear: bool,
    pub symmetric_triples: u64,
    pub max_offpeak_coherence: f64,
}

/// Options for [`mcc_pattern_design`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MccDesignOptions {
    /// Hopping period / subband count (>= 2).
    pub k: u64,
    /// Redundant-collinearity budget: an explicit value, `MCC_BUDGET_AUTO`
    /// for the tightening loop, or `MCC_BUDGET_NONE` for coverage-only.
    pub budget: i64,
    /// Forbid four or more pilots on one modular line.
    pub forbid_four_collinear: bool,
    /// Exclude symmetric pilot triples along a line.
    pub symmetric_exclusion: bool,
    /// Wall-clock limit in seconds.
    pub time_limit_s: f64,
    /// Relative optimality gap tolerance (0 proves optimality).
    pub gap_tolerance: f64,
}

/// `budget` sentinel: choose the budget by the tightening loop.
pub const MCC_BUDGET_AUTO: i64 = -1;
/// `budget` sentinel: no collinearity constraints (coverage-only).
pub const MCC_BUDGET_NONE: i64 = -2;

fn emit(out: *mut *mut MccPattern, pattern: PilotPattern) -> MccStatus {
    // SAFETY: the caller promises `out` points to writable storage.
    unsafe {
        *out = Box::into_raw(Box::new(MccPattern { inner: pattern }));
    }
    MccStatus::Ok
}

/// Builds the 3GPP SRS-style block-hopping baseline.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_baseline_3gpp(
    k: u64,
    f0: i64,
    out: *mut *mut MccPattern,
) -> MccStatus {
    if out.is_null() {
        return MccStatus::InvalidArgument;
    }
    match baseline_3gpp(k as usize, f0) {
        Ok(p) => emit(out, p),
        Err(_) => MccStatus::InvalidArgument,
    }
}

/// Builds the chirp baseline `f_t = t^2 mod k`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_baseline_chirp(k: u64, out: *mut *mut MccPattern) -> MccStatus {
    if out.is_null() || k == 0 {
        return MccStatus::InvalidArgument;
    }
    emit(out, baseline_chirp(k as usize))
}

/// Builds a seeded uniformly random permutation pattern.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_baseline_random(
    k: u64,
    seed: u64,
    out: *mut *mut MccPattern,
) -> MccStatus {
    if out.is_null() || k == 0 {
        return MccStatus::InvalidArgument;
    }
    emit(out, baseline_random(k as usize, seed))
}

/// Wraps an explicit schedule (one subband index per slot).
///
/// # Safety
/// `schedule` must point to `len` readable entries; `out` must point to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_from_schedule(
    k: u64,
    schedule: *const u64,
    len: u64,
    out: *mut *mut MccPattern,
) -> MccStatus {
    if out.is_null() || schedule.is_null() {
        return MccStatus::InvalidArgument;
    }
    let slice = unsafe { std::slice::from_raw_parts(schedule, len as usize) };
    let schedule: Vec<usize> = slice.iter().map(|&f| f as usize).collect();
    match PilotPattern::from_schedule(k as usize, schedule) {
        Ok(p) => emit(out, p),
        Err(_) => MccStatus::InvalidArgument,
    }
}

/// Runs the two-stage exact optimizer.
///
/// # Safety
/// `opts` must point to a valid options struct; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_design(
    opts: *const MccDesignOptions,
    out: *mut *mut MccPattern,
) -> MccStatus {
    if opts.is_null() || out.is_null() {
        return MccStatus::InvalidArgument;
    }
    let opts = unsafe { *opts };
    if opts.k < 2 || !opts.time_limit_s.is_finite() || opts.time_limit_s <= 0.0 {
        return MccStatus::InvalidArgument;
    }
    let base = SolverConfig {
        k: opts.k as usize,
        budget: None,
        forbid_four_collinear: opts.forbid_four_collinear,
        symmetric_exclusion: opts.symmetric_exclusion,
        time_limit: Duration::from_secs_f64(opts.time_limit_s),
        node_limit: None,
        gap_tolerance: opts.gap_tolerance,
    };
    let result = match opts.budget {
        MCC_BUDGET_AUTO => match tighten_budget(&base, None, 0.05) {
            Ok(t) => t.result,
            Err(_) => return MccStatus::Infeasible,
        },
        MCC_BUDGET_NONE => {
            let cfg = SolverConfig {
                budget: None,
                forbid_four_collinear: false,
                symmetric_exclusion: false,
                ..base
            };
            match solve_mcc(&cfg) {
                Ok(r) => r,
                Err(_) => return MccStatus::InvalidArgument,
            }
        }
        b if b >= 0 => {
            let cfg = SolverConfig {
                budget: Some(b as usize),
                ..base
            };
            match solve_mcc(&cfg) {
                Ok(r) => r,
                Err(_) => return MccStatus::InvalidArgument,
            }
        }
        _ => return MccStatus::InvalidArgument,
    };
    match (result.status, result.pattern) {
        (SolveStatus::Optimal | SolveStatus::GapTerminated, Some(p)) => emit(out, p),
        (SolveStatus::TimedOut, Some(p)) => {
            // Best incumbent; callers can distinguish via the status code.
            emit(out, p);
            MccStatus::Timeout
        }
        (SolveStatus::TimedOut, None) => MccStatus::Timeout,
        (SolveStatus::Infeasible, _) => MccStatus::Infeasible,
        (_, None) => MccStatus::InternalError,
    }
}

/// Grid size of a pattern (0 for a null handle).
///
/// # Safety
/// `pattern` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_k(pattern: *const MccPattern) -> u64 {
    if pattern.is_null() {
        return 0;
    }
    unsafe { (*pattern).inner.k() as u64 }
}

/// True iff every subband appears exactly once.
///
/// # Safety
/// `pattern` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_is_permutation(pattern: *const MccPattern) -> bool {
    if pattern.is_null() {
        return false;
    }
    unsafe { (*pattern).inner.is_permutation() }
}

/// Copies the schedule into `buf` (length `len` >= k).
///
/// # Safety
/// `pattern` must be a live handle; `buf` must point to `len` writable slots.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_schedule(
    pattern: *const MccPattern,
    buf: *mut u64,
    len: u64,
) -> MccStatus {
    if pattern.is_null() || buf.is_null() {
        return MccStatus::InvalidArgument;
    }
    let schedule = unsafe { (*pattern).inner.schedule() };
    if (len as usize) < schedule.len() {
        return MccStatus::InvalidArgument;
    }
    let out = unsafe { std::slice::from_raw_parts_mut(buf, schedule.len()) };
    for (dst, &f) in out.iter_mut().zip(schedule) {
        *dst = f as u64;
    }
    MccStatus::Ok
}

/// Replaces the pattern with its cyclic column shift by `s` slots.
///
/// # Safety
/// `pattern` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_cyclic_shift(pattern: *mut MccPattern, s: i64) -> MccStatus {
    if pattern.is_null() {
        return MccStatus::InvalidArgument;
    }
    let p = unsafe { &mut *pattern };
    p.inner = p.inner.cyclic_shift(s);
    MccStatus::Ok
}

/// Computes the geometry metrics of a pattern.
///
/// # Safety
/// `pattern` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_metrics(
    pattern: *const MccPattern,
    out: *mut MccMetrics,
) -> MccStatus {
    if pattern.is_null() || out.is_null() {
        return MccStatus::InvalidArgument;
    }
    let p = unsafe { &(*pattern).inner };
    if p.k() < 2 {
        return MccStatus::InvalidArgument;
    }
    let lines = LineSet::new(p.k());
    let cov = coverage(p);
    let census = collinearity_census(p, &lines);
    let triples = symmetric_triples(p, &lines);
    let coh = coherence_map(p);
    unsafe {
        *out = MccMetrics {
            radius: cov.radius as u64,
            coverage_total: cov.total as u64,
            redundant_lines: census.redundant_lines as u64,
            has_four_collinear: census.has_four_collinear,
            symmetric_triples: triples.len() as u64,
            max_offpeak_coherence: coh.max_offpeak,
        };
    }
    MccStatus::Ok
}

/// Releases a pattern handle; null is a no-op.
///
/// # Safety
/// `pattern` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcc_pattern_free(pattern: *mut MccPattern) {
    if !pattern.is_null() {
        // SAFETY: the handle was created by Box::into_raw in `emit`.
        drop(unsafe { Box::from_raw(pattern) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcc_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}
