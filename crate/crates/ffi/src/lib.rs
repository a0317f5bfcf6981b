//! C ABI over the rcdp planner.
//!
//! Every entry point returns an [`RcdpStatus`]; on failure the message is available
//! from [`rcdp_last_error`] on the same thread until the next call. Objects are
//! opaque handles released with their matching `_free` function. Panics are caught
//! at the boundary and reported as [`RcdpStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rcdp::cologr::{solve, Method};
use rcdp::policy::{run_policy, PolicyConfig, PolicyKind, TraversalOutcome};
use rcdp::{AdjustedGraph, Environment, LatticeGraph, RcdpError, RiskModel, SolveReport, SolveStatus, WeightRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcdpStatus {
    Ok = 0,
    /// The call succeeded but no feasible plan or traversal exists.
    Infeasible = 1,
    NullPointer = 2,
    InvalidArgument = 3,
    Parse = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcdpSolveStatus {
    OptimalUnconstrained = 0,
    OptimalDualCondition = 1,
    OptimalGapClosed = 2,
    BestFeasible = 3,
    Infeasible = 4,
}

impl From<SolveStatus> for RcdpSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::OptimalUnconstrained => Self::OptimalUnconstrained,
            SolveStatus::OptimalDualCondition => Self::OptimalDualCondition,
            SolveStatus::OptimalGapClosed => Self::OptimalGapClosed,
            SolveStatus::BestFeasible => Self::BestFeasible,
            SolveStatus::Infeasible => Self::Infeasible,
        }
    }
}

/// A problem instance.
pub struct RcdpEnvironment(Environment);

/// Result of a constrained solve.
pub struct RcdpSolveReport(SolveReport);

/// Result of running a policy against the ground truth.
pub struct RcdpOutcome(TraversalOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(RcdpStatus, String);

impl From<RcdpError> for Failure {
    fn from(e: RcdpError) -> Self {
        let status = match e {
            RcdpError::Json(_) => RcdpStatus::Parse,
            RcdpError::Io(_) => RcdpStatus::Internal,
            _ => RcdpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<RcdpStatus, Failure>) -> RcdpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            RcdpStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RcdpStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(RcdpStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(RcdpStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(RcdpStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rcdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn rcdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an environment from JSON.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcdp_env_from_json(json: *const c_char, out: *mut *mut RcdpEnvironment) -> RcdpStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let env = Environment::from_json(text).map_err(|e| Failure(RcdpStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(RcdpEnvironment(env)));
        Ok(RcdpStatus::Ok)
    })
}

/// The built-in six-obstacle example.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcdp_env_toy(out: *mut *mut RcdpEnvironment) -> RcdpStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(RcdpEnvironment(Environment::toy())));
        Ok(RcdpStatus::Ok)
    })
}

/// Number of obstacles in the environment, or 0 for null.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_env_obstacle_count(env: *const RcdpEnvironment) -> usize {
    env.as_ref().map_or(0, |e| e.0.obstacles.len())
}

/// # Safety
/// `env` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rcdp_env_free(env: *mut RcdpEnvironment) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

fn budget_rule(delta_max: f64, n_max: u32) -> (WeightRule, f64) {
    if n_max > 0 {
        (WeightRule::UnitCount, f64::from(n_max))
    } else {
        (WeightRule::DisambCost, delta_max)
    }
}

/// Solves the constrained planning problem from source to target. `risk` uses the
/// grammar `rd | dt | lu:<alpha> | lu-delta | lu-bayes:<alpha_max>`. A positive
/// `n_max` selects the count budget and `delta_max` is ignored. `sne` nonzero selects
/// single-phase elimination. Returns `Infeasible` (with a report) when no plan exists.
///
/// # Safety
/// `env` must be a live handle, `risk` a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcdp_solve(
    env: *const RcdpEnvironment,
    risk: *const c_char,
    delta_max: f64,
    n_max: u32,
    sne: i32,
    out: *mut *mut RcdpSolveReport,
) -> RcdpStatus {
    guard(|| {
        out_arg(out, "out")?;
        let env = &ref_arg(env, "env")?.0;
        let risk: RiskModel = str_arg(risk, "risk")?.parse::<RiskModel>()?.with_default_prior(0.2);
        let (rule, limit) = budget_rule(delta_max, n_max);
        if !(limit.is_finite() && limit >= 0.0) {
            return Err(Failure(RcdpStatus::InvalidArgument, format!("invalid budget {limit}")));
        }
        let lattice = Arc::new(LatticeGraph::build(&env.region, env.source, env.target)?);
        let g = AdjustedGraph::initialize(lattice, env, &risk, rule)?;
        let method = if sne != 0 { Method::Sne } else { Method::Cologr };
        let report = solve(&g, g.source(), g.target(), limit, method);
        let infeasible = report.status == SolveStatus::Infeasible;
        *out = Box::into_raw(Box::new(RcdpSolveReport(report)));
        Ok(if infeasible { RcdpStatus::Infeasible } else { RcdpStatus::Ok })
    })
}

/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_status(r: *const RcdpSolveReport) -> RcdpSolveStatus {
    r.as_ref().map_or(RcdpSolveStatus::Infeasible, |r| r.0.status.into())
}

/// Surrogate cost of the returned path; NaN when infeasible or null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_cost(r: *const RcdpSolveReport) -> f64 {
    r.as_ref().filter(|r| r.0.solution.exists).map_or(f64::NAN, |r| r.0.solution.cost)
}

/// Disambiguation weight of the returned path; NaN when infeasible or null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_weight(r: *const RcdpSolveReport) -> f64 {
    r.as_ref().filter(|r| r.0.solution.exists).map_or(f64::NAN, |r| r.0.solution.weight)
}

/// Relative duality gap; NaN for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_gap(r: *const RcdpSolveReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.duality_gap)
}

/// Active vertex count after elimination; 0 for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_graph_size(r: *const RcdpSolveReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.graph_size_after)
}

/// Number of vertices on the returned path; 0 for null or infeasible.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_path_len(r: *const RcdpSolveReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.solution.vertices.len())
}

/// Copies up to `cap` path vertex ids into `buf` and returns the number copied.
///
/// # Safety
/// `r` must be a live handle and `buf` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_path(r: *const RcdpSolveReport, buf: *mut u32, cap: usize) -> usize {
    let (Some(r), false) = (r.as_ref(), buf.is_null()) else { return 0 };
    let n = r.0.solution.vertices.len().min(cap);
    ptr::copy_nonoverlapping(r.0.solution.vertices.as_ptr(), buf, n);
    n
}

/// Report as a JSON string owned by the caller; release with [`rcdp_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_to_json(r: *const RcdpSolveReport, out: *mut *mut c_char) -> RcdpStatus {
    guard(|| {
        out_arg(out, "out")?;
        let r = ref_arg(r, "report")?;
        let text = serde_json::to_string(&r.0).map_err(|e| Failure(RcdpStatus::Internal, e.to_string()))?;
        *out = CString::new(text).map_err(|e| Failure(RcdpStatus::Internal, e.to_string()))?.into_raw();
        Ok(RcdpStatus::Ok)
    })
}

/// # Safety
/// `r` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rcdp_report_free(r: *mut RcdpSolveReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rcdp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs a policy (`greedy-rd | greedy-dt | benchmark | rcdp:<risk>`) against the
/// environment's ground truth. Budget arguments as in [`rcdp_solve`]. Returns
/// `Infeasible` (with an outcome) when the traversal did not reach the target.
///
/// # Safety
/// `env` must be a live handle, `policy` a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rcdp_traverse(
    env: *const RcdpEnvironment,
    policy: *const c_char,
    delta_max: f64,
    n_max: u32,
    out: *mut *mut RcdpOutcome,
) -> RcdpStatus {
    guard(|| {
        out_arg(out, "out")?;
        let env = &ref_arg(env, "env")?.0;
        let kind = match str_arg(policy, "policy")?.parse::<PolicyKind>()? {
            PolicyKind::Rcdp { risk } => PolicyKind::Rcdp { risk: risk.with_default_prior(0.2) },
            k => k,
        };
        let config = if n_max > 0 { PolicyConfig::counted(kind, n_max) } else { PolicyConfig::new(kind, delta_max) };
        let outcome = run_policy(env, &config)?;
        let ok = outcome.success;
        *out = Box::into_raw(Box::new(RcdpOutcome(outcome)));
        Ok(if ok { RcdpStatus::Ok } else { RcdpStatus::Infeasible })
    })
}

/// 1 when the target was reached, 0 otherwise.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_outcome_success(o: *const RcdpOutcome) -> i32 {
    o.as_ref().map_or(0, |o| i32::from(o.0.success))
}

/// Walked length plus disambiguation cost paid; NaN for null.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_outcome_cost(o: *const RcdpOutcome) -> f64 {
    o.as_ref().map_or(f64::NAN, |o| o.0.realized_cost)
}

/// Total disambiguation cost paid; NaN for null.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_outcome_disambiguation_cost(o: *const RcdpOutcome) -> f64 {
    o.as_ref().map_or(f64::NAN, |o| o.0.disambiguation_cost)
}

/// Number of disambiguations performed; 0 for null.
///
/// # Safety
/// `o` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcdp_outcome_disambiguations(o: *const RcdpOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.0.count_used())
}

/// # Safety
/// `o` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rcdp_outcome_free(o: *mut RcdpOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}
