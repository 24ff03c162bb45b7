//! C ABI for `repdyn`.
//!
//! Objects are opaque handles created by `*_new` functions and released by
//! the matching `*_free`. Every fallible function returns a [`RepdynStatus`];
//! on failure a message is available from [`repdyn_last_error`] on the same
//! thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use repdyn::bifurcation::hopf_threshold_tau;
use repdyn::odeint::{detect_attractor, integrate, AttractorConfig, IntegrateOptions, Outcome};
use repdyn::{Error, ModelParams, Scenario, ScenarioKind, SystemState};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepdynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Unsupported = 4,
    Panic = 5,
}

/// Scenario codes accepted by [`repdyn_system_new`].
pub const REPDYN_SCENARIO_CONST: u32 = 0;
pub const REPDYN_SCENARIO_BETA: u32 = 1;
pub const REPDYN_SCENARIO_RHO: u32 = 2;
pub const REPDYN_SCENARIO_DUAL: u32 = 3;

/// Outcome codes written by [`repdyn_classify`].
pub const REPDYN_OUTCOME_UNDETERMINED: i32 = -1;
pub const REPDYN_OUTCOME_CONTROL_DOMINANCE: i32 = 0;
pub const REPDYN_OUTCOME_AUTOMATIC_DOMINANCE: i32 = 1;
pub const REPDYN_OUTCOME_COEXISTENCE: i32 = 2;
pub const REPDYN_OUTCOME_LIMIT_CYCLE: i32 = 3;

/// A model: scenario plus parameters.
pub struct RepdynSystem {
    scenario: Scenario,
    params: ModelParams,
}

/// A sampled trajectory.
pub struct RepdynTrajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: RepdynStatus, msg: &str) -> RepdynStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> RepdynStatus {
    let status = match e {
        Error::StepUnderflow { .. } | Error::Overshoot { .. } | Error::TooManySteps { .. } => {
            RepdynStatus::NumericalFailure
        }
        Error::Unsupported(_) => RepdynStatus::Unsupported,
        _ => RepdynStatus::InvalidArgument,
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> RepdynStatus) -> RepdynStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(RepdynStatus::Panic, "internal panic"),
    }
}

fn kind_of(code: u32) -> Option<ScenarioKind> {
    Some(match code {
        REPDYN_SCENARIO_CONST => ScenarioKind::ConstantEnv,
        REPDYN_SCENARIO_BETA => ScenarioKind::BetaFeedback,
        REPDYN_SCENARIO_RHO => ScenarioKind::RhoFeedback,
        REPDYN_SCENARIO_DUAL => ScenarioKind::DualFeedback,
        _ => return None,
    })
}

/// # Safety
/// `state` must point to `len` readable doubles.
unsafe fn read_state(sys: &RepdynSystem, state: *const f64, len: usize) -> Result<SystemState, RepdynStatus> {
    if state.is_null() {
        return Err(fail(RepdynStatus::NullPointer, "state is null"));
    }
    let v = std::slice::from_raw_parts(state, len);
    SystemState::from_vector(sys.scenario.kind(), v).map_err(from_error)
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn repdyn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn repdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a system. Lags are ignored when the scenario does not use them.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn repdyn_system_new(
    scenario: u32,
    a: f64,
    rho: f64,
    beta: f64,
    tau_beta: f64,
    tau_rho: f64,
    out: *mut *mut RepdynSystem,
) -> RepdynStatus {
    guard(|| {
        if out.is_null() {
            return fail(RepdynStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(kind) = kind_of(scenario) else {
            return fail(RepdynStatus::InvalidArgument, &format!("unknown scenario code {scenario}"));
        };
        let sc = kind.with_lags(tau_beta, tau_rho);
        let params = match ModelParams::new(a, rho, beta).and_then(|p| sc.validate().map(|_| p)) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        *out = Box::into_raw(Box::new(RepdynSystem { scenario: sc, params }));
        RepdynStatus::Ok
    })
}

/// # Safety
/// `sys` must be null or a handle from [`repdyn_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn repdyn_system_free(sys: *mut RepdynSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of dynamic state components (1 to 3).
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn repdyn_system_dim(sys: *const RepdynSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.scenario.dim())
}

/// Right-hand side at `state` (`len` = dimension) into `out` (`len` doubles).
///
/// # Safety
/// `state` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn repdyn_system_rhs(
    sys: *const RepdynSystem,
    state: *const f64,
    len: usize,
    out: *mut f64,
) -> RepdynStatus {
    guard(|| {
        let Some(sys) = sys.as_ref() else { return fail(RepdynStatus::NullPointer, "system is null") };
        if out.is_null() {
            return fail(RepdynStatus::NullPointer, "out is null");
        }
        let s = match read_state(sys, state, len) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match repdyn::model::system_rhs(&sys.scenario, &sys.params, &s) {
            Ok(r) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(r.as_slice());
                RepdynStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Integrate from `state0` to `t_end`, sampling every `dt`.
///
/// # Safety
/// `state0` must point to `len` doubles and `out` to handle storage.
#[no_mangle]
pub unsafe extern "C" fn repdyn_integrate(
    sys: *const RepdynSystem,
    state0: *const f64,
    len: usize,
    t_end: f64,
    dt: f64,
    out: *mut *mut RepdynTrajectory,
) -> RepdynStatus {
    guard(|| {
        let Some(sys) = sys.as_ref() else { return fail(RepdynStatus::NullPointer, "system is null") };
        if out.is_null() {
            return fail(RepdynStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let s0 = match read_state(sys, state0, len) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let opts = IntegrateOptions { sample_dt: Some(dt), ..Default::default() };
        match integrate(&sys.scenario, &sys.params, &s0, t_end, &opts) {
            Ok(tr) => {
                let dim = sys.scenario.dim();
                let states = tr.states.iter().flat_map(|s| s.to_vector().as_slice().to_vec()).collect();
                *out = Box::into_raw(Box::new(RepdynTrajectory { dim, times: tr.times, states }));
                RepdynStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of samples.
///
/// # Safety
/// `tr` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn repdyn_trajectory_len(tr: *const RepdynTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.times.len())
}

/// State components per sample.
///
/// # Safety
/// `tr` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn repdyn_trajectory_dim(tr: *const RepdynTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.dim)
}

/// Copy sample times into `times` (`len` entries) and states, row-major with
/// `dim` columns, into `states` (`len * dim` entries). Either may be null.
///
/// # Safety
/// Non-null buffers must be large enough.
#[no_mangle]
pub unsafe extern "C" fn repdyn_trajectory_copy(
    tr: *const RepdynTrajectory,
    times: *mut f64,
    states: *mut f64,
) -> RepdynStatus {
    guard(|| {
        let Some(tr) = tr.as_ref() else { return fail(RepdynStatus::NullPointer, "trajectory is null") };
        if !times.is_null() {
            std::slice::from_raw_parts_mut(times, tr.times.len()).copy_from_slice(&tr.times);
        }
        if !states.is_null() {
            std::slice::from_raw_parts_mut(states, tr.states.len()).copy_from_slice(&tr.states);
        }
        RepdynStatus::Ok
    })
}

/// # Safety
/// `tr` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn repdyn_trajectory_free(tr: *mut RepdynTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Long-run outcome from `state0` with default detection settings; writes
/// one of the `REPDYN_OUTCOME_*` codes.
///
/// # Safety
/// `state0` must point to `len` doubles; `outcome` must be writable.
#[no_mangle]
pub unsafe extern "C" fn repdyn_classify(
    sys: *const RepdynSystem,
    state0: *const f64,
    len: usize,
    outcome: *mut i32,
) -> RepdynStatus {
    guard(|| {
        let Some(sys) = sys.as_ref() else { return fail(RepdynStatus::NullPointer, "system is null") };
        if outcome.is_null() {
            return fail(RepdynStatus::NullPointer, "outcome is null");
        }
        let s0 = match read_state(sys, state0, len) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match detect_attractor(&sys.scenario, &sys.params, &s0, &AttractorConfig::default()) {
            Ok(l) => {
                *outcome = match l.outcome() {
                    None => REPDYN_OUTCOME_UNDETERMINED,
                    Some(Outcome::ControlDominance) => REPDYN_OUTCOME_CONTROL_DOMINANCE,
                    Some(Outcome::AutomaticDominance) => REPDYN_OUTCOME_AUTOMATIC_DOMINANCE,
                    Some(Outcome::Coexistence) => REPDYN_OUTCOME_COEXISTENCE,
                    Some(Outcome::LimitCycle) => REPDYN_OUTCOME_LIMIT_CYCLE,
                };
                RepdynStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Hopf threshold of the lag for a single-feedback scenario; writes NaN
/// when no interior equilibrium can lose stability.
///
/// # Safety
/// `tau_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn repdyn_hopf_threshold(
    scenario: u32,
    a: f64,
    rho: f64,
    beta: f64,
    tau_star: *mut f64,
) -> RepdynStatus {
    guard(|| {
        if tau_star.is_null() {
            return fail(RepdynStatus::NullPointer, "tau_star is null");
        }
        let Some(kind) = kind_of(scenario) else {
            return fail(RepdynStatus::InvalidArgument, &format!("unknown scenario code {scenario}"));
        };
        let p = match ModelParams::new(a, rho, beta) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        match hopf_threshold_tau(kind, &p) {
            Ok(h) => {
                *tau_star = h.map_or(f64::NAN, |h| h.tau_star);
                RepdynStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
