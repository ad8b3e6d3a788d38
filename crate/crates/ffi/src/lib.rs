//! C ABI over the `jamgame` solver.
//!
//! Scenarios live behind an opaque [`JgScenario`] handle created from a TOML
//! document or from raw LQ arrays and released with [`jg_scenario_free`].
//! Every fallible call returns a [`JgStatus`]; on failure the message is
//! available from [`jg_last_error`] on the same thread. Strings handed out by
//! the library are released with [`jg_string_free`].
//!
//! Matrices are row-major. Channel indices are 1-based, as in scenario files.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jamgame::channel::JammerPolicy;
use jamgame::harness::{run_solve, simulate_at, verify};
use jamgame::lq::{lq_region, Region};
use jamgame::scenario::{
    parse_scenario, Channels, McSection, PayoffSpec, Plant, ScenarioFile, SolverSection, State,
};
use jamgame::solver::SaddleKind;
use jamgame::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidScenario = 3,
    AssumptionFailure = 4,
    Unsupported = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Saddle-point classification.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JgSaddleKind {
    NontrivialMixed = 0,
    DegenerateFlat = 1,
    TrivialBlocking = 2,
    TrivialStay = 3,
    NoneFound = 4,
}

impl From<SaddleKind> for JgSaddleKind {
    fn from(k: SaddleKind) -> Self {
        match k {
            SaddleKind::NontrivialMixed => JgSaddleKind::NontrivialMixed,
            SaddleKind::DegenerateFlat => JgSaddleKind::DegenerateFlat,
            SaddleKind::TrivialBlocking => JgSaddleKind::TrivialBlocking,
            SaddleKind::TrivialStay => JgSaddleKind::TrivialStay,
            SaddleKind::NoneFound => JgSaddleKind::NoneFound,
        }
    }
}

/// Position of the state relative to the randomization region.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JgRegion {
    Below = 0,
    Inside = 1,
    Above = 2,
    Undefined = 3,
}

/// Opaque scenario handle.
pub struct JgScenario {
    file: ScenarioFile,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JgSolveResult {
    pub kind: JgSaddleKind,
    /// Nonzero when `u_star` and `p_tilde` are set.
    pub has_saddle: i32,
    pub u_star: f64,
    /// Weights on (blocking channel, current channel).
    pub p_tilde: [f64; 2],
    /// Game value `J`; NaN when no saddle was found.
    pub value: f64,
    pub blocking_index: usize,
    pub j_minus: usize,
    pub control_lo: f64,
    pub control_hi: f64,
    pub indifference_points: usize,
    /// Oracle gap at the scenario's grid sizes.
    pub gap: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JgRegionResult {
    pub region: JgRegion,
    /// Nonzero when `z` is defined.
    pub has_z: i32,
    pub z: f64,
    pub lower: f64,
    pub upper: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JgVerifyResult {
    pub j1_hat: f64,
    pub j2_hat: f64,
    pub gap: f64,
    pub saddle_passed: i32,
    pub mc_mean: f64,
    pub mc_half_width: f64,
    pub mc_trials: u64,
    /// Overall verdict.
    pub passed: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JgMonteCarloResult {
    pub mean: f64,
    pub half_width_3sigma: f64,
    pub std_dev: f64,
    pub trials: u64,
    pub passing_fraction: f64,
    /// `pᵀq`.
    pub passing_probability: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: JgStatus, msg: impl Into<String>) -> JgStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> JgStatus {
    match e {
        Error::Scenario { .. } | Error::Io(_) => JgStatus::InvalidScenario,
        Error::Unsupported(_) => JgStatus::Unsupported,
        Error::Contract(_) => JgStatus::InvalidArgument,
        e if e.is_assumption_failure() => JgStatus::AssumptionFailure,
        _ => JgStatus::Internal,
    }
}

fn from_error(e: Error) -> JgStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> JgStatus) -> JgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(JgStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], JgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(JgStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Message of the last failed call on this thread, or NULL. Release with
/// [`jg_string_free`].
#[no_mangle]
pub extern "C" fn jg_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |s| s.clone().into_raw())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn jg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML scenario document.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut JgScenario,
) -> JgStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(JgStatus::NullPointer, "`text` and `out` must be non-null");
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(e) => {
                return fail(
                    JgStatus::InvalidScenario,
                    format!("scenario is not UTF-8: {e}"),
                )
            }
        };
        match parse_scenario(text) {
            Ok(file) => {
                *out = Box::into_raw(Box::new(JgScenario { file }));
                JgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Builds an LQ scenario: `a` is `n_state × n_state` row-major, `b` and `x`
/// have `n_state` entries, `q` has `n_channels` strictly increasing entries,
/// and `j_minus` is 1-based. Solver and simulation settings take their
/// defaults.
///
/// # Safety
/// Every array must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_new_lq(
    a: *const f64,
    b: *const f64,
    x: *const f64,
    n_state: usize,
    q: *const f64,
    n_channels: usize,
    j_minus: usize,
    tau: f64,
    out: *mut *mut JgScenario,
) -> JgStatus {
    guard(|| {
        if out.is_null() {
            return fail(JgStatus::NullPointer, "`out` is null");
        }
        if n_state == 0 {
            return fail(JgStatus::InvalidArgument, "`n_state` must be positive");
        }
        let arrays = (|| {
            Ok::<_, JgStatus>((
                slice(a, n_state * n_state, "a")?,
                slice(b, n_state, "b")?,
                slice(x, n_state, "x")?,
                slice(q, n_channels, "q")?,
            ))
        })();
        let (a, b, x, q) = match arrays {
            Ok(v) => v,
            Err(status) => return status,
        };
        let file = ScenarioFile {
            plant: Plant {
                a: a.chunks(n_state).map(<[f64]>::to_vec).collect(),
                b: b.to_vec(),
            },
            payoff: PayoffSpec::Lq { tau },
            channels: Channels {
                q: q.to_vec(),
                j_minus,
                c_minus: None,
                conditional: Vec::new(),
            },
            state: State { x: x.to_vec() },
            solver: SolverSection::default(),
            mc: McSection::default(),
        };
        match file.validate() {
            Ok(()) => {
                *out = Box::into_raw(Box::new(JgScenario { file }));
                JgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a scenario. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_free(s: *mut JgScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Serializes the scenario, with all defaults filled in, as TOML. Returns
/// NULL on failure; release with [`jg_string_free`].
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_to_toml(s: *const JgScenario) -> *mut c_char {
    let Some(s) = s.as_ref() else {
        set_error("`scenario` is null");
        return ptr::null_mut();
    };
    CString::new(s.file.to_toml()).map_or(ptr::null_mut(), CString::into_raw)
}

/// Number of channels, or 0 for a NULL handle.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_n_channels(s: *const JgScenario) -> usize {
    s.as_ref().map_or(0, |s| s.file.n_channels())
}

/// Overrides the Monte Carlo trial count and seed.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_set_monte_carlo(
    s: *mut JgScenario,
    trials: u64,
    seed: u64,
) -> JgStatus {
    guard(|| {
        let Some(s) = s.as_mut() else {
            return fail(JgStatus::NullPointer, "`scenario` is null");
        };
        if trials == 0 {
            return fail(JgStatus::InvalidArgument, "`trials` must be positive");
        }
        s.file.mc = McSection { trials, seed };
        JgStatus::Ok
    })
}

/// Overrides the oracle grid sizes (each at least 3).
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn jg_scenario_set_grids(
    s: *mut JgScenario,
    u_points: usize,
    p_points: usize,
) -> JgStatus {
    guard(|| {
        let Some(s) = s.as_mut() else {
            return fail(JgStatus::NullPointer, "`scenario` is null");
        };
        if u_points < 3 || p_points < 3 {
            return fail(JgStatus::InvalidArgument, "grids need at least 3 points");
        }
        s.file.solver.u_grid = u_points;
        s.file.solver.p_grid = p_points;
        JgStatus::Ok
    })
}

/// Solves the scenario. When `policy_out` is non-null it receives the full
/// jammer policy `p*` and must hold `policy_len ≥ n_channels` doubles; it is
/// left untouched when no saddle was found.
///
/// # Safety
/// `s` must be a live handle, `out` writable, and `policy_out` NULL or
/// writable for `policy_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jg_solve(
    s: *const JgScenario,
    out: *mut JgSolveResult,
    policy_out: *mut f64,
    policy_len: usize,
) -> JgStatus {
    guard(|| {
        let (Some(s), Some(out)) = (s.as_ref(), out.as_mut()) else {
            return fail(
                JgStatus::NullPointer,
                "`scenario` and `out` must be non-null",
            );
        };
        let n = s.file.n_channels();
        if !policy_out.is_null() && policy_len < n {
            return fail(
                JgStatus::BufferTooSmall,
                format!("policy buffer holds {policy_len} entries, need {n}"),
            );
        }
        let solved = match run_solve(&s.file) {
            Ok(o) => o,
            Err(e) => return from_error(e),
        };
        let r = &solved.report;
        *out = JgSolveResult {
            kind: r.kind.into(),
            has_saddle: i32::from(r.u_star.is_some()),
            u_star: r.u_star.unwrap_or(f64::NAN),
            p_tilde: r.p_tilde.unwrap_or([f64::NAN; 2]),
            value: r.value,
            blocking_index: r.blocking_index,
            j_minus: r.j_minus,
            control_lo: r.control_set.lo,
            control_hi: r.control_set.hi,
            indifference_points: r.indifference_points.len(),
            gap: solved.oracle.gap,
        };
        if let (false, Some(p)) = (policy_out.is_null(), &r.p_star) {
            std::slice::from_raw_parts_mut(policy_out, n).copy_from_slice(p);
        }
        JgStatus::Ok
    })
}

/// Randomization-region diagnostics of an LQ scenario.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jg_region(s: *const JgScenario, out: *mut JgRegionResult) -> JgStatus {
    guard(|| {
        let (Some(s), Some(out)) = (s.as_ref(), out.as_mut()) else {
            return fail(
                JgStatus::NullPointer,
                "`scenario` and `out` must be non-null",
            );
        };
        let Some(lq) = s.file.lq() else {
            return fail(
                JgStatus::Unsupported,
                "the region is defined for the lq payoff only",
            );
        };
        let r = lq_region(&lq);
        *out = JgRegionResult {
            region: match r.region {
                Region::Below => JgRegion::Below,
                Region::Inside => JgRegion::Inside,
                Region::Above => JgRegion::Above,
                Region::Undefined => JgRegion::Undefined,
            },
            has_z: i32::from(r.z.is_some()),
            z: r.z.unwrap_or(f64::NAN),
            lower: r.lower,
            upper: r.upper,
        };
        JgStatus::Ok
    })
}

/// Solves, then checks the answer against the grid oracle, the saddle
/// inequalities and a Monte Carlo run. A failed verdict is reported in
/// `out->passed`, not as an error.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jg_verify(s: *const JgScenario, out: *mut JgVerifyResult) -> JgStatus {
    guard(|| {
        let (Some(s), Some(out)) = (s.as_ref(), out.as_mut()) else {
            return fail(
                JgStatus::NullPointer,
                "`scenario` and `out` must be non-null",
            );
        };
        let v = match run_solve(&s.file).and_then(|o| verify(&s.file, &o.report)) {
            Ok(v) => v,
            Err(e) => return from_error(e),
        };
        let mc = v.monte_carlo.as_ref();
        *out = JgVerifyResult {
            j1_hat: v.oracle.j1_hat,
            j2_hat: v.oracle.j2_hat,
            gap: v.oracle.gap,
            saddle_passed: i32::from(v.saddle.is_some_and(|c| c.passed)),
            mc_mean: mc.map_or(f64::NAN, |m| m.mean),
            mc_half_width: mc.map_or(f64::NAN, |m| m.half_width_3sigma),
            mc_trials: mc.map_or(0, |m| m.trials),
            passed: i32::from(v.passed),
        };
        JgStatus::Ok
    })
}

/// Simulates the switching step at control `u` under `policy`
/// (`policy_len = n_channels` weights summing to 1).
///
/// # Safety
/// `s` must be a live handle, `policy` readable for `policy_len` doubles and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jg_monte_carlo(
    s: *const JgScenario,
    u: f64,
    policy: *const f64,
    policy_len: usize,
    trials: u64,
    seed: u64,
    out: *mut JgMonteCarloResult,
) -> JgStatus {
    guard(|| {
        let (Some(s), Some(out)) = (s.as_ref(), out.as_mut()) else {
            return fail(
                JgStatus::NullPointer,
                "`scenario` and `out` must be non-null",
            );
        };
        let weights = match slice(policy, policy_len, "policy") {
            Ok(w) => w,
            Err(status) => return status,
        };
        let policy = match JammerPolicy::new(weights.to_vec()) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let result = s
            .file
            .game()
            .and_then(|game| simulate_at(&game, u, &policy, f64::NAN, trials, seed));
        match result {
            Ok(sim) => {
                let mc = &sim.monte_carlo;
                *out = JgMonteCarloResult {
                    mean: mc.mean,
                    half_width_3sigma: mc.half_width_3sigma,
                    std_dev: mc.std_dev,
                    trials: mc.trials,
                    passing_fraction: mc.passing_fraction,
                    passing_probability: sim.passing_probability,
                };
                JgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
