//! C ABI over the `inls` library.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free`. Every fallible call returns an [`InlsStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`inls_last_error`]. Panics are caught and reported as `INLS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use inls::classify::classify;
use inls::cli::{simulate, ExperimentConfig, FateReport};
use inls::evolve::{Fate, Trajectory};
use inls::functionals::DiagnosticRecord;
use inls::groundstate::{default_grid, pohozaev_residuals, solve_ground_state, GroundState, GroundStateOptions};
use inls::model::ModelParams;
use inls::Error;

/// Outcome of a call; the numeric values match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InlsStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    Validation = 2,
    OutputConflict = 3,
    RuntimeGuard = 4,
    SolverFailure = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InlsFateKind {
    RanToEnd = 0,
    BlowupDetected = 1,
    Dispersed = 2,
    BoundaryContaminated = 3,
    StepFloorHit = 4,
}

/// Scalars of a converged ground state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InlsGroundSummary {
    pub mass: f64,
    pub grad_sq: f64,
    pub potential: f64,
    pub energy: f64,
    pub c_opt: f64,
    pub e_m_sigma: f64,
    pub grad_m_sigma: f64,
    pub p_m_sigma: f64,
    pub pohozaev_r1: f64,
    pub pohozaev_r2: f64,
    pub iterations: usize,
}

/// Observed fate of a run; `t` is zero for `RanToEnd`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct InlsFate {
    pub kind: InlsFateKind,
    pub t: f64,
    pub steps: usize,
    pub grad_growth: f64,
}

/// One diagnostic sample; NaN marks an unavailable variance entry.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InlsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub potential: f64,
    pub virial_g: f64,
    pub grad_sq: f64,
    pub variance: f64,
    pub variance_d1: f64,
    pub variance_d2: f64,
    pub variance_d2_fd: f64,
}

/// Opaque converged ground state.
pub struct InlsGroundState(GroundState);

/// Opaque validated experiment configuration.
pub struct InlsExperiment(ExperimentConfig);

/// Opaque finished run.
pub struct InlsRun {
    report: FateReport,
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> InlsStatus {
    match e.exit_code() {
        2 => InlsStatus::Validation,
        3 => InlsStatus::OutputConflict,
        5 => InlsStatus::SolverFailure,
        _ => InlsStatus::RuntimeGuard,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (InlsStatus, String)>) -> InlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            InlsStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside inls".into());
            InlsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (InlsStatus, String) {
    (status_of(&e), format!("{}: {e}", e.reason()))
}

fn null(what: &str) -> (InlsStatus, String) {
    (InlsStatus::InvalidArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (InlsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (InlsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn inls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn inls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn inls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solves for `Q` on the default radial grid.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn inls_ground_state_solve(n: usize, b: f64, alpha: f64, out: *mut *mut InlsGroundState) -> InlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ModelParams::new(n, b, alpha).map_err(lib)?;
        let grid = default_grid(&params).build().map_err(lib)?;
        let gs = solve_ground_state(&params, &grid, &GroundStateOptions::default()).map_err(lib)?;
        *out = Box::into_raw(Box::new(InlsGroundState(gs)));
        Ok(())
    })
}

/// # Safety
/// `gs` must be null or a live handle from [`inls_ground_state_solve`].
#[no_mangle]
pub unsafe extern "C" fn inls_ground_state_free(gs: *mut InlsGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

/// # Safety
/// `gs` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_ground_state_summary(gs: *const InlsGroundState, out: *mut InlsGroundSummary) -> InlsStatus {
    guard(|| {
        let gs = gs.as_ref().ok_or_else(|| null("gs"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = &gs.0.summary;
        let p = pohozaev_residuals(s);
        *out = InlsGroundSummary {
            mass: s.mass_q,
            grad_sq: s.grad_sq_q,
            potential: s.potential_q,
            energy: s.energy_q,
            c_opt: s.c_opt,
            e_m_sigma: s.thresholds.e_m_sigma,
            grad_m_sigma: s.thresholds.grad_m_sigma,
            p_m_sigma: s.thresholds.p_m_sigma,
            pohozaev_r1: p.r1,
            pohozaev_r2: p.r2,
            iterations: s.iterations,
        };
        Ok(())
    })
}

/// Number of radial samples of `Q`.
///
/// # Safety
/// `gs` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inls_ground_state_len(gs: *const InlsGroundState) -> usize {
    gs.as_ref().map_or(0, |g| g.0.q.len())
}

/// Copies up to `len` samples of `r` and `Q(r)`; either buffer may be null.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn inls_ground_state_profile(gs: *const InlsGroundState, r: *mut f64, q: *mut f64, len: usize) -> InlsStatus {
    guard(|| {
        let gs = gs.as_ref().ok_or_else(|| null("gs"))?;
        let field = &gs.0.q;
        let m = len.min(field.len());
        if !r.is_null() {
            std::slice::from_raw_parts_mut(r, m).copy_from_slice(&field.grid().radius()[..m]);
        }
        if !q.is_null() {
            let dst = std::slice::from_raw_parts_mut(q, m);
            for (d, v) in dst.iter_mut().zip(field.values()) {
                *d = v.re;
            }
        }
        Ok(())
    })
}

/// Parses and validates a JSON experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_experiment_from_json(json: *const c_char, out: *mut *mut InlsExperiment) -> InlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ExperimentConfig::from_json(read_str(json, "json")?).map_err(lib)?;
        cfg.model().map_err(lib)?;
        cfg.controls.validate().map_err(lib)?;
        *out = Box::into_raw(Box::new(InlsExperiment(cfg)));
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inls_experiment_free(exp: *mut InlsExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Classifies the configured datum; `*out` receives a JSON verdict to release
/// with [`inls_string_free`].
///
/// # Safety
/// `exp` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_experiment_classify(exp: *const InlsExperiment, out: *mut *mut c_char) -> InlsStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let prep = exp.0.prepare().map_err(lib)?;
        let c = classify(&prep.u0, &prep.gs.summary).map_err(lib)?;
        *out = into_c_string(serde_json::to_string(&c).expect("verdict serializes"));
        Ok(())
    })
}

/// Integrates the configured datum.
///
/// # Safety
/// `exp` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_experiment_run(exp: *const InlsExperiment, out: *mut *mut InlsRun) -> InlsStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("exp"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (report, traj) = simulate(&exp.0).map_err(lib)?;
        *out = Box::into_raw(Box::new(InlsRun { report, traj }));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inls_run_free(run: *mut InlsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_run_fate(run: *const InlsRun, out: *mut InlsFate) -> InlsStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (kind, t) = match run.traj.fate {
            Fate::RanToEnd => (InlsFateKind::RanToEnd, 0.0),
            Fate::BlowupDetected { t } => (InlsFateKind::BlowupDetected, t),
            Fate::Dispersed { t } => (InlsFateKind::Dispersed, t),
            Fate::BoundaryContaminated { t } => (InlsFateKind::BoundaryContaminated, t),
            Fate::StepFloorHit { t } => (InlsFateKind::StepFloorHit, t),
        };
        *out = InlsFate {
            kind,
            t,
            steps: run.report.steps,
            grad_growth: run.report.grad_growth,
        };
        Ok(())
    })
}

/// Full fate report as JSON, released with [`inls_string_free`].
///
/// # Safety
/// `run` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_run_report_json(run: *const InlsRun, out: *mut *mut c_char) -> InlsStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(serde_json::to_string(&run.report).expect("report serializes"));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inls_run_records_len(run: *const InlsRun) -> usize {
    run.as_ref().map_or(0, |r| r.traj.records.len())
}

/// Copies record `index`; out-of-range indices are `INLS_STATUS_INVALID_ARGUMENT`.
///
/// # Safety
/// `run` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn inls_run_record(run: *const InlsRun, index: usize, out: *mut InlsRecord) -> InlsStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r: &DiagnosticRecord = run
            .traj
            .records
            .get(index)
            .ok_or_else(|| (InlsStatus::InvalidArgument, format!("record {index} out of range")))?;
        *out = InlsRecord {
            t: r.t,
            mass: r.mass,
            energy: r.energy,
            potential: r.potential,
            virial_g: r.virial_g,
            grad_sq: r.grad_sq,
            variance: r.variance,
            variance_d1: r.variance_d1,
            variance_d2: r.variance_d2,
            variance_d2_fd: r.variance_d2_fd,
        };
        Ok(())
    })
}
