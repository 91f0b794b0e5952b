//! C interface to `lf-core`.
//!
//! Every function returns an [`LfStatus`]; on failure a message is available
//! from [`lf_last_error`] on the calling thread. Solvers are opaque handles
//! created with [`lf_solver_new`] and released with [`lf_solver_free`].
//! Panics never cross the boundary; they are reported as
//! `LF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use lf_core::experiment::{parse_config, run_experiment, ExperimentError};
use lf_core::integrator::{random_solenoidal, Solver, SolverConfig, SolverState};
use lf_core::linear::{classify_disordered, classify_ordered, growth_rate, Classification};
use lf_core::model::{ModelParams, TransformedSystem};
use lf_core::spectral::snapshot::write_snapshot;
use lf_core::spectral::{SpectralField, SpectralGrid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Io = 4,
    Panic = 5,
}

/// Model coefficients; `dim` is 2 or 3.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LfParams {
    pub lambda0: f64,
    pub lambda1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma0: f64,
    pub gamma2: f64,
    pub dim: usize,
}

impl From<LfParams> for ModelParams {
    fn from(p: LfParams) -> Self {
        ModelParams {
            lambda0: p.lambda0,
            lambda1: p.lambda1,
            alpha: p.alpha,
            beta: p.beta,
            gamma0: p.gamma0,
            gamma2: p.gamma2,
            dim: p.dim,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfClass {
    ExponentiallyStable = 0,
    AsymptoticallyStable = 1,
    ExponentiallyUnstable = 2,
}

/// Classification summary. Band edges are NaN for the ordered state.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LfStability {
    pub classification: LfClass,
    pub max_growth_rate: f64,
    /// Modulus of the maximizing wavevector.
    pub argmax_k: f64,
    pub has_band: bool,
    pub s_minus_sq: f64,
    pub s_plus_sq: f64,
}

/// Opaque solver handle.
pub struct LfSolver {
    solver: Solver,
    state: SolverState,
    steps: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(LfStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Self(LfStatus::InvalidArgument, msg.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(LfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(LfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure(LfStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(LfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

fn system(params: ModelParams, ordered: bool, direction: &[f64]) -> Result<TransformedSystem, Failure> {
    let s = if ordered {
        TransformedSystem::ordered(&params, direction)
    } else {
        TransformedSystem::disordered(&params)
    };
    s.map_err(|e| Failure::invalid(e.to_string()))
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Classify the disordered (`ordered = false`) or ordered steady state.
///
/// # Safety
/// `params` and `out` must be valid pointers or null.
#[no_mangle]
pub unsafe extern "C" fn lf_classify(
    params: *const LfParams,
    ordered: bool,
    out: *mut LfStability,
) -> LfStatus {
    guard(|| {
        let p: ModelParams = (*deref(params, "params")?).into();
        let out = deref_mut(out, "out")?;
        let r = if ordered {
            classify_ordered(&p)
        } else {
            classify_disordered(&p)
        }
        .map_err(|e| Failure::invalid(e.to_string()))?;
        let (has_band, s_minus_sq, s_plus_sq) = r
            .band
            .map_or((false, f64::NAN, f64::NAN), |b| (b.has_band, b.s_minus_sq, b.s_plus_sq));
        *out = LfStability {
            classification: match r.classification {
                Classification::ExponentiallyStable => LfClass::ExponentiallyStable,
                Classification::AsymptoticallyStable => LfClass::AsymptoticallyStable,
                Classification::ExponentiallyUnstable => LfClass::ExponentiallyUnstable,
            },
            max_growth_rate: r.max_growth_rate,
            argmax_k: r.argmax_wavevector.iter().map(|x| x * x).sum::<f64>().sqrt(),
            has_band,
            s_minus_sq,
            s_plus_sq,
        };
        Ok(())
    })
}

/// Growth rate of the linearized operator at wavevector `k` (length
/// `params.dim`). `direction` (same length) selects the ordered state and
/// is ignored otherwise.
///
/// # Safety
/// Pointers must be valid for `params.dim` elements, or null.
#[no_mangle]
pub unsafe extern "C" fn lf_growth_rate(
    params: *const LfParams,
    ordered: bool,
    direction: *const f64,
    k: *const f64,
    out: *mut f64,
) -> LfStatus {
    guard(|| {
        let p: ModelParams = (*deref(params, "params")?).into();
        if !(2..=3).contains(&p.dim) {
            return Err(Failure::invalid(format!("dim must be 2 or 3 (got {})", p.dim)));
        }
        let dir = if ordered {
            slice(direction, p.dim, "direction")?.to_vec()
        } else {
            Vec::new()
        };
        let k = slice(k, p.dim, "k")?;
        let out = deref_mut(out, "out")?;
        let s = system(p, ordered, &dir)?;
        *out = growth_rate(&s, k).map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(())
    })
}

/// Create a solver on an `n`-per-axis periodic box of side `length`,
/// starting from the zero perturbation. `direction` is read only when
/// `ordered` is set.
///
/// # Safety
/// `params` and `out` must be valid; `direction` must hold `params.dim`
/// values when `ordered` is set.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_new(
    params: *const LfParams,
    ordered: bool,
    direction: *const f64,
    n: usize,
    length: f64,
    dt: f64,
    linearized: bool,
    out: *mut *mut LfSolver,
) -> LfStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let p: ModelParams = (*deref(params, "params")?).into();
        p.validate().map_err(|e| Failure::invalid(e.to_string()))?;
        let dir = if ordered {
            slice(direction, p.dim, "direction")?.to_vec()
        } else {
            Vec::new()
        };
        let s = system(p, ordered, &dir)?;
        let grid = SpectralGrid::new(p.dim, n, length).map_err(|e| Failure::invalid(e.to_string()))?;
        let config = SolverConfig {
            dt,
            t_end: dt,
            diagnostics_interval: dt,
            linearized,
            ..SolverConfig::default()
        };
        let solver = Solver::new(Arc::clone(&grid), s, config).map_err(|e| Failure::invalid(e.to_string()))?;
        let handle = LfSolver {
            solver,
            state: SolverState {
                t: 0.0,
                u: SpectralField::zeros(&grid),
            },
            steps: 0,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Release a solver. Null is accepted.
///
/// # Safety
/// `solver` must come from [`lf_solver_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_free(solver: *mut LfSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Replace the state with a seeded solenoidal random field of RMS
/// `amplitude` and spectral scale `k0`; time is reset to zero.
///
/// # Safety
/// `solver` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_set_random(
    solver: *mut LfSolver,
    amplitude: f64,
    k0: f64,
    seed: u64,
) -> LfStatus {
    guard(|| {
        let h = deref_mut(solver, "solver")?;
        let u = random_solenoidal(h.solver.grid(), amplitude, k0, seed)
            .map_err(|e| Failure::invalid(e.to_string()))?;
        h.state = SolverState { t: 0.0, u };
        h.steps = 0;
        Ok(())
    })
}

/// Advance by `steps` time steps. On numerical failure the last finite state
/// is kept and `LF_STATUS_NUMERICAL_FAILURE` is returned.
///
/// # Safety
/// `solver` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_advance(solver: *mut LfSolver, steps: u64) -> LfStatus {
    guard(|| {
        let h = deref_mut(solver, "solver")?;
        let dt = h.solver.config().dt;
        for _ in 0..steps {
            match h.solver.step(&h.state) {
                Ok(mut next) => {
                    h.steps += 1;
                    next.t = h.steps as f64 * dt;
                    h.state = next;
                }
                Err(e) => return Err(Failure(LfStatus::NumericalFailure, e.to_string())),
            }
        }
        Ok(())
    })
}

/// # Safety
/// `solver` and `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_time(solver: *const LfSolver, out: *mut f64) -> LfStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(solver, "solver")?.state.t;
        Ok(())
    })
}

/// `‖u‖₂²` of the current state.
///
/// # Safety
/// `solver` and `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_norm_sq(solver: *const LfSolver, out: *mut f64) -> LfStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(solver, "solver")?.state.u.norm_sq();
        Ok(())
    })
}

/// Amplitude of the real Fourier mode with integer lattice index `m`
/// (`dim` entries).
///
/// # Safety
/// `m` must hold `dim` values; pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_mode_amplitude(
    solver: *const LfSolver,
    m: *const i64,
    out: *mut f64,
) -> LfStatus {
    guard(|| {
        let h = deref(solver, "solver")?;
        let m = slice(m, h.solver.grid().dim(), "m")?;
        let a = h
            .state
            .u
            .mode_amplitude(m)
            .ok_or_else(|| Failure::invalid(format!("{m:?} is not a lattice mode of this grid")))?;
        *deref_mut(out, "out")? = a;
        Ok(())
    })
}

/// Write the current state as an LFSNAP file.
///
/// # Safety
/// `path` must be a NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn lf_solver_write_snapshot(solver: *const LfSolver, path: *const c_char) -> LfStatus {
    guard(|| {
        let h = deref(solver, "solver")?;
        let path = string(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| Failure(LfStatus::Io, format!("{path}: {e}")))?;
        let mut w = std::io::BufWriter::new(file);
        write_snapshot(&mut w, h.solver.grid(), h.state.t, &h.state.u.to_physical())
            .map_err(|e| Failure(LfStatus::Io, format!("{path}: {e}")))?;
        std::io::Write::flush(&mut w).map_err(|e| Failure(LfStatus::Io, format!("{path}: {e}")))
    })
}

/// Parse and run an experiment config, writing outputs to `out_dir` (null
/// to write nothing). `exit_code` receives the CLI exit code: 0 pass,
/// 1 check failure, 2 numerical failure, 3 config error.
///
/// # Safety
/// `config_text` must be NUL-terminated; `out_dir` NUL-terminated or null.
#[no_mangle]
pub unsafe extern "C" fn lf_run_config(
    config_text: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> LfStatus {
    guard(|| {
        let code = deref_mut(exit_code, "exit_code")?;
        let text = string(config_text, "config_text")?;
        let dir = if out_dir.is_null() {
            None
        } else {
            Some(Path::new(string(out_dir, "out_dir")?))
        };
        let result = parse_config(text)
            .map_err(ExperimentError::from)
            .and_then(|c| run_experiment(&c, dir));
        match result {
            Ok(report) => {
                *code = report.exit_code();
                Ok(())
            }
            Err(e) => {
                *code = e.exit_code();
                let status = match e {
                    ExperimentError::Config(_) => LfStatus::InvalidArgument,
                    ExperimentError::Io { .. } => LfStatus::Io,
                    _ => LfStatus::NumericalFailure,
                };
                Err(Failure(status, e.to_string()))
            }
        }
    })
}
