//! C ABI over `branchprob`.
//!
//! Every fallible call returns a [`BpStatus`]; on failure the message is
//! available from [`bp_last_error`] on the same thread. Models and matrices
//! are opaque handles that the caller releases with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use branchprob::admm::AdmmConfig;
use branchprob::cli::RunConfig;
use branchprob::grid::{full_measurements, invert_full, reference_m, sample_indices, sampled_measurements};
use branchprob::models::{pgf, UnitCirclePoint};
use branchprob::pgd::PgdConfig;
use branchprob::{Error, ModelSpec, OdeConfig, RatesBds, RatesHsc, SolveReport, TransitionMatrix};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

/// A model together with its ODE tolerances.
pub struct BpModel {
    spec: ModelSpec,
    ode: OdeConfig,
}

/// A transition matrix, plus solver details when it came from a recovery.
pub struct BpMatrix {
    matrix: TransitionMatrix,
    iterations: usize,
    converged: bool,
}

/// ADMM settings. `d1_exp` and `d2_exp` set the tolerance scales `N^d`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BpAdmmConfig {
    pub beta: f64,
    pub lambda: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub d1_exp: f64,
    pub d2_exp: f64,
    pub max_iter: usize,
}

/// Accelerated proximal-gradient settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BpPgdConfig {
    pub lambda: f64,
    pub l0: f64,
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl From<AdmmConfig> for BpAdmmConfig {
    fn from(c: AdmmConfig) -> Self {
        Self {
            beta: c.beta,
            lambda: c.lambda,
            eps_abs: c.eps_abs,
            eps_rel: c.eps_rel,
            d1_exp: c.d1_exp,
            d2_exp: c.d2_exp,
            max_iter: c.max_iter,
        }
    }
}

impl From<BpAdmmConfig> for AdmmConfig {
    fn from(c: BpAdmmConfig) -> Self {
        Self {
            beta: c.beta,
            lambda: c.lambda,
            eps_abs: c.eps_abs,
            eps_rel: c.eps_rel,
            d1_exp: c.d1_exp,
            d2_exp: c.d2_exp,
            max_iter: c.max_iter,
        }
    }
}

impl From<PgdConfig> for BpPgdConfig {
    fn from(c: PgdConfig) -> Self {
        Self {
            lambda: c.lambda,
            l0: c.l0,
            c: c.c,
            max_iter: c.max_iter,
            tol: c.tol,
        }
    }
}

impl From<BpPgdConfig> for PgdConfig {
    fn from(c: BpPgdConfig) -> Self {
        Self {
            lambda: c.lambda,
            l0: c.l0,
            c: c.c,
            max_iter: c.max_iter,
            tol: c.tol,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> BpStatus {
    match err {
        Error::Io(_) => BpStatus::Io,
        e if e.is_numerical() => BpStatus::Numerical,
        _ => BpStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BpStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            BpStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write_out<T>(out: *mut T, what: &'static str, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_model(spec: ModelSpec, ode: OdeConfig) -> *mut BpModel {
    Box::into_raw(Box::new(BpModel { spec, ode }))
}

/// HSC model with rates `rho`, `nu`, `mu` at time `t` from `(init1, init2)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bp_model_hsc(
    rho: f64,
    nu: f64,
    mu: f64,
    t: f64,
    init1: u32,
    init2: u32,
    out: *mut *mut BpModel,
) -> BpStatus {
    guard(|| {
        let spec = ModelSpec::hsc(RatesHsc::new(rho, nu, mu)?, t, (init1, init2))?;
        write_out(out, "out", new_model(spec, OdeConfig::default()))
    })
}

/// BDS model with rates `gamma`, `sigma`, `delta` at time `t`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bp_model_bds(
    gamma: f64,
    sigma: f64,
    delta: f64,
    t: f64,
    init1: u32,
    init2: u32,
    out: *mut *mut BpModel,
) -> BpStatus {
    guard(|| {
        let spec = ModelSpec::bds(RatesBds::new(gamma, sigma, delta)?, t, (init1, init2))?;
        write_out(out, "out", new_model(spec, OdeConfig::default()))
    })
}

/// Model from the JSON config schema; an `ode` block sets tolerances and
/// solver blocks are accepted but ignored.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` as for [`bp_model_hsc`].
#[no_mangle]
pub unsafe extern "C" fn bp_model_from_json(json: *const c_char, out: *mut *mut BpModel) -> BpStatus {
    guard(|| {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Error::InvalidConfig("config is not UTF-8".into()))?;
        let cfg = RunConfig::from_json(text)?;
        write_out(out, "out", new_model(cfg.model, cfg.ode))
    })
}

/// # Safety
/// `model` must be null or a handle from a `bp_model_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bp_model_free(model: *mut BpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Generating function at `(s1, s2)`, written to `out_re` and `out_im`.
///
/// # Safety
/// `model` must be a live handle; `out_re` and `out_im` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bp_pgf(
    model: *const BpModel,
    s1_re: f64,
    s1_im: f64,
    s2_re: f64,
    s2_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> BpStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s = UnitCirclePoint::new(Complex64::new(s1_re, s1_im), Complex64::new(s2_re, s2_im));
        let v = pgf(&m.spec, s, &m.ode)?;
        write_out(out_re, "out_re", v.re)?;
        write_out(out_im, "out_im", v.im)
    })
}

fn new_matrix(matrix: TransitionMatrix, iterations: usize, converged: bool) -> *mut BpMatrix {
    Box::into_raw(Box::new(BpMatrix {
        matrix,
        iterations,
        converged,
    }))
}

/// Full `n×n` grid evaluation and inversion.
///
/// # Safety
/// `model` must be a live handle; `out` valid for one handle write.
#[no_mangle]
pub unsafe extern "C" fn bp_solve_full(model: *const BpModel, n: usize, out: *mut *mut BpMatrix) -> BpStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s = invert_full(&full_measurements(&m.spec, n, &m.ode)?)?;
        write_out(out, "out", new_matrix(s, 0, true))
    })
}

/// Reference measurement count for the model type at grid size `n`.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_reference_m(model: *const BpModel, n: usize, out: *mut usize) -> BpStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write_out(out, "out", reference_m(m.spec.model.kind(), n).min(n))
    })
}

/// Tuned ADMM settings for this model type, `n` and `m`.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bp_admm_config_reference(
    model: *const BpModel,
    n: usize,
    m: usize,
    out: *mut BpAdmmConfig,
) -> BpStatus {
    guard(|| {
        let md = deref(model, "model")?;
        write_out(out, "out", AdmmConfig::reference(md.spec.model.kind(), n, m).into())
    })
}

/// Default PGD settings for this model type and `m`.
///
/// # Safety
/// `model` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bp_pgd_config_reference(model: *const BpModel, m: usize, out: *mut BpPgdConfig) -> BpStatus {
    guard(|| {
        let md = deref(model, "model")?;
        write_out(out, "out", PgdConfig::reference(md.spec.model.kind(), m).into())
    })
}

fn recovered(rep: SolveReport) -> *mut BpMatrix {
    new_matrix(rep.s_hat, rep.iterations, rep.converged)
}

/// ADMM recovery from `m×m` PGF samples on indices drawn with `seed`. A
/// null `config` selects [`bp_admm_config_reference`].
///
/// # Safety
/// `model` must be a live handle, `config` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bp_recover_admm(
    model: *const BpModel,
    n: usize,
    m: usize,
    seed: u64,
    config: *const BpAdmmConfig,
    out: *mut *mut BpMatrix,
) -> BpStatus {
    guard(|| {
        let md = deref(model, "model")?;
        let cfg = config
            .as_ref()
            .map_or_else(|| AdmmConfig::reference(md.spec.model.kind(), n, m), |c| (*c).into());
        let ms = sampled_measurements(&md.spec, n, &sample_indices(n, m, seed)?, &md.ode)?;
        write_out(out, "out", recovered(branchprob::recover(&ms, &cfg)?))
    })
}

/// PGD recovery; arguments as for [`bp_recover_admm`].
///
/// # Safety
/// As for [`bp_recover_admm`].
#[no_mangle]
pub unsafe extern "C" fn bp_recover_pgd(
    model: *const BpModel,
    n: usize,
    m: usize,
    seed: u64,
    config: *const BpPgdConfig,
    out: *mut *mut BpMatrix,
) -> BpStatus {
    guard(|| {
        let md = deref(model, "model")?;
        let cfg = config
            .as_ref()
            .map_or_else(|| PgdConfig::reference(md.spec.model.kind(), m), |c| (*c).into());
        let ms = sampled_measurements(&md.spec, n, &sample_indices(n, m, seed)?, &md.ode)?;
        write_out(out, "out", recovered(branchprob::pgd_recover(&ms, &cfg)?))
    })
}

/// Side length `n` of the matrix, or 0 for null.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_matrix_size(matrix: *const BpMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.matrix.n())
}

/// `P(X(t) = (l, m))`.
///
/// # Safety
/// `matrix` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bp_matrix_get(matrix: *const BpMatrix, l: usize, m: usize, out: *mut f64) -> BpStatus {
    guard(|| {
        let mat = deref(matrix, "matrix")?;
        let n = mat.matrix.n();
        if l >= n || m >= n {
            return Err(Error::InvalidConfig(format!("index ({l}, {m}) outside {n}x{n}")).into());
        }
        write_out(out, "out", mat.matrix.get(l, m))
    })
}

/// Copies all `n²` entries, row-major, into `buf` of length `len`.
///
/// # Safety
/// `matrix` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn bp_matrix_copy(matrix: *const BpMatrix, buf: *mut f64, len: usize) -> BpStatus {
    guard(|| {
        let mat = deref(matrix, "matrix")?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let data = mat.matrix.data();
        if len < data.len() {
            return Err(Error::InvalidConfig(format!("buffer holds {len} values, need {}", data.len())).into());
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Solver iterations behind the matrix, 0 for direct inversion.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_matrix_iterations(matrix: *const BpMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.iterations)
}

/// Whether the solver met its stopping rule; always true for direct
/// inversion, false for null.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bp_matrix_converged(matrix: *const BpMatrix) -> bool {
    matrix.as_ref().is_some_and(|m| m.converged)
}

/// # Safety
/// `matrix` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bp_matrix_free(matrix: *mut BpMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}
