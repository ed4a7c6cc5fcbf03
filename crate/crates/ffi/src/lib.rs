//! C ABI over `tsr-core`.
//!
//! Every fallible function returns a [`TsrStatus`]; on failure the message is
//! available from [`tsr_last_error_message`] on the same thread. Objects are
//! exposed as opaque handles that must be released with the matching
//! `*_free` function. Outputs are written through caller-provided pointers
//! only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tsr_core::amp::{run_amp, AmpConfig};
use tsr_core::denoiser::{mmse, mmse_derivative, AwgnObservationModel};
use tsr_core::harness::{run_experiment, ExperimentConfig};
use tsr_core::model::{
    generate_instance, BernoulliGaussianPrior, IidGaussianOperator, LinearOperator,
    PartialDftOperator, ProblemInstance, SensingOperator, C64,
};
use tsr_core::rng::{shared_stream, Purpose};
use tsr_core::state_evolution::{se_amp, se_tsr, SeParams, SeTrajectory};
use tsr_core::tsr::{run_tsr, TsrConfig};
use tsr_core::{Error, RecoveryTrace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    Unsupported = 4,
    Numerical = 5,
    Io = 6,
    Serialization = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsrComplex {
    pub re: f64,
    pub im: f64,
}

impl From<TsrComplex> for C64 {
    fn from(c: TsrComplex) -> Self {
        C64::new(c.re, c.im)
    }
}

impl From<C64> for TsrComplex {
    fn from(c: C64) -> Self {
        TsrComplex { re: c.re, im: c.im }
    }
}

/// Opaque sensing operator.
pub struct TsrOperator(SensingOperator);
/// Opaque problem instance.
pub struct TsrInstance(ProblemInstance);
/// Opaque recovery trace.
pub struct TsrTrace(RecoveryTrace);
/// Opaque state-evolution trajectory.
pub struct TsrSeTrajectory(SeTrajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TsrStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Config(_) => TsrStatus::InvalidArgument,
        Error::LengthMismatch { .. } => TsrStatus::LengthMismatch,
        Error::UnsupportedOperator { .. } => TsrStatus::Unsupported,
        Error::Io(_) => TsrStatus::Io,
        Error::Csv(_) | Error::Json(_) => TsrStatus::Serialization,
        _ => TsrStatus::Numerical,
    }
}

struct Failure(TsrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = std::result::Result<T, Failure>;

fn null_pointer(name: &str) -> Failure {
    Failure(TsrStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> TsrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TsrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            TsrStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null_pointer(name));
    }
    // SAFETY: non-null, and the caller guarantees it is valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    // SAFETY: the caller passes a live handle from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null_pointer(name))
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, name: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null_pointer(name));
    }
    // SAFETY: the caller guarantees `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize, name: &str) -> FfiResult<()> {
    if len != src.len() {
        return Err(Error::LengthMismatch {
            expected: src.len(),
            actual: len,
        }
        .into());
    }
    if len == 0 {
        return Ok(());
    }
    if out.is_null() {
        return Err(null_pointer(name));
    }
    // SAFETY: the caller guarantees `len` writable elements.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, len) };
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: `p` came from `boxed` and is freed once.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tsr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `mmse(eta)` for the Bernoulli-Gaussian prior with sparsity `lambda`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_mmse(eta: f64, lambda: f64, out: *mut f64) -> TsrStatus {
    guard(|| {
        let v = mmse(eta, &BernoulliGaussianPrior::new(lambda)?)?;
        unsafe { write_out(out, v, "out") }
    })
}

/// Exact `d mmse / d eta`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_mmse_derivative(eta: f64, lambda: f64, out: *mut f64) -> TsrStatus {
    guard(|| {
        let v = mmse_derivative(eta, &BernoulliGaussianPrior::new(lambda)?)?;
        unsafe { write_out(out, v, "out") }
    })
}

/// Posterior mean and variance of `x` given `r = x + w`, `w ~ CN(0, 1/eta)`.
///
/// # Safety
/// `out_mean` and `out_variance` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_posterior(
    r: TsrComplex,
    eta: f64,
    lambda: f64,
    out_mean: *mut TsrComplex,
    out_variance: *mut f64,
) -> TsrStatus {
    guard(|| {
        let p = AwgnObservationModel::new(eta, BernoulliGaussianPrior::new(lambda)?)?
            .posterior(r.into())?;
        unsafe {
            write_out(out_mean, p.mean.into(), "out_mean")?;
            write_out(out_variance, p.variance, "out_variance")
        }
    })
}

/// Partial DFT with `m` rows of the unitary `n`-point DFT drawn from `seed`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_partial_dft_new(
    n: usize,
    m: usize,
    seed: u64,
    out: *mut *mut TsrOperator,
) -> TsrStatus {
    guard(|| {
        let op = PartialDftOperator::random(n, m, &mut shared_stream(seed, Purpose::Rows))?;
        unsafe { write_out(out, boxed(TsrOperator(op.into())), "out") }
    })
}

/// Partial DFT keeping the given distinct row indices.
///
/// # Safety
/// `rows` must point to `m` readable indices; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_partial_dft_from_rows(
    n: usize,
    rows: *const usize,
    m: usize,
    out: *mut *mut TsrOperator,
) -> TsrStatus {
    guard(|| {
        let rows = unsafe { slice_in(rows, m, "rows") }?.to_vec();
        let op = PartialDftOperator::new(n, rows)?;
        unsafe { write_out(out, boxed(TsrOperator(op.into())), "out") }
    })
}

/// Dense `m x n` matrix with i.i.d. `CN(0, 1/n)` entries drawn from `seed`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_iid_operator_new(
    m: usize,
    n: usize,
    seed: u64,
    out: *mut *mut TsrOperator,
) -> TsrStatus {
    guard(|| {
        let op = IidGaussianOperator::sample(m, n, &mut shared_stream(seed, Purpose::IidMatrix))?;
        unsafe { write_out(out, boxed(TsrOperator(op.into())), "out") }
    })
}

/// # Safety
/// `op` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsr_operator_free(op: *mut TsrOperator) {
    unsafe { free(op) }
}

/// # Safety
/// `op` must be a live handle; `out_n` and `out_m` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_operator_dims(
    op: *const TsrOperator,
    out_n: *mut usize,
    out_m: *mut usize,
) -> TsrStatus {
    guard(|| {
        let op = unsafe { handle(op, "op") }?;
        unsafe {
            write_out(out_n, op.0.n(), "out_n")?;
            write_out(out_m, op.0.m(), "out_m")
        }
    })
}

/// `out = A x` with `x` of length `n` and `out` of length `m`.
///
/// # Safety
/// `op` must be a live handle; `x` readable for `n`, `out` writable for `m`.
#[no_mangle]
pub unsafe extern "C" fn tsr_operator_forward(
    op: *const TsrOperator,
    x: *const TsrComplex,
    n: usize,
    out: *mut TsrComplex,
    m: usize,
) -> TsrStatus {
    guard(|| {
        let op = unsafe { handle(op, "op") }?;
        let x: Vec<C64> = unsafe { slice_in(x, n, "x") }?
            .iter()
            .map(|&c| c.into())
            .collect();
        let y: Vec<TsrComplex> = op.0.forward(&x)?.into_iter().map(Into::into).collect();
        unsafe { copy_out(&y, out, m, "out") }
    })
}

/// `out = A^H u` with `u` of length `m` and `out` of length `n`.
///
/// # Safety
/// `op` must be a live handle; `u` readable for `m`, `out` writable for `n`.
#[no_mangle]
pub unsafe extern "C" fn tsr_operator_adjoint(
    op: *const TsrOperator,
    u: *const TsrComplex,
    m: usize,
    out: *mut TsrComplex,
    n: usize,
) -> TsrStatus {
    guard(|| {
        let op = unsafe { handle(op, "op") }?;
        let u: Vec<C64> = unsafe { slice_in(u, m, "u") }?
            .iter()
            .map(|&c| c.into())
            .collect();
        let x: Vec<TsrComplex> = op.0.adjoint(&u)?.into_iter().map(Into::into).collect();
        unsafe { copy_out(&x, out, n, "out") }
    })
}

/// Draws a signal and noise from `seed` and observes them through a copy
/// of `op`.
///
/// # Safety
/// `op` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_instance_generate(
    op: *const TsrOperator,
    lambda: f64,
    sigma2: f64,
    seed: u64,
    out: *mut *mut TsrInstance,
) -> TsrStatus {
    guard(|| {
        let op = unsafe { handle(op, "op") }?;
        let inst = generate_instance(
            &BernoulliGaussianPrior::new(lambda)?,
            op.0.clone(),
            sigma2,
            seed,
        )?;
        unsafe { write_out(out, boxed(TsrInstance(inst)), "out") }
    })
}

/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsr_instance_free(inst: *mut TsrInstance) {
    unsafe { free(inst) }
}

/// # Safety
/// `inst` must be a live handle; `out` writable for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn tsr_instance_x_true(
    inst: *const TsrInstance,
    out: *mut TsrComplex,
    n: usize,
) -> TsrStatus {
    guard(|| {
        let inst = unsafe { handle(inst, "inst") }?;
        let x: Vec<TsrComplex> = inst.0.x_true.iter().map(|&c| c.into()).collect();
        unsafe { copy_out(&x, out, n, "out") }
    })
}

/// # Safety
/// `inst` must be a live handle; `out` writable for `m` elements.
#[no_mangle]
pub unsafe extern "C" fn tsr_instance_y(
    inst: *const TsrInstance,
    out: *mut TsrComplex,
    m: usize,
) -> TsrStatus {
    guard(|| {
        let inst = unsafe { handle(inst, "inst") }?;
        let y: Vec<TsrComplex> = inst.0.y.iter().map(|&c| c.into()).collect();
        unsafe { copy_out(&y, out, m, "out") }
    })
}

/// Turbo signal recovery; requires a partial DFT instance.
///
/// # Safety
/// `inst` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_run_tsr(
    inst: *const TsrInstance,
    lambda: f64,
    t_max: usize,
    rel_tol: f64,
    out: *mut *mut TsrTrace,
) -> TsrStatus {
    guard(|| {
        let inst = unsafe { handle(inst, "inst") }?;
        let cfg = TsrConfig {
            t_max,
            rel_tol,
            ..TsrConfig::default()
        };
        let trace = run_tsr(&inst.0, &BernoulliGaussianPrior::new(lambda)?, &cfg)?;
        unsafe { write_out(out, boxed(TsrTrace(trace)), "out") }
    })
}

/// AMP with the Bernoulli-Gaussian MMSE denoiser. `onsager = false`
/// disables the memory term.
///
/// # Safety
/// `inst` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_run_amp(
    inst: *const TsrInstance,
    lambda: f64,
    t_max: usize,
    rel_tol: f64,
    onsager: bool,
    out: *mut *mut TsrTrace,
) -> TsrStatus {
    guard(|| {
        let inst = unsafe { handle(inst, "inst") }?;
        let cfg = AmpConfig {
            t_max,
            rel_tol,
            onsager,
            ..AmpConfig::default()
        };
        let trace = run_amp(&inst.0, &BernoulliGaussianPrior::new(lambda)?, &cfg)?;
        unsafe { write_out(out, boxed(TsrTrace(trace)), "out") }
    })
}

/// # Safety
/// `trace` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsr_trace_free(trace: *mut TsrTrace) {
    unsafe { free(trace) }
}

/// Number of iterations recorded.
///
/// # Safety
/// `trace` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_trace_len(trace: *const TsrTrace, out: *mut usize) -> TsrStatus {
    guard(|| {
        let trace = unsafe { handle(trace, "trace") }?;
        unsafe { write_out(out, trace.0.records.len(), "out") }
    })
}

/// Per-iteration MSE; `len` must equal the trace length.
///
/// # Safety
/// `trace` must be a live handle; `out` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn tsr_trace_mse(
    trace: *const TsrTrace,
    out: *mut f64,
    len: usize,
) -> TsrStatus {
    guard(|| {
        let trace = unsafe { handle(trace, "trace") }?;
        unsafe { copy_out(&trace.0.mse(), out, len, "out") }
    })
}

/// Final estimate of the signal.
///
/// # Safety
/// `trace` must be a live handle; `out` writable for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn tsr_trace_estimate(
    trace: *const TsrTrace,
    out: *mut TsrComplex,
    n: usize,
) -> TsrStatus {
    guard(|| {
        let trace = unsafe { handle(trace, "trace") }?;
        let x: Vec<TsrComplex> = trace.0.estimate.iter().map(|&c| c.into()).collect();
        unsafe { copy_out(&x, out, n, "out") }
    })
}

unsafe fn se_new(
    n: usize,
    m: usize,
    sigma2: f64,
    lambda: f64,
    t_max: usize,
    out: *mut *mut TsrSeTrajectory,
    run: fn(&SeParams) -> tsr_core::Result<SeTrajectory>,
) -> TsrStatus {
    guard(|| {
        let params = SeParams {
            t_max,
            ..SeParams::new(n, m, sigma2, BernoulliGaussianPrior::new(lambda)?)?
        };
        params.validate()?;
        let traj = run(&params)?;
        unsafe { write_out(out, boxed(TsrSeTrajectory(traj)), "out") }
    })
}

/// TSR state evolution from `v = 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_se_tsr(
    n: usize,
    m: usize,
    sigma2: f64,
    lambda: f64,
    t_max: usize,
    out: *mut *mut TsrSeTrajectory,
) -> TsrStatus {
    unsafe { se_new(n, m, sigma2, lambda, t_max, out, se_tsr) }
}

/// AMP state evolution for the i.i.d. Gaussian ensemble, from `v = 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_se_amp(
    n: usize,
    m: usize,
    sigma2: f64,
    lambda: f64,
    t_max: usize,
    out: *mut *mut TsrSeTrajectory,
) -> TsrStatus {
    unsafe { se_new(n, m, sigma2, lambda, t_max, out, se_amp) }
}

/// # Safety
/// `traj` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsr_se_free(traj: *mut TsrSeTrajectory) {
    unsafe { free(traj) }
}

/// # Safety
/// `traj` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_se_len(traj: *const TsrSeTrajectory, out: *mut usize) -> TsrStatus {
    guard(|| {
        let traj = unsafe { handle(traj, "traj") }?;
        unsafe { write_out(out, traj.0.points.len(), "out") }
    })
}

/// Predicted MSE after each iteration; `len` must equal the trajectory length.
///
/// # Safety
/// `traj` must be a live handle; `out` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn tsr_se_predicted_mse(
    traj: *const TsrSeTrajectory,
    out: *mut f64,
    len: usize,
) -> TsrStatus {
    guard(|| {
        let traj = unsafe { handle(traj, "traj") }?;
        let v: Vec<f64> = traj.0.points.iter().map(|p| p.mmse_next).collect();
        unsafe { copy_out(&v, out, len, "out") }
    })
}

/// SNR at the last computed point and whether the recursion converged.
///
/// # Safety
/// `traj` must be a live handle; the outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_se_fixed_point(
    traj: *const TsrSeTrajectory,
    out_eta: *mut f64,
    out_converged: *mut bool,
) -> TsrStatus {
    guard(|| {
        let traj = unsafe { handle(traj, "traj") }?;
        unsafe {
            write_out(out_eta, traj.0.fixed_point_eta, "out_eta")?;
            write_out(out_converged, traj.0.converged, "out_converged")
        }
    })
}

/// Runs a Monte Carlo experiment described by a JSON config (missing fields
/// take their defaults) and returns the JSON report. Free the result with
/// [`tsr_string_free`].
///
/// # Safety
/// `config_json` must be a nul-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsr_run_experiment_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> TsrStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null_pointer("config_json"));
        }
        // SAFETY: non-null and nul-terminated per the contract.
        let text = unsafe { CStr::from_ptr(config_json) }
            .to_str()
            .map_err(|e| {
                Failure(
                    TsrStatus::InvalidArgument,
                    format!("config is not UTF-8: {e}"),
                )
            })?;
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(Error::from)?;
        let report = run_experiment(&cfg)?;
        let json = serde_json::to_string(&report).map_err(Error::from)?;
        let c = CString::new(json).map_err(|e| Failure(TsrStatus::Serialization, e.to_string()))?;
        unsafe { write_out(out, c.into_raw(), "out") }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsr_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
