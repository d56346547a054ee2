//! C ABI over `moog_lyapunov`.
//!
//! Parameters and trajectories are opaque handles created and released by
//! this library. Every fallible call returns a [`MoogStatus`]; on failure a
//! message is available from [`moog_last_error`] on the same thread.
//! State vectors are passed as pointers to four `double`s.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use moog_lyapunov::integrators::{simulate, Method, StepConfig, Trajectory};
use moog_lyapunov::lyapunov::{certify, LogCoshLyapunov, MatrixFamily, Verdict};
use moog_lyapunov::model::rhs_nonlinear;
use moog_lyapunov::spectral::{eigvals_a_closed, stability_margin};
use moog_lyapunov::{Error, FilterParams, State};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoogStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Numerical = 4,
    Panic = 5,
}

/// Matrix family codes accepted by [`moog_certify`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoogFamily {
    As = 0,
    Bs = 1,
    QsWorstCase = 2,
}

/// Integrator codes accepted by [`moog_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoogMethod {
    Rk4 = 0,
    DiscreteGradient = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoogVerdict {
    NegativeDefinite = 0,
    NegativeSemidefinite = 1,
    Indefinite = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MoogComplex {
    pub re: f64,
    pub im: f64,
}

/// Eigenvalue bounds of the `ω₀`-normalised symmetric part.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoogCertificate {
    pub omega0: f64,
    pub r: f64,
    pub min_eig: f64,
    pub max_eig: f64,
    pub verdict: MoogVerdict,
}

/// Opaque parameter handle.
pub struct MoogParams {
    inner: FilterParams,
}

/// Opaque trajectory handle.
pub struct MoogTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MoogStatus {
    match e {
        Error::AtGridPoint { source, .. } => status_of(source),
        Error::Range { .. } | Error::Invalid(_) | Error::Spec { .. } => MoogStatus::InvalidArgument,
        Error::Domain(_) => MoogStatus::Domain,
        _ => MoogStatus::Numerical,
    }
}

fn fail(status: MoogStatus, msg: impl Into<String>) -> MoogStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F>(f: F) -> MoogStatus
where
    F: FnOnce() -> Result<(), MoogStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MoogStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MoogStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lift<T>(r: moog_lyapunov::Result<T>) -> Result<T, MoogStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn params_ref<'a>(p: *const MoogParams) -> Result<&'a FilterParams, MoogStatus> {
    p.as_ref()
        .map(|p| &p.inner)
        .ok_or_else(|| fail(MoogStatus::NullPointer, "params handle is NULL"))
}

unsafe fn read_state(x: *const f64) -> Result<State, MoogStatus> {
    if x.is_null() {
        return Err(fail(MoogStatus::NullPointer, "state pointer is NULL"));
    }
    let mut s = [0.0; 4];
    ptr::copy_nonoverlapping(x, s.as_mut_ptr(), 4);
    lift(State::new(s))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<*mut T, MoogStatus> {
    if p.is_null() {
        Err(fail(MoogStatus::NullPointer, format!("{what} pointer is NULL")))
    } else {
        Ok(p)
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn moog_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a parameter handle; release it with [`moog_params_free`].
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn moog_params_new(omega0: f64, r: f64, out: *mut *mut MoogParams) -> MoogStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = lift(FilterParams::new(omega0, r))?;
        *out = Box::into_raw(Box::new(MoogParams { inner }));
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`moog_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moog_params_free(p: *mut MoogParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes `α` and `d = max(1, α)`.
///
/// # Safety
/// `p` must be a live handle; `alpha` and `d` must be writable.
#[no_mangle]
pub unsafe extern "C" fn moog_params_scaling(p: *const MoogParams, alpha: *mut f64, d: *mut f64) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        *out_ptr(alpha, "alpha")? = p.alpha();
        *out_ptr(d, "d")? = p.d();
        Ok(())
    })
}

/// Nonlinear vector field at `x`.
///
/// # Safety
/// `p` must be a live handle; `x` readable and `out` writable for 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn moog_rhs(p: *const MoogParams, x: *const f64, out: *mut f64) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        let x = read_state(x)?;
        let out = out_ptr(out, "out")?;
        let f = rhs_nonlinear(&x, p);
        ptr::copy_nonoverlapping(f.as_ptr(), out, 4);
        Ok(())
    })
}

/// Log-cosh Lyapunov function at the unscaled state `x`.
///
/// # Safety
/// `p` must be a live handle; `x` readable for 4 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn moog_lyapunov_value(p: *const MoogParams, x: *const f64, out: *mut f64) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        let x = read_state(x)?;
        *out_ptr(out, "out")? = LogCoshLyapunov::new(p).value_at_state(&x);
        Ok(())
    })
}

/// Time derivative of the log-cosh Lyapunov function along the flow.
///
/// # Safety
/// `p` must be a live handle; `x` readable for 4 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn moog_lyapunov_derivative(p: *const MoogParams, x: *const f64, out: *mut f64) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        let x = read_state(x)?;
        *out_ptr(out, "out")? = LogCoshLyapunov::new(p).derivative_at_state(&x);
        Ok(())
    })
}

/// Closed-form eigenvalues of the linearisation, sorted by argument.
///
/// # Safety
/// `p` must be a live handle; `out` writable for 4 elements.
#[no_mangle]
pub unsafe extern "C" fn moog_eigvals_closed(p: *const MoogParams, out: *mut MoogComplex) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        let out = out_ptr(out, "out")?;
        for (i, z) in eigvals_a_closed(p).eigenvalues.iter().enumerate() {
            *out.add(i) = MoogComplex { re: z.re, im: z.im };
        }
        Ok(())
    })
}

/// `-max Re λ` of the linearisation.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn moog_stability_margin(p: *const MoogParams, out: *mut f64) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        *out_ptr(out, "out")? = stability_margin(p);
        Ok(())
    })
}

/// Negative-definiteness certificate for one matrix family.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn moog_certify(
    p: *const MoogParams,
    family: i32,
    tol: f64,
    out: *mut MoogCertificate,
) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        let out = out_ptr(out, "out")?;
        let family = match family {
            0 => MatrixFamily::As,
            1 => MatrixFamily::Bs,
            2 => MatrixFamily::QsWorstCase,
            other => return Err(fail(MoogStatus::InvalidArgument, format!("unknown family code {other}"))),
        };
        let rep = lift(certify(family, p, tol))?;
        *out = MoogCertificate {
            omega0: rep.omega0,
            r: rep.r,
            min_eig: rep.min_eig,
            max_eig: rep.max_eig,
            verdict: match rep.verdict {
                Verdict::NegativeDefinite => MoogVerdict::NegativeDefinite,
                Verdict::NegativeSemidefinite => MoogVerdict::NegativeSemidefinite,
                Verdict::Indefinite => MoogVerdict::Indefinite,
            },
        };
        Ok(())
    })
}

/// Integrates `n_steps` steps of size `dt`; release the result with
/// [`moog_trajectory_free`]. A non-positive `newton_tol` selects the default.
///
/// # Safety
/// `p` must be a live handle; `x0` readable for 4 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn moog_simulate(
    p: *const MoogParams,
    x0: *const f64,
    method: i32,
    dt: f64,
    n_steps: usize,
    newton_tol: f64,
    out: *mut *mut MoogTrajectory,
) -> MoogStatus {
    guard(|| {
        let p = params_ref(p)?;
        let x0 = read_state(x0)?;
        let out = out_ptr(out, "out")?;
        let method = match method {
            0 => Method::ExplicitRk4,
            1 => Method::DiscreteGradient,
            other => return Err(fail(MoogStatus::InvalidArgument, format!("unknown method code {other}"))),
        };
        let mut cfg = lift(StepConfig::new(dt, method))?;
        if newton_tol > 0.0 {
            cfg = lift(cfg.with_newton(newton_tol, cfg.newton_max_iter))?;
        }
        let inner = lift(simulate(&x0, p, &cfg, n_steps))?;
        *out = Box::into_raw(Box::new(MoogTrajectory { inner }));
        Ok(())
    })
}

/// Number of samples (`n_steps + 1`), or 0 for a NULL handle.
///
/// # Safety
/// `t` must be NULL or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn moog_trajectory_len(t: *const MoogTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// Reads sample `i`. Any of the output pointers may be NULL to skip it.
///
/// # Safety
/// `t` must be a live handle; non-NULL outputs must be writable (`x` for 4
/// doubles).
#[no_mangle]
pub unsafe extern "C" fn moog_trajectory_sample(
    t: *const MoogTrajectory,
    i: usize,
    time: *mut f64,
    x: *mut f64,
    v: *mut f64,
    vdot: *mut f64,
) -> MoogStatus {
    guard(|| {
        let t = &t
            .as_ref()
            .ok_or_else(|| fail(MoogStatus::NullPointer, "trajectory handle is NULL"))?
            .inner;
        if i >= t.len() {
            return Err(fail(
                MoogStatus::InvalidArgument,
                format!("sample {i} out of range (len {})", t.len()),
            ));
        }
        if !time.is_null() {
            *time = t.times[i];
        }
        if !x.is_null() {
            ptr::copy_nonoverlapping(t.states[i].0.as_ptr(), x, 4);
        }
        if !v.is_null() {
            *v = t.v[i];
        }
        if !vdot.is_null() {
            *vdot = t.vdot[i];
        }
        Ok(())
    })
}

/// Largest per-step increase of `V` along the trajectory.
///
/// # Safety
/// `t` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn moog_trajectory_max_v_increase(t: *const MoogTrajectory, out: *mut f64) -> MoogStatus {
    guard(|| {
        let t = t
            .as_ref()
            .ok_or_else(|| fail(MoogStatus::NullPointer, "trajectory handle is NULL"))?;
        *out_ptr(out, "out")? = t.inner.max_v_increase();
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a handle from [`moog_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moog_trajectory_free(t: *mut MoogTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}
