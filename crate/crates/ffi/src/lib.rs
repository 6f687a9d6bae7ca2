//! C ABI over the invasion solver.
//!
//! Every fallible function returns an [`InvStatus`]; on failure a message is
//! available from [`inv_last_error`] on the same thread. Simulations are
//! opaque handles created by [`inv_simulation_new`] and released with
//! [`inv_simulation_free`]. Arrays are row-major with `x` as the slow index.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use invasion::asymptotics::{FrontSolution, PrefactorExponent, SeriesOptions};
use invasion::diagnostics::{front_position, half_front, loglog_fit, mean_trait_at};
use invasion::params::{parse_config_str, InitKind, Params, Preset, RightBoundary};
use invasion::stepper::{Model, SimState};
use invasion::{Error, ReproductionMethod};

/// Status codes. Values 0 to 4 coincide with the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvStatus {
    Ok = 0,
    Error = 1,
    Config = 2,
    BlowUp = 3,
    CheckFailed = 4,
    Domain = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvInit {
    Gaussian = 0,
    Dirac = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvMethod {
    Fast = 0,
    BruteForce = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvBoundary {
    Dirichlet = 0,
    Neumann = 1,
}

/// Scalar parameters; output times are not part of the C interface since
/// the caller drives the stepping.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvParams {
    pub r: f64,
    pub k: f64,
    pub lambda2: f64,
    pub dt: f64,
    pub dx: f64,
    pub dtheta: f64,
    pub x_max: f64,
    pub theta_max: f64,
    pub theta_min: f64,
    pub t_end: f64,
    pub front_threshold: f64,
    pub diagnostic_dt: f64,
    pub right_boundary: InvBoundary,
}

impl From<&Params> for InvParams {
    fn from(p: &Params) -> Self {
        Self {
            r: p.r,
            k: p.k,
            lambda2: p.lambda2,
            dt: p.dt,
            dx: p.dx,
            dtheta: p.dtheta,
            x_max: p.x_max,
            theta_max: p.theta_max,
            theta_min: p.theta_min,
            t_end: p.t_end,
            front_threshold: p.front_threshold,
            diagnostic_dt: p.diagnostic_dt,
            right_boundary: match p.right_boundary {
                RightBoundary::Dirichlet => InvBoundary::Dirichlet,
                RightBoundary::Neumann => InvBoundary::Neumann,
            },
        }
    }
}

impl InvParams {
    fn to_params(self) -> Params {
        Params {
            r: self.r,
            k: self.k,
            lambda2: self.lambda2,
            dt: self.dt,
            dx: self.dx,
            dtheta: self.dtheta,
            x_max: self.x_max,
            theta_max: self.theta_max,
            theta_min: self.theta_min,
            t_end: self.t_end,
            front_threshold: self.front_threshold,
            output_times: Vec::new(),
            diagnostic_dt: self.diagnostic_dt,
            right_boundary: match self.right_boundary {
                InvBoundary::Dirichlet => RightBoundary::Dirichlet,
                InvBoundary::Neumann => RightBoundary::Neumann,
            },
        }
    }
}

/// Front diagnostics of the current state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvFront {
    pub x_num: f64,
    /// NaN when the local mass at the front vanishes.
    pub theta_bar: f64,
    /// NaN when the density never crosses 1/2.
    pub x_half: f64,
    /// 0 when the density vanishes identically.
    pub defined: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Opaque simulation handle.
pub struct InvSimulation {
    model: Model,
    state: SimState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> InvStatus {
    match e {
        Error::Config(_) | Error::ConfigLine { .. } => InvStatus::Config,
        Error::BlowUp { .. } => InvStatus::BlowUp,
        Error::CheckFailed(_) => InvStatus::CheckFailed,
        Error::Domain(_) | Error::Undefined(_) | Error::NoConvergence { .. } => InvStatus::Domain,
        _ => InvStatus::Error,
    }
}

/// Runs `f`, recording the error message and converting panics.
fn guard<F>(f: F) -> InvStatus
where
    F: FnOnce() -> Result<(), (InvStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InvStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            InvStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (InvStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(name: &str) -> (InvStatus, String) {
    (InvStatus::NullPointer, format!("`{name}` is null"))
}

/// Message of the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn inv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// NUL-terminated crate version; static storage.
#[no_mangle]
pub extern "C" fn inv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the default parameter set.
///
/// # Safety
/// `out` must be null or point to writable memory for one `InvParams`.
#[no_mangle]
pub unsafe extern "C" fn inv_params_default(out: *mut InvParams) -> InvStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        *out = InvParams::from(&Params::default());
        Ok(())
    })
}

/// Writes a named preset (`paper`, `dirac`, `low-r`, `high-lambda`) and its
/// initial data.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` and `init` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn inv_params_preset(
    name: *const c_char,
    out: *mut InvParams,
    init: *mut InvInit,
) -> InvStatus {
    guard(|| {
        if name.is_null() {
            return Err(null_err("name"));
        }
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let init = init.as_mut().ok_or_else(|| null_err("init"))?;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| (InvStatus::InvalidArgument, "name is not UTF-8".to_string()))?;
        let preset: Preset = name.parse().map_err(|e| (InvStatus::Config, e))?;
        let (p, k) = preset.build();
        *out = InvParams::from(&p);
        *init = to_inv_init(k);
        Ok(())
    })
}

/// Parses config-file text on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` and `init` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn inv_params_from_config(
    text: *const c_char,
    out: *mut InvParams,
    init: *mut InvInit,
) -> InvStatus {
    guard(|| {
        if text.is_null() {
            return Err(null_err("text"));
        }
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let init = init.as_mut().ok_or_else(|| null_err("init"))?;
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (InvStatus::InvalidArgument, "config is not UTF-8".to_string()))?;
        let (p, k) = parse_config_str(text, "config", Preset::Paper.build()).map_err(core_err)?;
        *out = InvParams::from(&p);
        *init = to_inv_init(k);
        Ok(())
    })
}

fn to_inv_init(k: InitKind) -> InvInit {
    match k {
        InitKind::Gaussian => InvInit::Gaussian,
        InitKind::Dirac => InvInit::Dirac,
    }
}

/// Creates a simulation at `t = 0`. Fails on invalid parameters, including
/// a time step above the explicit stability bound.
///
/// # Safety
/// `params` must point to a valid `InvParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_new(
    params: *const InvParams,
    init: InvInit,
    method: InvMethod,
    out: *mut *mut InvSimulation,
) -> InvStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null_err("params"))?;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let method = match method {
            InvMethod::Fast => ReproductionMethod::Fast,
            InvMethod::BruteForce => ReproductionMethod::BruteForce,
        };
        let init = match init {
            InvInit::Gaussian => InitKind::Gaussian,
            InvInit::Dirac => InitKind::Dirac,
        };
        let model = Model::new(params.to_params(), method).map_err(core_err)?;
        let state = model.initial_state(init);
        *out = Box::into_raw(Box::new(InvSimulation { model, state }));
        Ok(())
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`inv_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_free(sim: *mut InvSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `nsteps` Euler steps. On blow-up the state is left at the
/// last finite step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_step(sim: *mut InvSimulation, nsteps: u64) -> InvStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null_err("sim"))?;
        for _ in 0..nsteps {
            sim.model.step(&mut sim.state).map_err(core_err)?;
        }
        Ok(())
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_time(sim: *const InvSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.state.time)
}

/// Number of steps taken so far.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_step_index(sim: *const InvSimulation) -> u64 {
    sim.as_ref().map_or(0, |s| s.state.step_index)
}

/// Mesh sizes in `x` and `theta`.
///
/// # Safety
/// `sim` must be a live handle; `nx` and `ntheta` writable.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_dims(
    sim: *const InvSimulation,
    nx: *mut usize,
    ntheta: *mut usize,
) -> InvStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null_err("sim"))?;
        let nx = nx.as_mut().ok_or_else(|| null_err("nx"))?;
        let ntheta = ntheta.as_mut().ok_or_else(|| null_err("ntheta"))?;
        (*nx, *ntheta) = sim.model.grid().shape();
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (InvStatus, String)> {
    if buf.is_null() {
        return Err(null_err("buf"));
    }
    if len < src.len() {
        return Err((
            InvStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the density, `nx * ntheta` values, row-major in `x`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_copy_field(
    sim: *const InvSimulation,
    buf: *mut f64,
    len: usize,
) -> InvStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null_err("sim"))?;
        let values = sim.state.field.values.as_standard_layout();
        copy_out(values.as_slice().expect("standard layout"), buf, len)
    })
}

/// Copies the population size, `nx` values.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_copy_rho(sim: *const InvSimulation, buf: *mut f64, len: usize) -> InvStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null_err("sim"))?;
        copy_out(sim.state.rho.as_slice(), buf, len)
    })
}

/// Front position at `threshold`, mean trait there, and half-density front.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inv_simulation_front(
    sim: *const InvSimulation,
    threshold: f64,
    out: *mut InvFront,
) -> InvStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null_err("sim"))?;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let grid = sim.model.grid();
        let rho = sim.state.rho.as_slice();
        let f = front_position(rho, grid, threshold);
        *out = InvFront {
            x_num: f.x,
            theta_bar: if f.defined {
                mean_trait_at(&sim.state.field, grid, f.index).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            },
            x_half: half_front(rho, grid).unwrap_or(f64::NAN),
            defined: f.defined as i32,
        };
        Ok(())
    })
}

/// `4 sqrt(lambda / 3)`.
#[no_mangle]
pub extern "C" fn inv_critical_y(lambda: f64) -> f64 {
    invasion::asymptotics::critical_y(lambda)
}

fn solution(lambda2: f64) -> Result<FrontSolution, (InvStatus, String)> {
    FrontSolution::new(lambda2).map_err(core_err)
}

/// Mean-trait profile `a(y)` and amplitude profile `b(y)`.
///
/// # Safety
/// `a` and `b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inv_profiles(y: f64, lambda2: f64, a: *mut f64, b: *mut f64) -> InvStatus {
    guard(|| {
        let a = a.as_mut().ok_or_else(|| null_err("a"))?;
        let b = b.as_mut().ok_or_else(|| null_err("b"))?;
        let s = solution(lambda2)?;
        *a = s.a(y);
        *b = s.b(y);
        Ok(())
    })
}

/// Corrector series `u_1(y, eta)` and the number of terms summed.
///
/// # Safety
/// `value` and `terms` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inv_u1_series(
    y: f64,
    eta: f64,
    lambda2: f64,
    kmax: usize,
    tol: f64,
    value: *mut f64,
    terms: *mut usize,
) -> InvStatus {
    guard(|| {
        let value = value.as_mut().ok_or_else(|| null_err("value"))?;
        let terms = terms.as_mut().ok_or_else(|| null_err("terms"))?;
        let v = solution(lambda2)?
            .u1(y, eta, SeriesOptions { kmax, tol })
            .map_err(core_err)?;
        *value = v.value;
        *terms = v.terms;
        Ok(())
    })
}

/// Leading-order predicted density; `one_third` selects the alternative
/// prefactor exponent.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inv_conjecture_density(
    t: f64,
    x: f64,
    theta: f64,
    lambda2: f64,
    one_third: bool,
    out: *mut f64,
) -> InvStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let e = if one_third {
            PrefactorExponent::OneThird
        } else {
            PrefactorExponent::FourThirds
        };
        *out = solution(lambda2)?.conjecture_density(t, x, theta, e);
        Ok(())
    })
}

/// Least-squares fit of `y = C t^p` over `t` in `[t0, t1]`.
///
/// # Safety
/// `ts` and `ys` must hold `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inv_loglog_fit(
    ts: *const f64,
    ys: *const f64,
    n: usize,
    t0: f64,
    t1: f64,
    out: *mut InvFit,
) -> InvStatus {
    guard(|| {
        if ts.is_null() {
            return Err(null_err("ts"));
        }
        if ys.is_null() {
            return Err(null_err("ys"));
        }
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let ts = std::slice::from_raw_parts(ts, n);
        let ys = std::slice::from_raw_parts(ys, n);
        let f = loglog_fit(ts, ys, (t0, t1)).map_err(core_err)?;
        *out = InvFit {
            prefactor: f.prefactor,
            exponent: f.exponent,
            r_squared: f.r_squared,
            n_points: f.n_points,
        };
        Ok(())
    })
}
