//! C ABI over `measured_chaos`.
//!
//! Every function returns an [`McStatus`]; on failure the message is kept in
//! a thread-local buffer readable through [`mc_last_error_message`]. Objects
//! cross the boundary as opaque handles that the caller frees with the
//! matching `*_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use measured_chaos::closure::{step_gaussian_closure, steady_state_variances};
use measured_chaos::harness::{presets, run_experiment, validate_config, ExperimentConfig, Task};
use measured_chaos::noise::NoiseSource;
use measured_chaos::quantum::{Grid, SseStepper, WaveFunction};
use measured_chaos::{Error, GaussianState, MeasurementConfig, SystemSpec};

/// Result code of every call. Values 2–4 match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    NullPointer = 1,
    ConfigError = 2,
    NumericalHalt = 3,
    IoError = 4,
    InvalidArgument = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McSystemKind {
    Harmonic = 0,
    DoubleWell = 1,
    DrivenHarmonic = 2,
    Duffing = 3,
}

/// System parameters in canonical units; fields unused by `kind` are ignored.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct McSystem {
    pub kind: McSystemKind,
    pub m: f64,
    pub w0: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub w: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct McGaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
}

impl From<GaussianState> for McGaussianState {
    fn from(g: GaussianState) -> Self {
        Self {
            mean_x: g.mean_x,
            mean_p: g.mean_p,
            var_x: g.var_x,
            var_p: g.var_p,
            cov_xp: g.cov_xp,
        }
    }
}

impl From<McGaussianState> for GaussianState {
    fn from(g: McGaussianState) -> Self {
        Self {
            mean_x: g.mean_x,
            mean_p: g.mean_p,
            var_x: g.var_x,
            var_p: g.var_p,
            cov_xp: g.cov_xp,
        }
    }
}

/// Gaussian moment-closure integrator with its own noise stream.
pub struct McClosure {
    sys: SystemSpec,
    meas: MeasurementConfig,
    hbar: f64,
    dt: f64,
    t: f64,
    state: GaussianState,
    noise: NoiseSource,
}

/// Conditioned wavefunction on a grid with its own noise stream.
pub struct McSse {
    stepper: SseStepper,
    psi: WaveFunction,
    t: f64,
    noise: NoiseSource,
}

/// A validated experiment configuration.
pub struct McConfig {
    cfg: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> McStatus {
    match e {
        Error::InvalidArgument(_) => McStatus::InvalidArgument,
        Error::Config { .. } => McStatus::ConfigError,
        Error::NumericalHalt(_) => McStatus::NumericalHalt,
        Error::Io { .. } => McStatus::IoError,
    }
}

struct Fail(McStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> McStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            McStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            McStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(McStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(McStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn system(s: &McSystem) -> Result<SystemSpec, Fail> {
    let sys = match s.kind {
        McSystemKind::Harmonic => SystemSpec::Harmonic { m: s.m, w0: s.w0 },
        McSystemKind::DoubleWell => SystemSpec::DoubleWell { m: s.m, a: s.a, b: s.b },
        McSystemKind::DrivenHarmonic => SystemSpec::DrivenHarmonic {
            m: s.m,
            w0: s.w0,
            lambda: s.lambda,
            w: s.w,
        },
        McSystemKind::Duffing => SystemSpec::Duffing {
            m: s.m,
            a: s.a,
            b: s.b,
            lambda: s.lambda,
            w: s.w,
        },
    };
    sys.validate()?;
    Ok(sys)
}

/// Message of the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// ħ in pg·µm²/s.
#[no_mangle]
pub extern "C" fn mc_hbar() -> f64 {
    measured_chaos::units::HBAR
}

/// The Duffing oscillator m = 1 pg, A = 990 pg/s², B = 49500 pg/(µm²s²),
/// Λ = 30 pg·µm/s², ω = 60 rad/s.
#[no_mangle]
pub extern "C" fn mc_paper_duffing() -> McSystem {
    McSystem {
        kind: McSystemKind::Duffing,
        m: 1.0,
        w0: 0.0,
        a: 990.0,
        b: 49_500.0,
        lambda: 30.0,
        w: 60.0,
    }
}

/// Force F(x, t).
#[no_mangle]
pub unsafe extern "C" fn mc_force(sys: *const McSystem, x: f64, t: f64, out: *mut f64) -> McStatus {
    guard(|| {
        let s = system(sys.as_ref().ok_or_else(|| null("sys"))?)?;
        *out_arg(out, "out")? = s.force(x, t);
        Ok(())
    })
}

/// Potential V(x, t).
#[no_mangle]
pub unsafe extern "C" fn mc_potential(sys: *const McSystem, x: f64, t: f64, out: *mut f64) -> McStatus {
    guard(|| {
        let s = system(sys.as_ref().ok_or_else(|| null("sys"))?)?;
        *out_arg(out, "out")? = s.potential(x, t);
        Ok(())
    })
}

/// Steady-state (σₓ², σ_p², C) of the measured second moments for a frozen
/// force gradient; the centroid fields of `out` are set to zero.
#[no_mangle]
pub unsafe extern "C" fn mc_steady_state_variances(
    m: f64,
    d_force: f64,
    k: f64,
    hbar: f64,
    out: *mut McGaussianState,
) -> McStatus {
    guard(|| {
        let ss = steady_state_variances(m, d_force, &MeasurementConfig::new(k)?, hbar)?;
        *out_arg(out, "out")? = McGaussianState {
            mean_x: 0.0,
            mean_p: 0.0,
            var_x: ss.var_x,
            var_p: ss.var_p,
            cov_xp: ss.cov_xp,
        };
        Ok(())
    })
}

/// Creates a closure integrator starting from `initial` at t = 0.
#[no_mangle]
pub unsafe extern "C" fn mc_closure_new(
    sys: *const McSystem,
    k: f64,
    hbar: f64,
    dt: f64,
    initial: *const McGaussianState,
    seed: u64,
    out: *mut *mut McClosure,
) -> McStatus {
    guard(|| {
        let sys = system(sys.as_ref().ok_or_else(|| null("sys"))?)?;
        let state: GaussianState = (*initial.as_ref().ok_or_else(|| null("initial"))?).into();
        if !(dt > 0.0 && dt.is_finite() && hbar > 0.0 && hbar.is_finite()) {
            return Err(Fail(McStatus::InvalidArgument, "dt and hbar must be positive".into()));
        }
        state.check_quantum(hbar)?;
        let slot = out_arg(out, "out")?;
        *slot = Box::into_raw(Box::new(McClosure {
            sys,
            meas: MeasurementConfig::new(k)?,
            hbar,
            dt,
            t: 0.0,
            state,
            noise: NoiseSource::new(seed, 0),
        }));
        Ok(())
    })
}

/// Advances `n_steps` steps. On a halt the handle keeps the last good state.
#[no_mangle]
pub unsafe extern "C" fn mc_closure_step(h: *mut McClosure, n_steps: u64) -> McStatus {
    guard(|| {
        let c = out_arg(h, "handle")?;
        for _ in 0..n_steps {
            c.state = step_gaussian_closure(&c.sys, &c.state, c.t, c.dt, &c.meas, c.hbar, &mut c.noise)?;
            c.t += c.dt;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_closure_state(h: *const McClosure, out: *mut McGaussianState, t: *mut f64) -> McStatus {
    guard(|| {
        let c = h.as_ref().ok_or_else(|| null("handle"))?;
        *out_arg(out, "out")? = c.state.into();
        if let Some(t) = t.as_mut() {
            *t = c.t;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_closure_free(h: *mut McClosure) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Creates a wavefunction integrator on `n` points over `[x_min, x_max)`,
/// starting from the Gaussian `initial` at t = 0.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mc_sse_new(
    sys: *const McSystem,
    k: f64,
    hbar: f64,
    dt: f64,
    x_min: f64,
    x_max: f64,
    n: usize,
    initial: *const McGaussianState,
    seed: u64,
    out: *mut *mut McSse,
) -> McStatus {
    guard(|| {
        let sys = system(sys.as_ref().ok_or_else(|| null("sys"))?)?;
        let g: GaussianState = (*initial.as_ref().ok_or_else(|| null("initial"))?).into();
        let grid = Grid::new(x_min, x_max, n)?;
        let stepper = SseStepper::new(&sys, grid, hbar, dt, MeasurementConfig::new(k)?)?;
        let psi = WaveFunction::from_gaussian_state(grid, hbar, &g)?;
        psi.check_boundary()?;
        let slot = out_arg(out, "out")?;
        *slot = Box::into_raw(Box::new(McSse {
            stepper,
            psi,
            t: 0.0,
            noise: NoiseSource::new(seed, 0),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_sse_step(h: *mut McSse, n_steps: u64) -> McStatus {
    guard(|| {
        let s = out_arg(h, "handle")?;
        let dt = s.stepper.dt();
        for _ in 0..n_steps {
            s.stepper.step(&mut s.psi, s.t, &mut s.noise)?;
            s.t += dt;
        }
        Ok(())
    })
}

/// Moments of the current wavefunction.
#[no_mangle]
pub unsafe extern "C" fn mc_sse_moments(h: *const McSse, out: *mut McGaussianState, t: *mut f64) -> McStatus {
    guard(|| {
        let s = h.as_ref().ok_or_else(|| null("handle"))?;
        *out_arg(out, "out")? = s.psi.moments().into();
        if let Some(t) = t.as_mut() {
            *t = s.t;
        }
        Ok(())
    })
}

/// Copies |ψ(x)|² into `buf` (length `len`, at least the grid size).
#[no_mangle]
pub unsafe extern "C" fn mc_sse_density(h: *const McSse, buf: *mut f64, len: usize) -> McStatus {
    guard(|| {
        let s = h.as_ref().ok_or_else(|| null("handle"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let d = s.psi.density();
        if len < d.len() {
            return Err(Fail(
                McStatus::BufferTooSmall,
                format!("buffer holds {len} values, grid has {}", d.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, d.len()).copy_from_slice(&d);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_sse_free(h: *mut McSse) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Parses and validates a JSON configuration document.
#[no_mangle]
pub unsafe extern "C" fn mc_config_from_json(text: *const c_char, out: *mut *mut McConfig) -> McStatus {
    guard(|| {
        let cfg = validate_config(str_arg(text, "text")?)?;
        *out_arg(out, "out")? = Box::into_raw(Box::new(McConfig { cfg }));
        Ok(())
    })
}

/// Loads a bundled preset by name.
#[no_mangle]
pub unsafe extern "C" fn mc_config_from_preset(name: *const c_char, out: *mut *mut McConfig) -> McStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let text = presets::preset(name)
            .ok_or_else(|| Fail(McStatus::ConfigError, format!("unknown preset `{name}`")))?;
        let cfg = validate_config(text)?;
        *out_arg(out, "out")? = Box::into_raw(Box::new(McConfig { cfg }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_config_set_seed(h: *mut McConfig, seed: u64) -> McStatus {
    guard(|| {
        out_arg(h, "handle")?.cfg.seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_config_set_output(h: *mut McConfig, dir: *const c_char) -> McStatus {
    guard(|| {
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        out_arg(h, "handle")?.cfg.output = dir;
        Ok(())
    })
}

/// Selects the task: "simulate", "lyapunov", "strobe", "wigner-snapshot" or
/// "check-classicality".
#[no_mangle]
pub unsafe extern "C" fn mc_config_set_task(h: *mut McConfig, task: *const c_char) -> McStatus {
    guard(|| {
        let name = str_arg(task, "task")?;
        let task = [
            Task::Simulate,
            Task::Lyapunov,
            Task::Strobe,
            Task::WignerSnapshot,
            Task::CheckClassicality,
        ]
        .into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| Fail(McStatus::InvalidArgument, format!("unknown task `{name}`")))?;
        out_arg(h, "handle")?.cfg.task = task;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_config_free(h: *mut McConfig) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs the configured task and writes its artifacts and manifest.
#[no_mangle]
pub unsafe extern "C" fn mc_run_experiment(h: *const McConfig) -> McStatus {
    guard(|| {
        let c = h.as_ref().ok_or_else(|| null("handle"))?;
        run_experiment(&c.cfg)?;
        Ok(())
    })
}
