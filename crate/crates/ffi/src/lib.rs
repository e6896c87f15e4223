//! C ABI over filament-core. Objects cross the boundary as opaque handles
//! that the caller releases with the matching `*_free`; every call returns a
//! [`FilamentStatus`] and leaves a message for [`filament_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use filament_core::commands;
use filament_core::pointvortex::{integrate_pv, PointVortexState};
use filament_core::profile::{solve_profile, ProfileMode, ProfileSolution};
use filament_core::verify::explicit_failures;
use filament_core::{Error, ModelParams, RadialGrid, RunConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilamentStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoConvergence = 3,
    Domain = 4,
    Io = 5,
    BufferTooSmall = 6,
    /// A run finished but an explicit check failed or it aborted early.
    CheckFailed = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilamentProfileMode {
    Pair = 0,
    Polygonal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FilamentProfileInfo {
    pub alpha: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub final_update: f64,
    pub tail_bound: f64,
    pub max_ratio: f64,
}

/// Converged self-similar profile.
pub struct FilamentProfile(ProfileSolution);

/// Point-vortex trajectory, one state per step.
pub struct FilamentPvTrajectory(Vec<PointVortexState>);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FilamentStatus {
    match e {
        Error::Params(_) | Error::Grid(_) | Error::TooFewNodes { .. } => FilamentStatus::InvalidArgument,
        Error::NonConvergence { .. }
        | Error::Breakdown { .. }
        | Error::NoContraction { .. }
        | Error::NotInE { .. } => FilamentStatus::NoConvergence,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => FilamentStatus::Io,
        _ => FilamentStatus::Domain,
    }
}

fn guard(f: impl FnOnce() -> Result<FilamentStatus, FilamentStatus>) -> FilamentStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) | Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            FilamentStatus::Panic
        }
    }
}

fn fail(e: Error) -> FilamentStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> FilamentStatus {
    set_error(format!("{what} is null"));
    FilamentStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FilamentStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        FilamentStatus::InvalidArgument
    })
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], FilamentStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < needed {
        set_error(format!("{what} holds {len} values, {needed} needed"));
        return Err(FilamentStatus::BufferTooSmall);
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

/// Copies the message of the last failed call on this thread into `buf`
/// (NUL-terminated, truncated to `cap`) and returns its full length plus one.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn filament_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Picard solve of the profile on a uniform grid of `m` nodes on [0, x_max].
/// `omega` is ignored in pair mode.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_solve(
    mode: FilamentProfileMode,
    alpha: f64,
    omega: f64,
    x_max: f64,
    m: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut FilamentProfile,
) -> FilamentStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match mode {
            FilamentProfileMode::Pair => ProfileMode::Pair,
            FilamentProfileMode::Polygonal => ProfileMode::Polygonal { omega },
        };
        let params = ModelParams { alpha, omega, ..ModelParams::default() };
        let grid = RadialGrid::uniform(x_max, m).map_err(fail)?;
        let sol = solve_profile(&params, mode, grid, tol, max_iter).map_err(fail)?;
        *out = Box::into_raw(Box::new(FilamentProfile(sol)));
        Ok(FilamentStatus::Ok)
    })
}

/// Reads a profile.json.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_load(path: *const c_char, out: *mut *mut FilamentProfile) -> FilamentStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sol = ProfileSolution::read_json(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(FilamentProfile(sol)));
        Ok(FilamentStatus::Ok)
    })
}

/// # Safety
/// `profile` must come from this library; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_save(profile: *const FilamentProfile, path: *const c_char) -> FilamentStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        let path = str_arg(path, "path")?;
        p.0.write_json(Path::new(path)).map_err(fail)?;
        Ok(FilamentStatus::Ok)
    })
}

/// # Safety
/// `profile` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_free(profile: *mut FilamentProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// # Safety
/// `profile` from this library; `info` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_info(
    profile: *const FilamentProfile,
    info: *mut FilamentProfileInfo,
) -> FilamentStatus {
    guard(|| {
        let p = &profile.as_ref().ok_or_else(|| null("profile"))?.0;
        let info = info.as_mut().ok_or_else(|| null("info"))?;
        *info = FilamentProfileInfo {
            alpha: p.alpha,
            nodes: p.grid.len(),
            iterations: p.iterations,
            final_update: p.final_update,
            tail_bound: p.tail_bound,
            max_ratio: p.max_ratio(),
        };
        Ok(FilamentStatus::Ok)
    })
}

/// Copies the nodes x_j and u(x_j) into three arrays of `len` ≥ node count.
///
/// # Safety
/// Each pointer must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_samples(
    profile: *const FilamentProfile,
    x: *mut f64,
    u_re: *mut f64,
    u_im: *mut f64,
    len: usize,
) -> FilamentStatus {
    guard(|| {
        let p = &profile.as_ref().ok_or_else(|| null("profile"))?.0;
        let n = p.grid.len();
        let x = out_slice(x, len, n, "x")?;
        let re = out_slice(u_re, len, n, "u_re")?;
        let im = out_slice(u_im, len, n, "u_im")?;
        for (j, (&xj, uj)) in p.grid.nodes().iter().zip(&p.u).enumerate() {
            x[j] = xj;
            re[j] = uj.re;
            im[j] = uj.im;
        }
        Ok(FilamentStatus::Ok)
    })
}

/// u at |x| (even extension), interpolated between nodes.
///
/// # Safety
/// `re`, `im` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_eval(
    profile: *const FilamentProfile,
    x: f64,
    re: *mut f64,
    im: *mut f64,
) -> FilamentStatus {
    guard(|| {
        let p = &profile.as_ref().ok_or_else(|| null("profile"))?.0;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        if !x.is_finite() {
            set_error(format!("x must be finite, got {x}"));
            return Err(FilamentStatus::InvalidArgument);
        }
        let u = p.eval(x.abs()).u;
        *re = u.re;
        *im = u.im;
        Ok(FilamentStatus::Ok)
    })
}

/// H(t, σ) = √t u(σ/√t) for t > 0.
///
/// # Safety
/// `re`, `im` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_profile_eval_h(
    profile: *const FilamentProfile,
    t: f64,
    sigma: f64,
    re: *mut f64,
    im: *mut f64,
) -> FilamentStatus {
    guard(|| {
        let p = &profile.as_ref().ok_or_else(|| null("profile"))?.0;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let h = p.eval_h(t, sigma).map_err(fail)?.h;
        *re = h.re;
        *im = h.im;
        Ok(FilamentStatus::Ok)
    })
}

/// RK4 integration of a unit-circulation polygon of radius `rho` (with a
/// central vortex of circulation `gamma0` when `with_center` is nonzero),
/// or of the anti-parallel pair at distance `rho` when `n` is 0.
///
/// # Safety
/// `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_pv_integrate(
    n: usize,
    rho: f64,
    with_center: i32,
    gamma0: f64,
    t_final: f64,
    dt: f64,
    out: *mut *mut FilamentPvTrajectory,
) -> FilamentStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s0 = if n == 0 {
            PointVortexState::antiparallel_pair(rho)
        } else {
            PointVortexState::polygon(n, rho, (with_center != 0).then_some(gamma0))
        }
        .map_err(fail)?;
        let traj = integrate_pv(&s0, t_final, dt).map_err(fail)?;
        *out = Box::into_raw(Box::new(FilamentPvTrajectory(traj)));
        Ok(FilamentStatus::Ok)
    })
}

/// # Safety
/// `traj` from this library; `frames`, `vortices` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn filament_pv_shape(
    traj: *const FilamentPvTrajectory,
    frames: *mut usize,
    vortices: *mut usize,
) -> FilamentStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        if frames.is_null() || vortices.is_null() {
            return Err(null("output"));
        }
        *frames = t.len();
        *vortices = t.first().map_or(0, |s| s.len());
        Ok(FilamentStatus::Ok)
    })
}

/// Time and positions of frame `k`.
///
/// # Safety
/// `t` valid for one write; `re`, `im` for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn filament_pv_frame(
    traj: *const FilamentPvTrajectory,
    k: usize,
    t: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FilamentStatus {
    guard(|| {
        let frames = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        let s = frames.get(k).ok_or_else(|| {
            set_error(format!("frame {k} out of range ({} frames)", frames.len()));
            FilamentStatus::InvalidArgument
        })?;
        if t.is_null() {
            return Err(null("t"));
        }
        let re = out_slice(re, len, s.len(), "re")?;
        let im = out_slice(im, len, s.len(), "im")?;
        for (j, z) in s.z.iter().enumerate() {
            re[j] = z.re;
            im[j] = z.im;
        }
        *t = s.t;
        Ok(FilamentStatus::Ok)
    })
}

/// # Safety
/// `traj` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn filament_pv_free(traj: *mut FilamentPvTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Runs a pipeline stage ("profile", "pv", "simulate", "fixedpoint" or
/// "verify") on a JSON run configuration, writing into its output_dir.
/// Returns `CheckFailed` when verification finds explicit failures or a
/// simulation aborts.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn filament_run(command: *const c_char, config_json: *const c_char) -> FilamentStatus {
    guard(|| {
        let command = str_arg(command, "command")?;
        let json = str_arg(config_json, "config_json")?;
        if !matches!(command, "profile" | "pv" | "simulate" | "fixedpoint" | "verify") {
            set_error(format!("unknown command {command:?}"));
            return Err(FilamentStatus::InvalidArgument);
        }
        let cfg: RunConfig = serde_json::from_str(json).map_err(|e| fail(e.into()))?;
        let _lock = commands::prepare_output(&cfg).map_err(fail)?;
        let ok = match command {
            "profile" => commands::run_profile(&cfg).map(|_| true),
            "pv" => commands::run_pv(&cfg).map(|_| true),
            "simulate" => commands::run_simulate(&cfg).map(|s| {
                if let Some(a) = &s.abort {
                    set_error(a.reason.clone());
                }
                s.completed
            }),
            "fixedpoint" => commands::run_fixedpoint(&cfg).map(|_| true),
            "verify" => commands::run_verify(&cfg).map(|c| {
                let n = explicit_failures(&c);
                if n > 0 {
                    set_error(format!("{n} explicit-constant failures"));
                }
                n == 0
            }),
            _ => unreachable!("command checked above"),
        }
        .map_err(fail)?;
        Ok(if ok { FilamentStatus::Ok } else { FilamentStatus::CheckFailed })
    })
}
