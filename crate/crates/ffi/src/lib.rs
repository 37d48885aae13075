//! C ABI over the crane simulator.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns a
//! [`CraneStatus`]; on failure [`crane_last_error`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use crane_sim::cli::{emit_trace_csv, run_cell, Cell};
use crane_sim::config::ExperimentConfig;
use crane_sim::simkit::{EpisodeResult, TRACE_COLUMNS};
use crane_sim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CraneStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidArgument = 4,
    NumericalBlowup = 5,
    Io = 6,
    Panic = 7,
}

/// Episode metrics. `response_time` is meaningful only when `settled` is true.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CraneMetrics {
    pub mse: f64,
    pub max_error: f64,
    pub response_time: f64,
    pub settled: bool,
    pub chattering_energy: f64,
    pub control_effort: f64,
}

/// Parsed experiment configuration.
pub struct CraneConfig {
    inner: ExperimentConfig,
}

/// Result of one closed-loop run.
pub struct CraneEpisode {
    inner: EpisodeResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

type Failure = (CraneStatus, String);

fn status_of(e: &Error) -> CraneStatus {
    match e {
        Error::NumericalBlowup { .. } => CraneStatus::NumericalBlowup,
        Error::Io { .. } | Error::Csv { .. } => CraneStatus::Io,
        Error::Config(_) => CraneStatus::Config,
        _ => CraneStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CraneStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CraneStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CraneStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((CraneStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CraneStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

fn null(name: &str) -> Failure {
    (CraneStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn crane_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn crane_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// The shipped default profile.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn crane_config_default(out: *mut *mut CraneConfig) -> CraneStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ExperimentConfig::parse(crane_sim::config::DEFAULT_PROFILE).map_err(fail)?;
        store(out, CraneConfig { inner });
        Ok(())
    })
}

/// Parses a configuration from TOML text.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crane_config_parse(
    text: *const c_char,
    out: *mut *mut CraneConfig,
) -> CraneStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ExperimentConfig::parse(text).map_err(fail)?;
        store(out, CraneConfig { inner });
        Ok(())
    })
}

/// Loads a configuration file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crane_config_load(
    path: *const c_char,
    out: *mut *mut CraneConfig,
) -> CraneStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ExperimentConfig::load(Path::new(path)).map_err(fail)?;
        store(out, CraneConfig { inner });
        Ok(())
    })
}

/// Normalized TOML text of a configuration; free it with [`crane_string_free`].
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crane_config_to_toml(
    config: *const CraneConfig,
    out: *mut *mut c_char,
) -> CraneStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CString::new(config.inner.to_toml()).expect("toml has no nul");
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn crane_config_free(config: *mut CraneConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn crane_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs one episode. `controller` is one of `hsmc`, `hsmc-sign`, `pid`,
/// `lqr`; `scenario` is a preset name such as `none`, `high` or `switch-low`.
///
/// # Safety
/// Pointers must be valid; strings nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn crane_run_episode(
    config: *const CraneConfig,
    controller: *const c_char,
    scenario: *const c_char,
    seed: u64,
    out: *mut *mut CraneEpisode,
) -> CraneStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let controller = str_arg(controller, "controller")?;
        let scenario = str_arg(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cell = Cell {
            controller: controller.to_string(),
            scenario: scenario.to_string(),
            seed,
        };
        let inner = run_cell(&config.inner, &cell).map_err(fail)?;
        store(out, CraneEpisode { inner });
        Ok(())
    })
}

/// # Safety
/// `episode` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn crane_episode_free(episode: *mut CraneEpisode) {
    if !episode.is_null() {
        drop(Box::from_raw(episode));
    }
}

/// Number of trace rows, or 0 for a null handle.
///
/// # Safety
/// `episode` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn crane_episode_len(episode: *const CraneEpisode) -> usize {
    episode.as_ref().map_or(0, |e| e.inner.trace.len())
}

/// # Safety
/// `episode` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn crane_episode_metrics(
    episode: *const CraneEpisode,
    out: *mut CraneMetrics,
) -> CraneStatus {
    guard(|| {
        let episode = episode.as_ref().ok_or_else(|| null("episode"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = &episode.inner.metrics;
        *out = CraneMetrics {
            mse: m.mse,
            max_error: m.max_error,
            response_time: m.response_time.unwrap_or(f64::NAN),
            settled: m.response_time.is_some(),
            chattering_energy: m.chattering_energy,
            control_effort: m.control_effort,
        };
        Ok(())
    })
}

/// Copies one trace column into `buf`. `written` receives the number of rows
/// copied; pass a null `buf` to query the row count. Fails if `cap` is smaller
/// than the row count.
///
/// # Safety
/// `buf` must hold `cap` doubles when non-null; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn crane_episode_column(
    episode: *const CraneEpisode,
    name: *const c_char,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> CraneStatus {
    guard(|| {
        let episode = episode.as_ref().ok_or_else(|| null("episode"))?;
        let name = str_arg(name, "name")?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        if !TRACE_COLUMNS.contains(&name) {
            return Err((
                CraneStatus::InvalidArgument,
                format!("unknown column `{name}`"),
            ));
        }
        let rows = &episode.inner.trace;
        if buf.is_null() {
            *written = rows.len();
            return Ok(());
        }
        if cap < rows.len() {
            return Err((
                CraneStatus::InvalidArgument,
                format!("buffer holds {cap} values, trace has {}", rows.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buf, rows.len());
        for (d, row) in dst.iter_mut().zip(rows) {
            *d = row.column(name).expect("known column");
        }
        *written = rows.len();
        Ok(())
    })
}

/// Writes the full trace as CSV.
///
/// # Safety
/// `episode` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn crane_episode_write_csv(
    episode: *const CraneEpisode,
    path: *const c_char,
) -> CraneStatus {
    guard(|| {
        let episode = episode.as_ref().ok_or_else(|| null("episode"))?;
        let path = str_arg(path, "path")?;
        emit_trace_csv(&episode.inner, Path::new(path), None).map_err(fail)
    })
}
