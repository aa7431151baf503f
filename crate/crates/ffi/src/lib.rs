//! C ABI over the `leojt` simulator.
//!
//! Scenario configs and drop reports cross the boundary as opaque handles
//! created by a constructor and released with the matching `*_free`. Every
//! fallible call returns a [`LeojtStatus`]; on failure a message is kept per
//! thread and can be read with [`leojt_last_error_message`]. Panics are caught
//! at the boundary and reported as [`LeojtStatus::Panic`].
//!
//! The header `include/leojt.h` is generated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use leojt::analysis::{optimal_cp_length, spectral_efficiency_bound, spectral_efficiency_bound_per_hz, AnalyticInputs};
use leojt::association::optimize_sync;
use leojt::experiment::drop_report;
use leojt::link_eval::{PowerTerms, ThroughputReport};
use leojt::ofdm::{ici_leakage, isi_leakage};
use leojt::{AssociationMode, ScenarioConfig, SimError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeojtStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is out of range (index, mode, FFT size, UTF-8).
    InvalidArgument = 2,
    InvalidConfig = 3,
    ConfigParse = 4,
    DimensionMismatch = 5,
    DegenerateLink = 6,
    InvisibleServing = 7,
    EmptyInput = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeojtAssociationMode {
    Single = 0,
    Full = 1,
    Proposed = 2,
}

fn association_mode(raw: i32) -> Result<AssociationMode, Failure> {
    match raw {
        x if x == LeojtAssociationMode::Single as i32 => Ok(AssociationMode::Single),
        x if x == LeojtAssociationMode::Full as i32 => Ok(AssociationMode::Full),
        x if x == LeojtAssociationMode::Proposed as i32 => Ok(AssociationMode::Proposed),
        other => Err(invalid(format!("unknown association mode {other}"))),
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeojtComplex {
    pub re: f64,
    pub im: f64,
}

/// Per-UT summary of a drop. Powers are summed over subcarriers (W).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeojtUtResult {
    /// bits/s
    pub rate: f64,
    /// bits/s/Hz
    pub spectral_efficiency: f64,
    /// Linear SINR averaged over subcarriers
    pub mean_sinr: f64,
    pub attach: usize,
    /// Nonzero when the UT saw no satellite and was left out
    pub excluded: bool,
    pub desired: f64,
    pub mui: f64,
    pub ici: f64,
    pub isi: f64,
    pub noise: f64,
}

/// Opaque scenario configuration.
pub struct LeojtConfig(ScenarioConfig);

/// Opaque evaluation of one association mode on one drop.
pub struct LeojtReport(ThroughputReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LeojtStatus, String);

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = match &e {
            SimError::InvalidConfig(_) => LeojtStatus::InvalidConfig,
            SimError::ConfigParse { .. } => LeojtStatus::ConfigParse,
            SimError::DimensionMismatch(_) => LeojtStatus::DimensionMismatch,
            SimError::DegenerateLink { .. } => LeojtStatus::DegenerateLink,
            SimError::InvisibleServing { .. } => LeojtStatus::InvisibleServing,
            SimError::EmptyInput(_) => LeojtStatus::EmptyInput,
            SimError::Io { .. } | SimError::Csv { .. } => LeojtStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(LeojtStatus::InvalidArgument, msg.into())
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn run(body: impl FnOnce() -> Result<(), Failure>) -> LeojtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LeojtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            LeojtStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(LeojtStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure(LeojtStatus::NullPointer, format!("{what} is null")));
    }
    p.write(value);
    Ok(())
}

/// Boxes `value` into `*out` only when `out` is non-null, so nothing leaks.
unsafe fn emit<T>(out: *mut *mut T, value: impl FnOnce() -> Result<T, Failure>, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(LeojtStatus::NullPointer, format!("{what} is null")));
    }
    out.write(Box::into_raw(Box::new(value()?)));
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(LeojtStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(LeojtStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn leojt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn leojt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in preset, `"paper"` or `"desk"`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_config_preset(name: *const c_char, out: *mut *mut LeojtConfig) -> LeojtStatus {
    run(|| {
        let name = text(name, "name")?;
        emit(out, || Ok(LeojtConfig(ScenarioConfig::preset(name)?)), "out")
    })
}

/// Parses scenario TOML (same format as the CLI config files).
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_config_from_toml(toml: *const c_char, out: *mut *mut LeojtConfig) -> LeojtStatus {
    run(|| {
        let toml = text(toml, "toml")?;
        emit(out, || Ok(LeojtConfig(ScenarioConfig::parse(toml, "<ffi>")?)), "out")
    })
}

/// Applies `key = value` overrides in place. On failure `config` is unchanged.
///
/// # Safety
/// `config` must come from a constructor in this library; `overrides` must be
/// a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn leojt_config_apply(config: *mut LeojtConfig, overrides: *const c_char) -> LeojtStatus {
    run(|| {
        let cfg = config
            .as_mut()
            .ok_or_else(|| Failure(LeojtStatus::NullPointer, "config is null".into()))?;
        cfg.0 = cfg.0.with_overrides(text(overrides, "overrides")?)?;
        Ok(())
    })
}

/// Serializes every key to TOML. Release the string with [`leojt_string_free`].
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_config_to_toml(config: *const LeojtConfig, out: *mut *mut c_char) -> LeojtStatus {
    run(|| {
        let cfg = deref(config, "config")?;
        if out.is_null() {
            return Err(Failure(LeojtStatus::NullPointer, "out is null".into()));
        }
        let s = CString::new(cfg.0.to_toml()).map_err(|_| invalid("config text contains NUL"))?;
        out.write(s.into_raw());
        Ok(())
    })
}

/// `(n_sats, n_uts, n_subcarriers)` of a config.
///
/// # Safety
/// `config` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_config_dimensions(
    config: *const LeojtConfig,
    n_sats: *mut usize,
    n_uts: *mut usize,
    n_subcarriers: *mut usize,
) -> LeojtStatus {
    run(|| {
        let c = &deref(config, "config")?.0;
        write(n_sats, c.n_sats, "n_sats")?;
        write(n_uts, c.n_uts, "n_uts")?;
        write(n_subcarriers, c.n_subcarriers, "n_subcarriers")
    })
}

/// # Safety
/// `config` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn leojt_config_free(config: *mut LeojtConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn leojt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Samples one drop from `seed` and evaluates `mode`, a
/// [`LeojtAssociationMode`] value, on it. Identical seeds give identical reports.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_drop_evaluate(
    config: *const LeojtConfig,
    mode: i32,
    seed: u64,
    out: *mut *mut LeojtReport,
) -> LeojtStatus {
    run(|| {
        let cfg = &deref(config, "config")?.0;
        let mode = association_mode(mode)?;
        emit(out, || Ok(LeojtReport(drop_report(cfg, mode, seed)?)), "out")
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_report_n_uts(report: *const LeojtReport, out: *mut usize) -> LeojtStatus {
    run(|| write(out, deref(report, "report")?.0.n_uts(), "out"))
}

/// Summary of UT `ut`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_report_ut(report: *const LeojtReport, ut: usize, out: *mut LeojtUtResult) -> LeojtStatus {
    run(|| {
        let r = &deref(report, "report")?.0;
        if ut >= r.n_uts() {
            return Err(invalid(format!("UT {ut} out of range for {} UTs", r.n_uts())));
        }
        let t = &r.terms;
        let n = t.n_subcarriers;
        let res = LeojtUtResult {
            rate: r.rate[ut],
            spectral_efficiency: r.spectral_efficiency[ut],
            mean_sinr: r.mean_sinr(ut),
            attach: r.attach[ut],
            excluded: r.excluded[ut],
            desired: PowerTerms::total(&t.desired, n, ut),
            mui: PowerTerms::total(&t.mui, n, ut),
            ici: PowerTerms::total(&t.ici, n, ut),
            isi: PowerTerms::total(&t.isi, n, ut),
            noise: PowerTerms::total(&t.noise, n, ut),
        };
        write(out, res, "out")
    })
}

/// Copies the per-subcarrier linear SINR of UT `ut` into `buf`, which must
/// hold exactly `n_subcarriers` values.
///
/// # Safety
/// `report` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn leojt_report_sinr(report: *const LeojtReport, ut: usize, buf: *mut f64, len: usize) -> LeojtStatus {
    run(|| {
        let r = &deref(report, "report")?.0;
        let n = r.terms.n_subcarriers;
        if ut >= r.n_uts() {
            return Err(invalid(format!("UT {ut} out of range for {} UTs", r.n_uts())));
        }
        if len != n {
            return Err(Failure(LeojtStatus::DimensionMismatch, format!("buffer holds {len} values, need {n}")));
        }
        if buf.is_null() {
            return Err(Failure(LeojtStatus::NullPointer, "buf is null".into()));
        }
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&r.sinr[ut * n..(ut + 1) * n]);
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn leojt_report_free(report: *mut LeojtReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

fn check_leakage_args(n: usize, n_prime: usize, excess: usize, fft: usize) -> Result<(), Failure> {
    if fft == 0 || n >= fft || n_prime >= fft || excess > fft {
        return Err(invalid(format!(
            "need n, n' < fft and excess <= fft (n={n}, n'={n_prime}, excess={excess}, fft={fft})"
        )));
    }
    Ok(())
}

/// Current-symbol leakage from subcarrier `n_prime` onto `n` for a link
/// offset by `delta` samples with `excess` samples past the guard.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_ici_leakage(
    n: usize,
    n_prime: usize,
    delta: usize,
    excess: usize,
    fft: usize,
    out: *mut LeojtComplex,
) -> LeojtStatus {
    run(|| {
        check_leakage_args(n, n_prime, excess, fft)?;
        let c = ici_leakage(n, n_prime, delta, excess, fft);
        write(out, LeojtComplex { re: c.re, im: c.im }, "out")
    })
}

/// Previous-symbol leakage, arguments as in [`leojt_ici_leakage`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_isi_leakage(
    n: usize,
    n_prime: usize,
    delta: usize,
    excess: usize,
    fft: usize,
    out: *mut LeojtComplex,
) -> LeojtStatus {
    run(|| {
        check_leakage_args(n, n_prime, excess, fft)?;
        let c = isi_leakage(n, n_prime, delta, excess, fft);
        write(out, LeojtComplex { re: c.re, im: c.im }, "out")
    })
}

fn analytic_inputs(config: &ScenarioConfig, include_cp: bool) -> Result<AnalyticInputs, Failure> {
    let mut inputs = AnalyticInputs::from_config(config);
    if include_cp {
        inputs.cp_len = config.cp_len;
    }
    inputs.validate()?;
    Ok(inputs)
}

/// Closed-form spectral-efficiency bound at `cp_add`: the per-UT sum over
/// subcarriers and the same divided by the FFT size (bits/s/Hz).
///
/// # Safety
/// `config` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_bound(
    config: *const LeojtConfig,
    cp_add: usize,
    include_cp: bool,
    bound: *mut f64,
    bound_per_hz: *mut f64,
) -> LeojtStatus {
    run(|| {
        let inputs = analytic_inputs(&deref(config, "config")?.0, include_cp)?.with_cp_add(cp_add);
        write(bound, spectral_efficiency_bound(&inputs), "bound")?;
        write(bound_per_hz, spectral_efficiency_bound_per_hz(&inputs), "bound_per_hz")
    })
}

/// Grid value of `cp_add` maximizing the bound, ties to the smaller value.
///
/// # Safety
/// `config` must be a live handle; `grid` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn leojt_optimal_cp(
    config: *const LeojtConfig,
    grid: *const usize,
    len: usize,
    include_cp: bool,
    out: *mut usize,
) -> LeojtStatus {
    run(|| {
        let inputs = analytic_inputs(&deref(config, "config")?.0, include_cp)?;
        let best = optimal_cp_length(&inputs, slice(grid, len, "grid")?)?;
        write(out, best, "out")
    })
}

/// Sync point in `[0, search_len)` that maximizes the number of visible
/// satellites whose offset falls inside `window`, and that number.
///
/// # Safety
/// `delays` and `visible` must each point to `len` values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn leojt_optimize_sync(
    delays: *const i64,
    visible: *const bool,
    len: usize,
    symbol_len: usize,
    window: usize,
    search_len: usize,
    sync: *mut usize,
    count: *mut usize,
) -> LeojtStatus {
    run(|| {
        if symbol_len == 0 || search_len == 0 {
            return Err(invalid("need symbol_len > 0 and search_len > 0"));
        }
        let d = slice(delays, len, "delays")?;
        let v = slice(visible, len, "visible")?;
        let (s, c) = optimize_sync(d, v, symbol_len, window, search_len);
        write(sync, s, "sync")?;
        write(count, c, "count")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_sets_message() {
        let mut cfg: *mut LeojtConfig = ptr::null_mut();
        let st = unsafe { leojt_config_preset(c"nope".as_ptr(), &mut cfg) };
        assert_eq!(st, LeojtStatus::InvalidConfig);
        assert!(cfg.is_null());
        let msg = unsafe { CStr::from_ptr(leojt_last_error_message()) }.to_str().unwrap();
        assert!(msg.contains("nope"), "{msg}");
    }

    #[test]
    fn panics_are_contained() {
        assert_eq!(run(|| panic!("boom")), LeojtStatus::Panic);
        let msg = unsafe { CStr::from_ptr(leojt_last_error_message()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }
}
