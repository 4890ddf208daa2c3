//! C ABI over the `databc` verifier.
//!
//! Conventions:
//!
//! - Every fallible function returns a [`DatabcStatus`] and writes its
//!   result through an out-pointer. On failure the out-pointer is left
//!   untouched and [`databc_last_error`] describes the problem.
//! - Objects are opaque handles created by `*_new`/`*_parse`/`databc_verify`
//!   and released by the matching `*_free`. Freeing null is a no-op.
//! - Strings returned to the caller are owned by the caller and released
//!   with [`databc_string_free`].
//! - Panics never cross the boundary; they surface as
//!   `DATABC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use databc::bounds::{self, SampleComplexityInputs};
use databc::cli::RunConfig;
use databc::verify::{self, VerificationReport};
use databc::{BarrierCertificate, Error, MonomialBasis};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatabcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Config = 4,
    Dataset = 5,
    Plugin = 6,
    Io = 7,
    Numeric = 8,
    /// The requested value does not exist (e.g. no optimum was found).
    NotAvailable = 9,
    Panic = 10,
}

/// Verdict of a report, numerically equal to the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatabcVerdict {
    Certified = 0,
    Failed = 1,
    Inconclusive = 2,
}

pub struct DatabcCertificate(BarrierCertificate);

pub struct DatabcConfig(RunConfig);

pub struct DatabcReport(VerificationReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: DatabcStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::InvalidInput(_) => DatabcStatus::InvalidInput,
            Error::Config { .. } => DatabcStatus::Config,
            Error::Dataset(_) | Error::LpFormat { .. } | Error::Json(_) => DatabcStatus::Dataset,
            Error::Plugin(_) => DatabcStatus::Plugin,
            Error::Io(_) => DatabcStatus::Io,
            Error::Unbounded(_) => DatabcStatus::Numeric,
        };
        Failure { status, message: e.to_string() }
    }
}

fn fail(status: DatabcStatus, message: impl Into<String>) -> Failure {
    Failure { status, message: message.into() }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', "?")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DatabcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DatabcStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            DatabcStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(DatabcStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(DatabcStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DatabcStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DatabcStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DatabcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(DatabcStatus::InvalidInput, "string contains a nul byte"))
}

/// Message for the last failed call on this thread, or null after a
/// successful one. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn databc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn databc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library.
#[no_mangle]
pub unsafe extern "C" fn databc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Least `N` whose binomial tail with `summation_limit` terms is at most
/// `beta`.
///
/// # Safety
/// `out_n` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_minimal_scenario_count(
    epsilon_bar: f64,
    beta: f64,
    summation_limit: u64,
    out_n: *mut u64,
) -> DatabcStatus {
    guard(|| {
        let out_n = out(out_n, "out_n")?;
        *out_n = bounds::minimal_scenario_count(&SampleComplexityInputs { epsilon_bar, beta, summation_limit })?;
        Ok(())
    })
}

/// Successors per sample for the empirical-mean bound.
///
/// # Safety
/// `out_n_hat` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_empirical_count(
    variance_bound: f64,
    delta: f64,
    beta_s: f64,
    out_n_hat: *mut u64,
) -> DatabcStatus {
    guard(|| {
        let out_n_hat = out(out_n_hat, "out_n_hat")?;
        *out_n_hat = bounds::empirical_count(variance_bound, delta, beta_s)?;
        Ok(())
    })
}

/// Lipschitz bound of a quadratic barrier over a box of half-width scale `m`.
///
/// # Safety
/// `out_value` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_lipschitz_quadratic(
    m: f64,
    lambda_max: f64,
    l: f64,
    l_hat: f64,
    out_value: *mut f64,
) -> DatabcStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        let v = bounds::lipschitz_quadratic(m, lambda_max, l, l_hat);
        if !v.is_finite() || v <= 0.0 {
            return Err(fail(DatabcStatus::InvalidInput, format!("lipschitz bound {v} is not positive")));
        }
        *out_value = v;
        Ok(())
    })
}

/// Safety probability lower bound `1 - (1 + c T) / lambda`, clamped at 0.
///
/// # Safety
/// `out_value` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_theorem1_bound(
    lambda: f64,
    c: f64,
    horizon: u32,
    out_value: *mut f64,
) -> DatabcStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        *out_value = verify::theorem1_bound_raw(lambda, c, horizon)?;
        Ok(())
    })
}

/// Builds a certificate over the `dimension`-variate monomial basis of
/// total degree `degree` (graded, highest degree first).
///
/// # Safety
/// `coefficients` must point to `len` readable values; `out_cert` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_certificate_new(
    dimension: usize,
    degree: u32,
    coefficients: *const f64,
    len: usize,
    lambda: f64,
    c: f64,
    kappa: f64,
    out_cert: *mut *mut DatabcCertificate,
) -> DatabcStatus {
    guard(|| {
        let out_cert = out(out_cert, "out_cert")?;
        let coeffs = slice(coefficients, len, "coefficients")?;
        let basis = MonomialBasis::new(dimension, degree)?;
        let cert = BarrierCertificate::new(basis, coeffs.to_vec(), lambda, c, kappa)?;
        *out_cert = Box::into_raw(Box::new(DatabcCertificate(cert)));
        Ok(())
    })
}

/// Parses a certificate from its JSON form (as in `certificate.json`).
///
/// # Safety
/// `json` must be a nul-terminated string; `out_cert` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn databc_certificate_from_json(
    json: *const c_char,
    out_cert: *mut *mut DatabcCertificate,
) -> DatabcStatus {
    guard(|| {
        let out_cert = out(out_cert, "out_cert")?;
        let cert: BarrierCertificate = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        *out_cert = Box::into_raw(Box::new(DatabcCertificate(cert)));
        Ok(())
    })
}

/// `B(x)` for a state of `len` components.
///
/// # Safety
/// `cert` must be a live handle, `x` must point to `len` readable values
/// and `out_value` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_certificate_evaluate(
    cert: *const DatabcCertificate,
    x: *const f64,
    len: usize,
    out_value: *mut f64,
) -> DatabcStatus {
    guard(|| {
        let cert = handle(cert, "cert")?;
        let out_value = out(out_value, "out_value")?;
        *out_value = cert.0.evaluate(slice(x, len, "x")?)?;
        Ok(())
    })
}

/// Reads `lambda` and `c` of a certificate.
///
/// # Safety
/// `cert` must be a live handle; the out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_certificate_parameters(
    cert: *const DatabcCertificate,
    out_lambda: *mut f64,
    out_c: *mut f64,
) -> DatabcStatus {
    guard(|| {
        let cert = handle(cert, "cert")?;
        *out(out_lambda, "out_lambda")? = cert.0.lambda();
        *out(out_c, "out_c")? = cert.0.c();
        Ok(())
    })
}

/// Copies up to `capacity` coefficients into `buffer` and stores the total
/// count in `out_len`. Pass a null buffer to query the count.
///
/// # Safety
/// `cert` must be a live handle; `buffer` must be null or have room for
/// `capacity` values; `out_len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_certificate_coefficients(
    cert: *const DatabcCertificate,
    buffer: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> DatabcStatus {
    guard(|| {
        let cert = handle(cert, "cert")?;
        let out_len = out(out_len, "out_len")?;
        let coeffs = cert.0.coefficients();
        if !buffer.is_null() {
            let k = capacity.min(coeffs.len());
            ptr::copy_nonoverlapping(coeffs.as_ptr(), buffer, k);
        }
        *out_len = coeffs.len();
        Ok(())
    })
}

/// # Safety
/// `cert` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn databc_certificate_free(cert: *mut DatabcCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Parses a `key = value` run configuration.
///
/// # Safety
/// `text_in` must be a nul-terminated string; `out_config` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn databc_config_parse(
    text_in: *const c_char,
    out_config: *mut *mut DatabcConfig,
) -> DatabcStatus {
    guard(|| {
        let out_config = out(out_config, "out_config")?;
        let cfg = RunConfig::parse(text(text_in, "text")?)?;
        *out_config = Box::into_raw(Box::new(DatabcConfig(cfg)));
        Ok(())
    })
}

/// Reads and parses a configuration file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out_config` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn databc_config_from_file(
    path: *const c_char,
    out_config: *mut *mut DatabcConfig,
) -> DatabcStatus {
    guard(|| {
        let out_config = out(out_config, "out_config")?;
        let cfg = RunConfig::from_file(Path::new(text(path, "path")?))?;
        *out_config = Box::into_raw(Box::new(DatabcConfig(cfg)));
        Ok(())
    })
}

/// Replaces the run seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn databc_config_set_seed(config: *mut DatabcConfig, seed: u64) -> DatabcStatus {
    guard(|| {
        out(config, "config")?.0.seed = seed;
        Ok(())
    })
}

/// Overrides the sample counts; zero keeps the required value. Any
/// override marks reports as an unsound experiment.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn databc_config_set_unsound_counts(
    config: *mut DatabcConfig,
    n: u64,
    n_hat: u64,
) -> DatabcStatus {
    guard(|| {
        let cfg = &mut out(config, "config")?.0;
        cfg.unsound_n = (n > 0).then_some(n);
        cfg.unsound_n_hat = (n_hat > 0).then_some(n_hat);
        Ok(())
    })
}

/// Required state samples `N` and successors `N̂` for the configuration.
///
/// # Safety
/// `config` must be a live handle; the out-pointers must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn databc_config_required_counts(
    config: *const DatabcConfig,
    out_n: *mut u64,
    out_n_hat: *mut u64,
) -> DatabcStatus {
    guard(|| {
        let cfg = &handle(config, "config")?.0;
        let out_n = out(out_n, "out_n")?;
        let out_n_hat = out(out_n_hat, "out_n_hat")?;
        let (_, n, n_hat) = verify::required_counts(&cfg.problem, cfg.basis()?.len(), cfg.summation_limit)?;
        *out_n = n;
        *out_n_hat = n_hat;
        Ok(())
    })
}

/// Hex SHA-256 digest binding datasets and reports to this configuration.
///
/// # Safety
/// `config` must be a live handle; `out_digest` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_config_digest(
    config: *const DatabcConfig,
    out_digest: *mut *mut c_char,
) -> DatabcStatus {
    guard(|| {
        let cfg = &handle(config, "config")?.0;
        let out_digest = out(out_digest, "out_digest")?;
        *out_digest = into_c_string(cfg.digest_hex())?;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn databc_config_free(config: *mut DatabcConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Samples, assembles and solves in memory. A report is produced even
/// when a stage fails; its verdict is then `DATABC_VERDICT_FAILED`.
///
/// # Safety
/// `config` must be a live handle; `out_report` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_verify(
    config: *const DatabcConfig,
    out_report: *mut *mut DatabcReport,
) -> DatabcStatus {
    guard(|| {
        let cfg = &handle(config, "config")?.0;
        let out_report = out(out_report, "out_report")?;
        let sys = cfg.system.build()?;
        let report = verify::run_verification(&cfg.problem, &*sys, &cfg.basis()?, cfg.seed, &cfg.verify_options())?;
        *out_report = Box::into_raw(Box::new(DatabcReport(report)));
        Ok(())
    })
}

/// Parses a `report.json` document.
///
/// # Safety
/// `json` must be a nul-terminated string; `out_report` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn databc_report_from_json(
    json: *const c_char,
    out_report: *mut *mut DatabcReport,
) -> DatabcStatus {
    guard(|| {
        let out_report = out(out_report, "out_report")?;
        let report = VerificationReport::from_json(text(json, "json")?)?;
        *out_report = Box::into_raw(Box::new(DatabcReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out_verdict` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_report_verdict(
    report: *const DatabcReport,
    out_verdict: *mut DatabcVerdict,
) -> DatabcStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        *out(out_verdict, "out_verdict")? = if r.failure.is_some() {
            DatabcVerdict::Failed
        } else if r.is_certified() {
            DatabcVerdict::Certified
        } else {
            DatabcVerdict::Inconclusive
        };
        Ok(())
    })
}

/// Optimal value `K*`; `DATABC_STATUS_NOT_AVAILABLE` when the program had
/// no optimum.
///
/// # Safety
/// `report` must be a live handle; `out_kappa` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_report_kappa_star(
    report: *const DatabcReport,
    out_kappa: *mut f64,
) -> DatabcStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let out_kappa = out(out_kappa, "out_kappa")?;
        *out_kappa = r
            .verdict
            .kappa_star
            .ok_or_else(|| fail(DatabcStatus::NotAvailable, "the scenario program has no optimum"))?;
        Ok(())
    })
}

/// Probability lower bound and confidence of the verdict.
///
/// # Safety
/// `report` must be a live handle; the out-pointers must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn databc_report_guarantee(
    report: *const DatabcReport,
    out_probability: *mut f64,
    out_confidence: *mut f64,
) -> DatabcStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        *out(out_probability, "out_probability")? = r.verdict.probability_lower_bound;
        *out(out_confidence, "out_confidence")? = r.verdict.confidence;
        Ok(())
    })
}

/// Copy of the certificate found by the solver.
///
/// # Safety
/// `report` must be a live handle; `out_cert` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_report_certificate(
    report: *const DatabcReport,
    out_cert: *mut *mut DatabcCertificate,
) -> DatabcStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let out_cert = out(out_cert, "out_cert")?;
        let cert = r
            .certificate
            .clone()
            .ok_or_else(|| fail(DatabcStatus::NotAvailable, "the report holds no certificate"))?;
        *out_cert = Box::into_raw(Box::new(DatabcCertificate(cert)));
        Ok(())
    })
}

/// Serializes the report exactly as `report.json`. Free the result with
/// [`databc_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out_json` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn databc_report_to_json(
    report: *const DatabcReport,
    out_json: *mut *mut c_char,
) -> DatabcStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let out_json = out(out_json, "out_json")?;
        *out_json = into_c_string(r.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn databc_report_free(report: *mut DatabcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
