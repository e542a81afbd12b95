//! C interface to `nevrand`.
//!
//! Objects cross the boundary as opaque pointers created by `nr_*_new` style
//! constructors and released with the matching `nr_*_free`. Every fallible
//! call returns an [`NrStatus`]; on failure the message is kept per thread
//! and can be copied out with [`nr_last_error_message`]. Results go through
//! out-pointers, which are left untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nevrand::experiments::{self, Artifacts};
use nevrand::functionals;
use nevrand::quadrature::QuadratureSpec;
use nevrand::random::{sample_function, RandomModel, TruncatedSample};
use nevrand::series::{self, CoefficientSequence, TruncationPolicy};
use nevrand::{Error, ExperimentConfig, RecordFormat};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrStatus {
    Ok = 0,
    InvalidInput = 1,
    Config = 2,
    StatisticalFloor = 3,
    TruncationFailure = 4,
    QuadratureDivergence = 5,
    RootFindingFailure = 6,
    CircleRootProximity = 7,
    Io = 8,
    NullPointer = 9,
    Panic = 10,
}

impl From<&Error> for NrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => NrStatus::InvalidInput,
            Error::Config(_) => NrStatus::Config,
            Error::StatisticalFloor { .. } => NrStatus::StatisticalFloor,
            Error::TruncationFailure { .. } => NrStatus::TruncationFailure,
            Error::QuadratureDivergence { .. } => NrStatus::QuadratureDivergence,
            Error::RootFindingFailure { .. } => NrStatus::RootFindingFailure,
            Error::CircleRootProximity { .. } => NrStatus::CircleRootProximity,
            Error::Io(_) => NrStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrModel {
    Gaussian = 0,
    Rademacher = 1,
    Steinhaus = 2,
}

impl From<NrModel> for RandomModel {
    fn from(m: NrModel) -> Self {
        match m {
            NrModel::Gaussian => RandomModel::Gaussian,
            NrModel::Rademacher => RandomModel::Rademacher,
            NrModel::Steinhaus => RandomModel::Steinhaus,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrFormat {
    Csv = 0,
    Jsonl = 1,
}

/// Base coefficient sequence.
pub struct NrSequence(CoefficientSequence);

/// One truncated random (or deterministic) sample.
pub struct NrSample(TruncatedSample);

/// A validated experiment configuration.
pub struct NrConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: NrStatus, msg: impl Into<String>) -> NrStatus {
    set_last_error(msg.into());
    status
}

/// Runs `body`, translating errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), NrStatus>) -> NrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NrStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(NrStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: nevrand::Result<T>) -> Result<T, NrStatus> {
    r.map_err(|e| fail(NrStatus::from(&e), e.to_string()))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, NrStatus> {
    p.as_ref().ok_or_else(|| fail(NrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), NrStatus> {
    if out.is_null() {
        return Err(fail(NrStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, NrStatus> {
    if s.is_null() {
        return Err(fail(NrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(NrStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn complex_slice(re: *const f64, im: *const f64, len: usize) -> Result<Vec<Complex64>, NrStatus> {
    if len == 0 {
        return Err(fail(NrStatus::InvalidInput, "coefficient list is empty"));
    }
    if re.is_null() {
        return Err(fail(NrStatus::NullPointer, "real parts are null"));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() { vec![0.0; len] } else { std::slice::from_raw_parts(im, len).to_vec() };
    Ok(re.iter().zip(im).map(|(&a, b)| Complex64::new(a, b)).collect())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Version string of the library, `0.1.0-<git describe>`. Static storage.
#[no_mangle]
pub extern "C" fn nr_version() -> *const c_char {
    static VERSION: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    VERSION.get_or_init(|| CString::new(nevrand::VERSION).expect("version has no nul")).as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL;
/// 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn nr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Parses a base description such as `exponential`,
/// `geometric-factorial:1,2`, `mittag-leffler:0.5`, `explicit-list:0,1` or
/// `star:exponential`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_sequence_parse(spec: *const c_char, out: *mut *mut NrSequence) -> NrStatus {
    guard(|| {
        let seq = lift(nevrand::cli::parse_base(string(spec, "spec")?))?;
        put(out, boxed(NrSequence(seq)))
    })
}

/// # Safety
/// `re` (and `im` unless null) must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_sequence_explicit(re: *const f64, im: *const f64, len: usize, out: *mut *mut NrSequence) -> NrStatus {
    guard(|| {
        let seq = CoefficientSequence::explicit(complex_slice(re, im, len)?);
        lift(seq.validate())?;
        put(out, boxed(NrSequence(seq)))
    })
}

/// The sequence `j·a_j` of `z f'(z)`.
///
/// # Safety
/// `seq` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_sequence_star(seq: *const NrSequence, out: *mut *mut NrSequence) -> NrStatus {
    guard(|| {
        let seq = get(seq, "sequence")?;
        put(out, boxed(NrSequence(series::star_transform(&seq.0))))
    })
}

/// # Safety
/// `seq` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nr_sequence_free(seq: *mut NrSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// `log σ(r, f)` under the default truncation policy.
///
/// # Safety
/// `seq` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_log_sigma(seq: *const NrSequence, r: f64, out: *mut f64) -> NrStatus {
    guard(|| put(out, lift(series::log_sigma(&get(seq, "sequence")?.0, r, &TruncationPolicy::default()))?))
}

/// `r d/dr log σ(r, f)`.
///
/// # Safety
/// As [`nr_log_sigma`].
#[no_mangle]
pub unsafe extern "C" fn nr_log_sigma_derivative(seq: *const NrSequence, r: f64, out: *mut f64) -> NrStatus {
    guard(|| put(out, lift(series::log_sigma_derivative(&get(seq, "sequence")?.0, r, &TruncationPolicy::default()))?))
}

/// # Safety
/// As [`nr_log_sigma`].
#[no_mangle]
pub unsafe extern "C" fn nr_truncation_degree(seq: *const NrSequence, r: f64, out: *mut usize) -> NrStatus {
    guard(|| put(out, lift(series::truncation_degree(&get(seq, "sequence")?.0, r, &TruncationPolicy::default()))?))
}

/// `log M(r, f)` of the base.
///
/// # Safety
/// As [`nr_log_sigma`].
#[no_mangle]
pub unsafe extern "C" fn nr_log_max_modulus(seq: *const NrSequence, r: f64, out: *mut f64) -> NrStatus {
    guard(|| {
        let seq = &get(seq, "sequence")?.0;
        let degree = lift(series::pointwise_truncation_degree(seq, r, &TruncationPolicy::default()))?;
        put(out, lift(series::log_max_modulus(&seq.truncate(degree), r))?)
    })
}

/// Sample `χ_j a_j`, `j = 0..=degree`, from the stream of `(seed, trial)`.
///
/// # Safety
/// `seq` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_sample_new(seq: *const NrSequence, model: NrModel, degree: usize, seed: u64, trial: u64, out: *mut *mut NrSample) -> NrStatus {
    guard(|| {
        let seq = get(seq, "sequence")?;
        put(out, boxed(NrSample(sample_function(&seq.0, model.into(), degree, seed, trial))))
    })
}

/// A fixed polynomial with the given coefficients.
///
/// # Safety
/// As [`nr_sequence_explicit`].
#[no_mangle]
pub unsafe extern "C" fn nr_sample_from_coefficients(re: *const f64, im: *const f64, len: usize, out: *mut *mut NrSample) -> NrStatus {
    guard(|| put(out, boxed(NrSample(TruncatedSample::from_coefficients(complex_slice(re, im, len)?)))))
}

/// # Safety
/// `sample` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nr_sample_free(sample: *mut NrSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Degree `N` of the sample; 0 for a null handle.
///
/// # Safety
/// `sample` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nr_sample_degree(sample: *const NrSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.degree)
}

/// Copies up to `len` coefficients into `re` and `im`.
///
/// # Safety
/// `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nr_sample_coefficients(sample: *const NrSample, re: *mut f64, im: *mut f64, len: usize) -> NrStatus {
    guard(|| {
        let s = get(sample, "sample")?;
        if re.is_null() || im.is_null() {
            return Err(fail(NrStatus::NullPointer, "output arrays are null"));
        }
        for (j, c) in s.0.coefficients.iter().take(len).enumerate() {
            *re.add(j) = c.re;
            *im.add(j) = c.im;
        }
        Ok(())
    })
}

/// `n(r, a)` by the argument principle.
///
/// # Safety
/// `sample` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_count_zeros(sample: *const NrSample, r: f64, a_re: f64, a_im: f64, out: *mut usize) -> NrStatus {
    guard(|| {
        let s = &get(sample, "sample")?.0;
        put(out, lift(functionals::count_zeros_argument(s, r, Complex64::new(a_re, a_im), &QuadratureSpec::default()))?)
    })
}

/// `N(r, a)` from the located roots.
///
/// # Safety
/// As [`nr_count_zeros`].
#[no_mangle]
pub unsafe extern "C" fn nr_counting_n(sample: *const NrSample, r: f64, a_re: f64, a_im: f64, out: *mut f64) -> NrStatus {
    guard(|| {
        let s = &get(sample, "sample")?.0;
        let zeros = lift(functionals::find_zeros(s, Complex64::new(a_re, a_im), r))?;
        put(out, lift(functionals::counting_n(&zeros, r))?)
    })
}

/// `T(r)` of the sample.
///
/// # Safety
/// As [`nr_count_zeros`].
#[no_mangle]
pub unsafe extern "C" fn nr_characteristic_t(sample: *const NrSample, r: f64, out: *mut f64) -> NrStatus {
    guard(|| put(out, lift(functionals::characteristic_t(&get(sample, "sample")?.0, r, &QuadratureSpec::default()))?))
}

/// `log σ(r)` of the sample, by Parseval.
///
/// # Safety
/// As [`nr_count_zeros`].
#[no_mangle]
pub unsafe extern "C" fn nr_sample_log_sigma(sample: *const NrSample, r: f64, out: *mut f64) -> NrStatus {
    guard(|| put(out, lift(functionals::log_sigma_omega(&get(sample, "sample")?.0, r))?))
}

/// `X_r`: circle mean of `|log|f_ω| − log σ(r, f)|`.
///
/// # Safety
/// As [`nr_count_zeros`].
#[no_mangle]
pub unsafe extern "C" fn nr_x_r(sample: *const NrSample, log_sigma_f: f64, r: f64, out: *mut f64) -> NrStatus {
    guard(|| put(out, lift(functionals::x_r_functional_log(&get(sample, "sample")?.0, log_sigma_f, r, &QuadratureSpec::default()))?))
}

/// Residual of the Jensen identity at `r`.
///
/// # Safety
/// As [`nr_count_zeros`].
#[no_mangle]
pub unsafe extern "C" fn nr_jensen_residual(sample: *const NrSample, r: f64, out: *mut f64) -> NrStatus {
    guard(|| put(out, lift(functionals::jensen_residual(&get(sample, "sample")?.0, r, &QuadratureSpec::default()))?))
}

/// Loads and validates a TOML experiment config.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_config_load(path: *const c_char, out: *mut *mut NrConfig) -> NrStatus {
    guard(|| {
        let path = PathBuf::from(string(path, "path")?);
        put(out, boxed(NrConfig(lift(ExperimentConfig::load(&path))?)))
    })
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nr_config_parse(text: *const c_char, out: *mut *mut NrConfig) -> NrStatus {
    guard(|| put(out, boxed(NrConfig(lift(ExperimentConfig::from_toml_str(string(text, "text")?))?))))
}

/// # Safety
/// `config` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nr_config_free(config: *mut NrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nr_config_set_seed(config: *mut NrConfig, seed: u64) -> NrStatus {
    guard(|| {
        config.as_mut().ok_or_else(|| fail(NrStatus::NullPointer, "config is null"))?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nr_config_set_trials(config: *mut NrConfig, trials: usize) -> NrStatus {
    guard(|| {
        let c = &mut config.as_mut().ok_or_else(|| fail(NrStatus::NullPointer, "config is null"))?.0;
        let mut next = c.clone();
        next.trials = trials;
        lift(next.validate())?;
        *c = next;
        Ok(())
    })
}

/// Runs the config as `verify` (`tails` != 0 selects `tails`), writes the
/// record file and report under `out_dir`, and stores 1 in `passed` when all
/// checks pass. `workers` = 0 means one per core.
///
/// # Safety
/// `config` must come from this library, `out_dir` must be a NUL-terminated
/// string and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn nr_run(config: *const NrConfig, tails: c_int, workers: usize, out_dir: *const c_char, format: NrFormat, passed: *mut c_int) -> NrStatus {
    guard(|| {
        let config = &get(config, "config")?.0;
        let dir = PathBuf::from(string(out_dir, "out_dir")?);
        let format = match format {
            NrFormat::Csv => RecordFormat::Csv,
            NrFormat::Jsonl => RecordFormat::Jsonl,
        };
        let workers = if workers == 0 { nevrand::WorkerCount::Auto.resolve() } else { workers };
        let mut config = config.clone();
        config.output.dir = dir.clone();
        config.output.format = format;
        let pass = if tails != 0 {
            let (records, report) = lift(experiments::run_tails(&config, workers))?;
            let _: Artifacts = lift(experiments::write_tails(&dir, format, &config, &records, &report))?;
            report.report.pass
        } else {
            let (records, report) = lift(experiments::run_verify(&config, workers))?;
            lift(experiments::write_verify(&dir, format, &config, &records, &report))?;
            report.pass
        };
        put(passed, pass as c_int)
    })
}
