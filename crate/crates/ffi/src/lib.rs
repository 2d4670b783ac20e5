//! C ABI over `skillmeta`.
//!
//! Handles are opaque pointers created by `*_load` / `*_fit` functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`SmStatus`]; on failure [`sm_last_error_message`] describes the error
//! for the calling thread. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skillmeta::encoding::build_design_matrix;
use skillmeta::error::Error;
use skillmeta::linreg::{ols_fit, OlsFit};
use skillmeta::mars::{fit_mars, MarsConfig, MarsModel};
use skillmeta::meta_db::{
    load_database, partition_by_horizon, summarize, Dataset, HorizonClass, LoadOptions,
    ReferenceModel,
};
use skillmeta::skill::{self, AlphaPolicy, SolarSeries};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    MissingFile = 3,
    ParseError = 4,
    InvalidInput = 5,
    Numerical = 6,
    NotFound = 7,
    Panic = 8,
}

/// Rows selected by forecast horizon.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmPartition {
    IntraHour = 0,
    IntraDay = 1,
    DayAhead = 2,
    All = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmReference {
    Persistence = 0,
    SmartPersistence = 1,
    ConvexCombination = 2,
}

/// Descriptive statistics of one column.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub trimmed_mean: f64,
    pub mad: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub se: f64,
}

/// Outcome of scoring a forecast series.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmSkillResult {
    pub rmse_forecast: f64,
    pub rmse_reference: f64,
    pub ss_pct: f64,
    /// CP weight used; NaN for other references.
    pub alpha: f64,
    pub n_scored: usize,
    pub excluded_night: usize,
}

/// Loaded, validated database.
pub struct SmDataset {
    inner: Dataset,
}

/// Fitted OLS regression.
pub struct SmOlsFit {
    inner: OlsFit,
}

/// Fitted MARS model.
pub struct SmMarsModel {
    inner: MarsModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SmStatus {
    match e {
        Error::MissingFile(_) | Error::Io { .. } => SmStatus::MissingFile,
        Error::MissingColumn { .. } | Error::NoValidRows { .. } | Error::Csv(_) | Error::Json(_) => {
            SmStatus::ParseError
        }
        Error::UnknownColumn(_) | Error::CategoricalColumn(_) => SmStatus::NotFound,
        Error::AllColumnsDegenerate | Error::Underdetermined { .. } | Error::UndefinedSkill => {
            SmStatus::Numerical
        }
        _ => SmStatus::InvalidInput,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SmStatus, String)>) -> SmStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SmStatus::Panic
        }
    }
}

fn lift(e: Error) -> (SmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SmStatus, String) {
    (SmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (SmStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SmStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

fn select(ds: &Dataset, part: SmPartition) -> Dataset {
    let class = match part {
        SmPartition::IntraHour => HorizonClass::IntraHour,
        SmPartition::IntraDay => HorizonClass::IntraDay,
        SmPartition::DayAhead => HorizonClass::DayAhead,
        SmPartition::All => return ds.clone(),
    };
    partition_by_horizon(ds).get(class).clone()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a database file. Rows failing validation are skipped.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_dataset_load(
    path: *const c_char,
    delimiter: u8,
    out: *mut *mut SmDataset,
) -> SmStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let options = LoadOptions {
            delimiter,
            ..LoadOptions::default()
        };
        let report = load_database(path, &options).map_err(lift)?;
        *out = Box::into_raw(Box::new(SmDataset {
            inner: report.dataset,
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from [`sm_dataset_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_dataset_free(ds: *mut SmDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of rows in a partition.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_dataset_row_count(
    ds: *const SmDataset,
    partition: SmPartition,
    out: *mut usize,
) -> SmStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let out = out_arg(out, "out")?;
        *out = match partition {
            SmPartition::All => ds.inner.row_count(),
            p => select(&ds.inner, p).row_count(),
        };
        Ok(())
    })
}

/// Summary statistics of a numeric or dummy column.
///
/// # Safety
/// Pointers must be valid; `variable` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sm_dataset_summarize(
    ds: *const SmDataset,
    variable: *const c_char,
    out: *mut SmSummary,
) -> SmStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let variable = str_arg(variable, "variable")?;
        let out = out_arg(out, "out")?;
        let s = summarize(&ds.inner, variable).map_err(lift)?;
        *out = SmSummary {
            n: s.n,
            mean: s.mean,
            sd: s.sd,
            median: s.median,
            trimmed_mean: s.trimmed_mean,
            mad: s.mad,
            min: s.min,
            max: s.max,
            range: s.range,
            skew: s.skew,
            kurtosis: s.kurtosis,
            se: s.se,
        };
        Ok(())
    })
}

/// OLS of SS on the encoded factors within a partition.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_ols_fit(
    ds: *const SmDataset,
    partition: SmPartition,
    out: *mut *mut SmOlsFit,
) -> SmStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let out = out_arg(out, "out")?;
        let part = select(&ds.inner, partition);
        if part.is_empty() {
            return Err((SmStatus::InvalidInput, "partition has no rows".into()));
        }
        let fit = build_design_matrix(&part, true)
            .and_then(|m| ols_fit(&m))
            .map_err(lift)?;
        *out = Box::into_raw(Box::new(SmOlsFit { inner: fit }));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from [`sm_ols_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_ols_free(fit: *mut SmOlsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Coefficient, standard error and p-value of a named column.
/// `SM_STATUS_NOT_FOUND` when the column was dropped or does not exist.
/// Any of the output pointers may be null.
///
/// # Safety
/// `fit` must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sm_ols_coefficient(
    fit: *const SmOlsFit,
    name: *const c_char,
    coefficient: *mut f64,
    std_error: *mut f64,
    p_value: *mut f64,
) -> SmStatus {
    guard(|| {
        let fit = &fit.as_ref().ok_or_else(|| null("fit"))?.inner;
        let name = str_arg(name, "name")?;
        let j = fit
            .index(name)
            .ok_or_else(|| (SmStatus::NotFound, format!("no coefficient `{name}`")))?;
        for (p, v) in [
            (coefficient, fit.coefficients[j]),
            (std_error, fit.standard_errors[j]),
            (p_value, fit.p_values[j]),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// R², adjusted R² and observation count. Output pointers may be null.
///
/// # Safety
/// `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_ols_stats(
    fit: *const SmOlsFit,
    r_squared: *mut f64,
    adj_r_squared: *mut f64,
    n: *mut usize,
) -> SmStatus {
    guard(|| {
        let fit = &fit.as_ref().ok_or_else(|| null("fit"))?.inner;
        if let Some(p) = r_squared.as_mut() {
            *p = fit.r_squared;
        }
        if let Some(p) = adj_r_squared.as_mut() {
            *p = fit.adj_r_squared;
        }
        if let Some(p) = n.as_mut() {
            *p = fit.n;
        }
        Ok(())
    })
}

/// Fit MARS within a partition. Remaining settings take their defaults.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_mars_fit(
    ds: *const SmDataset,
    partition: SmPartition,
    max_degree: usize,
    max_terms: usize,
    out: *mut *mut SmMarsModel,
) -> SmStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let out = out_arg(out, "out")?;
        let part = select(&ds.inner, partition);
        let config = MarsConfig {
            max_degree,
            max_terms,
            ..MarsConfig::default()
        };
        let model = build_design_matrix(&part, false)
            .and_then(|m| fit_mars(&m, &config))
            .map_err(lift)?;
        *out = Box::into_raw(Box::new(SmMarsModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`sm_mars_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sm_mars_free(model: *mut SmMarsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Training R², generalized R² and number of basis terms (intercept
/// excluded). Output pointers may be null.
///
/// # Safety
/// `model` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_mars_stats(
    model: *const SmMarsModel,
    rsq: *mut f64,
    grsq: *mut f64,
    n_terms: *mut usize,
) -> SmStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        if let Some(p) = rsq.as_mut() {
            *p = m.rsq;
        }
        if let Some(p) = grsq.as_mut() {
            *p = m.grsq;
        }
        if let Some(p) = n_terms.as_mut() {
            *p = m.terms.len();
        }
        Ok(())
    })
}

/// Predict every row of a dataset partition into `out` (capacity `len`,
/// which must equal the partition's row count).
///
/// # Safety
/// Pointers must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sm_mars_predict(
    model: *const SmMarsModel,
    ds: *const SmDataset,
    partition: SmPartition,
    out: *mut f64,
    len: usize,
) -> SmStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let part = select(&ds.inner, partition);
        if part.row_count() != len {
            return Err((
                SmStatus::InvalidInput,
                format!("buffer holds {len} values, partition has {} rows", part.row_count()),
            ));
        }
        let pred = build_design_matrix(&part, false)
            .and_then(|d| m.predict_matrix(&d))
            .map_err(lift)?;
        if len > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&pred);
        }
        Ok(())
    })
}

/// Root mean squared error of two equal-length arrays.
///
/// # Safety
/// Arrays must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sm_rmse(
    actual: *const f64,
    forecast: *const f64,
    n: usize,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let a = slice_arg(actual, n, "actual")?;
        let f = slice_arg(forecast, n, "forecast")?;
        let out = out_arg(out, "out")?;
        *out = skill::rmse(a, f).map_err(lift)?;
        Ok(())
    })
}

/// `100 * (1 - a_f / a_r)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_skill_score(a_f: f64, a_r: f64, out: *mut f64) -> SmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = skill::skill_score(a_f, a_r).map_err(lift)?;
        Ok(())
    })
}

/// Score a forecast series against a reference at horizon `h` steps.
/// `clear_sky` may be null except for smart persistence and CP. For CP a
/// NaN `alpha` optimizes the weight on the observations themselves.
///
/// # Safety
/// Arrays must hold `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sm_score_series(
    observed: *const f64,
    forecast: *const f64,
    clear_sky: *const f64,
    n: usize,
    step_minutes: f64,
    reference: SmReference,
    h: usize,
    alpha: f64,
    out: *mut SmSkillResult,
) -> SmStatus {
    guard(|| {
        let obs = slice_arg(observed, n, "observed")?;
        let fc = slice_arg(forecast, n, "forecast")?;
        let out = out_arg(out, "out")?;
        let mut series = SolarSeries::new(obs.to_vec(), step_minutes).map_err(lift)?;
        if !clear_sky.is_null() {
            let cs = slice_arg(clear_sky, n, "clear_sky")?;
            series = series.with_clear_sky(cs.to_vec()).map_err(lift)?;
        }
        let reference = match reference {
            SmReference::Persistence => ReferenceModel::Persistence,
            SmReference::SmartPersistence => ReferenceModel::SmartPersistence,
            SmReference::ConvexCombination => ReferenceModel::ConvexCombination,
        };
        let policy = if alpha.is_nan() {
            AlphaPolicy::Optimized(None)
        } else {
            AlphaPolicy::Fixed(alpha)
        };
        let r = skill::score_forecast(&series, fc, reference, h, policy).map_err(lift)?;
        *out = SmSkillResult {
            rmse_forecast: r.rmse_forecast,
            rmse_reference: r.rmse_reference,
            ss_pct: r.ss_pct,
            alpha: r.alpha.unwrap_or(f64::NAN),
            n_scored: r.n_scored,
            excluded_night: r.excluded_night,
        };
        Ok(())
    })
}
