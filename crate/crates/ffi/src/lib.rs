//! C interface to `forest_importance`.
//!
//! Objects are opaque handles created by `fi_*` constructors and released
//! by the matching `fi_*_free`. Fallible functions return an [`FiStatus`]
//! and write their result through an out-pointer; on failure the message is
//! available from [`fi_last_error_message`] on the same thread. Strings
//! returned to the caller are released with [`fi_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use forest_importance::context::{asymptotic_contextual, ContextReport};
use forest_importance::distributions::{generate, load_csv, load_distribution, save_distribution, Dataset, JointDistribution};
use forest_importance::forest::{build_forest, Forest, ForestConfig, Loss, Method};
use forest_importance::importance::{asymptotic_mdi_report, mda, mdi, ImportanceReport};
use forest_importance::netinfer::{
    averaged_partial_correlation, challenge_grid, evaluate, load_series, partial_correlation, EdgeMode, ScoreMatrix,
    TimeSeries,
};
use forest_importance::report::{render_context, render_importance, Format};
use forest_importance::srs::{expected_time, markov_expected_time, markov_transition_matrix, Scenario, ScenarioModel, SubspaceMethod};
use forest_importance::tree::{SplitFamily, TreeConfig};
use forest_importance::Error;

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    InvalidConfig = 4,
    Format = 5,
    UnknownVariable = 6,
    TooLarge = 7,
    Empty = 8,
    Numerical = 9,
    Io = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiFormat {
    Csv = 0,
    Json = 1,
    Markdown = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiMethod {
    Bagging = 0,
    RandomSubspace = 1,
    RandomPatches = 2,
    ExtraTrees = 3,
    TotallyRandomized = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiSplitFamily {
    MultiwayExhaustive = 0,
    BinaryOrdered = 1,
    BinaryUnordered = 2,
    BinaryOneVsAll = 3,
}

/// Rows of a contextual report.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiContextMeasure {
    /// `Imp(X_m)`; the context value is ignored.
    Imp = 0,
    /// `Imp(X_m | X_c = x_c)`.
    Given = 1,
    /// `Imp^{|x_c|}(X_m)`.
    Abs = 2,
    /// `Imp_s^{x_c}(X_m)`.
    Signed = 3,
    /// `Imp^{X_c}(X_m)`; the context value is ignored.
    Global = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiScenario {
    Chaining = 0,
    Clique = 1,
    MarginalOnly = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiSubspaceMethod {
    Rs = 0,
    Srs = 1,
}

/// Forest parameters. `k = 0` draws every variable at each node; a negative
/// `max_depth` means unlimited; `q` and `rows` only matter for the subspace
/// and patch methods.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FiForestConfig {
    pub method: FiMethod,
    pub n_trees: usize,
    pub k: usize,
    pub max_depth: i64,
    pub q: usize,
    pub rows: usize,
    pub split_family: FiSplitFamily,
    pub seed: u64,
}

pub struct FiDistribution(JointDistribution);
pub struct FiDataset(Dataset);
pub struct FiForest(Forest);
pub struct FiSeries(TimeSeries);
pub struct FiScores(ScoreMatrix);

pub struct FiImportance {
    report: ImportanceReport,
    names: Vec<CString>,
}

pub struct FiContext {
    report: ContextReport,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parameter(_) => FiStatus::InvalidParameter,
            Error::Config(_) => FiStatus::InvalidConfig,
            Error::Format { .. } | Error::Malformed(_) | Error::Json(_) | Error::Csv(_) => FiStatus::Format,
            Error::UnknownVariable(_) | Error::Overlap(_) => FiStatus::UnknownVariable,
            Error::TooLarge { .. } => FiStatus::TooLarge,
            Error::Empty(_) => FiStatus::Empty,
            Error::Numerical(_) => FiStatus::Numerical,
            Error::Io(_) => FiStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording failures and panics in the thread's last error.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> FiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            FiStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FiStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_string<'a>(p: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        string(p, what).map(Some)
    }
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure(FiStatus::Format, "text contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn c_names(names: &[String]) -> Vec<CString> {
    names
        .iter()
        .map(|n| CString::new(n.replace('\0', " ")).unwrap_or_default())
        .collect()
}

fn out_of_range(what: &str, i: usize, n: usize) -> Failure {
    Failure(FiStatus::OutOfRange, format!("{what} {i} is out of range (size {n})"))
}

fn format_of(f: FiFormat) -> Format {
    match f {
        FiFormat::Csv => Format::Csv,
        FiFormat::Json => Format::Json,
        FiFormat::Markdown => Format::Markdown,
    }
}

/// Message of the last failed call on this thread, or null after a
/// successful one. Valid until the next `fi_*` call on the thread.
#[no_mangle]
pub extern "C" fn fi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Version of the library, a static string.
#[no_mangle]
pub extern "C" fn fi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a generated distribution from a problem such as `"digit"` or
/// `"xor_strongweak:0.8"`.
///
/// # Safety
/// `problem` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_distribution_generate(problem: *const c_char, out: *mut *mut FiDistribution) -> FiStatus {
    guard(|| {
        let problem = string(problem, "problem")?.parse().map_err(Failure::from)?;
        put(out, FiDistribution(generate(problem)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_distribution_load(path: *const c_char, out: *mut *mut FiDistribution) -> FiStatus {
    guard(|| put(out, FiDistribution(load_distribution(string(path, "path")?)?)))
}

/// # Safety
/// `dist` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fi_distribution_save(dist: *const FiDistribution, path: *const c_char) -> FiStatus {
    guard(|| Ok(save_distribution(&get(dist, "dist")?.0, string(path, "path")?)?))
}

/// Number of inputs, 0 for a null handle.
///
/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_distribution_n_inputs(dist: *const FiDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.0.n_inputs())
}

/// # Safety
/// `dist` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_distribution_free(dist: *mut FiDistribution) {
    free(dist)
}

/// Reads a CSV dataset. `target` and `context` may be null.
///
/// # Safety
/// String arguments must be null (where allowed) or NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fi_dataset_load_csv(
    path: *const c_char,
    target: *const c_char,
    context: *const c_char,
    out: *mut *mut FiDataset,
) -> FiStatus {
    guard(|| {
        let ds = load_csv(
            string(path, "path")?,
            optional_string(target, "target")?,
            optional_string(context, "context")?,
        )?;
        put(out, FiDataset(ds))
    })
}

/// One weighted row per configuration of the distribution.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_dataset_exact(dist: *const FiDistribution, out: *mut *mut FiDataset) -> FiStatus {
    guard(|| put(out, FiDataset(get(dist, "dist")?.0.to_exact_dataset())))
}

/// `n` rows drawn from the distribution.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_dataset_sample(
    dist: *const FiDistribution,
    n: usize,
    seed: u64,
    out: *mut *mut FiDataset,
) -> FiStatus {
    guard(|| put(out, FiDataset(get(dist, "dist")?.0.sample(n, seed)?)))
}

/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_dataset_n_rows(ds: *const FiDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n_rows())
}

/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_dataset_n_inputs(ds: *const FiDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.inputs().len())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_dataset_free(ds: *mut FiDataset) {
    free(ds)
}

/// Totally randomized trees, 1000 of them.
#[no_mangle]
pub extern "C" fn fi_forest_config_default() -> FiForestConfig {
    FiForestConfig {
        method: FiMethod::TotallyRandomized,
        n_trees: 1000,
        k: 0,
        max_depth: -1,
        q: 0,
        rows: 0,
        split_family: FiSplitFamily::MultiwayExhaustive,
        seed: 0,
    }
}

fn forest_config(c: &FiForestConfig) -> ForestConfig {
    let method = match c.method {
        FiMethod::Bagging => Method::Bagging,
        FiMethod::RandomSubspace => Method::RandomSubspace { q: c.q },
        FiMethod::RandomPatches => Method::RandomPatches { q: c.q, l: c.rows },
        FiMethod::ExtraTrees => Method::ExtraTrees,
        FiMethod::TotallyRandomized => Method::TotallyRandomized,
    };
    let tree = TreeConfig {
        k: (c.k > 0).then_some(c.k),
        max_depth: usize::try_from(c.max_depth).ok(),
        split_family: match c.split_family {
            FiSplitFamily::MultiwayExhaustive => SplitFamily::MultiwayExhaustive,
            FiSplitFamily::BinaryOrdered => SplitFamily::BinaryOrdered,
            FiSplitFamily::BinaryUnordered => SplitFamily::BinaryUnordered,
            FiSplitFamily::BinaryOneVsAll => SplitFamily::BinaryOneVsAll,
        },
        ..TreeConfig::default()
    };
    ForestConfig::new(method, c.n_trees, tree, c.seed)
}

/// # Safety
/// `ds` must be a live handle, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_forest_build(
    ds: *const FiDataset,
    config: *const FiForestConfig,
    out: *mut *mut FiForest,
) -> FiStatus {
    guard(|| {
        let config = forest_config(get(config, "config")?);
        put(out, FiForest(build_forest(&get(ds, "dataset")?.0, &config)?))
    })
}

/// # Safety
/// `forest` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_forest_free(forest: *mut FiForest) {
    free(forest)
}

fn importance(report: ImportanceReport) -> FiImportance {
    let names = c_names(&report.variables);
    FiImportance { report, names }
}

/// Infinite-sample MDI of totally randomized trees of depth `depth`.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_oracle(
    dist: *const FiDistribution,
    depth: usize,
    out: *mut *mut FiImportance,
) -> FiStatus {
    guard(|| put(out, importance(asymptotic_mdi_report(&get(dist, "dist")?.0, depth)?)))
}

/// Mean decrease of impurity of a forest grown on `ds`.
///
/// # Safety
/// `forest` and `ds` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_mdi(
    forest: *const FiForest,
    ds: *const FiDataset,
    out: *mut *mut FiImportance,
) -> FiStatus {
    guard(|| put(out, importance(mdi(&get(forest, "forest")?.0, &get(ds, "dataset")?.0))))
}

/// Out-of-bag mean decrease of accuracy (0-1 loss for classification,
/// squared error otherwise).
///
/// # Safety
/// `forest` and `ds` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_mda(
    forest: *const FiForest,
    ds: *const FiDataset,
    n_repeats: usize,
    seed: u64,
    out: *mut *mut FiImportance,
) -> FiStatus {
    guard(|| {
        let ds = &get(ds, "dataset")?.0;
        let loss = if ds.is_classification() { Loss::ZeroOne } else { Loss::Mse };
        put(out, importance(mda(&get(forest, "forest")?.0, ds, loss, n_repeats, seed)?))
    })
}

/// Number of variables, 0 for a null handle.
///
/// # Safety
/// `imp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_len(imp: *const FiImportance) -> usize {
    imp.as_ref().map_or(0, |r| r.report.variables.len())
}

/// Name of variable `m`, owned by the handle; null when out of range.
///
/// # Safety
/// `imp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_name(imp: *const FiImportance, m: usize) -> *const c_char {
    imp.as_ref()
        .and_then(|r| r.names.get(m))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Copies the scores into `buf`, which holds `len` values.
///
/// # Safety
/// `imp` must be a live handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_scores(imp: *const FiImportance, buf: *mut f64, len: usize) -> FiStatus {
    guard(|| {
        let scores = &get(imp, "importance")?.report.scores;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < scores.len() {
            return Err(out_of_range("buffer length", len, scores.len()));
        }
        ptr::copy_nonoverlapping(scores.as_ptr(), buf, scores.len());
        Ok(())
    })
}

/// Contribution of degree (or depth) `k` to the score of variable `m`.
///
/// # Safety
/// `imp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_per_degree(
    imp: *const FiImportance,
    m: usize,
    k: usize,
    out: *mut f64,
) -> FiStatus {
    guard(|| {
        let r = &get(imp, "importance")?.report;
        let rows = r
            .per_degree
            .as_ref()
            .ok_or_else(|| Failure(FiStatus::Empty, "the report has no per-degree terms".into()))?;
        let row = rows.get(m).ok_or_else(|| out_of_range("variable", m, rows.len()))?;
        put_value(out, row.get(k).copied().unwrap_or(0.0))
    })
}

/// Renders the report; free the text with [`fi_string_free`].
///
/// # Safety
/// `imp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_render(
    imp: *const FiImportance,
    format: FiFormat,
    decimals: usize,
    out: *mut *mut c_char,
) -> FiStatus {
    guard(|| {
        let text = render_importance(&get(imp, "importance")?.report, format_of(format), decimals);
        put_string(out, text)
    })
}

/// # Safety
/// `imp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_importance_free(imp: *mut FiImportance) {
    free(imp)
}

/// Exact contextual importances of a distribution with a context variable.
///
/// # Safety
/// `dist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_context_oracle(dist: *const FiDistribution, out: *mut *mut FiContext) -> FiStatus {
    guard(|| {
        let report = asymptotic_contextual(&get(dist, "dist")?.0)?;
        let names = c_names(&report.variables);
        put(out, FiContext { report, names })
    })
}

/// # Safety
/// `ctx` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_context_len(ctx: *const FiContext) -> usize {
    ctx.as_ref().map_or(0, |r| r.report.variables.len())
}

/// Number of context values, 0 for a null handle.
///
/// # Safety
/// `ctx` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_context_n_values(ctx: *const FiContext) -> usize {
    ctx.as_ref().map_or(0, |r| r.report.context_values.len())
}

/// # Safety
/// `ctx` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_context_name(ctx: *const FiContext, m: usize) -> *const c_char {
    ctx.as_ref()
        .and_then(|r| r.names.get(m))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// One entry of the report: variable `m`, context value index `c`.
///
/// # Safety
/// `ctx` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_context_get(
    ctx: *const FiContext,
    measure: FiContextMeasure,
    m: usize,
    c: usize,
    out: *mut f64,
) -> FiStatus {
    guard(|| {
        let r = &get(ctx, "context")?.report;
        let p = r.variables.len();
        if m >= p {
            return Err(out_of_range("variable", m, p));
        }
        let n = r.context_values.len();
        let by_value = |t: &[Vec<f64>]| t[m].get(c).copied().ok_or_else(|| out_of_range("context value", c, n));
        let v = match measure {
            FiContextMeasure::Imp => r.imp[m],
            FiContextMeasure::Given => by_value(&r.imp_given)?,
            FiContextMeasure::Abs => by_value(&r.imp_abs)?,
            FiContextMeasure::Signed => by_value(&r.imp_signed)?,
            FiContextMeasure::Global => r.imp_global[m],
        };
        put_value(out, v)
    })
}

/// # Safety
/// `ctx` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_context_render(
    ctx: *const FiContext,
    format: FiFormat,
    decimals: usize,
    out: *mut *mut c_char,
) -> FiStatus {
    guard(|| put_string(out, render_context(&get(ctx, "context")?.report, format_of(format), decimals)))
}

/// # Safety
/// `ctx` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_context_free(ctx: *mut FiContext) {
    free(ctx)
}

fn model(scenario: FiScenario, method: FiSubspaceMethod, p: u64, q: u64, r: u64) -> FfiResult<ScenarioModel> {
    let scenario = match scenario {
        FiScenario::Chaining => Scenario::Chaining,
        FiScenario::Clique => Scenario::Clique,
        FiScenario::MarginalOnly => Scenario::MarginalOnly,
    };
    let method = match method {
        FiSubspaceMethod::Rs => SubspaceMethod::Rs,
        FiSubspaceMethod::Srs => SubspaceMethod::Srs,
    };
    Ok(ScenarioModel::new(scenario, method, p, q, r)?)
}

/// Closed-form expected number of iterations to find `i` of the `r`
/// relevant features (chaining and clique only).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fi_srs_expected_time(
    scenario: FiScenario,
    method: FiSubspaceMethod,
    p: u64,
    q: u64,
    r: u64,
    i: u64,
    out: *mut f64,
) -> FiStatus {
    guard(|| put_value(out, expected_time(&model(scenario, method, p, q, r)?, i)?))
}

/// Expected number of iterations to find all `r` relevant features, from
/// the absorbing Markov chain.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fi_srs_markov_expected_time(
    scenario: FiScenario,
    method: FiSubspaceMethod,
    p: u64,
    q: u64,
    r: u64,
    out: *mut f64,
) -> FiStatus {
    guard(|| {
        let m = markov_transition_matrix(&model(scenario, method, p, q, r)?)?;
        put_value(out, markov_expected_time(&m)?)
    })
}

/// Series from `steps × nodes` values in row-major order, nodes named
/// `X1..Xp`.
///
/// # Safety
/// `values` must be readable for `steps * nodes` values and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_series_from_values(
    values: *const f64,
    steps: usize,
    nodes: usize,
    out: *mut *mut FiSeries,
) -> FiStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let len = steps
            .checked_mul(nodes)
            .ok_or_else(|| Failure(FiStatus::InvalidParameter, "steps * nodes overflows".into()))?;
        let data = std::slice::from_raw_parts(values, len);
        put(out, FiSeries(TimeSeries::from_row_major(data, steps, nodes)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_series_load(path: *const c_char, out: *mut *mut FiSeries) -> FiStatus {
    guard(|| put(out, FiSeries(load_series(string(path, "path")?)?)))
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_series_free(series: *mut FiSeries) {
    free(series)
}

/// Partial correlations of the raw series; `components = 0` inverts the
/// full covariance, otherwise only the leading principal components are
/// kept.
///
/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_partial_correlation(
    series: *const FiSeries,
    components: usize,
    out: *mut *mut FiScores,
) -> FiStatus {
    guard(|| {
        let s = partial_correlation(&get(series, "series")?.0, (components > 0).then_some(components))?;
        put(out, FiScores(s))
    })
}

/// Partial correlations averaged over the weighted filter grid.
///
/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_averaged_partial_correlation(
    series: *const FiSeries,
    components: usize,
    out: *mut *mut FiScores,
) -> FiStatus {
    guard(|| {
        let (specs, weights) = challenge_grid();
        let s = averaged_partial_correlation(
            &get(series, "series")?.0,
            &specs,
            &weights,
            (components > 0).then_some(components),
        )?;
        put(out, FiScores(s))
    })
}

/// # Safety
/// `scores` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fi_scores_n_nodes(scores: *const FiScores) -> usize {
    scores.as_ref().map_or(0, |s| s.0.n_nodes())
}

/// Score of the edge `i → j`.
///
/// # Safety
/// `scores` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_scores_get(scores: *const FiScores, i: usize, j: usize, out: *mut f64) -> FiStatus {
    guard(|| {
        let s = &get(scores, "scores")?.0;
        let p = s.n_nodes();
        if i >= p || j >= p {
            return Err(out_of_range("node", i.max(j), p));
        }
        put_value(out, s.score(i, j))
    })
}

/// AUROC and AUPRC of the scores against the `n_edges` true edges
/// `src[e] → dst[e]`.
///
/// # Safety
/// `scores` must be a live handle, `src` and `dst` readable for `n_edges`
/// values, `auroc` and `auprc` writable.
#[no_mangle]
pub unsafe extern "C" fn fi_evaluate(
    scores: *const FiScores,
    src: *const usize,
    dst: *const usize,
    n_edges: usize,
    directed: bool,
    auroc: *mut f64,
    auprc: *mut f64,
) -> FiStatus {
    guard(|| {
        if src.is_null() || dst.is_null() {
            return Err(null("edge list"));
        }
        let (src, dst) = (std::slice::from_raw_parts(src, n_edges), std::slice::from_raw_parts(dst, n_edges));
        let truth: Vec<(usize, usize)> = src.iter().copied().zip(dst.iter().copied()).collect();
        let mode = if directed { EdgeMode::Directed } else { EdgeMode::Undirected };
        let e = evaluate(&get(scores, "scores")?.0, &truth, mode)?;
        put_value(auroc, e.auroc)?;
        put_value(auprc, e.auprc)
    })
}

/// # Safety
/// `scores` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fi_scores_free(scores: *mut FiScores) {
    free(scores)
}
