//! C interface to procvar.
//!
//! Every fallible function returns a [`PvStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`pv_last_error_message`]. Handles are opaque and must
//! be released with the matching `*_free` function; strings returned by
//! the library are released with [`pv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use procvar::conformance;
use procvar::declare::{self, Constraint, Outcome};
use procvar::discovery::{self, PetriNet};
use procvar::event_log::{self, ColumnMap, EventLog};
use procvar::pipeline::{self, PipelineConfig, RunReport};
use procvar::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not UTF-8 or a value was out of range.
    InvalidArgument = 2,
    /// Unreadable or malformed input (log, labels, config).
    Input = 3,
    /// A pipeline stage failed.
    Stage = 4,
    /// The library panicked; the message holds the payload.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvOutcome {
    Satisfied = 0,
    Violated = 1,
    VacSatisfied = 2,
}

impl From<Outcome> for PvOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Satisfied => PvOutcome::Satisfied,
            Outcome::Violated => PvOutcome::Violated,
            Outcome::VacSatisfied => PvOutcome::VacSatisfied,
        }
    }
}

pub struct PvLog(EventLog);
pub struct PvNet(PetriNet);
pub struct PvConfig(PipelineConfig);
pub struct PvReport(RunReport);

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

enum Failure {
    Status(PvStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Status(PvStatus::InvalidArgument, msg.into())
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PvStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PvStatus::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            if matches!(e, Error::InvalidInput(_) | Error::OutOfRange { .. }) {
                PvStatus::InvalidArgument
            } else if e.is_input_error() {
                PvStatus::Input
            } else {
                PvStatus::Stage
            }
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            PvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Status(PvStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::Status(PvStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Status(PvStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a CSV or XES log. `case_column`, `activity_column` and
/// `timestamp_column` may be null to use `case_id`, `activity` and
/// `timestamp`; pass an empty `timestamp_column` to keep file order.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_log_read(
    path: *const c_char,
    case_column: *const c_char,
    activity_column: *const c_char,
    timestamp_column: *const c_char,
    out: *mut *mut PvLog,
) -> PvStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let mut columns = ColumnMap::default();
        if !case_column.is_null() {
            columns.case = str_arg(case_column, "case_column")?.to_string();
        }
        if !activity_column.is_null() {
            columns.activity = str_arg(activity_column, "activity_column")?.to_string();
        }
        if !timestamp_column.is_null() {
            let t = str_arg(timestamp_column, "timestamp_column")?;
            columns.timestamp = (!t.is_empty()).then(|| t.to_string());
        }
        let log = event_log::read_log(Path::new(path), &columns)?;
        write_out(out, Box::into_raw(Box::new(PvLog(log))))
    })
}

/// Builds a log from newline-separated traces of comma-separated
/// activities, e.g. `"p,a,l\np,l,a"`. Case ids are the line numbers.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_log_from_text(text: *const c_char, out: *mut *mut PvLog) -> PvStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let seqs: Vec<Vec<&str>> = text
            .lines()
            .map(|l| l.split(',').map(str::trim).filter(|a| !a.is_empty()).collect())
            .collect();
        write_out(out, Box::into_raw(Box::new(PvLog(EventLog::from_sequences(&seqs)))))
    })
}

/// Number of traces, or 0 for a null handle.
///
/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_log_len(log: *const PvLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `log` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pv_log_free(log: *mut PvLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// Evaluates one Declare constraint such as `"Response(a,b)"` on a trace.
///
/// # Safety
/// `activities` must point to `len` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pv_declare_evaluate(
    constraint: *const c_char,
    activities: *const *const c_char,
    len: usize,
    out: *mut PvOutcome,
) -> PvStatus {
    guard(|| {
        let c: Constraint = str_arg(constraint, "constraint")?.parse()?;
        if activities.is_null() && len > 0 {
            return Err(Failure::Status(PvStatus::NullPointer, "`activities` is null".into()));
        }
        let trace = (0..len)
            .map(|i| str_arg(*activities.add(i), "activity"))
            .collect::<Result<Vec<_>, _>>()?;
        write_out(out, declare::evaluate_activities(&trace, &c).into())
    })
}

/// Inductive-miner discovery with noise threshold `threshold` in [0, 1].
///
/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_discover(log: *const PvLog, threshold: f64, out: *mut *mut PvNet) -> PvStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        let tree = discovery::discover(&log.0, threshold)?;
        let net = discovery::to_petri_net(&tree)?;
        write_out(out, Box::into_raw(Box::new(PvNet(net))))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_net_read_pnml(path: *const c_char, out: *mut *mut PvNet) -> PvStatus {
    guard(|| {
        let net = discovery::read_pnml(Path::new(str_arg(path, "path")?))?;
        write_out(out, Box::into_raw(Box::new(PvNet(net))))
    })
}

/// PNML text of the net; free it with [`pv_string_free`].
///
/// # Safety
/// `net` must be a live handle; `name` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_net_to_pnml(net: *const PvNet, name: *const c_char, out: *mut *mut c_char) -> PvStatus {
    guard(|| {
        let net = ref_arg(net, "net")?;
        let name = str_arg(name, "name")?;
        write_out(out, to_c_string(discovery::to_pnml(&net.0, name)))
    })
}

/// # Safety
/// `net` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pv_net_free(net: *mut PvNet) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

unsafe fn metric(
    log: *const PvLog,
    net: *const PvNet,
    out: *mut f64,
    f: fn(&EventLog, &PetriNet) -> procvar::Result<f64>,
) -> PvStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        let net = ref_arg(net, "net")?;
        write_out(out, f(&log.0, &net.0)?)
    })
}

/// Share of traces whose optimal alignment costs 0.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_trace_fitness(log: *const PvLog, net: *const PvNet, out: *mut f64) -> PvStatus {
    metric(log, net, out, conformance::trace_fitness)
}

/// Cost-normalized alignment fitness.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_alignment_fitness(log: *const PvLog, net: *const PvNet, out: *mut f64) -> PvStatus {
    metric(log, net, out, conformance::alignment_fitness)
}

/// Escaping-edges precision over aligned prefixes.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_precision(log: *const PvLog, net: *const PvNet, out: *mut f64) -> PvStatus {
    metric(log, net, out, conformance::precision)
}

/// Loads a TOML config. Relative paths are resolved against its directory.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_config_load(path: *const c_char, out: *mut *mut PvConfig) -> PvStatus {
    guard(|| {
        let cfg = PipelineConfig::load(Path::new(str_arg(path, "path")?))?;
        write_out(out, Box::into_raw(Box::new(PvConfig(cfg))))
    })
}

/// Parses a TOML config from memory. Relative paths stay relative to the
/// working directory.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_config_from_toml(text: *const c_char, out: *mut *mut PvConfig) -> PvStatus {
    guard(|| {
        let cfg = PipelineConfig::from_toml(str_arg(text, "text")?)?;
        write_out(out, Box::into_raw(Box::new(PvConfig(cfg))))
    })
}

/// Replaces the output directory.
///
/// # Safety
/// `cfg` must be a live handle; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pv_config_set_output_dir(cfg: *mut PvConfig, dir: *const c_char) -> PvStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let cfg = cfg
            .as_mut()
            .ok_or_else(|| Failure::Status(PvStatus::NullPointer, "`cfg` is null".into()))?;
        cfg.0.output_dir = dir.into();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pv_config_free(cfg: *mut PvConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the whole pipeline and writes every artifact to the output
/// directory.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_run(cfg: *const PvConfig, out: *mut *mut PvReport) -> PvStatus {
    guard(|| {
        let cfg = ref_arg(cfg, "cfg")?;
        let report = pipeline::run(&cfg.0)?;
        write_out(out, Box::into_raw(Box::new(PvReport(report))))
    })
}

/// The report as JSON; free it with [`pv_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_report_json(report: *const PvReport, out: *mut *mut c_char) -> PvStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        let json = serde_json::to_string_pretty(&r.0).map_err(Error::from)?;
        write_out(out, to_c_string(json))
    })
}

/// Number of clusters, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_report_cluster_count(report: *const PvReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.clusters.len())
}

/// Number of metric rows (clusters plus the two baselines).
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_report_metric_rows(report: *const PvReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.metrics.len())
}

/// Test-fold accuracy of the sparse rule model, or NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_report_ml_accuracy(report: *const PvReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.ml_accuracy)
}

/// True when the regression kept no rule.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_report_is_degenerate(report: *const PvReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.degenerate)
}

/// # Safety
/// `report` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pv_report_free(report: *mut PvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
