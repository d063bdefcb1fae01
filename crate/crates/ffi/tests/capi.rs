use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use procvar_ffi::*;

fn last_error() -> String {
    let p = pv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn log_from(text: &str) -> *mut PvLog {
    let text = CString::new(text).unwrap();
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { pv_log_from_text(text.as_ptr(), &mut log) }, PvStatus::Ok);
    log
}

#[test]
fn discover_and_score() {
    let log = log_from("p,a,l\np,l,a");
    assert_eq!(unsafe { pv_log_len(log) }, 2);
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { pv_discover(log, 0.2, &mut net) }, PvStatus::Ok);

    let mut fit = -1.0;
    assert_eq!(unsafe { pv_trace_fitness(log, net, &mut fit) }, PvStatus::Ok);
    assert_eq!(fit, 1.0);
    assert_eq!(unsafe { pv_alignment_fitness(log, net, &mut fit) }, PvStatus::Ok);
    assert_eq!(fit, 1.0);
    assert_eq!(unsafe { pv_precision(log, net, &mut fit) }, PvStatus::Ok);
    assert!((0.0..=1.0).contains(&fit));

    let other = log_from("l,p,a");
    assert_eq!(unsafe { pv_trace_fitness(other, net, &mut fit) }, PvStatus::Ok);
    assert_eq!(fit, 0.0);

    let name = CString::new("model").unwrap();
    let mut pnml = ptr::null_mut();
    assert_eq!(unsafe { pv_net_to_pnml(net, name.as_ptr(), &mut pnml) }, PvStatus::Ok);
    let text = unsafe { CStr::from_ptr(pnml) }.to_str().unwrap().to_string();
    assert!(text.contains("<pnml"));
    unsafe {
        pv_string_free(pnml);
        pv_net_free(net);
        pv_log_free(log);
        pv_log_free(other);
    }
}

#[test]
fn declare_outcomes() {
    let trace: Vec<CString> = ["p", "l"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<_> = trace.iter().map(|s| s.as_ptr()).collect();
    let cases = [
        ("CoExistence(a,p)", PvOutcome::Violated),
        ("ChainResponse(a,p)", PvOutcome::VacSatisfied),
        ("AtLeast1(p)", PvOutcome::Satisfied),
    ];
    for (c, want) in cases {
        let c = CString::new(c).unwrap();
        let mut got = PvOutcome::Satisfied;
        assert_eq!(unsafe { pv_declare_evaluate(c.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut got) }, PvStatus::Ok);
        assert_eq!(got, want);
    }
    let bad = CString::new("Nope(a)").unwrap();
    let mut got = PvOutcome::Satisfied;
    let status = unsafe { pv_declare_evaluate(bad.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut got) };
    assert_eq!(status, PvStatus::Input);
    assert!(!last_error().is_empty());
}

#[test]
fn errors_are_reported() {
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { pv_log_from_text(ptr::null(), &mut log) }, PvStatus::NullPointer);
    assert!(last_error().contains("text"));

    let missing = CString::new("/nonexistent/log.csv").unwrap();
    let status = unsafe { pv_log_read(missing.as_ptr(), ptr::null(), ptr::null(), ptr::null(), &mut log) };
    assert_eq!(status, PvStatus::Input);

    let good = log_from("a,b");
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { pv_discover(good, 2.0, &mut net) }, PvStatus::InvalidArgument);
    assert!(net.is_null());

    let bad_cfg = CString::new("schema_version = 1\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { pv_config_from_toml(bad_cfg.as_ptr(), &mut cfg) }, PvStatus::Input);

    // A successful call clears the message.
    let mut n = ptr::null_mut();
    assert_eq!(unsafe { pv_discover(good, 0.0, &mut n) }, PvStatus::Ok);
    assert!(pv_last_error_message().is_null());
    unsafe {
        pv_net_free(n);
        pv_log_free(good);
        pv_log_free(ptr::null_mut());
        pv_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { pv_report_cluster_count(ptr::null()) }, 0);
}

#[test]
fn pipeline_round_trip() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/orderings.toml");
    let out = tempfile::tempdir().unwrap();
    let path = CString::new(data.to_str().unwrap()).unwrap();
    let dir = CString::new(out.path().to_str().unwrap()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { pv_config_load(path.as_ptr(), &mut cfg) }, PvStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { pv_config_set_output_dir(cfg, dir.as_ptr()) }, PvStatus::Ok);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { pv_run(cfg, &mut report) }, PvStatus::Ok, "{}", last_error());
    let k = unsafe { pv_report_cluster_count(report) };
    assert!(k >= 1);
    assert_eq!(unsafe { pv_report_metric_rows(report) }, k + 2);
    assert!(!unsafe { pv_report_is_degenerate(report) });
    let acc = unsafe { pv_report_ml_accuracy(report) };
    assert!((0.0..=1.0).contains(&acc));
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { pv_report_json(report, &mut json) }, PvStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["clusters"].as_array().unwrap().len(), k);
    assert!(out.path().join("report.json").exists());
    unsafe {
        pv_string_free(json);
        pv_report_free(report);
        pv_config_free(cfg);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(pv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// The generated header must parse as C and as C++.
#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/procvar.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["pv_log_read", "pv_run", "pv_last_error_message", "pv_string_free", "pv_report_free"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let probe = Command::new(cc).arg("--version").output();
        if probe.is_err() {
            eprintln!("{cc} not found; skipping {lang} syntax check");
            continue;
        }
        let status = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap();
        assert!(status.success(), "{cc} rejected the header");
    }
}
