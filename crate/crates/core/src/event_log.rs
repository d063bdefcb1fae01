//! Event logs: parsing (CSV, XES subset), labels, stratified splits and
//! undersampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// One case: an identifier and its time-ordered activities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub case_id: String,
    pub activities: Vec<String>,
    /// Event times in milliseconds since the epoch, parallel to `activities`.
    /// Empty when the source carried no timestamps.
    pub timestamps: Vec<i64>,
}

impl Trace {
    pub fn new<S: Into<String>>(case_id: impl Into<String>, activities: Vec<S>) -> Self {
        Trace {
            case_id: case_id.into(),
            activities: activities.into_iter().map(Into::into).collect(),
            timestamps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    /// Case duration in milliseconds, if the trace has timestamps.
    pub fn duration_ms(&self) -> Option<i64> {
        let first = self.timestamps.iter().min()?;
        let last = self.timestamps.iter().max()?;
        Some(last - first)
    }
}

/// A set of traces with pairwise distinct case ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    traces: Vec<Trace>,
    alphabet: BTreeSet<String>,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &traces {
            if !seen.insert(t.case_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate case id `{}`",
                    t.case_id
                )));
            }
        }
        let alphabet = traces
            .iter()
            .flat_map(|t| t.activities.iter().cloned())
            .collect();
        Ok(EventLog { traces, alphabet })
    }

    /// Builds a log from bare activity sequences, numbering cases from 1.
    pub fn from_sequences<S: AsRef<str>>(sequences: &[Vec<S>]) -> Self {
        let traces = sequences
            .iter()
            .enumerate()
            .map(|(i, s)| Trace::new((i + 1).to_string(), s.iter().map(|a| a.as_ref()).collect()))
            .collect();
        EventLog::new(traces).expect("generated case ids are unique")
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn empty_trace_count(&self) -> usize {
        self.traces.iter().filter(|t| t.is_empty()).count()
    }

    pub fn get(&self, case_id: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.case_id == case_id)
    }

    /// Sub-log keeping the traces for which `keep` returns true, in order.
    pub fn filter(&self, mut keep: impl FnMut(&Trace) -> bool) -> EventLog {
        let traces: Vec<Trace> = self.traces.iter().filter(|t| keep(t)).cloned().collect();
        EventLog::new(traces).expect("subset of a valid log")
    }

    /// Sub-log of the traces at `indices` (in the order given).
    pub fn select(&self, indices: &[usize]) -> EventLog {
        let traces = indices.iter().map(|&i| self.traces[i].clone()).collect();
        EventLog::new(traces).expect("indices must be distinct")
    }

    pub fn case_ids(&self) -> impl Iterator<Item = &str> {
        self.traces.iter().map(|t| t.case_id.as_str())
    }

    /// Writes the log as `case_id,activity,timestamp` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["case_id", "activity", "timestamp"])?;
        for t in &self.traces {
            for (i, a) in t.activities.iter().enumerate() {
                let ts = t
                    .timestamps
                    .get(i)
                    .and_then(|&ms| DateTime::from_timestamp_millis(ms))
                    .map(|d| d.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string())
                    .unwrap_or_default();
                w.write_record([t.case_id.as_str(), a.as_str(), ts.as_str()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Column names used when reading an event CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub case: String,
    pub activity: String,
    /// Without a timestamp column, events keep their row order.
    pub timestamp: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            case: "case_id".into(),
            activity: "activity".into(),
            timestamp: Some("timestamp".into()),
        }
    }
}

/// Parses an RFC 3339 / ISO-8601 date-time, a plain date, or a number of
/// seconds since the epoch. Returns milliseconds since the epoch.
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.timestamp_millis());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%:z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(d) = DateTime::parse_from_str(s, fmt) {
            return Some(d.timestamp_millis());
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y/%m/%d %H:%M:%S"] {
        if let Ok(d) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(d.and_utc().timestamp_millis());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_millis());
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(|v| (v * 1000.0).round() as i64)
}

struct RawEvent {
    activity: String,
    timestamp: Option<i64>,
}

/// Groups events per case in first-appearance order and stable-sorts each
/// case by timestamp (ties keep source order).
fn assemble(cases: Vec<(String, Vec<RawEvent>)>) -> Result<EventLog> {
    let traces = cases
        .into_iter()
        .map(|(case_id, mut events)| {
            let timed = events.iter().all(|e| e.timestamp.is_some()) && !events.is_empty();
            if timed {
                events.sort_by_key(|e| e.timestamp);
            }
            Trace {
                case_id,
                timestamps: if timed {
                    events.iter().filter_map(|e| e.timestamp).collect()
                } else {
                    Vec::new()
                },
                activities: events.into_iter().map(|e| e.activity).collect(),
            }
        })
        .collect();
    EventLog::new(traces)
}

pub fn parse_csv(path: &Path, columns: &ColumnMap) -> Result<EventLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_reader(BufReader::new(file), columns, path)
}

pub fn parse_csv_reader<R: Read>(reader: R, columns: &ColumnMap, source: &Path) -> Result<EventLog> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Config(format!("column `{name}` not found in {}", source.display())))
    };
    let case_col = find(&columns.case)?;
    let act_col = find(&columns.activity)?;
    let ts_col = columns.timestamp.as_deref().map(find).transpose()?;

    let mut order: Vec<(String, Vec<RawEvent>)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize| {
            record.get(col).ok_or_else(|| Error::Row {
                path: source.to_path_buf(),
                line,
                message: format!("missing field {}", col + 1),
            })
        };
        let case = field(case_col)?.to_string();
        let activity = field(act_col)?.to_string();
        let timestamp = match ts_col {
            Some(col) => {
                let raw = field(col)?;
                Some(parse_timestamp(raw).ok_or_else(|| Error::Row {
                    path: source.to_path_buf(),
                    line,
                    message: format!("unparseable timestamp `{raw}`"),
                })?)
            }
            None => None,
        };
        let slot = *index.entry(case.clone()).or_insert_with(|| {
            order.push((case, Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(RawEvent { activity, timestamp });
    }
    assemble(order)
}

pub fn parse_xes(path: &Path) -> Result<EventLog> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    parse_xes_str(&text)
}

fn attr(e: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::Parse(format!("XES attribute: {err}")))?;
        if a.key.as_ref() == name {
            let v = a
                .unescape_value()
                .map_err(|err| Error::Parse(format!("XES attribute value: {err}")))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

/// Parses the XES subset: `concept:name` on traces and events,
/// `time:timestamp` on events. Unknown elements and attributes are skipped.
pub fn parse_xes_str(text: &str) -> Result<EventLog> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut cases: Vec<(String, Vec<RawEvent>)> = Vec::new();
    let mut trace_name: Option<String> = None;
    let mut trace_events: Vec<RawEvent> = Vec::new();
    let mut event_name: Option<String> = None;
    let mut event_time: Option<i64> = None;
    let mut trace_index = 0usize;
    let mut saw_log = false;

    loop {
        let ev = reader
            .read_event()
            .map_err(|e| Error::Parse(format!("malformed XES at byte {}: {e}", reader.buffer_position())))?;
        let (start, is_empty) = match &ev {
            Event::Start(s) => (Some(s.clone()), false),
            Event::Empty(s) => (Some(s.clone()), true),
            _ => (None, false),
        };
        if let Some(s) = start {
            let name = s.local_name().as_ref().to_vec();
            let parent = stack.last().map(|p| p.as_slice());
            match name.as_slice() {
                b"log" => saw_log = true,
                b"trace" if parent == Some(b"log") => {
                    trace_name = None;
                    trace_events.clear();
                }
                b"event" if parent == Some(b"trace") => {
                    event_name = None;
                    event_time = None;
                }
                b"string" | b"date" => {
                    let key = attr(&s, b"key")?;
                    let value = attr(&s, b"value")?;
                    match (parent, key.as_deref(), name.as_slice()) {
                        (Some(b"trace"), Some("concept:name"), b"string") => trace_name = value,
                        (Some(b"event"), Some("concept:name"), b"string") => event_name = value,
                        (Some(b"event"), Some("time:timestamp"), b"date") => {
                            let raw = value.unwrap_or_default();
                            event_time = Some(parse_timestamp(&raw).ok_or_else(|| {
                                Error::Parse(format!(
                                    "trace {trace_index}: unparseable timestamp `{raw}`"
                                ))
                            })?);
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
            if is_empty {
                close_element(
                    &name,
                    stack.last().map(|p| p.as_slice()),
                    &mut cases,
                    &mut trace_name,
                    &mut trace_events,
                    &mut event_name,
                    &mut event_time,
                    &mut trace_index,
                )?;
            } else {
                stack.push(name);
            }
            continue;
        }
        match ev {
            Event::End(_) => {
                let name = stack
                    .pop()
                    .ok_or_else(|| Error::Parse("malformed XES: unbalanced end tag".into()))?;
                close_element(
                    &name,
                    stack.last().map(|p| p.as_slice()),
                    &mut cases,
                    &mut trace_name,
                    &mut trace_events,
                    &mut event_name,
                    &mut event_time,
                    &mut trace_index,
                )?;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(Error::Parse("malformed XES: unexpected end of document".into()));
    }
    if !saw_log {
        return Err(Error::Parse("malformed XES: no <log> element".into()));
    }
    assemble(cases)
}

#[allow(clippy::too_many_arguments)]
fn close_element(
    name: &[u8],
    parent: Option<&[u8]>,
    cases: &mut Vec<(String, Vec<RawEvent>)>,
    trace_name: &mut Option<String>,
    trace_events: &mut Vec<RawEvent>,
    event_name: &mut Option<String>,
    event_time: &mut Option<i64>,
    trace_index: &mut usize,
) -> Result<()> {
    match (name, parent) {
        (b"event", Some(b"trace")) => {
            let activity = event_name.take().ok_or_else(|| {
                Error::Parse(format!("trace {}: event without concept:name", *trace_index))
            })?;
            trace_events.push(RawEvent {
                activity,
                timestamp: event_time.take(),
            });
        }
        (b"trace", Some(b"log")) => {
            let case = trace_name
                .take()
                .ok_or_else(|| Error::Parse(format!("trace {} has no concept:name", *trace_index)))?;
            cases.push((case, std::mem::take(trace_events)));
            *trace_index += 1;
        }
        _ => {}
    }
    Ok(())
}

/// Reads a log by extension: `.xes` or anything else as CSV.
pub fn read_log(path: &Path, columns: &ColumnMap) -> Result<EventLog> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("xes") => parse_xes(path),
        _ => parse_csv(path, columns),
    }
}

/// Which side of a duration threshold counts as desirable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DesirableSide {
    Above,
    Below,
}

/// Case labels: `true` = desirable (1), `false` = undesirable (0).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelFunction {
    mapping: BTreeMap<String, bool>,
}

impl LabelFunction {
    pub fn new(mapping: BTreeMap<String, bool>) -> Self {
        LabelFunction { mapping }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<String>,
    {
        LabelFunction {
            mapping: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, case_id: &str) -> Option<bool> {
        self.mapping.get(case_id).copied()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.mapping.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Labels aligned with the traces of `log`; fails if any case is unlabeled.
    pub fn vector_for(&self, log: &EventLog) -> Result<Vec<bool>> {
        log.traces()
            .iter()
            .map(|t| {
                self.get(&t.case_id).ok_or_else(|| {
                    Error::InvalidInput(format!("case `{}` has no label", t.case_id))
                })
            })
            .collect()
    }

    /// Splits `log` into (desirable, undesirable) sub-logs.
    pub fn partition(&self, log: &EventLog) -> Result<(EventLog, EventLog)> {
        let labels = self.vector_for(log)?;
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (i, l) in labels.iter().enumerate() {
            if *l {
                pos.push(i)
            } else {
                neg.push(i)
            }
        }
        Ok((log.select(&pos), log.select(&neg)))
    }

    /// Reads a two-column `case_id,label` CSV with labels in {0,1}.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(BufReader::new(file), path)
    }

    pub fn read_csv_from<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut mapping = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let row_err = |message: String| Error::Row {
                path: source.to_path_buf(),
                line,
                message,
            };
            if record.len() < 2 {
                return Err(row_err("expected two columns (case_id,label)".into()));
            }
            let label = match record[1].trim() {
                "1" => true,
                "0" => false,
                other => return Err(row_err(format!("label must be 0 or 1, got `{other}`"))),
            };
            mapping.insert(record[0].to_string(), label);
        }
        Ok(LabelFunction { mapping })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["case_id", "label"])?;
        for (k, v) in &self.mapping {
            w.write_record([k.as_str(), if *v { "1" } else { "0" }])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Labels a case desirable iff its duration lies strictly on `side` of the
/// threshold. A duration equal to the threshold is undesirable.
pub fn label_by_duration(log: &EventLog, threshold_ms: i64, side: DesirableSide) -> Result<LabelFunction> {
    let mut mapping = BTreeMap::new();
    for t in log.traces() {
        let d = t.duration_ms().ok_or_else(|| {
            Error::InvalidInput(format!("case `{}` has no timestamps", t.case_id))
        })?;
        let desirable = match side {
            DesirableSide::Below => d < threshold_ms,
            DesirableSide::Above => d > threshold_ms,
        };
        mapping.insert(t.case_id.clone(), desirable);
    }
    Ok(LabelFunction { mapping })
}

fn class_indices(log: &EventLog, labels: &LabelFunction) -> Result<(Vec<usize>, Vec<usize>)> {
    let v = labels.vector_for(log)?;
    let pos = (0..v.len()).filter(|&i| v[i]).collect();
    let neg = (0..v.len()).filter(|&i| !v[i]).collect();
    Ok((pos, neg))
}

/// Stratified train/test split. Per class, `round(ratio * n)` traces go to
/// training, clamped so both sides keep at least one trace.
pub fn split_train_test(
    log: &EventLog,
    labels: &LabelFunction,
    ratio: f64,
    seed: u64,
) -> Result<(EventLog, EventLog)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0,1), got {ratio}")));
    }
    let (pos, neg) = class_indices(log, labels)?;
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (name, mut class) in [("desirable", pos), ("undesirable", neg)] {
        if class.len() < 2 {
            return Err(Error::Stratify(format!(
                "class `{name}` has {} trace(s); at least 2 are needed",
                class.len()
            )));
        }
        class.shuffle(&mut rng);
        let n_train = ((ratio * class.len() as f64).round() as usize).clamp(1, class.len() - 1);
        train.extend_from_slice(&class[..n_train]);
        test.extend_from_slice(&class[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((log.select(&train), log.select(&test)))
}

/// Randomly drops majority-class traces until both classes have the
/// minority count. Source order is preserved.
pub fn undersample(log: &EventLog, labels: &LabelFunction, seed: u64) -> Result<EventLog> {
    let (pos, neg) = class_indices(log, labels)?;
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidInput(
            "undersampling needs both desirable and undesirable traces".into(),
        ));
    }
    if pos.len() == neg.len() {
        return Ok(log.clone());
    }
    let (minority, mut majority) = if pos.len() < neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = seed::rng(seed);
    majority.shuffle(&mut rng);
    majority.truncate(minority.len());
    let mut keep: Vec<usize> = minority.into_iter().chain(majority).collect();
    keep.sort_unstable();
    Ok(log.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_log(text: &str) -> Result<EventLog> {
        parse_csv_reader(text.as_bytes(), &ColumnMap::default(), Path::new("mem.csv"))
    }

    #[test]
    fn csv_groups_cases() {
        let log = csv_log(
            "case_id,activity,timestamp\n\
             1,p,2024-01-01T00:00:00Z\n1,a,2024-01-01T01:00:00Z\n1,l,2024-01-01T02:00:00Z\n\
             2,p,2024-01-01T00:00:00Z\n2,l,2024-01-01T01:00:00Z\n2,a,2024-01-01T02:00:00Z\n",
        )
        .unwrap();
        assert_eq!(log.len(), 2);
        assert!(log.traces().iter().all(|t| t.len() == 3));
        assert_eq!(log.alphabet().len(), 3);
    }

    #[test]
    fn csv_sorts_by_time_stably() {
        let log = csv_log(
            "case_id,activity,timestamp\n\
             7,c,2024-01-03\n7,a,2024-01-01\n7,b,2024-01-02\n7,d,2024-01-02\n",
        )
        .unwrap();
        assert_eq!(log.traces()[0].activities, vec!["a", "b", "d", "c"]);
    }

    #[test]
    fn csv_errors() {
        let missing = csv_log("case,activity,timestamp\n1,a,2024-01-01\n");
        assert!(matches!(missing, Err(Error::Config(_))));
        let bad_ts = csv_log("case_id,activity,timestamp\n1,a,2024-01-01\n1,b,yesterday\n");
        match bad_ts {
            Err(Error::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn csv_quoting() {
        let log = csv_log("case_id,activity,timestamp\n\"c,1\",\"pick, items\",2024-01-01\n").unwrap();
        assert_eq!(log.traces()[0].case_id, "c,1");
        assert_eq!(log.traces()[0].activities[0], "pick, items");
    }

    const XES_ONE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <string key="concept:name" value="demo"/>
  <trace>
    <string key="concept:name" value="c1"/>
    <event><string key="concept:name" value="l"/><date key="time:timestamp" value="2024-01-01T03:00:00.000+00:00"/></event>
    <event><string key="concept:name" value="p"/><date key="time:timestamp" value="2024-01-01T01:00:00.000+00:00"/><int key="cost" value="3"/></event>
    <event><string key="concept:name" value="a"/><date key="time:timestamp" value="2024-01-01T02:00:00.000+00:00"/></event>
  </trace>
</log>"#;

    #[test]
    fn xes_reorders_events() {
        let log = parse_xes_str(XES_ONE).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.traces()[0].activities, vec!["p", "a", "l"]);
        assert_eq!(log.traces()[0].duration_ms(), Some(2 * 3600 * 1000));
    }

    #[test]
    fn xes_rejects_duplicates_and_nameless() {
        let dup = r#"<log><trace><string key="concept:name" value="x"/></trace><trace><string key="concept:name" value="x"/></trace></log>"#;
        assert!(matches!(parse_xes_str(dup), Err(Error::InvalidInput(_))));
        let nameless = r#"<log><trace><string key="concept:name" value="x"/></trace><trace><event><string key="concept:name" value="a"/></event></trace></log>"#;
        let err = parse_xes_str(nameless).unwrap_err().to_string();
        assert!(err.contains("trace 1"), "{err}");
        assert!(matches!(parse_xes_str("<log><trace>"), Err(Error::Parse(_))));
    }

    fn timed_log(durations_h: &[i64]) -> EventLog {
        let traces = durations_h
            .iter()
            .enumerate()
            .map(|(i, h)| Trace {
                case_id: i.to_string(),
                activities: vec!["a".into(), "b".into()],
                timestamps: vec![0, h * 3_600_000],
            })
            .collect();
        EventLog::new(traces).unwrap()
    }

    #[test]
    fn duration_labels() {
        let day = 24 * 3_600_000;
        let log = timed_log(&[30 * 24, 28 * 24, 5 * 24]);
        let l = label_by_duration(&log, 28 * day, DesirableSide::Below).unwrap();
        assert_eq!(l.get("0"), Some(false));
        assert_eq!(l.get("1"), Some(false), "boundary goes to the complementary class");
        assert_eq!(l.get("2"), Some(true));
        let single = EventLog::new(vec![Trace {
            case_id: "s".into(),
            activities: vec!["a".into()],
            timestamps: vec![10],
        }])
        .unwrap();
        assert_eq!(label_by_duration(&single, 1, DesirableSide::Below).unwrap().get("s"), Some(true));
    }

    fn labeled(n_pos: usize, n_neg: usize) -> (EventLog, LabelFunction) {
        let seqs: Vec<Vec<&str>> = (0..n_pos + n_neg).map(|_| vec!["a"]).collect();
        let log = EventLog::from_sequences(&seqs);
        let labels = LabelFunction::from_pairs(
            log.traces().iter().enumerate().map(|(i, t)| (t.case_id.clone(), i < n_pos)),
        );
        (log, labels)
    }

    #[test]
    fn stratified_split_counts() {
        let (log, labels) = labeled(60, 40);
        let (train, test) = split_train_test(&log, &labels, 0.7, 3).unwrap();
        let tl = labels.vector_for(&train).unwrap();
        assert_eq!(tl.iter().filter(|&&l| l).count(), 42);
        assert_eq!(tl.iter().filter(|&&l| !l).count(), 28);
        assert_eq!(train.len() + test.len(), 100);
        let again = split_train_test(&log, &labels, 0.7, 3).unwrap();
        assert_eq!(again.0, train);

        let (tiny, tiny_labels) = labeled(1, 1);
        assert!(matches!(split_train_test(&tiny, &tiny_labels, 0.5, 0), Err(Error::Stratify(_))));
        let (two, two_labels) = labeled(2, 2);
        let (a, b) = split_train_test(&two, &two_labels, 0.5, 0).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
    }

    #[test]
    fn undersample_balances() {
        let (log, labels) = labeled(80, 20);
        let out = undersample(&log, &labels, 1).unwrap();
        let v = labels.vector_for(&out).unwrap();
        assert_eq!(v.iter().filter(|&&l| l).count(), 20);
        assert_eq!(v.iter().filter(|&&l| !l).count(), 20);
        let (bal, bal_labels) = labeled(5, 5);
        assert_eq!(undersample(&bal, &bal_labels, 1).unwrap(), bal);
        let (one, one_labels) = labeled(3, 0);
        assert!(undersample(&one, &one_labels, 1).is_err());
    }

    #[test]
    fn label_csv_roundtrip_errors() {
        let l = LabelFunction::read_csv_from("case_id,label\n1,1\n2,0\n".as_bytes(), Path::new("l")).unwrap();
        assert_eq!(l.get("1"), Some(true));
        let bad = LabelFunction::read_csv_from("case_id,label\n1,yes\n".as_bytes(), Path::new("l"));
        assert!(matches!(bad, Err(Error::Row { .. })));
    }
}
