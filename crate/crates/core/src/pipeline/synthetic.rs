//! Generators for the bundled example logs.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::event_log::{EventLog, LabelFunction, Trace};
use crate::seed;

const HOUR_MS: i64 = 3_600_000;
/// 2024-01-01T00:00:00Z.
const EPOCH_MS: i64 = 1_704_067_200_000;

/// Variants of the three-activity example with their (desirable,
/// undesirable) counts.
pub const ORDERINGS_VARIANTS: [(&str, usize, usize); 6] = [
    ("pal", 100, 0),
    ("pla", 100, 0),
    ("apl", 50, 50),
    ("alp", 50, 50),
    ("lap", 0, 100),
    ("lpa", 0, 100),
];

/// Duration threshold used by the bundled synthetic config.
pub const SYNTHETIC_THRESHOLD_HOURS: f64 = 36.0;

/// The 600-trace example log and its labels. One event per hour, cases
/// starting a day apart.
pub fn orderings() -> (EventLog, LabelFunction) {
    let mut traces = Vec::new();
    let mut labels = Vec::new();
    for (variant, pos, neg) in ORDERINGS_VARIANTS {
        for i in 0..pos + neg {
            let id = format!("case_{:03}", traces.len() + 1);
            let start = EPOCH_MS + traces.len() as i64 * 24 * HOUR_MS;
            let activities: Vec<String> = variant.chars().map(String::from).collect();
            traces.push(Trace {
                case_id: id.clone(),
                timestamps: (0..activities.len() as i64).map(|k| start + k * HOUR_MS).collect(),
                activities,
            });
            labels.push((id, i < pos));
        }
    }
    let log = EventLog::new(traces).expect("distinct case ids");
    (log, LabelFunction::from_pairs(labels))
}

fn hours<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> i64 {
    (rng.gen_range(lo..hi) * HOUR_MS as f64).round() as i64
}

/// A loan-handling style process over 13 activities. Slow paths (full
/// check, information requests, escalation) make a case more likely to
/// exceed [`SYNTHETIC_THRESHOLD_HOURS`].
pub fn synthetic(n: usize, seed: u64) -> EventLog {
    let mut rng = seed::rng(seed::derive(seed, "synthetic"));
    let mut traces = Vec::with_capacity(n);
    for c in 0..n {
        let mut t = EPOCH_MS + c as i64 * 2 * HOUR_MS;
        let mut events: Vec<(&str, i64)> = Vec::new();
        let mut push = |name: &'static str, dur: i64, t: &mut i64| {
            events.push((name, *t));
            *t += dur;
        };
        push("register", hours(&mut rng, 0.5, 2.0), &mut t);
        let full = rng.gen_bool(0.4);
        if full {
            push("check_full", hours(&mut rng, 10.0, 30.0), &mut t);
        } else {
            push("check_basic", hours(&mut rng, 2.0, 6.0), &mut t);
        }
        let verify = hours(&mut rng, 2.0, 8.0);
        let assess = hours(&mut rng, 3.0, 10.0);
        if rng.gen_bool(0.5) {
            push("verify_docs", verify, &mut t);
            push("assess_risk", assess, &mut t);
        } else {
            push("assess_risk", assess, &mut t);
            push("verify_docs", verify, &mut t);
        }
        if rng.gen_bool(if full { 0.5 } else { 0.2 }) {
            loop {
                push("request_info", hours(&mut rng, 1.0, 3.0), &mut t);
                push("receive_info", hours(&mut rng, 12.0, 36.0), &mut t);
                if !rng.gen_bool(0.3) {
                    break;
                }
            }
        }
        if rng.gen_bool(0.15) {
            push("escalate", hours(&mut rng, 10.0, 30.0), &mut t);
        }
        push("decide", hours(&mut rng, 1.0, 4.0), &mut t);
        if rng.gen_bool(0.7) {
            push("approve", hours(&mut rng, 0.5, 2.0), &mut t);
            push("notify", hours(&mut rng, 0.5, 1.0), &mut t);
            push("archive", 0, &mut t);
        } else {
            push("reject", hours(&mut rng, 0.5, 2.0), &mut t);
            push("notify", 0, &mut t);
        }
        traces.push(Trace {
            case_id: format!("case_{:04}", c + 1),
            activities: events.iter().map(|(a, _)| a.to_string()).collect(),
            timestamps: events.iter().map(|&(_, ts)| ts).collect(),
        });
    }
    EventLog::new(traces).expect("distinct case ids")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `orderings.csv` and `orderings_labels.csv` into `dir`.
pub fn write_orderings(dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let (log, labels) = orderings();
    log.write_csv(&dir.join("orderings.csv"))?;
    labels.write_csv(&dir.join("orderings_labels.csv"))
}

/// Writes `synthetic.csv` into `dir`.
pub fn write_synthetic(dir: &Path, n: usize, seed: u64) -> Result<()> {
    ensure_dir(dir)?;
    synthetic(n, seed).write_csv(&dir.join("synthetic.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{label_by_duration, DesirableSide};

    #[test]
    fn orderings_counts() {
        let (log, labels) = orderings();
        assert_eq!(log.len(), 600);
        assert_eq!(labels.iter().filter(|(_, l)| *l).count(), 300);
        let pal = log.traces().iter().filter(|t| t.activities == ["p", "a", "l"]).count();
        assert_eq!(pal, 100);
    }

    #[test]
    fn synthetic_is_seeded_and_mixed() {
        let a = synthetic(300, 5);
        assert_eq!(a, synthetic(300, 5));
        assert_ne!(a, synthetic(300, 6));
        assert!(a.alphabet().len() >= 10);
        let labels = label_by_duration(&a, (SYNTHETIC_THRESHOLD_HOURS * HOUR_MS as f64) as i64, DesirableSide::Below).unwrap();
        let pos = labels.iter().filter(|(_, l)| *l).count();
        assert!(pos > 60 && pos < 240, "{pos}");
    }
}
