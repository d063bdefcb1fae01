//! Alignment-based fitness, escaping-edges precision and the discriminative
//! metrics comparing a model against desirable and undesirable traces.

mod alignment;

pub use alignment::{align, align_capped, Alignment, Move};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::{Marking, PetriNet, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::event_log::EventLog;

#[derive(Debug, Clone)]
pub struct AlignedVariant {
    pub activities: Vec<String>,
    pub count: usize,
    pub alignment: Alignment,
}

/// Optimal alignments of every distinct trace of a log, with case counts.
#[derive(Debug, Clone)]
pub struct AlignedLog {
    pub variants: Vec<AlignedVariant>,
    /// Cost of the cheapest model-only run.
    pub shortest_path: usize,
}

pub fn align_log(log: &EventLog, net: &PetriNet) -> Result<AlignedLog> {
    if log.is_empty() {
        return Err(Error::InvalidInput("cannot measure conformance on an empty log".into()));
    }
    let shortest_path = net
        .shortest_path_cost(DEFAULT_STATE_CAP)?
        .ok_or_else(|| Error::InvalidInput("final marking is unreachable".into()))?;
    let mut counts: BTreeMap<&[String], usize> = BTreeMap::new();
    for t in log.traces() {
        *counts.entry(t.activities.as_slice()).or_insert(0) += 1;
    }
    let keys: Vec<(&[String], usize)> = counts.into_iter().collect();
    let variants = keys
        .into_par_iter()
        .map(|(acts, count)| {
            Ok(AlignedVariant {
                activities: acts.to_vec(),
                count,
                alignment: align(acts, net)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignedLog {
        variants,
        shortest_path,
    })
}

impl AlignedLog {
    fn cases(&self) -> usize {
        self.variants.iter().map(|v| v.count).sum()
    }

    /// Case-weighted mean of `1 − cost / (|σ| + shortest model path)`.
    pub fn alignment_fitness(&self) -> f64 {
        let sum: f64 = self
            .variants
            .iter()
            .map(|v| {
                let denom = (v.activities.len() + self.shortest_path) as f64;
                let fit = if denom == 0.0 {
                    1.0
                } else {
                    1.0 - v.alignment.cost as f64 / denom
                };
                fit * v.count as f64
            })
            .sum();
        sum / self.cases() as f64
    }

    /// Fraction of cases aligned at zero cost.
    pub fn trace_fitness(&self) -> f64 {
        let fit: usize = self.variants.iter().filter(|v| v.alignment.cost == 0).map(|v| v.count).sum();
        fit as f64 / self.cases() as f64
    }

    /// Escaping-edges precision over the model-projected traces. Every prefix
    /// state, including the one after the last event, contributes the labels
    /// the model enables there; those never observed after the same prefix in
    /// the log escape.
    pub fn precision(&self, net: &PetriNet) -> Result<f64> {
        let mut observed: HashMap<Vec<&str>, BTreeSet<&str>> = HashMap::new();
        let projected: Vec<Vec<&str>> = self.variants.iter().map(|v| v.alignment.model_projection()).collect();
        for p in &projected {
            for i in 0..=p.len() {
                let e = observed.entry(p[..i].to_vec()).or_default();
                if i < p.len() {
                    e.insert(p[i]);
                }
            }
        }
        let mut cache: HashMap<Marking, BTreeSet<String>> = HashMap::new();
        let (mut enabled_sum, mut escaping_sum) = (0usize, 0usize);
        for (v, p) in self.variants.iter().zip(&projected) {
            // markings right after each visible model step
            let mut markings = vec![net.initial.clone()];
            let mut m = net.initial.clone();
            for mv in &v.alignment.moves {
                if let Some(t) = mv.transition() {
                    m = net.fire(t, &m)?;
                    if !net.transitions[t].is_silent() {
                        markings.push(m.clone());
                    }
                }
            }
            for (i, mk) in markings.iter().enumerate() {
                if !cache.contains_key(mk) {
                    cache.insert(mk.clone(), net.enabled_labels(mk, DEFAULT_STATE_CAP)?);
                }
                let en = &cache[mk];
                let obs = &observed[&p[..i]];
                enabled_sum += en.len() * v.count;
                escaping_sum += en.iter().filter(|l| !obs.contains(l.as_str())).count() * v.count;
            }
        }
        Ok(if enabled_sum == 0 {
            1.0
        } else {
            1.0 - escaping_sum as f64 / enabled_sum as f64
        })
    }
}

pub fn alignment_fitness(log: &EventLog, net: &PetriNet) -> Result<f64> {
    Ok(align_log(log, net)?.alignment_fitness())
}

pub fn trace_fitness(log: &EventLog, net: &PetriNet) -> Result<f64> {
    Ok(align_log(log, net)?.trace_fitness())
}

pub fn precision(log: &EventLog, net: &PetriNet) -> Result<f64> {
    align_log(log, net)?.precision(net)
}

/// Harmonic mean, 0 when both terms are 0.
pub fn f1(x: f64, y: f64) -> f64 {
    if x + y == 0.0 {
        0.0
    } else {
        2.0 * x * y / (x + y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub t_fit_pos: f64,
    pub t_fit_neg: f64,
    pub a_fit_pos: f64,
    pub a_fit_neg: f64,
    pub prc_pos: f64,
    pub prc_neg: f64,
    pub a_acc: f64,
    pub t_acc: f64,
    pub a_f1: f64,
    pub t_f1: f64,
}

impl MetricsReport {
    /// Builds the discriminative metrics from per-log fitness values.
    pub fn from_fitness(t_fit_pos: f64, t_fit_neg: f64, a_fit_pos: f64, a_fit_neg: f64, prc_pos: f64, prc_neg: f64) -> Self {
        MetricsReport {
            t_fit_pos,
            t_fit_neg,
            a_fit_pos,
            a_fit_neg,
            prc_pos,
            prc_neg,
            a_acc: a_fit_pos - a_fit_neg,
            t_acc: t_fit_pos - t_fit_neg,
            a_f1: f1(a_fit_pos, 1.0 - a_fit_neg),
            t_f1: f1(t_fit_pos, 1.0 - t_fit_neg),
        }
    }
}

pub fn discriminative_metrics(positive: &EventLog, negative: &EventLog, net: &PetriNet) -> Result<MetricsReport> {
    let p = align_log(positive, net)?;
    let n = align_log(negative, net)?;
    Ok(MetricsReport::from_fitness(
        p.trace_fitness(),
        n.trace_fitness(),
        p.alignment_fitness(),
        n.alignment_fitness(),
        p.precision(net)?,
        n.precision(net)?,
    ))
}
