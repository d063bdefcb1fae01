//! Declare templates, three-valued per-trace evaluation, constraint discovery
//! and subsumption pruning.
//!
//! Every template is read as "activation ⇒ target": a trace in which the
//! activation never fires is vacuously satisfied, a trace where some
//! activation's target fails is violated, and otherwise satisfied.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{EventLog, Trace};

/// Default cap on the alphabet size for discovery.
pub const DEFAULT_ACTIVITY_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Template {
    AtLeast1,
    End,
    RespondedExistence,
    Response,
    AlternateResponse,
    ChainResponse,
    Precedence,
    AlternatePrecedence,
    ChainPrecedence,
    Succession,
    AlternateSuccession,
    ChainSuccession,
    CoExistence,
    NotCoExistence,
    NotSuccession,
    NotChainSuccession,
}

impl Template {
    pub const ALL: [Template; 16] = [
        Template::AtLeast1,
        Template::End,
        Template::RespondedExistence,
        Template::Response,
        Template::AlternateResponse,
        Template::ChainResponse,
        Template::Precedence,
        Template::AlternatePrecedence,
        Template::ChainPrecedence,
        Template::Succession,
        Template::AlternateSuccession,
        Template::ChainSuccession,
        Template::CoExistence,
        Template::NotCoExistence,
        Template::NotSuccession,
        Template::NotChainSuccession,
    ];

    pub fn arity(self) -> usize {
        match self {
            Template::AtLeast1 | Template::End => 1,
            _ => 2,
        }
    }

    /// Templates whose meaning does not depend on argument order.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Template::CoExistence | Template::NotCoExistence)
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::AtLeast1 => "AtLeast1",
            Template::End => "End",
            Template::RespondedExistence => "RespondedExistence",
            Template::Response => "Response",
            Template::AlternateResponse => "AlternateResponse",
            Template::ChainResponse => "ChainResponse",
            Template::Precedence => "Precedence",
            Template::AlternatePrecedence => "AlternatePrecedence",
            Template::ChainPrecedence => "ChainPrecedence",
            Template::Succession => "Succession",
            Template::AlternateSuccession => "AlternateSuccession",
            Template::ChainSuccession => "ChainSuccession",
            Template::CoExistence => "CoExistence",
            Template::NotCoExistence => "NotCoExistence",
            Template::NotSuccession => "NotSuccession",
            Template::NotChainSuccession => "NotChainSuccession",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown template `{s}`")))
    }
}

/// Subsumption chains, strictest first.
pub const SUBSUMPTION_CHAINS: [&[Template]; 4] = [
    &[
        Template::ChainResponse,
        Template::AlternateResponse,
        Template::Response,
        Template::RespondedExistence,
    ],
    &[
        Template::ChainPrecedence,
        Template::AlternatePrecedence,
        Template::Precedence,
    ],
    &[
        Template::ChainSuccession,
        Template::AlternateSuccession,
        Template::Succession,
        Template::CoExistence,
    ],
    &[Template::NotSuccession, Template::NotChainSuccession],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "satisfied")]
    Satisfied,
    #[serde(rename = "violated")]
    Violated,
    #[serde(rename = "vac-satisfied")]
    VacSatisfied,
}

impl Outcome {
    /// Fixed outcome order used by the feature space.
    pub const ALL: [Outcome; 3] = [Outcome::Satisfied, Outcome::Violated, Outcome::VacSatisfied];

    pub fn index(self) -> usize {
        match self {
            Outcome::Satisfied => 0,
            Outcome::Violated => 1,
            Outcome::VacSatisfied => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Satisfied => "satisfied",
            Outcome::Violated => "violated",
            Outcome::VacSatisfied => "vac-satisfied",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Outcome::ALL
            .iter()
            .copied()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown outcome `{s}`")))
    }
}

/// A template bound to concrete activities, e.g. `Response(a,b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Constraint {
    template: Template,
    args: Vec<String>,
}

impl Constraint {
    pub fn new(template: Template, args: Vec<String>) -> Result<Self> {
        if args.len() != template.arity() {
            return Err(Error::InvalidInput(format!(
                "{template} takes {} argument(s), got {}",
                template.arity(),
                args.len()
            )));
        }
        if args.len() == 2 && args[0] == args[1] {
            return Err(Error::InvalidInput(format!(
                "{template} needs two distinct activities, got `{}` twice",
                args[0]
            )));
        }
        Ok(Constraint { template, args })
    }

    pub fn unary(template: Template, a: &str) -> Self {
        Constraint::new(template, vec![a.to_string()]).expect("unary template")
    }

    pub fn binary(template: Template, a: &str, b: &str) -> Self {
        Constraint::new(template, vec![a.to_string(), b.to_string()]).expect("binary template, distinct args")
    }

    pub fn template(&self) -> Template {
        self.template
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    /// Same template family, different template (used for subsumption lookups).
    fn with_template(&self, template: Template) -> Constraint {
        Constraint {
            template,
            args: self.args.clone(),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.template, self.args.join(","))
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| Error::Parse(format!("bad constraint `{s}`")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("bad constraint `{s}`")));
        }
        let template: Template = s[..open].parse()?;
        let inner = &s[open + 1..s.len() - 1];
        let args = inner.split(',').map(str::to_string).collect();
        Constraint::new(template, args)
    }
}

impl TryFrom<String> for Constraint {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Constraint> for String {
    fn from(c: Constraint) -> String {
        c.to_string()
    }
}

fn outcome(activated: bool, violated: bool) -> Outcome {
    match (activated, violated) {
        (false, _) => Outcome::VacSatisfied,
        (true, true) => Outcome::Violated,
        (true, false) => Outcome::Satisfied,
    }
}

fn response<T: PartialEq>(t: &[T], a: &T, b: &T) -> Outcome {
    let (mut seen, mut pending) = (false, false);
    for x in t {
        if x == a {
            seen = true;
            pending = true;
        } else if x == b {
            pending = false;
        }
    }
    outcome(seen, pending)
}

fn alternate_response<T: PartialEq>(t: &[T], a: &T, b: &T) -> Outcome {
    let (mut seen, mut pending, mut bad) = (false, false, false);
    for x in t {
        if x == a {
            bad |= pending;
            seen = true;
            pending = true;
        } else if x == b {
            pending = false;
        }
    }
    outcome(seen, bad || pending)
}

fn chain_response<T: PartialEq>(t: &[T], a: &T, b: &T) -> Outcome {
    let (mut seen, mut bad) = (false, false);
    for (i, x) in t.iter().enumerate() {
        if x == a {
            seen = true;
            bad |= t.get(i + 1) != Some(b);
        }
    }
    outcome(seen, bad)
}

fn precedence<T: PartialEq>(t: &[T], a: &T, b: &T) -> Outcome {
    let (mut seen_a, mut seen_b, mut bad) = (false, false, false);
    for x in t {
        if x == a {
            seen_a = true;
        } else if x == b {
            seen_b = true;
            bad |= !seen_a;
        }
    }
    outcome(seen_b, bad)
}

fn alternate_precedence<T: PartialEq>(t: &[T], a: &T, b: &T) -> Outcome {
    let (mut armed, mut seen_b, mut bad) = (false, false, false);
    for x in t {
        if x == a {
            armed = true;
        } else if x == b {
            seen_b = true;
            bad |= !armed;
            armed = false;
        }
    }
    outcome(seen_b, bad)
}

fn chain_precedence<T: PartialEq>(t: &[T], a: &T, b: &T) -> Outcome {
    let (mut seen_b, mut bad) = (false, false);
    for (j, x) in t.iter().enumerate() {
        if x == b {
            seen_b = true;
            bad |= j == 0 || &t[j - 1] != a;
        }
    }
    outcome(seen_b, bad)
}

fn conjunction(forward: Outcome, backward: Outcome) -> Outcome {
    let activated = forward != Outcome::VacSatisfied || backward != Outcome::VacSatisfied;
    let violated = forward == Outcome::Violated || backward == Outcome::Violated;
    outcome(activated, violated)
}

/// Evaluates a template over any sequence of comparable symbols.
pub fn evaluate_seq<T: PartialEq>(template: Template, t: &[T], a: &T, b: Option<&T>) -> Outcome {
    let b = || b.expect("binary template needs a second argument");
    match template {
        Template::AtLeast1 => outcome(!t.is_empty(), !t.contains(a)),
        Template::End => outcome(!t.is_empty(), t.last() != Some(a)),
        Template::RespondedExistence => outcome(t.contains(a), !t.contains(b())),
        Template::Response => response(t, a, b()),
        Template::AlternateResponse => alternate_response(t, a, b()),
        Template::ChainResponse => chain_response(t, a, b()),
        Template::Precedence => precedence(t, a, b()),
        Template::AlternatePrecedence => alternate_precedence(t, a, b()),
        Template::ChainPrecedence => chain_precedence(t, a, b()),
        Template::Succession => conjunction(response(t, a, b()), precedence(t, a, b())),
        Template::AlternateSuccession => {
            conjunction(alternate_response(t, a, b()), alternate_precedence(t, a, b()))
        }
        Template::ChainSuccession => conjunction(chain_response(t, a, b()), chain_precedence(t, a, b())),
        Template::CoExistence => {
            let (has_a, has_b) = (t.contains(a), t.contains(b()));
            outcome(has_a || has_b, !(has_a && has_b))
        }
        Template::NotCoExistence => {
            let (has_a, has_b) = (t.contains(a), t.contains(b()));
            outcome(has_a || has_b, has_a && has_b)
        }
        Template::NotSuccession => {
            let (mut seen_a, mut bad) = (false, false);
            for x in t {
                if x == a {
                    seen_a = true;
                } else if x == b() && seen_a {
                    bad = true;
                }
            }
            outcome(seen_a, bad)
        }
        Template::NotChainSuccession => {
            let (mut seen_a, mut bad) = (false, false);
            for (i, x) in t.iter().enumerate() {
                if x == a {
                    seen_a = true;
                    bad |= t.get(i + 1) == Some(b());
                }
            }
            outcome(seen_a, bad)
        }
    }
}

pub fn evaluate_activities<S: AsRef<str>>(activities: &[S], constraint: &Constraint) -> Outcome {
    let seq: Vec<&str> = activities.iter().map(AsRef::as_ref).collect();
    let a = constraint.args[0].as_str();
    let b = constraint.args.get(1).map(String::as_str);
    evaluate_seq(constraint.template, &seq, &a, b.as_ref())
}

pub fn evaluate(trace: &Trace, constraint: &Constraint) -> Outcome {
    evaluate_activities(&trace.activities, constraint)
}

/// Integer-coded view of a log, used for bulk evaluation.
pub(crate) struct CodedLog {
    index: BTreeMap<String, u32>,
    pub traces: Vec<Vec<u32>>,
}

impl CodedLog {
    pub fn new(log: &EventLog) -> Self {
        let index: BTreeMap<String, u32> = log.alphabet().iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        let traces = log
            .traces()
            .iter()
            .map(|t| t.activities.iter().map(|a| index[a]).collect())
            .collect();
        CodedLog { index, traces }
    }

    /// Code for an activity; unknown names get a code that never occurs.
    pub fn code(&self, name: &str) -> u32 {
        self.index.get(name).copied().unwrap_or(u32::MAX)
    }

    pub fn evaluate(&self, trace: usize, c: &Constraint) -> Outcome {
        let a = self.code(&c.args[0]);
        let b = c.args.get(1).map(|s| self.code(s));
        evaluate_seq(c.template, &self.traces[trace], &a, b.as_ref())
    }

    pub fn column(&self, c: &Constraint) -> Vec<Outcome> {
        (0..self.traces.len()).map(|i| self.evaluate(i, c)).collect()
    }
}

/// Every catalog instantiation over `alphabet`. Symmetric templates are
/// instantiated once per unordered pair (lexically smaller activity first).
pub fn candidate_constraints<'a, I>(alphabet: I) -> Vec<Constraint>
where
    I: IntoIterator<Item = &'a String>,
{
    let acts: Vec<&String> = alphabet.into_iter().collect();
    let mut out = Vec::new();
    for &template in &Template::ALL {
        if template.arity() == 1 {
            out.extend(acts.iter().map(|a| Constraint::unary(template, a)));
            continue;
        }
        for a in &acts {
            for b in &acts {
                if a == b || (template.is_symmetric() && a > b) {
                    continue;
                }
                out.push(Constraint::binary(template, a, b));
            }
        }
    }
    out
}

/// All candidate constraints satisfied (non-vacuously) by at least one
/// trace, after subsumption pruning. Sorted by textual form.
pub fn discover_constraints(log: &EventLog, activity_cap: usize) -> Result<Vec<Constraint>> {
    if log.is_empty() {
        return Err(Error::InvalidInput("cannot discover constraints on an empty log".into()));
    }
    if log.alphabet().len() > activity_cap {
        return Err(Error::AlphabetTooLarge {
            found: log.alphabet().len(),
            cap: activity_cap,
        });
    }
    let coded = CodedLog::new(log);
    let candidates = candidate_constraints(log.alphabet());
    let mut evaluated: Vec<(Constraint, Vec<Outcome>)> = candidates
        .into_par_iter()
        .filter_map(|c| {
            let col = coded.column(&c);
            col.contains(&Outcome::Satisfied).then_some((c, col))
        })
        .collect();
    evaluated.sort_by_cached_key(|(c, _)| c.to_string());
    Ok(prune_evaluated(evaluated))
}

/// Drops the weaker member of every subsumption pair whose evaluation
/// vectors over `log` are identical.
pub fn prune_subsumption(constraints: &[Constraint], log: &EventLog) -> Vec<Constraint> {
    let coded = CodedLog::new(log);
    let evaluated = constraints.iter().map(|c| (c.clone(), coded.column(c))).collect();
    prune_evaluated(evaluated)
}

fn prune_evaluated(evaluated: Vec<(Constraint, Vec<Outcome>)>) -> Vec<Constraint> {
    let lookup: std::collections::HashMap<&Constraint, &Vec<Outcome>> =
        evaluated.iter().map(|(c, v)| (c, v)).collect();
    let mut weaker_removed = std::collections::HashSet::new();
    for (c, column) in &evaluated {
        for chain in SUBSUMPTION_CHAINS {
            let Some(pos) = chain.iter().position(|&t| t == c.template) else {
                continue;
            };
            for &weaker in &chain[pos + 1..] {
                let w = c.with_template(weaker);
                if lookup.get(&w).is_some_and(|wv| *wv == column) {
                    weaker_removed.insert(w);
                }
            }
        }
    }
    evaluated
        .into_iter()
        .map(|(c, _)| c)
        .filter(|c| !weaker_removed.contains(c))
        .collect()
}
