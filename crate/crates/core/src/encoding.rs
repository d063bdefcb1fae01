//! Binary (constraint, outcome) feature space and rule conjunctions over it.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::declare::{CodedLog, Constraint, Outcome};
use crate::error::{Error, Result};
use crate::event_log::{EventLog, Trace};

/// Ordered (constraint, outcome) features: constraints sorted by textual
/// form, each expanded into satisfied / violated / vac-satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    constraints: Vec<Constraint>,
}

impl FeatureSpace {
    pub fn new(constraints: &[Constraint]) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidInput("feature space needs at least one constraint".into()));
        }
        let mut keyed: Vec<(String, Constraint)> =
            constraints.iter().map(|c| (c.to_string(), c.clone())).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        Ok(FeatureSpace {
            constraints: keyed.into_iter().map(|(_, c)| c).collect(),
        })
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len() * 3
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn feature(&self, index: usize) -> Option<(&Constraint, Outcome)> {
        self.constraints
            .get(index / 3)
            .map(|c| (c, Outcome::ALL[index % 3]))
    }

    pub fn index_of(&self, constraint: &Constraint, outcome: Outcome) -> Option<usize> {
        self.constraints
            .iter()
            .position(|c| c == constraint)
            .map(|i| i * 3 + outcome.index())
    }

    /// `Template(args)|outcome`
    pub fn label(&self, index: usize) -> String {
        match self.feature(index) {
            Some((c, o)) => format!("{c}|{o}"),
            None => format!("#{index}"),
        }
    }

    pub fn encode(&self, trace: &Trace) -> FeatureVector {
        self.encode_activities(&trace.activities)
    }

    pub fn encode_activities<S: AsRef<str>>(&self, activities: &[S]) -> FeatureVector {
        let mut bits = vec![false; self.len()];
        for (i, c) in self.constraints.iter().enumerate() {
            let o = crate::declare::evaluate_activities(activities, c);
            bits[i * 3 + o.index()] = true;
        }
        FeatureVector { bits }
    }

    /// Encodes every trace of `log`, in log order.
    pub fn encode_log(&self, log: &EventLog) -> Vec<FeatureVector> {
        let coded = CodedLog::new(log);
        (0..log.len())
            .into_par_iter()
            .map(|t| {
                let mut bits = vec![false; self.len()];
                for (i, c) in self.constraints.iter().enumerate() {
                    bits[i * 3 + coded.evaluate(t, c).index()] = true;
                }
                FeatureVector { bits }
            })
            .collect()
    }

    /// CSV with one row per case and one column per feature label.
    pub fn write_encoded_csv<W: Write>(&self, log: &EventLog, vectors: &[FeatureVector], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["case_id".to_string()];
        header.extend((0..self.len()).map(|i| self.label(i)));
        w.write_record(&header)?;
        for (t, v) in log.traces().iter().zip(vectors) {
            let mut row = vec![t.case_id.clone()];
            row.extend(v.bits.iter().map(|&b| if b { "1".to_string() } else { "0".to_string() }));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<encoded csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    bits: Vec<bool>,
}

impl FeatureVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        FeatureVector { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// A signed feature test: `bits[feature] == expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub feature: usize,
    pub expected: bool,
}

/// Where a rule came from: tree index and leaf node index within the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tree: usize,
    pub leaf: usize,
}

/// Conjunction of literals. Literals are kept sorted by feature index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    literals: Vec<Literal>,
    pub provenance: Option<Provenance>,
}

impl Rule {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self> {
        literals.sort();
        literals.dedup();
        if literals.windows(2).any(|w| w[0].feature == w[1].feature) {
            return Err(Error::InvalidInput("rule tests the same feature twice".into()));
        }
        Ok(Rule {
            literals,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    /// Rendering such as `(NotSuccession(l,p),satisfied)=1 ∧ (End(a),violated)=0`.
    pub fn display<'a>(&'a self, space: &'a FeatureSpace) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, space }
    }

    /// Coverage test; never fails for in-range literals.
    #[inline]
    pub(crate) fn holds_unchecked(&self, v: &FeatureVector) -> bool {
        self.literals.iter().all(|l| v.bits[l.feature] == l.expected)
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    space: &'a FeatureSpace,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rule.literals.is_empty() {
            return f.write_str("true");
        }
        for (i, l) in self.rule.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            match self.space.feature(l.feature) {
                Some((c, o)) => write!(f, "({c},{o})={}", u8::from(l.expected))?,
                None => write!(f, "#{}={}", l.feature, u8::from(l.expected))?,
            }
        }
        Ok(())
    }
}

/// True iff every literal of `rule` matches `vector`. The empty rule holds
/// everywhere.
pub fn rule_holds(vector: &FeatureVector, rule: &Rule) -> Result<bool> {
    if let Some(l) = rule.literals.iter().find(|l| l.feature >= vector.len()) {
        return Err(Error::OutOfRange {
            index: l.feature,
            len: vector.len(),
        });
    }
    Ok(rule.holds_unchecked(vector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::declare::Template;

    fn space(cs: &[&str]) -> FeatureSpace {
        let cs: Vec<Constraint> = cs.iter().map(|c| c.parse().unwrap()).collect();
        FeatureSpace::new(&cs).unwrap()
    }

    #[test]
    fn feature_space_is_canonical() {
        let a = space(&["Response(a,b)", "AtLeast1(a)"]);
        let b = space(&["AtLeast1(a)", "Response(a,b)"]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(FeatureSpace::new(&[]).is_err());
        assert_eq!(a.label(4), "Response(a,b)|violated");
    }

    #[test]
    fn encode_is_one_hot() {
        let s = space(&["CoExistence(a,p)", "AtLeast1(p)", "ChainResponse(a,p)"]);
        let v = s.encode_activities(&["p", "l"]);
        let coex: Constraint = "CoExistence(a,p)".parse().unwrap();
        assert!(v.get(s.index_of(&coex, Outcome::Violated).unwrap()));
        assert!(!v.get(s.index_of(&coex, Outcome::Satisfied).unwrap()));
        assert_eq!(v.popcount(), 3);
    }

    #[test]
    fn rule_holds_examples() {
        let s = space(&["NotSuccession(l,p)", "NotSuccession(a,p)"]);
        let lp = Constraint::binary(Template::NotSuccession, "l", "p");
        let ap = Constraint::binary(Template::NotSuccession, "a", "p");
        let rule = Rule::new(vec![
            Literal { feature: s.index_of(&lp, Outcome::Satisfied).unwrap(), expected: true },
            Literal { feature: s.index_of(&ap, Outcome::Satisfied).unwrap(), expected: true },
        ])
        .unwrap();
        assert!(rule_holds(&s.encode_activities(&["p", "a", "l"]), &rule).unwrap());
        assert!(!rule_holds(&s.encode_activities(&["l", "p", "a"]), &rule).unwrap());
        let empty = Rule::new(vec![]).unwrap();
        assert!(rule_holds(&s.encode_activities(&["l"]), &empty).unwrap());
        let oob = Rule::new(vec![Literal { feature: 99, expected: true }]).unwrap();
        assert!(matches!(rule_holds(&s.encode_activities(&["l"]), &oob), Err(Error::OutOfRange { .. })));
        assert!(Rule::new(vec![
            Literal { feature: 1, expected: true },
            Literal { feature: 1, expected: false }
        ])
        .is_err());
        assert_eq!(
            rule.display(&s).to_string(),
            "(NotSuccession(a,p),satisfied)=1 ∧ (NotSuccession(l,p),satisfied)=1"
        );
    }

    #[test]
    fn bulk_encoding_matches_single() {
        let log = EventLog::from_sequences(&[vec!["a", "b"], vec!["b", "a", "c"], vec![]]);
        let cs = crate::declare::candidate_constraints(log.alphabet());
        let s = FeatureSpace::new(&cs).unwrap();
        let bulk = s.encode_log(&log);
        for (t, v) in log.traces().iter().zip(&bulk) {
            assert_eq!(&s.encode(t), v);
        }
    }
}
