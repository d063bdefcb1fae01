mod common;

use proptest::prelude::*;

use procvar::declare::{
    candidate_constraints, discover_constraints, evaluate_activities, prune_subsumption, Constraint, Outcome, Template,
    SUBSUMPTION_CHAINS,
};
use procvar::event_log::EventLog;
use procvar::Error;

use common::reference_eval;

fn eval(trace: &[&str], c: &str) -> Outcome {
    evaluate_activities(trace, &c.parse::<Constraint>().unwrap())
}

fn binary_template() -> impl Strategy<Value = Template> {
    prop::sample::select(Template::ALL.iter().copied().filter(|t| t.arity() == 2).collect::<Vec<_>>())
}

fn any_template() -> impl Strategy<Value = Template> {
    prop::sample::select(Template::ALL.to_vec())
}

fn symbols() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..9)
}

#[test]
fn worked_examples() {
    assert_eq!(eval(&["p", "l"], "CoExistence(a,p)"), Outcome::Violated);
    assert_eq!(eval(&["p", "l"], "ChainResponse(a,p)"), Outcome::VacSatisfied);
    assert_eq!(eval(&["p", "l"], "AtLeast1(p)"), Outcome::Satisfied);
    assert_eq!(eval(&["l", "a", "p"], "NotSuccession(l,p)"), Outcome::Violated);
    for t in Template::ALL.iter().filter(|t| t.arity() == 2) {
        let c = Constraint::binary(*t, "a", "b");
        assert_eq!(evaluate_activities::<&str>(&[], &c), Outcome::VacSatisfied, "{c}");
    }
}

#[test]
fn reference_agrees_on_worked_examples() {
    assert_eq!(reference_eval(Template::CoExistence, &["p", "l"], "a", "p"), Outcome::Violated);
    assert_eq!(reference_eval(Template::ChainResponse, &["p", "l"], "a", "p"), Outcome::VacSatisfied);
    assert_eq!(reference_eval(Template::AtLeast1, &["p", "l"], "p", ""), Outcome::Satisfied);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_reference(trace in symbols(), t in any_template(), a in 0usize..4, off in 1usize..4) {
        let names = ["a", "b", "c", "d"];
        let (x, y) = (names[a], names[(a + off) % 4]);
        let c = if t.arity() == 1 { Constraint::unary(t, x) } else { Constraint::binary(t, x, y) };
        prop_assert_eq!(evaluate_activities(&trace, &c), reference_eval(t, &trace, x, y), "{} on {:?}", c, trace);
    }

    #[test]
    fn subsumption_is_monotone(trace in symbols(), a in 0usize..4, off in 1usize..4) {
        let names = ["a", "b", "c", "d"];
        let (x, y) = (names[a], names[(a + off) % 4]);
        for chain in SUBSUMPTION_CHAINS {
            for (i, &strict) in chain.iter().enumerate() {
                for &weak in &chain[i + 1..] {
                    let s = evaluate_activities(&trace, &Constraint::binary(strict, x, y));
                    let w = evaluate_activities(&trace, &Constraint::binary(weak, x, y));
                    if s == Outcome::Satisfied {
                        prop_assert_ne!(w, Outcome::Violated, "{:?} vs {:?} on {:?}", strict, weak, trace);
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_activities_never_activate(trace in symbols(), t in binary_template()) {
        let c = Constraint::binary(t, "zz", "yy");
        prop_assert_eq!(evaluate_activities(&trace, &c), Outcome::VacSatisfied);
    }

    #[test]
    fn discovered_constraints_are_witnessed(seqs in prop::collection::vec(symbols(), 1..6)) {
        let log = EventLog::from_sequences(&seqs);
        let found = discover_constraints(&log, 100).unwrap();
        for c in &found {
            let witnessed = log.traces().iter().any(|t| evaluate_activities(&t.activities, c) == Outcome::Satisfied);
            prop_assert!(witnessed, "{} has no satisfying trace", c);
        }
    }

    #[test]
    fn pruning_leaves_no_identical_pair(seqs in prop::collection::vec(symbols(), 1..6)) {
        let log = EventLog::from_sequences(&seqs);
        let all = candidate_constraints(log.alphabet());
        let kept = prune_subsumption(&all, &log);
        prop_assert!(kept.iter().all(|c| all.contains(c)));
        let column = |c: &Constraint| -> Vec<Outcome> {
            log.traces().iter().map(|t| evaluate_activities(&t.activities, c)).collect()
        };
        for c in &kept {
            for chain in SUBSUMPTION_CHAINS {
                let Some(pos) = chain.iter().position(|&t| t == c.template()) else { continue };
                for &weak in &chain[pos + 1..] {
                    let w = Constraint::new(weak, c.args().to_vec()).unwrap();
                    if kept.contains(&w) {
                        prop_assert_ne!(column(c), column(&w), "{} and {} both kept", c, w);
                    }
                }
            }
        }
    }
}

#[test]
fn discovery_examples() {
    let names = |log: &EventLog| -> Vec<String> {
        discover_constraints(log, 100).unwrap().iter().map(ToString::to_string).collect()
    };
    let pal = names(&EventLog::from_sequences(&[vec!["p", "a", "l"]]));
    for c in ["AtLeast1(p)", "ChainResponse(p,a)", "End(l)", "NotSuccession(l,p)"] {
        assert!(pal.contains(&c.to_string()), "missing {c}");
    }
    // AlternateSuccession(p,a) evaluates exactly like ChainSuccession(p,a)
    // on this log, so pruning keeps only the stricter one.
    assert!(pal.contains(&"ChainSuccession(p,a)".to_string()));
    assert!(!pal.contains(&"End(p)".to_string()));

    let single = names(&EventLog::from_sequences(&[vec!["a"]]));
    assert_eq!(single, vec!["AtLeast1(a)", "End(a)"]);

    let orderings = names(&EventLog::from_sequences(&[
        vec!["p", "a", "l"],
        vec!["p", "l", "a"],
        vec!["a", "p", "l"],
        vec!["a", "l", "p"],
        vec!["l", "a", "p"],
        vec!["l", "p", "a"],
    ]));
    assert!(orderings.contains(&"NotSuccession(l,p)".to_string()));
}

#[test]
fn pruning_examples() {
    let ab = EventLog::from_sequences(&[vec!["a", "b"]]);
    let pair: Vec<Constraint> = ["ChainResponse(a,b)", "Response(a,b)"].iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(prune_subsumption(&pair, &ab), vec![pair[0].clone()]);

    let two = EventLog::from_sequences(&[vec!["a", "b"], vec!["a", "c", "b"]]);
    assert_eq!(prune_subsumption(&pair, &two), pair);

    assert!(prune_subsumption(&[], &ab).is_empty());
}

#[test]
fn activity_cap() {
    let seqs: Vec<Vec<String>> = vec![(0..12).map(|i| format!("x{i}")).collect()];
    let log = EventLog::from_sequences(&seqs);
    assert!(matches!(discover_constraints(&log, 10), Err(Error::AlphabetTooLarge { found: 12, cap: 10 })));
    assert!(discover_constraints(&log, 12).is_ok());
}
