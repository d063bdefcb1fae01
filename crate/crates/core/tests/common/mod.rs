//! Slow reference implementations shared by the property suites and the
//! acceptance target. None of them call into the code they check.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use proptest::prelude::*;

use procvar::declare::{Outcome, Template};
use procvar::discovery::{PetriNet, ProcessTree};

// ---------------------------------------------------------------- declare

fn positions(t: &[&str], x: &str) -> Vec<usize> {
    (0..t.len()).filter(|&i| t[i] == x).collect()
}

fn from_activations(activations: &[bool]) -> Outcome {
    if activations.is_empty() {
        Outcome::VacSatisfied
    } else if activations.iter().all(|&ok| ok) {
        Outcome::Satisfied
    } else {
        Outcome::Violated
    }
}

/// Each activation paired with whether its target holds.
fn response_targets(t: &[&str], a: &str, b: &str) -> Vec<bool> {
    positions(t, a).into_iter().map(|i| t[i + 1..].contains(&b)).collect()
}

fn alt_response_targets(t: &[&str], a: &str, b: &str) -> Vec<bool> {
    positions(t, a)
        .into_iter()
        .map(|i| {
            let next_a = (i + 1..t.len()).find(|&j| t[j] == a).unwrap_or(t.len());
            t[i + 1..next_a].contains(&b)
        })
        .collect()
}

fn chain_response_targets(t: &[&str], a: &str, b: &str) -> Vec<bool> {
    positions(t, a).into_iter().map(|i| t.get(i + 1) == Some(&b)).collect()
}

fn precedence_targets(t: &[&str], a: &str, b: &str) -> Vec<bool> {
    positions(t, b).into_iter().map(|j| t[..j].contains(&a)).collect()
}

fn alt_precedence_targets(t: &[&str], a: &str, b: &str) -> Vec<bool> {
    positions(t, b)
        .into_iter()
        .map(|j| {
            let prev_b = (0..j).rev().find(|&i| t[i] == b).map_or(0, |i| i + 1);
            t[prev_b..j].contains(&a)
        })
        .collect()
}

fn chain_precedence_targets(t: &[&str], a: &str, b: &str) -> Vec<bool> {
    positions(t, b).into_iter().map(|j| j > 0 && t[j - 1] == a).collect()
}

/// Declare semantics written one activation at a time.
pub fn reference_eval(template: Template, t: &[&str], a: &str, b: &str) -> Outcome {
    let both = |mut x: Vec<bool>, y: Vec<bool>| {
        x.extend(y);
        from_activations(&x)
    };
    let occurs = |x: &str| t.contains(&x);
    let on_either = |ok: bool| {
        let n = positions(t, a).len() + positions(t, b).len();
        from_activations(&vec![ok; n])
    };
    match template {
        Template::AtLeast1 => from_activations(&if t.is_empty() { vec![] } else { vec![occurs(a)] }),
        Template::End => from_activations(&if t.is_empty() { vec![] } else { vec![t[t.len() - 1] == a] }),
        Template::RespondedExistence => {
            from_activations(&positions(t, a).iter().map(|_| occurs(b)).collect::<Vec<_>>())
        }
        Template::Response => from_activations(&response_targets(t, a, b)),
        Template::AlternateResponse => from_activations(&alt_response_targets(t, a, b)),
        Template::ChainResponse => from_activations(&chain_response_targets(t, a, b)),
        Template::Precedence => from_activations(&precedence_targets(t, a, b)),
        Template::AlternatePrecedence => from_activations(&alt_precedence_targets(t, a, b)),
        Template::ChainPrecedence => from_activations(&chain_precedence_targets(t, a, b)),
        Template::Succession => both(response_targets(t, a, b), precedence_targets(t, a, b)),
        Template::AlternateSuccession => both(alt_response_targets(t, a, b), alt_precedence_targets(t, a, b)),
        Template::ChainSuccession => both(chain_response_targets(t, a, b), chain_precedence_targets(t, a, b)),
        Template::CoExistence => on_either(occurs(a) && occurs(b)),
        Template::NotCoExistence => on_either(!(occurs(a) && occurs(b))),
        Template::NotSuccession => {
            from_activations(&positions(t, a).into_iter().map(|i| !t[i + 1..].contains(&b)).collect::<Vec<_>>())
        }
        Template::NotChainSuccession => from_activations(
            &positions(t, a).into_iter().map(|i| t.get(i + 1) != Some(&b)).collect::<Vec<_>>(),
        ),
    }
}

// ------------------------------------------------------------- clustering

/// One merge of the brute-force average-linkage run:
/// (id of the cluster with the smaller first member, id of the other,
/// distance, merged size).
pub type RefMerge = (usize, usize, f64, usize);

/// Average linkage recomputed from scratch at every step: the distance
/// between two clusters is the mean over all member pairs of the input
/// matrix. Ties (within 1e-12) go to the lexicographically smallest pair of
/// first members.
pub fn brute_force_linkage(d: &[Vec<f64>]) -> Vec<RefMerge> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        clusters.sort_by_key(|(_, m)| m[0]);
        let avg = |x: &[usize], y: &[usize]| {
            let s: f64 = x.iter().flat_map(|&i| y.iter().map(move |&j| d[i][j])).sum();
            s / (x.len() * y.len()) as f64
        };
        let mut best = f64::INFINITY;
        for p in 0..clusters.len() {
            for q in p + 1..clusters.len() {
                best = best.min(avg(&clusters[p].1, &clusters[q].1));
            }
        }
        let (p, q) = (0..clusters.len())
            .flat_map(|p| (p + 1..clusters.len()).map(move |q| (p, q)))
            .find(|&(p, q)| avg(&clusters[p].1, &clusters[q].1) <= best + 1e-12)
            .unwrap();
        let dist = avg(&clusters[p].1, &clusters[q].1);
        let (id_q, members_q) = clusters.remove(q);
        let (id_p, members_p) = clusters.remove(p);
        let mut merged = members_p;
        merged.extend(members_q);
        merged.sort_unstable();
        out.push((id_p, id_q, dist, merged.len()));
        clusters.push((n + out.len() - 1, merged));
    }
    out
}

pub fn set_jaccard(x: &[usize], y: &[usize]) -> f64 {
    let inter = x.iter().filter(|i| y.contains(i)).count();
    let union = x.len() + y.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

// -------------------------------------------------------------- alignment

/// Optimal alignment cost by Bellman-Ford relaxation over the whole
/// reachable product space (marking × trace position). Unit costs for log
/// and visible model moves, zero for synchronous and silent moves.
pub fn exhaustive_alignment_cost(trace: &[&str], net: &PetriNet) -> Option<u32> {
    let fire = |m: &Vec<u8>, t: usize| -> Option<Vec<u8>> {
        let tr = &net.transitions[t];
        let mut next = m.clone();
        for &p in &tr.inputs {
            next[p] = next[p].checked_sub(1)?;
        }
        for &p in &tr.outputs {
            next[p] += 1;
        }
        Some(next)
    };
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut markings = vec![net.initial.clone()];
    index.insert(net.initial.clone(), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut arcs: Vec<(usize, usize, Option<String>)> = Vec::new();
    while let Some(i) = queue.pop_front() {
        for t in 0..net.transitions.len() {
            if let Some(next) = fire(&markings[i].clone(), t) {
                let j = *index.entry(next.clone()).or_insert_with(|| {
                    markings.push(next);
                    queue.push_back(markings.len() - 1);
                    markings.len() - 1
                });
                arcs.push((i, j, net.transitions[t].label.clone()));
            }
            assert!(markings.len() < 100_000, "unbounded test net");
        }
    }
    let n = trace.len();
    let states = markings.len() * (n + 1);
    let id = |m: usize, k: usize| m * (n + 1) + k;
    let mut cost = vec![u32::MAX; states];
    cost[id(0, 0)] = 0;
    loop {
        let mut changed = false;
        for m in 0..markings.len() {
            for k in 0..=n {
                let c = cost[id(m, k)];
                if c == u32::MAX {
                    continue;
                }
                let mut relax = |s: usize, v: u32, cost: &mut Vec<u32>| {
                    if v < cost[s] {
                        cost[s] = v;
                        changed = true;
                    }
                };
                if k < n {
                    relax(id(m, k + 1), c + 1, &mut cost);
                }
                for (from, to, label) in arcs.iter().filter(|a| a.0 == m) {
                    let _ = from;
                    match label {
                        None => relax(id(*to, k), c, &mut cost),
                        Some(l) => {
                            relax(id(*to, k), c + 1, &mut cost);
                            if k < n && trace[k] == l {
                                relax(id(*to, k + 1), c, &mut cost);
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let f = *index.get(&net.final_marking)?;
    let c = cost[id(f, n)];
    (c != u32::MAX).then_some(c)
}

// ------------------------------------------------------------- strategies

pub fn activity() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from)
}

/// Random process trees with at most `leaves` leaves.
pub fn process_tree(leaves: u32) -> impl Strategy<Value = ProcessTree> {
    let leaf = prop_oneof![
        1 => Just(ProcessTree::Silent),
        4 => activity().prop_map(ProcessTree::Activity),
    ];
    leaf.prop_recursive(3, leaves, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(ProcessTree::sequence),
            prop::collection::vec(inner.clone(), 2..4).prop_map(ProcessTree::xor),
            prop::collection::vec(inner.clone(), 2..3).prop_map(ProcessTree::parallel),
            (inner.clone(), inner).prop_map(|(b, r)| ProcessTree::looping(b, vec![r])),
        ]
    })
}

pub fn trace(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(activity(), 0..=max_len)
}

// ------------------------------------------------------------- regression

/// Seeded 20×10 binary design (no empty column) with uniform labels; row 0
/// is positive and row 1 negative so both classes are present.
pub fn regression_instance(seed: u64) -> (Vec<Vec<bool>>, Vec<bool>) {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<bool>> = (0..20).map(|_| (0..10).map(|_| r.gen_bool(0.4)).collect()).collect();
    for j in 0..10 {
        x[j % 20][j] = true;
    }
    let mut y: Vec<bool> = (0..20).map(|_| r.gen_bool(0.5)).collect();
    y[0] = true;
    y[1] = false;
    (x, y)
}
