use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::tree::ProcessTree;
use crate::error::{Error, Result};

/// Default bound on explored states for enumeration and search.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    /// `None` for silent transitions.
    pub label: Option<String>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// Token counts per place.
pub type Marking = Vec<u8>;

/// Place/transition net with unit arc weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetriNet {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub initial: Marking,
    pub final_marking: Marking,
}

impl PetriNet {
    pub fn new(places: Vec<Place>, transitions: Vec<Transition>, initial: Marking, final_marking: Marking) -> Result<Self> {
        let n = places.len();
        if initial.len() != n || final_marking.len() != n {
            return Err(Error::InvalidInput("marking length differs from place count".into()));
        }
        if initial.iter().all(|&t| t == 0) || final_marking.iter().all(|&t| t == 0) {
            return Err(Error::InvalidInput("initial and final markings must be non-empty".into()));
        }
        for t in &transitions {
            if let Some(&p) = t.inputs.iter().chain(&t.outputs).find(|&&p| p >= n) {
                return Err(Error::OutOfRange { index: p, len: n });
            }
        }
        Ok(PetriNet {
            places,
            transitions,
            initial,
            final_marking,
        })
    }

    pub fn is_enabled(&self, t: usize, m: &[u8]) -> bool {
        self.transitions[t].inputs.iter().all(|&p| m[p] > 0)
    }

    /// Fires `t`; errors when a place would exceed 255 tokens.
    pub fn fire(&self, t: usize, m: &[u8]) -> Result<Marking> {
        let mut next = m.to_vec();
        let tr = &self.transitions[t];
        for &p in &tr.inputs {
            next[p] -= 1;
        }
        for &p in &tr.outputs {
            next[p] = next[p].checked_add(1).ok_or(Error::StateSpace { cap: u8::MAX as usize })?;
        }
        Ok(next)
    }

    pub fn enabled(&self, m: &[u8]) -> impl Iterator<Item = usize> + '_ {
        let m = m.to_vec();
        (0..self.transitions.len()).filter(move |&t| self.is_enabled(t, &m))
    }

    /// Visible labels, sorted and deduplicated.
    pub fn labels(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.transitions.iter().filter_map(|t| t.label.as_ref()).collect();
        set.into_iter().cloned().collect()
    }

    /// Markings reachable from `m` through silent transitions only
    /// (including `m`), in discovery order.
    pub fn silent_closure(&self, m: &[u8], cap: usize) -> Result<Vec<Marking>> {
        let mut seen: HashSet<Marking> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([m.to_vec()]);
        seen.insert(m.to_vec());
        while let Some(cur) = queue.pop_front() {
            for t in 0..self.transitions.len() {
                if self.transitions[t].is_silent() && self.is_enabled(t, &cur) {
                    let next = self.fire(t, &cur)?;
                    if seen.insert(next.clone()) {
                        if seen.len() > cap {
                            return Err(Error::StateSpace { cap });
                        }
                        queue.push_back(next);
                    }
                }
            }
            order.push(cur);
        }
        Ok(order)
    }

    /// Labels of visible transitions enabled somewhere in the silent closure
    /// of `m`.
    pub fn enabled_labels(&self, m: &[u8], cap: usize) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for mk in self.silent_closure(m, cap)? {
            for t in self.enabled(&mk) {
                if let Some(l) = &self.transitions[t].label {
                    out.insert(l.clone());
                }
            }
        }
        Ok(out)
    }

    /// Fewest visible firings leading from the initial to the final marking,
    /// or `None` when the final marking is unreachable.
    pub fn shortest_path_cost(&self, cap: usize) -> Result<Option<usize>> {
        // 0-1 BFS: silent steps cost 0, visible ones 1
        let mut dist: std::collections::HashMap<Marking, usize> = Default::default();
        let mut dq = VecDeque::from([(self.initial.clone(), 0usize)]);
        while let Some((m, c)) = dq.pop_front() {
            if dist.get(&m).is_some_and(|&d| d <= c) {
                continue;
            }
            dist.insert(m.clone(), c);
            if dist.len() > cap {
                return Err(Error::StateSpace { cap });
            }
            if m == self.final_marking {
                return Ok(Some(c));
            }
            for t in self.enabled(&m).collect::<Vec<_>>() {
                let next = self.fire(t, &m)?;
                if self.transitions[t].is_silent() {
                    dq.push_front((next, c));
                } else {
                    dq.push_back((next, c + 1));
                }
            }
        }
        Ok(None)
    }
}

struct NetBuilder {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    silent: usize,
}

impl NetBuilder {
    fn place(&mut self) -> usize {
        let i = self.places.len();
        let id = match i {
            0 => "source".to_string(),
            1 => "sink".to_string(),
            _ => format!("p{}", i - 2),
        };
        self.places.push(Place { id });
        i
    }

    fn transition(&mut self, label: Option<String>, inputs: Vec<usize>, outputs: Vec<usize>) {
        let id = match &label {
            Some(_) => format!("t{}", self.transitions.len() - self.silent),
            None => {
                self.silent += 1;
                format!("tau{}", self.silent - 1)
            }
        };
        self.transitions.push(Transition {
            id,
            label,
            inputs,
            outputs,
        });
    }

    fn build(&mut self, tree: &ProcessTree, src: usize, dst: usize) {
        match tree {
            ProcessTree::Silent => self.transition(None, vec![src], vec![dst]),
            ProcessTree::Activity(a) => self.transition(Some(a.clone()), vec![src], vec![dst]),
            ProcessTree::Sequence(cs) => {
                let mut from = src;
                for (i, c) in cs.iter().enumerate() {
                    let to = if i + 1 == cs.len() { dst } else { self.place() };
                    self.build(c, from, to);
                    from = to;
                }
            }
            ProcessTree::Xor(cs) => {
                for c in cs {
                    self.build(c, src, dst);
                }
            }
            ProcessTree::Parallel(cs) => {
                let ins: Vec<usize> = cs.iter().map(|_| self.place()).collect();
                let outs: Vec<usize> = cs.iter().map(|_| self.place()).collect();
                self.transition(None, vec![src], ins.clone());
                for (i, c) in cs.iter().enumerate() {
                    self.build(c, ins[i], outs[i]);
                }
                self.transition(None, outs, vec![dst]);
            }
            ProcessTree::Loop(cs) => {
                let body_in = self.place();
                let body_out = self.place();
                self.transition(None, vec![src], vec![body_in]);
                self.build(&cs[0], body_in, body_out);
                for redo in &cs[1..] {
                    self.build(redo, body_out, body_in);
                }
                self.transition(None, vec![body_out], vec![dst]);
            }
        }
    }
}

/// Compositional translation into a workflow net with places `source` and
/// `sink`.
pub fn to_petri_net(tree: &ProcessTree) -> Result<PetriNet> {
    if !tree.is_valid() {
        return Err(Error::InvalidInput(format!("malformed process tree {tree}")));
    }
    let mut b = NetBuilder {
        places: Vec::new(),
        transitions: Vec::new(),
        silent: 0,
    };
    let src = b.place();
    let dst = b.place();
    b.build(tree, src, dst);
    let n = b.places.len();
    let mut initial = vec![0; n];
    initial[src] = 1;
    let mut final_marking = vec![0; n];
    final_marking[dst] = 1;
    PetriNet::new(b.places, b.transitions, initial, final_marking)
}

/// Every visible firing sequence of length ≤ `max_len` that ends in the final
/// marking.
pub fn language(net: &PetriNet, max_len: usize) -> Result<BTreeSet<Vec<String>>> {
    language_capped(net, max_len, DEFAULT_STATE_CAP)
}

pub fn language_capped(net: &PetriNet, max_len: usize, cap: usize) -> Result<BTreeSet<Vec<String>>> {
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(Marking, Vec<u32>)> = HashSet::new();
    let labels = net.labels();
    let code: Vec<Option<u32>> = net
        .transitions
        .iter()
        .map(|t| t.label.as_ref().map(|l| labels.binary_search(l).unwrap() as u32))
        .collect();
    let start = (net.initial.clone(), Vec::new());
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start]);
    while let Some((m, word)) = queue.pop_front() {
        if m == net.final_marking {
            out.insert(word.iter().map(|&c| labels[c as usize].clone()).collect());
        }
        for t in 0..net.transitions.len() {
            if !net.is_enabled(t, &m) {
                continue;
            }
            let mut w = word.clone();
            if let Some(c) = code[t] {
                if w.len() == max_len {
                    continue;
                }
                w.push(c);
            }
            let next = (net.fire(t, &m)?, w);
            if seen.insert(next.clone()) {
                if seen.len() > cap {
                    return Err(Error::StateSpace { cap });
                }
                queue.push_back(next);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(net: &PetriNet, n: usize) -> Vec<String> {
        language(net, n).unwrap().into_iter().map(|w| w.concat()).collect()
    }

    #[test]
    fn leaf_net() {
        let net = to_petri_net(&ProcessTree::activity("a")).unwrap();
        assert_eq!(net.places.len(), 2);
        assert_eq!(words(&net, 5), vec!["a"]);
        assert_eq!(net.shortest_path_cost(100).unwrap(), Some(1));
    }

    #[test]
    fn sequence_with_parallel() {
        let t = ProcessTree::sequence(vec![
            ProcessTree::activity("p"),
            ProcessTree::parallel(vec![ProcessTree::activity("a"), ProcessTree::activity("l")]),
        ]);
        let net = to_petri_net(&t).unwrap();
        assert_eq!(words(&net, 3), vec!["pal", "pla"]);
        assert_eq!(words(&net, 2), Vec::<String>::new());
    }

    #[test]
    fn loops_and_choice() {
        let t = ProcessTree::looping(ProcessTree::activity("a"), vec![ProcessTree::activity("b")]);
        let net = to_petri_net(&t).unwrap();
        assert_eq!(words(&net, 5), vec!["a", "aba", "ababa"]);
        let flower = ProcessTree::Loop(vec![ProcessTree::Silent, ProcessTree::activity("a"), ProcessTree::activity("b")]);
        let net = to_petri_net(&flower).unwrap();
        assert_eq!(language(&net, 2).unwrap().len(), 7);
        assert_eq!(net.shortest_path_cost(100).unwrap(), Some(0));
        let x = ProcessTree::xor(vec![ProcessTree::Silent, ProcessTree::activity("a")]);
        assert_eq!(words(&to_petri_net(&x).unwrap(), 3), vec!["", "a"]);
    }

    #[test]
    fn state_cap() {
        let flower = ProcessTree::Loop(vec![ProcessTree::Silent, ProcessTree::activity("a"), ProcessTree::activity("b")]);
        let net = to_petri_net(&flower).unwrap();
        assert!(matches!(language_capped(&net, 12, 50), Err(Error::StateSpace { cap: 50 })));
    }
}
