//! Inductive miner with infrequency filtering on the directly-follows graph.

use std::collections::{BTreeMap, BTreeSet};

use super::tree::ProcessTree;
use crate::error::{Error, Result};
use crate::event_log::EventLog;

/// Multiset of traces over activity codes.
type Variants = Vec<(Vec<u32>, usize)>;

fn normalize(items: impl IntoIterator<Item = (Vec<u32>, usize)>) -> Variants {
    let mut m: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for (t, c) in items {
        if c > 0 {
            *m.entry(t).or_insert(0) += c;
        }
    }
    m.into_iter().collect()
}

#[derive(Debug, Clone)]
struct Dfg {
    acts: Vec<u32>,
    edges: BTreeMap<(u32, u32), usize>,
    start: BTreeSet<u32>,
    end: BTreeSet<u32>,
}

impl Dfg {
    fn of(log: &Variants) -> Dfg {
        let mut acts = BTreeSet::new();
        let mut edges = BTreeMap::new();
        let mut start = BTreeSet::new();
        let mut end = BTreeSet::new();
        for (t, c) in log {
            acts.extend(t.iter().copied());
            if let (Some(&s), Some(&e)) = (t.first(), t.last()) {
                start.insert(s);
                end.insert(e);
            }
            for w in t.windows(2) {
                *edges.entry((w[0], w[1])).or_insert(0) += c;
            }
        }
        Dfg {
            acts: acts.into_iter().collect(),
            edges,
            start,
            end,
        }
    }

    /// Drops every edge whose count is below `f` times the strongest
    /// outgoing edge of its source.
    fn filtered(&self, f: f64) -> Dfg {
        let mut max_out: BTreeMap<u32, usize> = BTreeMap::new();
        for (&(a, _), &c) in &self.edges {
            let m = max_out.entry(a).or_insert(0);
            *m = (*m).max(c);
        }
        let edges = self
            .edges
            .iter()
            .filter(|(&(a, _), &c)| c as f64 >= f * max_out[&a] as f64)
            .map(|(&k, &v)| (k, v))
            .collect();
        Dfg { edges, ..self.clone() }
    }

    fn has(&self, a: u32, b: u32) -> bool {
        self.edges.contains_key(&(a, b))
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Groups of indices, ordered by smallest member.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.0.len() {
            let r = self.find(i);
            g.entry(r).or_default().push(i);
        }
        g.into_values().collect()
    }
}

fn to_codes(d: &Dfg, groups: Vec<Vec<usize>>) -> Vec<Vec<u32>> {
    groups.into_iter().map(|g| g.into_iter().map(|i| d.acts[i]).collect()).collect()
}

fn xor_cut(d: &Dfg) -> Option<Vec<Vec<u32>>> {
    let ix = |a: u32| d.acts.binary_search(&a).unwrap();
    let mut uf = UnionFind::new(d.acts.len());
    for &(a, b) in d.edges.keys() {
        uf.union(ix(a), ix(b));
    }
    let g = uf.groups();
    (g.len() > 1).then(|| to_codes(d, g))
}

fn reachability(d: &Dfg) -> Vec<Vec<bool>> {
    let n = d.acts.len();
    let ix = |a: u32| d.acts.binary_search(&a).unwrap();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in d.edges.keys() {
        adj[ix(a)].push(ix(b));
    }
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = adj[s].clone();
            while let Some(x) = stack.pop() {
                if !seen[x] {
                    seen[x] = true;
                    stack.extend(adj[x].iter().copied());
                }
            }
            seen
        })
        .collect()
}

fn seq_cut(d: &Dfg) -> Option<Vec<Vec<u32>>> {
    let n = d.acts.len();
    let reach = reachability(d);
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let reaches = |x: &[usize], y: &[usize]| x.iter().any(|&a| y.iter().any(|&b| reach[a][b]));
    'outer: loop {
        for x in 0..groups.len() {
            for y in x + 1..groups.len() {
                if reaches(&groups[x], &groups[y]) == reaches(&groups[y], &groups[x]) {
                    let moved = groups.remove(y);
                    groups[x].extend(moved);
                    groups[x].sort_unstable();
                    continue 'outer;
                }
            }
        }
        break;
    }
    if groups.len() < 2 {
        return None;
    }
    let counts: Vec<usize> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| groups.iter().enumerate().filter(|&(j, h)| i != j && reaches(g, h)).count())
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(groups[a][0].cmp(&groups[b][0])));
    let ordered: Vec<Vec<usize>> = order.into_iter().map(|i| groups[i].clone()).collect();
    for i in 0..ordered.len() {
        for j in i + 1..ordered.len() {
            if reaches(&ordered[j], &ordered[i]) {
                return None;
            }
        }
    }
    Some(to_codes(d, ordered))
}

fn parallel_cut(d: &Dfg) -> Option<Vec<Vec<u32>>> {
    let n = d.acts.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (d.acts[i], d.acts[j]);
            if !(d.has(a, b) && d.has(b, a)) {
                uf.union(i, j);
            }
        }
    }
    let groups = to_codes(d, uf.groups());
    if groups.len() < 2 {
        return None;
    }
    let ok = |g: &Vec<u32>| g.iter().any(|a| d.start.contains(a)) && g.iter().any(|a| d.end.contains(a));
    let (mut good, bad): (Vec<Vec<u32>>, Vec<Vec<u32>>) = groups.into_iter().partition(ok);
    if good.is_empty() {
        return None;
    }
    for b in bad {
        good[0].extend(b);
    }
    good[0].sort_unstable();
    good.sort();
    (good.len() > 1).then_some(good)
}

/// `[do, redo...]` partition with do = start ∪ end activities.
fn loop_cut(d: &Dfg) -> Option<Vec<Vec<u32>>> {
    let is_do = |a: &u32| d.start.contains(a) || d.end.contains(a);
    let others: Vec<u32> = d.acts.iter().copied().filter(|a| !is_do(a)).collect();
    if others.is_empty() {
        return None;
    }
    let ix = |a: u32| others.binary_search(&a).ok();
    let mut uf = UnionFind::new(others.len());
    for &(a, b) in d.edges.keys() {
        if let (Some(x), Some(y)) = (ix(a), ix(b)) {
            uf.union(x, y);
        }
    }
    let comps: Vec<Vec<u32>> = uf
        .groups()
        .into_iter()
        .map(|g| g.into_iter().map(|i| others[i]).collect())
        .collect();
    let mut body: Vec<u32> = d.acts.iter().copied().filter(is_do).collect();
    let mut redo = Vec::new();
    for c in comps {
        let inside = |a: &u32| c.binary_search(a).is_ok();
        let mut valid = true;
        for &(a, b) in d.edges.keys() {
            if !inside(&a) && inside(&b) && !d.end.contains(&a) {
                valid = false;
            }
            if inside(&a) && !inside(&b) && !d.start.contains(&b) {
                valid = false;
            }
        }
        valid = valid
            && d.end.iter().all(|&t| c.iter().any(|&x| d.has(t, x)))
            && d.start.iter().all(|&s| c.iter().any(|&x| d.has(x, s)));
        if valid {
            redo.push(c);
        } else {
            body.extend(c);
        }
    }
    if redo.is_empty() {
        return None;
    }
    body.sort_unstable();
    let mut out = vec![body];
    out.extend(redo);
    Some(out)
}

fn group_index(groups: &[Vec<u32>]) -> BTreeMap<u32, usize> {
    groups
        .iter()
        .enumerate()
        .flat_map(|(g, acts)| acts.iter().map(move |&a| (a, g)))
        .collect()
}

fn split_xor(log: &Variants, groups: &[Vec<u32>]) -> Vec<Variants> {
    let gi = group_index(groups);
    let mut out = vec![Vec::new(); groups.len()];
    for (t, c) in log {
        let mut counts = vec![0usize; groups.len()];
        for a in t {
            counts[gi[a]] += 1;
        }
        let best = (0..groups.len()).fold(0, |b, g| if counts[g] > counts[b] { g } else { b });
        let proj: Vec<u32> = t.iter().copied().filter(|a| gi[a] == best).collect();
        out[best].push((proj, *c));
    }
    out.into_iter().map(normalize).collect()
}

fn split_sequence(log: &Variants, groups: &[Vec<u32>]) -> Vec<Variants> {
    let gi = group_index(groups);
    let k = groups.len();
    let mut out = vec![Vec::new(); k];
    for (t, c) in log {
        let n = t.len();
        // prefix[g][i]: events of group g among the first i
        let mut prefix = vec![vec![0usize; n + 1]; k];
        for (i, a) in t.iter().enumerate() {
            for (g, p) in prefix.iter_mut().enumerate() {
                p[i + 1] = p[i] + usize::from(gi[a] == g);
            }
        }
        let cost = |g: usize, j: usize, i: usize| (i - j) - (prefix[g][i] - prefix[g][j]);
        let mut dp = vec![vec![usize::MAX; n + 1]; k];
        let mut from = vec![vec![0usize; n + 1]; k];
        for i in 0..=n {
            dp[0][i] = cost(0, 0, i);
        }
        for g in 1..k {
            for i in 0..=n {
                for j in 0..=i {
                    let v = dp[g - 1][j] + cost(g, j, i);
                    if v < dp[g][i] {
                        dp[g][i] = v;
                        from[g][i] = j;
                    }
                }
            }
        }
        let mut bounds = vec![n; k + 1];
        bounds[0] = 0;
        let mut i = n;
        for g in (1..k).rev() {
            i = from[g][i];
            bounds[g] = i;
        }
        for g in 0..k {
            let seg: Vec<u32> = t[bounds[g]..bounds[g + 1]].iter().copied().filter(|a| gi[a] == g).collect();
            out[g].push((seg, *c));
        }
    }
    out.into_iter().map(normalize).collect()
}

fn split_parallel(log: &Variants, groups: &[Vec<u32>]) -> Vec<Variants> {
    let gi = group_index(groups);
    (0..groups.len())
        .map(|g| normalize(log.iter().map(|(t, c)| (t.iter().copied().filter(|a| gi[a] == g).collect(), *c))))
        .collect()
}

fn split_loop(log: &Variants, groups: &[Vec<u32>]) -> Vec<Variants> {
    let gi = group_index(groups);
    let mut out: Vec<Vec<(Vec<u32>, usize)>> = vec![Vec::new(); groups.len()];
    for (t, c) in log {
        let mut runs: Vec<(usize, Vec<u32>)> = Vec::new();
        for &a in t {
            let g = gi[&a];
            match runs.last_mut() {
                Some((p, r)) if *p == g => r.push(a),
                _ => runs.push((g, vec![a])),
            }
        }
        let mut expect_body = true;
        for (p, r) in runs {
            if p == 0 {
                out[0].push((r, *c));
                expect_body = false;
            } else {
                if expect_body {
                    out[0].push((Vec::new(), *c));
                }
                out[p].push((r, *c));
                expect_body = true;
            }
        }
        if expect_body {
            out[0].push((Vec::new(), *c));
        }
    }
    out.into_iter().map(normalize).collect()
}

struct Miner<'a> {
    names: &'a [String],
    f: f64,
}

#[derive(Clone, Copy)]
enum Cut {
    Xor,
    Sequence,
    Parallel,
    Loop,
}

impl Miner<'_> {
    fn leaf(&self, a: u32) -> ProcessTree {
        ProcessTree::Activity(self.names[a as usize].clone())
    }

    fn below_threshold(&self, part: usize, total: usize) -> bool {
        self.f > 0.0 && (part as f64) < self.f * total as f64
    }

    fn mine(&self, log: Variants, allow_tau_loop: bool) -> ProcessTree {
        let total: usize = log.iter().map(|(_, c)| c).sum();
        let empty: usize = log.iter().filter(|(t, _)| t.is_empty()).map(|(_, c)| c).sum();
        if empty == total {
            return ProcessTree::Silent;
        }
        if empty > 0 {
            let rest: Variants = log.into_iter().filter(|(t, _)| !t.is_empty()).collect();
            let child = self.mine(rest, allow_tau_loop);
            return if self.below_threshold(empty, total) {
                child
            } else {
                ProcessTree::xor(vec![ProcessTree::Silent, child])
            };
        }
        let d = Dfg::of(&log);
        if d.acts.len() == 1 {
            let a = d.acts[0];
            let single: usize = log.iter().filter(|(t, _)| t.len() == 1).map(|(_, c)| c).sum();
            return if single == total || self.below_threshold(total - single, total) {
                self.leaf(a)
            } else {
                ProcessTree::looping(self.leaf(a), vec![ProcessTree::Silent])
            };
        }
        let mut graphs = vec![d.clone()];
        if self.f > 0.0 {
            let filtered = d.filtered(self.f);
            if filtered.edges != d.edges {
                graphs.push(filtered);
            }
        }
        for g in &graphs {
            for cut in [Cut::Xor, Cut::Sequence, Cut::Parallel, Cut::Loop] {
                let groups = match cut {
                    Cut::Xor => xor_cut(g),
                    Cut::Sequence => seq_cut(g),
                    Cut::Parallel => parallel_cut(g),
                    Cut::Loop => loop_cut(g),
                };
                if let Some(groups) = groups {
                    return self.apply(cut, &log, &groups);
                }
            }
        }
        self.fall_through(log, &d, allow_tau_loop)
    }

    fn apply(&self, cut: Cut, log: &Variants, groups: &[Vec<u32>]) -> ProcessTree {
        let parts = match cut {
            Cut::Xor => split_xor(log, groups),
            Cut::Sequence => split_sequence(log, groups),
            Cut::Parallel => split_parallel(log, groups),
            Cut::Loop => split_loop(log, groups),
        };
        let mut children: Vec<ProcessTree> = parts
            .into_iter()
            .filter(|p| !(matches!(cut, Cut::Xor) && p.is_empty()))
            .map(|p| if p.is_empty() { ProcessTree::Silent } else { self.mine(p, true) })
            .collect();
        match cut {
            Cut::Xor => ProcessTree::xor(children),
            Cut::Sequence => ProcessTree::sequence(children),
            Cut::Parallel => ProcessTree::parallel(children),
            Cut::Loop => {
                let body = children.remove(0);
                ProcessTree::looping(body, children)
            }
        }
    }

    fn fall_through(&self, log: Variants, d: &Dfg, allow_tau_loop: bool) -> ProcessTree {
        for &a in &d.acts {
            if log.iter().all(|(t, _)| t.iter().filter(|&&x| x == a).count() == 1) {
                let rest = normalize(log.iter().map(|(t, c)| (t.iter().copied().filter(|&x| x != a).collect(), *c)));
                return ProcessTree::parallel(vec![self.leaf(a), self.mine(rest, true)]);
            }
        }
        if allow_tau_loop {
            let mut split = false;
            let mut pieces = Vec::new();
            for (t, c) in &log {
                let mut cur = Vec::new();
                for (i, &a) in t.iter().enumerate() {
                    cur.push(a);
                    if i + 1 < t.len() && d.end.contains(&a) && d.start.contains(&t[i + 1]) {
                        pieces.push((std::mem::take(&mut cur), *c));
                        split = true;
                    }
                }
                pieces.push((cur, *c));
            }
            if split {
                return ProcessTree::looping(self.mine(normalize(pieces), false), vec![ProcessTree::Silent]);
            }
        }
        let mut children = vec![ProcessTree::Silent];
        children.extend(d.acts.iter().map(|&a| self.leaf(a)));
        ProcessTree::Loop(children)
    }
}

/// Mines a process tree from `log`, filtering directly-follows edges below
/// `threshold` times the strongest outgoing edge of their source.
pub fn discover(log: &EventLog, threshold: f64) -> Result<ProcessTree> {
    if log.is_empty() {
        return Err(Error::InvalidInput("cannot discover a model from an empty log".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidInput(format!("frequency threshold {threshold} outside [0,1]")));
    }
    let names: Vec<String> = log.alphabet().iter().cloned().collect();
    let code = |a: &String| names.binary_search(a).unwrap() as u32;
    let variants = normalize(
        log.traces()
            .iter()
            .map(|t| (t.activities.iter().map(code).collect(), 1)),
    );
    let miner = Miner { names: &names, f: threshold };
    Ok(miner.mine(variants, true))
}
