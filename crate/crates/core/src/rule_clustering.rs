//! Jaccard distances between rule coverages, average-linkage agglomerative
//! clustering, representative selection and per-rule log filtering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{FeatureSpace, Rule};
use crate::error::{Error, Result};
use crate::event_log::EventLog;
use crate::sparse_regression::{RegressionModel, RuleMatrix};

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidInput(format!("row {i} has {} entries, expected {n}", r.len())));
            }
            d.extend_from_slice(r);
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if d[i * n + j] != d[j * n + i] || !d[i * n + j].is_finite() {
                    return Err(Error::InvalidInput(format!("asymmetric entry ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }
}

fn coverage_bits(m: &RuleMatrix) -> Vec<Vec<u64>> {
    let words = m.n_rows().div_ceil(64);
    let mut cols = vec![vec![0u64; words]; m.n_cols()];
    for i in 0..m.n_rows() {
        for &j in m.row(i) {
            cols[j as usize][i / 64] |= 1 << (i % 64);
        }
    }
    cols
}

/// Jaccard distance between two coverage sets given as bitsets. Two empty
/// coverages are treated as identical.
fn jaccard_bits(a: &[u64], b: &[u64]) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.iter().zip(b) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// `d[i][j] = 1 − |cover(i) ∩ cover(j)| / |cover(i) ∪ cover(j)|` over the
/// columns of `matrix`.
pub fn jaccard_matrix(matrix: &RuleMatrix) -> DistanceMatrix {
    let cols = coverage_bits(matrix);
    let n = cols.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { jaccard_bits(&cols[i], &cols[j]) }).collect())
        .collect();
    DistanceMatrix {
        n,
        d: rows.into_iter().flatten().collect(),
    }
}

/// One merge. Cluster ids follow the usual convention: leaves are `0..n`,
/// the cluster created by step `s` is `n + s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

const TIE_EPS: f64 = 1e-12;

/// Average-linkage agglomeration with Lance–Williams updates. Among pairs at
/// the minimal distance, the pair with the smallest (min member of A, min
/// member of B) is merged first.
pub fn agglomerate(dm: &DistanceMatrix) -> Result<Dendrogram> {
    let n = dm.len();
    if n == 0 {
        return Err(Error::InvalidInput("cannot cluster zero rules".into()));
    }
    // active clusters are kept keyed by their smallest member, in order
    let mut d: Vec<Vec<f64>> = dm.rows();
    let mut active: Vec<usize> = (0..n).collect(); // slot = min member
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        let mut best = f64::INFINITY;
        for (x, &p) in active.iter().enumerate() {
            for &q in &active[x + 1..] {
                best = best.min(d[p][q]);
            }
        }
        let (p, q) = active
            .iter()
            .enumerate()
            .flat_map(|(x, &p)| active[x + 1..].iter().map(move |&q| (p, q)))
            .find(|&(p, q)| d[p][q] <= best + TIE_EPS)
            .expect("at least one pair");
        let (sp, sq) = (size[p] as f64, size[q] as f64);
        for &r in &active {
            if r != p && r != q {
                let v = (sp * d[p][r] + sq * d[q][r]) / (sp + sq);
                d[p][r] = v;
                d[r][p] = v;
            }
        }
        merges.push(Merge {
            a: id[p],
            b: id[q],
            distance: d[p][q],
            size: size[p] + size[q],
        });
        id[p] = n + merges.len() - 1;
        size[p] += size[q];
        active.retain(|&r| r != q);
    }
    Ok(Dendrogram { n, merges })
}

impl Dendrogram {
    /// Member leaves of every cluster id (leaves then merges).
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0..self.n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut v = out[m.a].clone();
            v.extend_from_slice(&out[m.b]);
            v.sort_unstable();
            out.push(v);
        }
        out
    }

    /// Leaves in drawing order: depth-first from the root, `a` before `b`.
    pub fn leaf_order(&self) -> Vec<usize> {
        if self.n == 0 {
            return vec![];
        }
        let mut order = Vec::with_capacity(self.n);
        let mut stack = vec![self.n + self.merges.len() - 1];
        while let Some(c) = stack.pop() {
            if c < self.n {
                order.push(c);
            } else {
                let m = self.merges[c - self.n];
                stack.push(m.b);
                stack.push(m.a);
            }
        }
        order
    }

    /// Keeps the first n−K merges. Clusters are sorted internally and listed
    /// by their smallest member.
    pub fn cut(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidInput(format!("cluster count {k} outside 1..={}", self.n)));
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        let members = self.members();
        for m in &self.merges[..self.n - k] {
            let (x, y) = (members[m.a][0], members[m.b][0]);
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            parent[rx.max(ry)] = rx.min(ry);
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..self.n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        Ok(groups.into_values().collect())
    }
}

/// `cut` as a free function.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    dendrogram.cut(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSupport {
    pub rule: usize,
    /// Fraction of desirable traces covered.
    pub positive: f64,
    /// Fraction of undesirable traces covered.
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Vec<Vec<usize>>,
    pub representatives: Vec<usize>,
    /// One entry per clustered rule, by rule index.
    pub support: Vec<RuleSupport>,
}

/// Fractions of positive and negative rows covered by every column.
pub fn support(matrix: &RuleMatrix, labels: &[bool]) -> Vec<(f64, f64)> {
    let mut pos = vec![0usize; matrix.n_cols()];
    let mut neg = vec![0usize; matrix.n_cols()];
    for i in 0..matrix.n_rows() {
        let counts = if labels[i] { &mut pos } else { &mut neg };
        for &j in matrix.row(i) {
            counts[j as usize] += 1;
        }
    }
    let np = labels.iter().filter(|&&l| l).count();
    let nn = labels.len() - np;
    let frac = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    pos.iter().zip(&neg).map(|(&p, &q)| (frac(p, np), frac(q, nn))).collect()
}

/// Picks the max-|coefficient| rule of every cluster (lower index on ties).
/// `full` is the rule matrix of the full log with `full_labels`, used for the
/// reported support.
pub fn select_representatives(
    clusters: &[Vec<usize>],
    model: &RegressionModel,
    full: &RuleMatrix,
    full_labels: &[bool],
) -> Result<ClusterReport> {
    let mut representatives = Vec::with_capacity(clusters.len());
    for c in clusters {
        let mut best: Option<usize> = None;
        for &r in c {
            let w = model.weights.get(r).ok_or(Error::OutOfRange {
                index: r,
                len: model.weights.len(),
            })?;
            match best {
                Some(b) if model.weights[b].abs() > w.abs() => {}
                Some(b) if model.weights[b].abs() == w.abs() && b < r => {}
                _ => best = Some(r),
            }
        }
        representatives.push(best.ok_or_else(|| Error::InvalidInput("empty cluster".into()))?);
    }
    let sup = support(full, full_labels);
    let mut rules: Vec<usize> = clusters.iter().flatten().copied().collect();
    rules.sort_unstable();
    let support = rules
        .into_iter()
        .map(|r| {
            let (positive, negative) = sup.get(r).copied().unwrap_or((0.0, 0.0));
            RuleSupport { rule: r, positive, negative }
        })
        .collect();
    Ok(ClusterReport {
        clusters: clusters.to_vec(),
        representatives,
        support,
    })
}

/// Sub-log of traces whose encoding satisfies `rule`, with labels restricted
/// alongside.
pub fn filter_log(log: &EventLog, labels: &[bool], rule: &Rule, space: &FeatureSpace) -> Result<(EventLog, Vec<bool>)> {
    if labels.len() != log.len() {
        return Err(Error::InvalidInput(format!("{} labels for {} traces", labels.len(), log.len())));
    }
    let vectors = space.encode_log(log);
    let mut keep = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        if crate::encoding::rule_holds(v, rule)? {
            keep.push(i);
        }
    }
    let sub_labels = keep.iter().map(|&i| labels[i]).collect();
    Ok((log.select(&keep), sub_labels))
}
