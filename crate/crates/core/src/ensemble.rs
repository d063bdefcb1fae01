//! Decision trees, random forests and gradient boosting over binary feature
//! vectors, plus root-to-leaf rule extraction.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{FeatureVector, Literal, Provenance, Rule};
use crate::error::{Error, Result};
use crate::seed;

pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;

/// Arena node; the root is node 0. `zero` is the branch where the feature bit
/// is 0, `one` where it is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, zero: usize, one: usize },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_of(&self, v: &FeatureVector) -> usize {
        let mut i = 0;
        while let Node::Split { feature, zero, one } = self.nodes[i] {
            i = if v.get(feature) { one } else { zero };
        }
        i
    }

    pub fn value(&self, v: &FeatureVector) -> f64 {
        match self.nodes[self.leaf_of(v)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_of ends on a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { zero, one, .. } => 1 + go(nodes, zero).max(go(nodes, one)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Every root-to-leaf path as (leaf node index, literals), zero branch first.
    pub fn paths(&self) -> Vec<(usize, Vec<Literal>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((i, path)) = stack.pop() {
            match self.nodes[i] {
                Node::Leaf { .. } => out.push((i, path)),
                Node::Split { feature, zero, one } => {
                    let mut p1 = path.clone();
                    p1.push(Literal { feature, expected: true });
                    let mut p0 = path;
                    p0.push(Literal { feature, expected: false });
                    stack.push((one, p1));
                    stack.push((zero, p0));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub kind: EnsembleKind,
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features sampled per split; `None` means all features.
    pub feature_subset: Option<usize>,
    pub learning_rate: f64,
    /// Bootstrap resampling per forest tree (disable only for degenerate tests).
    pub bootstrap: bool,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn random_forest(n_trees: usize, max_depth: usize, n_features: usize, seed: u64) -> Self {
        EnsembleParams {
            kind: EnsembleKind::RandomForest,
            n_trees,
            max_depth,
            feature_subset: Some(((n_features as f64).sqrt().round() as usize).max(1)),
            learning_rate: 1.0,
            bootstrap: true,
            seed,
        }
    }

    pub fn gradient_boosting(n_trees: usize, max_depth: usize, learning_rate: f64, seed: u64) -> Self {
        EnsembleParams {
            kind: EnsembleKind::GradientBoosting,
            n_trees,
            max_depth,
            feature_subset: None,
            learning_rate,
            bootstrap: false,
            seed,
        }
    }

    fn validate(&self, allow_zero_trees: bool) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidInput("max_depth must be at least 1".into()));
        }
        if self.n_trees == 0 && !allow_zero_trees {
            return Err(Error::InvalidInput("n_trees must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub format_version: u32,
    pub kind: EnsembleKind,
    pub params: EnsembleParams,
    /// Initial margin (log-odds) for boosting; 0 for forests.
    pub base_score: f64,
    pub trees: Vec<DecisionTree>,
    pub oob_error: Option<f64>,
}

impl Ensemble {
    /// Boosting margin using the first `rounds` trees.
    pub fn margin_with_rounds(&self, v: &FeatureVector, rounds: usize) -> f64 {
        let lr = self.params.learning_rate;
        self.base_score + self.trees.iter().take(rounds).map(|t| lr * t.value(v)).sum::<f64>()
    }

    pub fn margin(&self, v: &FeatureVector) -> f64 {
        self.margin_with_rounds(v, self.trees.len())
    }

    /// Desirable (true) prediction. Forests take a majority vote, ties to 1.
    pub fn predict(&self, v: &FeatureVector) -> bool {
        match self.kind {
            EnsembleKind::RandomForest => {
                let ones = self.trees.iter().filter(|t| t.value(v) >= 0.5).count();
                2 * ones >= self.trees.len()
            }
            EnsembleKind::GradientBoosting => self.margin(v) >= 0.0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let e: Ensemble = serde_json::from_str(&text)?;
        if e.format_version != ENSEMBLE_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported ensemble format version {}",
                e.format_version
            )));
        }
        Ok(e)
    }
}

/// Row-wise list of set bits, shared by all split searches.
struct ActiveRows {
    n_features: usize,
    rows: Vec<Vec<u32>>,
}

impl ActiveRows {
    fn new(vectors: &[FeatureVector]) -> Result<Self> {
        let n_features = vectors.first().map_or(0, FeatureVector::len);
        if vectors.iter().any(|v| v.len() != n_features) {
            return Err(Error::InvalidInput("feature vectors differ in length".into()));
        }
        let rows = vectors
            .iter()
            .map(|v| {
                v.bits()
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect();
        Ok(ActiveRows { n_features, rows })
    }
}

enum Criterion<'a> {
    Gini { labels: &'a [bool] },
    Newton { grad: &'a [f64], hess: &'a [f64] },
}

const MIN_GAIN: f64 = 1e-12;
const HESS_EPS: f64 = 1e-12;

struct Grower<'a, R: Rng> {
    data: &'a ActiveRows,
    criterion: Criterion<'a>,
    max_depth: usize,
    subset: Option<usize>,
    rng: R,
    nodes: Vec<Node>,
    // scratch accumulators indexed by feature
    acc_n: Vec<u32>,
    acc_a: Vec<f64>,
    acc_b: Vec<f64>,
}

fn gini(n: f64, pos: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

impl<'a, R: Rng> Grower<'a, R> {
    fn new(data: &'a ActiveRows, criterion: Criterion<'a>, max_depth: usize, subset: Option<usize>, rng: R) -> Self {
        let f = data.n_features;
        Grower {
            data,
            criterion,
            max_depth,
            subset,
            rng,
            nodes: Vec::new(),
            acc_n: vec![0; f],
            acc_a: vec![0.0; f],
            acc_b: vec![0.0; f],
        }
    }

    /// Node totals: (count, a, b) where (a, b) = (positives, unused) for Gini
    /// and (gradient sum, hessian sum) for Newton.
    fn totals(&self, samples: &[usize]) -> (f64, f64, f64) {
        let n = samples.len() as f64;
        match self.criterion {
            Criterion::Gini { labels } => (n, samples.iter().filter(|&&s| labels[s]).count() as f64, 0.0),
            Criterion::Newton { grad, hess } => (
                n,
                samples.iter().map(|&s| grad[s]).sum(),
                samples.iter().map(|&s| hess[s]).sum(),
            ),
        }
    }

    fn leaf_value(&self, totals: (f64, f64, f64)) -> f64 {
        let (n, a, b) = totals;
        match self.criterion {
            Criterion::Gini { .. } => {
                if 2.0 * a >= n {
                    1.0
                } else {
                    0.0
                }
            }
            Criterion::Newton { .. } => -a / (b + HESS_EPS),
        }
    }

    fn score(&self, n: f64, a: f64, b: f64) -> f64 {
        match self.criterion {
            // weighted impurity, lower is better; negate so higher is better
            Criterion::Gini { .. } => -n * gini(n, a),
            Criterion::Newton { .. } => a * a / (b + HESS_EPS),
        }
    }

    fn candidates(&mut self, used: &[bool]) -> Vec<usize> {
        let f = self.data.n_features;
        let mut c: Vec<usize> = match self.subset {
            Some(k) if k < f => sample_indices(&mut self.rng, f, k).into_vec(),
            _ => (0..f).collect(),
        };
        c.retain(|&i| !used[i]);
        c.sort_unstable();
        c
    }

    fn best_split(&mut self, samples: &[usize], totals: (f64, f64, f64), used: &[bool]) -> Option<usize> {
        let cands = self.candidates(used);
        if cands.is_empty() {
            return None;
        }
        for &f in &cands {
            self.acc_n[f] = 0;
            self.acc_a[f] = 0.0;
            self.acc_b[f] = 0.0;
        }
        // accumulate over the 1-branch of every feature at once
        for &s in samples {
            let (a, b) = match self.criterion {
                Criterion::Gini { labels } => (if labels[s] { 1.0 } else { 0.0 }, 0.0),
                Criterion::Newton { grad, hess } => (grad[s], hess[s]),
            };
            for &f in &self.data.rows[s] {
                let f = f as usize;
                self.acc_n[f] += 1;
                self.acc_a[f] += a;
                self.acc_b[f] += b;
            }
        }
        let (n, a, b) = totals;
        let parent = self.score(n, a, b);
        let mut best: Option<(f64, usize)> = None;
        for &f in &cands {
            let n1 = self.acc_n[f] as f64;
            if n1 == 0.0 || n1 == n {
                continue;
            }
            let (a1, b1) = (self.acc_a[f], self.acc_b[f]);
            let gain = self.score(n1, a1, b1) + self.score(n - n1, a - a1, b - b1) - parent;
            let gain = match self.criterion {
                Criterion::Gini { .. } => gain / n,
                Criterion::Newton { .. } => gain,
            };
            if gain > MIN_GAIN && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, f));
            }
        }
        best.map(|(_, f)| f)
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize, used: &mut Vec<bool>) -> usize {
        let totals = self.totals(&samples);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(totals),
        });
        let pure = matches!(self.criterion, Criterion::Gini { .. }) && (totals.1 == 0.0 || totals.1 == totals.0);
        if depth >= self.max_depth || pure || samples.len() < 2 {
            return id;
        }
        let Some(feature) = self.best_split(&samples, totals, used) else {
            return id;
        };
        let (ones, zeros): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.data.rows[s].binary_search(&(feature as u32)).is_ok());
        used[feature] = true;
        let zero = self.grow(zeros, depth + 1, used);
        let one = self.grow(ones, depth + 1, used);
        used[feature] = false;
        self.nodes[id] = Node::Split { feature, zero, one };
        id
    }
}

fn check_training(vectors: &[FeatureVector], labels: &[bool]) -> Result<()> {
    if vectors.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if vectors.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    Ok(())
}

fn grow_tree(data: &ActiveRows, criterion: Criterion<'_>, samples: Vec<usize>, max_depth: usize, subset: Option<usize>, seed: u64) -> DecisionTree {
    let mut g = Grower::new(data, criterion, max_depth, subset, seed::rng(seed));
    let mut used = vec![false; data.n_features];
    g.grow(samples, 0, &mut used);
    DecisionTree { nodes: g.nodes }
}

/// Gini classification tree on all samples.
pub fn train_tree(
    vectors: &[FeatureVector],
    labels: &[bool],
    max_depth: usize,
    feature_subset: Option<usize>,
    seed: u64,
) -> Result<DecisionTree> {
    check_training(vectors, labels)?;
    if max_depth == 0 {
        return Err(Error::InvalidInput("max_depth must be at least 1".into()));
    }
    let data = ActiveRows::new(vectors)?;
    Ok(grow_tree(
        &data,
        Criterion::Gini { labels },
        (0..vectors.len()).collect(),
        max_depth,
        feature_subset,
        seed,
    ))
}

pub fn train_random_forest(vectors: &[FeatureVector], labels: &[bool], params: &EnsembleParams) -> Result<Ensemble> {
    check_training(vectors, labels)?;
    params.validate(false)?;
    let data = ActiveRows::new(vectors)?;
    let n = vectors.len();
    let grown: Vec<(DecisionTree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let tree_seed = seed::derive_indexed(params.seed, i as u64);
            let mut rng = seed::rng(seed::derive(tree_seed, "bootstrap"));
            let mut in_bag = vec![!params.bootstrap; n];
            let samples: Vec<usize> = if params.bootstrap {
                (0..n)
                    .map(|_| {
                        let s = rng.gen_range(0..n);
                        in_bag[s] = true;
                        s
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            let tree = grow_tree(
                &data,
                Criterion::Gini { labels },
                samples,
                params.max_depth,
                params.feature_subset,
                tree_seed,
            );
            (tree, in_bag)
        })
        .collect();

    let oob_error = if params.bootstrap {
        let mut wrong = 0usize;
        let mut counted = 0usize;
        for (s, v) in vectors.iter().enumerate() {
            let votes: Vec<bool> = grown
                .iter()
                .filter(|(_, bag)| !bag[s])
                .map(|(t, _)| t.value(v) >= 0.5)
                .collect();
            if votes.is_empty() {
                continue;
            }
            counted += 1;
            let ones = votes.iter().filter(|&&b| b).count();
            if (2 * ones >= votes.len()) != labels[s] {
                wrong += 1;
            }
        }
        (counted > 0).then(|| wrong as f64 / counted as f64)
    } else {
        None
    };

    Ok(Ensemble {
        format_version: ENSEMBLE_FORMAT_VERSION,
        kind: EnsembleKind::RandomForest,
        params: params.clone(),
        base_score: 0.0,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        oob_error,
    })
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean logistic loss of margins against labels.
pub fn logistic_loss(margins: &[f64], labels: &[bool]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            let z = if y { m } else { -m };
            // log(1 + exp(-z)), stable
            if z > 0.0 {
                (-z).exp().ln_1p()
            } else {
                -z + z.exp().ln_1p()
            }
        })
        .sum();
    total / margins.len().max(1) as f64
}

/// Stagewise Newton boosting of regression trees on the logistic loss.
pub fn train_gradient_boosting(vectors: &[FeatureVector], labels: &[bool], params: &EnsembleParams) -> Result<Ensemble> {
    check_training(vectors, labels)?;
    params.validate(true)?;
    let data = ActiveRows::new(vectors)?;
    let n = vectors.len();
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    // clamp keeps the log-odds finite on single-class data
    let rate = (pos / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (rate / (1.0 - rate)).ln();
    let mut margins = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for round in 0..params.n_trees {
        let (grad, hess): (Vec<f64>, Vec<f64>) = margins
            .iter()
            .zip(labels)
            .map(|(&m, &y)| {
                let p = sigmoid(m);
                (p - if y { 1.0 } else { 0.0 }, p * (1.0 - p))
            })
            .unzip();
        let tree = grow_tree(
            &data,
            Criterion::Newton { grad: &grad, hess: &hess },
            (0..n).collect(),
            params.max_depth,
            params.feature_subset,
            seed::derive_indexed(params.seed, round as u64),
        );
        for (m, v) in margins.iter_mut().zip(vectors) {
            *m += params.learning_rate * tree.value(v);
        }
        trees.push(tree);
    }
    Ok(Ensemble {
        format_version: ENSEMBLE_FORMAT_VERSION,
        kind: EnsembleKind::GradientBoosting,
        params: params.clone(),
        base_score,
        trees,
        oob_error: None,
    })
}

pub fn train_ensemble(vectors: &[FeatureVector], labels: &[bool], params: &EnsembleParams) -> Result<Ensemble> {
    match params.kind {
        EnsembleKind::RandomForest => train_random_forest(vectors, labels, params),
        EnsembleKind::GradientBoosting => train_gradient_boosting(vectors, labels, params),
    }
}

/// One rule per root-to-leaf path of every tree. Splitless trees contribute
/// nothing; duplicate literal sets keep their first provenance; rules that
/// cover no training vector are dropped.
pub fn extract_rules(ensemble: &Ensemble, training: &[FeatureVector]) -> Vec<Rule> {
    extract_rules_from(std::slice::from_ref(ensemble), training)
}

/// Rules pooled from several ensembles (tree indices continue across them).
pub fn extract_rules_from(ensembles: &[Ensemble], training: &[FeatureVector]) -> Vec<Rule> {
    let mut seen: HashSet<Vec<Literal>> = HashSet::new();
    let mut rules = Vec::new();
    let trees = ensembles.iter().flat_map(|e| e.trees.iter());
    for (ti, tree) in trees.enumerate() {
        for (leaf, literals) in tree.paths() {
            if literals.is_empty() {
                continue;
            }
            let rule = Rule::new(literals)
                .expect("paths never repeat a feature")
                .with_provenance(Provenance { tree: ti, leaf });
            if !seen.insert(rule.literals().to_vec()) {
                continue;
            }
            if training.iter().any(|v| rule.holds_unchecked(v)) {
                rules.push(rule);
            }
        }
    }
    rules
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(bits: &[u8]) -> FeatureVector {
        FeatureVector::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn depth_one_on_separating_feature() {
        let x = vec![fv(&[0, 1, 0]), fv(&[1, 1, 0]), fv(&[0, 0, 1]), fv(&[1, 0, 1])];
        let y = vec![true, true, false, false];
        let t = train_tree(&x, &y, 3, None, 0).unwrap();
        assert_eq!(t.depth(), 1);
        assert!(matches!(t.nodes()[0], Node::Split { feature: 1, .. }));
        let rules = extract_rules(
            &Ensemble {
                format_version: 1,
                kind: EnsembleKind::RandomForest,
                params: EnsembleParams::random_forest(1, 3, 3, 0),
                base_score: 0.0,
                trees: vec![t.clone(), t],
                oob_error: None,
            },
            &x,
        );
        assert_eq!(rules.len(), 2, "duplicates across identical trees are merged");
        assert!(rules.iter().all(|r| r.literals().len() == 1));
    }

    #[test]
    fn pure_labels_give_a_leaf() {
        let x = vec![fv(&[0, 1]), fv(&[1, 0])];
        let t = train_tree(&x, &[true, true], 3, None, 0).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert!(train_tree(&[], &[], 3, None, 0).is_err());
    }

    #[test]
    fn zero_rounds_is_base_rate() {
        let x = vec![fv(&[1]), fv(&[0]), fv(&[0]), fv(&[0])];
        let y = vec![true, false, false, true];
        let mut p = EnsembleParams::gradient_boosting(0, 2, 0.1, 0);
        p.n_trees = 0;
        let e = train_gradient_boosting(&x, &y, &p).unwrap();
        assert!(e.trees.is_empty());
        assert!((e.margin(&x[0]) - 0.0).abs() < 1e-12);
        let e = train_gradient_boosting(&x[..3], &y[..3], &p).unwrap();
        assert!((e.base_score - (1.0f64 / 2.0).ln()).abs() < 1e-12);
    }
}
