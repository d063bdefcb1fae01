//! L1-regularized logistic regression over the rule-based encoding.
//!
//! Labels map desirable → +1 and undesirable → −1. The objective is the mean
//! logistic loss plus `lambda * ||w||_1`; the bias is not penalized. It is
//! minimized by accelerated proximal gradient with backtracking, restarting
//! the momentum whenever a step would increase the objective, so the accepted
//! objective sequence never increases.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoding::{FeatureVector, Rule};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [0.001, 0.01, 0.1, 1.0];
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Binary trace × rule matrix, stored as the set columns of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMatrix {
    n_cols: usize,
    rows: Vec<Vec<u32>>,
}

impl RuleMatrix {
    pub fn new(n_cols: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        for r in &rows {
            if let Some(&c) = r.iter().find(|&&c| c as usize >= n_cols) {
                return Err(Error::OutOfRange {
                    index: c as usize,
                    len: n_cols,
                });
            }
        }
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                r
            })
            .collect();
        Ok(RuleMatrix { n_cols, rows })
    }

    pub fn from_dense(dense: &[Vec<bool>]) -> Self {
        let n_cols = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j as u32).collect())
            .collect();
        RuleMatrix { n_cols, rows }
    }

    /// `bits[i][j] = rule_holds(vectors[i], rules[j])`.
    pub fn from_rules(vectors: &[FeatureVector], rules: &[Rule]) -> Result<Self> {
        if let Some(v) = vectors.first() {
            for r in rules {
                crate::encoding::rule_holds(v, r)?;
            }
        }
        let rows = vectors
            .iter()
            .map(|v| {
                rules
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.holds_unchecked(v))
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        Ok(RuleMatrix {
            n_cols: rules.len(),
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn dense_row(&self, i: usize) -> Vec<bool> {
        let mut out = vec![false; self.n_cols];
        for &j in &self.rows[i] {
            out[j as usize] = true;
        }
        out
    }

    /// Row indices covered by column `j`.
    pub fn coverage(&self, j: usize) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> RuleMatrix {
        RuleMatrix {
            n_cols: self.n_cols,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Keeps only the listed columns, renumbered in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> RuleMatrix {
        let mut map = vec![u32::MAX; self.n_cols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new as u32;
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v: Vec<u32> = r.iter().map(|&j| map[j as usize]).filter(|&j| j != u32::MAX).collect();
                v.sort_unstable();
                v
            })
            .collect();
        RuleMatrix {
            n_cols: cols.len(),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after every iteration (initial value first).
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl RegressionModel {
    pub fn nonzero(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    pub fn score_row(&self, row: &[u32]) -> f64 {
        self.bias + row.iter().map(|&j| self.weights[j as usize]).sum::<f64>()
    }

    pub fn accuracy(&self, matrix: &RuleMatrix, labels: &[bool]) -> f64 {
        if labels.is_empty() {
            return 0.0;
        }
        let correct = (0..matrix.n_rows())
            .filter(|&i| (self.score_row(matrix.row(i)) >= 0.0) == labels[i])
            .count();
        correct as f64 / labels.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// log(1 + exp(-t)) without overflow.
fn softplus_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn margins(m: &RuleMatrix, w: &[f64], b: f64) -> Vec<f64> {
    (0..m.n_rows())
        .map(|i| b + m.row(i).iter().map(|&j| w[j as usize]).sum::<f64>())
        .collect()
}

fn loss_from_margins(z: &[f64], labels: &[bool]) -> f64 {
    let n = z.len().max(1) as f64;
    z.iter().zip(labels).map(|(&zi, &y)| softplus_neg(sign(y) * zi)).sum::<f64>() / n
}

/// Mean logistic loss (the smooth part of the objective).
pub fn smooth_loss(m: &RuleMatrix, labels: &[bool], w: &[f64], b: f64) -> f64 {
    loss_from_margins(&margins(m, w, b), labels)
}

fn gradient_from_margins(m: &RuleMatrix, labels: &[bool], z: &[f64]) -> (Vec<f64>, f64) {
    let n = m.n_rows().max(1) as f64;
    let mut g = vec![0.0; m.n_cols()];
    let mut gb = 0.0;
    for (i, (&zi, &y)) in z.iter().zip(labels).enumerate() {
        let s = sign(y);
        // d/dz log(1 + exp(-s z)) = -s / (1 + exp(s z))
        let r = -s / (1.0 + (s * zi).exp()) / n;
        gb += r;
        for &j in m.row(i) {
            g[j as usize] += r;
        }
    }
    (g, gb)
}

/// Gradient of the smooth part with respect to (weights, bias).
pub fn smooth_gradient(m: &RuleMatrix, labels: &[bool], w: &[f64], b: f64) -> (Vec<f64>, f64) {
    gradient_from_margins(m, labels, &margins(m, w, b))
}

pub fn objective(m: &RuleMatrix, labels: &[bool], w: &[f64], b: f64, lambda: f64) -> f64 {
    smooth_loss(m, labels, w, b) + lambda * w.iter().map(|x| x.abs()).sum::<f64>()
}

/// Largest KKT violation of a fitted model: for zero weights the excess of
/// |gradient| over lambda, for nonzero weights |gradient + lambda·sign(w)|,
/// and the bias gradient.
pub fn kkt_residual(m: &RuleMatrix, labels: &[bool], model: &RegressionModel) -> f64 {
    let (g, gb) = smooth_gradient(m, labels, &model.weights, model.bias);
    let mut worst = gb.abs();
    for (gj, wj) in g.iter().zip(&model.weights) {
        let v = if *wj == 0.0 {
            (gj.abs() - model.lambda).max(0.0)
        } else {
            (gj + model.lambda * wj.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn check_fit_inputs(m: &RuleMatrix, labels: &[bool], lambda: f64) -> Result<()> {
    if m.n_rows() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            m.n_rows(),
            labels.len()
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::InvalidInput("labels must contain both classes".into()));
    }
    Ok(())
}

pub fn fit(m: &RuleMatrix, labels: &[bool], lambda: f64, opts: FitOptions) -> Result<RegressionModel> {
    check_fit_inputs(m, labels, lambda)?;
    Ok(fit_from(m, labels, lambda, opts, None))
}

/// Fits every lambda (in the order given) warm-starting from the previous
/// solution. Pass lambdas in decreasing order for the usual path behaviour.
pub fn fit_path(m: &RuleMatrix, labels: &[bool], lambdas: &[f64], opts: FitOptions) -> Result<Vec<RegressionModel>> {
    let mut out: Vec<RegressionModel> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        check_fit_inputs(m, labels, lambda)?;
        let warm = out.last().map(|p| (p.weights.as_slice(), p.bias));
        let model = fit_from(m, labels, lambda, opts, warm);
        out.push(model);
    }
    Ok(out)
}

fn fit_from(
    m: &RuleMatrix,
    labels: &[bool],
    lambda: f64,
    opts: FitOptions,
    warm: Option<(&[f64], f64)>,
) -> RegressionModel {
    let p = m.n_cols();
    let l1 = |w: &[f64]| lambda * w.iter().map(|x| x.abs()).sum::<f64>();
    let (mut w, mut b) = match warm {
        Some((w0, b0)) => (w0.to_vec(), b0),
        None => {
            let pos = labels.iter().filter(|&&l| l).count() as f64;
            let neg = labels.len() as f64 - pos;
            (vec![0.0; p], (pos / neg).ln())
        }
    };
    let mut fx = smooth_loss(m, labels, &w, b) + l1(&w);
    let mut history = vec![fx];
    // y is the extrapolated point; momentum as in FISTA
    let (mut yw, mut yb) = (w.clone(), b);
    let mut momentum = 1.0f64;
    let mut step = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let zy = margins(m, &yw, yb);
        let fy = loss_from_margins(&zy, labels);
        let (gw, gb) = gradient_from_margins(m, labels, &zy);
        let (cw, cb, fc) = loop {
            let cw: Vec<f64> = yw
                .iter()
                .zip(&gw)
                .map(|(&yj, &gj)| soft_threshold(yj - step * gj, step * lambda))
                .collect();
            let cb = yb - step * gb;
            let fc = smooth_loss(m, labels, &cw, cb);
            let mut lin = (cb - yb) * gb;
            let mut sq = (cb - yb) * (cb - yb);
            for j in 0..p {
                let d = cw[j] - yw[j];
                lin += d * gw[j];
                sq += d * d;
            }
            if fc <= fy + lin + sq / (2.0 * step) + 1e-15 || step < 1e-20 {
                break (cw, cb, fc);
            }
            step *= 0.5;
        };
        let f_candidate = fc + l1(&cw);
        if f_candidate <= fx {
            let decrease = fx - f_candidate;
            let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            let beta = (momentum - 1.0) / next_momentum;
            yw = cw.iter().zip(&w).map(|(&c, &o)| c + beta * (c - o)).collect();
            yb = cb + beta * (cb - b);
            w = cw;
            b = cb;
            fx = f_candidate;
            momentum = next_momentum;
            history.push(fx);
            step *= 1.25;
            if decrease < opts.tolerance {
                converged = true;
                break;
            }
        } else {
            let restarted = momentum == 1.0 && yw == w && yb == b;
            history.push(fx);
            if restarted {
                // a plain proximal step from the iterate failed to descend:
                // numerically stationary
                converged = true;
                break;
            }
            yw = w.clone();
            yb = b;
            momentum = 1.0;
        }
    }
    RegressionModel {
        weights: w,
        bias: b,
        lambda,
        converged,
        iterations,
        history,
    }
}

/// Predicts desirable (true) iff g(wᵀx + b) ≥ 0.5, i.e. the score is ≥ 0.
pub fn predict(model: &RegressionModel, vector: &[bool]) -> Result<bool> {
    if vector.len() != model.weights.len() {
        return Err(Error::InvalidInput(format!(
            "vector has {} entries, model has {} weights",
            vector.len(),
            model.weights.len()
        )));
    }
    let score = model.bias
        + vector
            .iter()
            .zip(&model.weights)
            .filter(|(x, _)| **x)
            .map(|(_, w)| w)
            .sum::<f64>();
    Ok(score >= 0.0)
}

/// Signed coefficient of a rule; positive values point to desirability.
pub fn importance(model: &RegressionModel, rule_index: usize) -> Result<f64> {
    model.weights.get(rule_index).copied().ok_or(Error::OutOfRange {
        index: rule_index,
        len: model.weights.len(),
    })
}

/// Stratified fold assignment: `folds[i]` is the fold of sample `i`.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut folds = vec![0; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            folds[i] = pos % k;
        }
    }
    folds
}

/// Picks the grid value with the best mean validation accuracy over `folds`
/// stratified folds; ties go to the larger lambda.
pub fn select_lambda(m: &RuleMatrix, labels: &[bool], grid: &[f64], folds: usize, seed: u64) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    if order.len() == 1 {
        return Ok(order[0]);
    }
    let assignment = stratified_folds(labels, folds, seed);
    let mut acc = vec![0.0; order.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
        let val: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
        let tl: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let vl: Vec<bool> = val.iter().map(|&i| labels[i]).collect();
        let path = fit_path(&m.select_rows(&train), &tl, &order, FitOptions::default())?;
        let vm = m.select_rows(&val);
        for (a, model) in acc.iter_mut().zip(&path) {
            *a += model.accuracy(&vm, &vl) / folds as f64;
        }
    }
    Ok(best_by_accuracy(&order, &acc))
}

/// `order` is sorted by decreasing lambda, so the first maximum is the
/// largest lambda among ties.
pub(crate) fn best_by_accuracy(order: &[f64], acc: &[f64]) -> f64 {
    let mut best = 0;
    for i in 1..order.len() {
        if acc[i] > acc[best] + 1e-12 {
            best = i;
        }
    }
    order[best]
}

/// Two-column report (rule text, coefficient), sorted by |coefficient|
/// descending, ties by rule index.
pub fn write_coefficient_report<W: Write>(model: &RegressionModel, rule_texts: &[String], out: W) -> Result<()> {
    let mut order: Vec<usize> = (0..model.weights.len()).collect();
    order.sort_by(|&a, &b| model.weights[b].abs().total_cmp(&model.weights[a].abs()).then(a.cmp(&b)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rule", "coefficient"])?;
    for j in order {
        w.write_record([rule_texts[j].as_str(), format!("{:.6}", model.weights[j]).as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<coefficients>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_lambda_zeroes_weights() {
        let m = RuleMatrix::from_dense(&[vec![true, false], vec![false, true], vec![true, true], vec![false, false]]);
        let y = [true, false, true, false];
        let model = fit(&m, &y, 1e3, FitOptions::default()).unwrap();
        assert_eq!(model.nonzero(), 0);
        assert!(model.bias.abs() < 1e-6);
    }

    #[test]
    fn predict_boundaries() {
        let zero = RegressionModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            lambda: 1.0,
            converged: true,
            iterations: 0,
            history: vec![],
        };
        assert!(predict(&zero, &[true, false]).unwrap());
        let neg = RegressionModel { bias: -1.0, ..zero.clone() };
        assert!(!predict(&neg, &[true, false]).unwrap());
        assert!(predict(&zero, &[true]).is_err());
        assert_eq!(importance(&zero, 1).unwrap(), 0.0);
        assert!(importance(&zero, 2).is_err());
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let m = RuleMatrix::from_dense(&[vec![true], vec![false]]);
        assert!(fit(&m, &[true, true], 0.1, FitOptions::default()).is_err());
        assert!(fit(&m, &[true, false], 0.0, FitOptions::default()).is_err());
    }

    #[test]
    fn single_lambda_grid() {
        let m = RuleMatrix::from_dense(&[vec![true], vec![false], vec![true], vec![false]]);
        let y = [true, false, true, false];
        assert_eq!(select_lambda(&m, &y, &[0.1], 2, 0).unwrap(), 0.1);
    }
}
