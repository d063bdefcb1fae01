//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any check fails, except for a claim that is refuted by a
//! verified counterexample: that one is reported as FAIL with its
//! certificate and does not abort the suite.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use procvar::conformance::{align, trace_fitness, MetricsReport};
use procvar::declare::{evaluate_activities, Constraint, Outcome, Template};
use procvar::discovery::{discover, language, to_petri_net, ProcessTree};
use procvar::event_log::EventLog;
use procvar::pipeline::{self, synthetic, PipelineConfig, RunReport};
use procvar::rule_clustering::{agglomerate, jaccard_matrix, DistanceMatrix};
use procvar::sparse_regression::{
    fit, kkt_residual, smooth_gradient, smooth_loss, FitOptions, RuleMatrix, DEFAULT_LAMBDA_GRID,
};

enum Verdict {
    Pass(String),
    Fail(String),
    /// The claim is false and the detail carries a checked counterexample.
    Refuted(String),
}

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run_config(name: &str, out: &Path) -> Result<RunReport, String> {
    let mut cfg = PipelineConfig::load(&data(name)).map_err(|e| e.to_string())?;
    cfg.output_dir = out.to_path_buf();
    pipeline::run(&cfg).map_err(|e| e.to_string())
}

fn sample<S: Strategy>(s: &S, runner: &mut TestRunner) -> S::Value {
    s.new_tree(runner).expect("strategy produced a value").current()
}

fn strings(t: &[&str]) -> Vec<String> {
    t.iter().map(|s| s.to_string()).collect()
}

fn golden() -> Check {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = run_config("orderings.toml", out.path())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.1}s");
    ensure!(report.log.traces == 600, "{} traces", report.log.traces);
    ensure!(report.clusters.len() == 2, "K = {}", report.clusters.len());
    let rows: Vec<&MetricsReport> = report
        .metrics
        .iter()
        .filter(|r| r.group.starts_with("cluster"))
        .filter_map(|r| r.metrics.as_ref())
        .collect();
    let near = |v: f64| (v - 0.667).abs() <= 0.001;
    let desirable = rows.iter().any(|m| near(m.t_fit_pos) && m.t_fit_neg == 0.0);
    let undesirable = rows.iter().any(|m| near(m.t_fit_neg) && m.t_fit_pos == 0.0);
    let pairs: Vec<String> = rows.iter().map(|m| format!("({:.3},{:.3})", m.t_fit_pos, m.t_fit_neg)).collect();
    ensure!(desirable && undesirable, "cluster t-fit (L+,L-): {}", pairs.join(" "));
    Ok(format!("cluster t-fit (L+,L-) {} in {secs:.2}s", pairs.join(" ")))
}

fn declare_suite() -> Check {
    let eval = |t: &[&str], c: &str| evaluate_activities(t, &c.parse::<Constraint>().unwrap());
    ensure!(eval(&["p", "l"], "CoExistence(a,p)") == Outcome::Violated, "CoExistence(a,p)");
    ensure!(eval(&["p", "l"], "ChainResponse(a,p)") == Outcome::VacSatisfied, "ChainResponse(a,p)");
    ensure!(eval(&["p", "l"], "AtLeast1(p)") == Outcome::Satisfied, "AtLeast1(p)");
    let names = ["a", "b", "c", "d"];
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let n = 1000;
    for _ in 0..n {
        let len = r.gen_range(0..9);
        let t: Vec<&str> = (0..len).map(|_| names[r.gen_range(0..4)]).collect();
        let template = Template::ALL[r.gen_range(0..Template::ALL.len())];
        let a = r.gen_range(0..4);
        let (x, y) = (names[a], names[(a + r.gen_range(1..4)) % 4]);
        let c = if template.arity() == 1 { Constraint::unary(template, x) } else { Constraint::binary(template, x, y) };
        let want = common::reference_eval(template, &t, x, y);
        ensure!(evaluate_activities(&t, &c) == want, "{c} on {t:?}: want {want:?}");
    }
    Ok(format!("3 worked examples and {n} randomized evaluations agree with the reference"))
}

fn metric_identities() -> Check {
    let m = MetricsReport::from_fitness(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
    ensure!(m.a_acc == 0.0 && m.a_f1 == 0.0, "a-acc {} a-F1 {}", m.a_acc, m.a_f1);
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let v: Vec<f64> = (0..4).map(|_| r.gen_range(0.0..=1.0)).collect();
        let m = MetricsReport::from_fitness(v[0], v[1], v[2], v[3], 1.0, 1.0);
        ensure!((-1.0..=1.0).contains(&m.a_acc) && (-1.0..=1.0).contains(&m.t_acc), "acc out of range at {v:?}");
        ensure!((0.0..=1.0).contains(&m.a_f1) && (0.0..=1.0).contains(&m.t_f1), "F1 out of range at {v:?}");
    }
    Ok("identical fitness gives a-acc = a-F1 = 0; ranges hold on 1000 pairs".into())
}

fn regression() -> Verdict {
    let checks = || -> Check {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let mut worst_kkt = 0.0f64;
        for seed in 0..100 {
            let (x, y) = common::regression_instance(seed);
            let m = RuleMatrix::from_dense(&x);
            let w: Vec<f64> = (0..10).map(|_| r.gen_range(-2.0..2.0)).collect();
            let b = r.gen_range(-1.0..1.0);
            let (g, _) = smooth_gradient(&m, &y, &w, b);
            for j in 0..10 {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[j] += 1e-5;
                down[j] -= 1e-5;
                let fd = (smooth_loss(&m, &y, &up, b) - smooth_loss(&m, &y, &down, b)) / 2e-5;
                ensure!((fd - g[j]).abs() < 1e-6, "seed {seed} coord {j}: fd {fd} vs {}", g[j]);
            }
            for &lambda in &DEFAULT_LAMBDA_GRID {
                let model = fit(&m, &y, lambda, FitOptions::default()).map_err(|e| e.to_string())?;
                ensure!(model.converged, "seed {seed} lambda {lambda} did not converge");
                for p in model.history.windows(2) {
                    ensure!(p[1] <= p[0], "seed {seed}: objective rose {} -> {}", p[0], p[1]);
                }
                let (g, _) = smooth_gradient(&m, &y, &model.weights, model.bias);
                for (j, (gj, wj)) in g.iter().zip(&model.weights).enumerate() {
                    if *wj == 0.0 {
                        ensure!(gj.abs() <= lambda + 1e-6, "seed {seed} weight {j}: |grad| {} > lambda {lambda}", gj.abs());
                    }
                }
                worst_kkt = worst_kkt.max(kkt_residual(&m, &y, &model));
            }
        }
        Ok(format!("finite differences, monotone objective and |grad| <= lambda+1e-6 at zero weights hold on 100 instances x 4 lambdas (worst full KKT residual {worst_kkt:.1e})"))
    };
    let base = match checks() {
        Ok(s) => s,
        Err(e) => return Verdict::Fail(e),
    };

    // Nonzero-count monotonicity along the grid.
    let counts = |seed: u64| -> Vec<usize> {
        let (x, y) = common::regression_instance(seed);
        let m = RuleMatrix::from_dense(&x);
        DEFAULT_LAMBDA_GRID.iter().map(|&l| fit(&m, &y, l, FitOptions::default()).unwrap().nonzero()).collect()
    };
    let violations: Vec<u64> = (0..200).filter(|&s| counts(s).windows(2).any(|p| p[1] > p[0])).collect();
    let Some(&seed) = violations.first() else {
        return Verdict::Pass(format!("{base}; nonzero count non-increasing on 200 instances"));
    };
    // Certificate: tight refits satisfy the optimality conditions to 1e-7
    // with the same supports, so the growth is a property of the optimum.
    let (x, y) = common::regression_instance(seed);
    let m = RuleMatrix::from_dense(&x);
    let tight = FitOptions { tolerance: 1e-15, max_iters: 200_000 };
    let mut certified = true;
    let mut support = Vec::new();
    let mut worst = 0.0f64;
    for &l in &DEFAULT_LAMBDA_GRID {
        let t = fit(&m, &y, l, tight).unwrap();
        worst = worst.max(kkt_residual(&m, &y, &t));
        support.push(t.nonzero());
    }
    certified &= worst < 1e-7 && support == counts(seed);
    let detail = format!(
        "{base}; nonzero count grows with lambda on {}/200 instances, e.g. seed {seed}: counts {support:?} over {:?} (KKT residual {worst:.1e} at tight tolerance)",
        violations.len(),
        DEFAULT_LAMBDA_GRID
    );
    if certified {
        Verdict::Refuted(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn alignment() -> Check {
    let mut runner = TestRunner::deterministic();
    let nets = common::process_tree(6)
        .prop_map(|t| to_petri_net(&t).unwrap())
        .prop_filter("at most 8 transitions", |n| n.transitions.len() <= 8);
    let n = 50;
    for i in 0..n {
        let net = sample(&nets, &mut runner);
        let t = sample(&common::trace(6), &mut runner);
        let refs: Vec<&str> = t.iter().map(String::as_str).collect();
        let got = align(&t, &net).map_err(|e| e.to_string())?.cost;
        let want = common::exhaustive_alignment_cost(&refs, &net);
        ensure!(Some(got) == want, "instance {i}: search {got} vs exhaustive {want:?} on {t:?}");
    }
    let a = |s: &str| ProcessTree::activity(s);
    let net = to_petri_net(&ProcessTree::sequence(vec![a("p"), ProcessTree::parallel(vec![a("a"), a("l")])])).unwrap();
    let cost = align(&["l", "p", "a"], &net).map_err(|e| e.to_string())?.cost;
    ensure!(cost == 2, "<l,p,a> costs {cost}");
    Ok(format!("{n} instances match exhaustive search; <l,p,a> costs 2"))
}

fn clustering() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    for i in 0..100 {
        let mut d = vec![vec![0.0; 8]; 8];
        for a in 0..8 {
            for b in a + 1..8 {
                d[a][b] = r.gen_range(0.0..1.0);
                d[b][a] = d[a][b];
            }
        }
        let dendro = agglomerate(&DistanceMatrix::from_rows(&d).unwrap()).map_err(|e| e.to_string())?;
        let oracle = common::brute_force_linkage(&d);
        for (m, (a, b, dist, size)) in dendro.merges.iter().zip(&oracle) {
            ensure!((m.a, m.b, m.size) == (*a, *b, *size), "matrix {i}: merge ({},{}) vs ({a},{b})", m.a, m.b);
            ensure!((m.distance - dist).abs() < 1e-9, "matrix {i}: height {} vs {dist}", m.distance);
        }
        ensure!(dendro.merges.len() == oracle.len(), "matrix {i}: merge count");
    }
    for i in 0..1000 {
        let (rows, cols) = (r.gen_range(1..12), r.gen_range(1..7));
        let dense: Vec<Vec<bool>> = (0..rows).map(|_| (0..cols).map(|_| r.gen_bool(0.5)).collect()).collect();
        let d = jaccard_matrix(&RuleMatrix::from_dense(&dense));
        for a in 0..cols {
            for b in 0..cols {
                ensure!(d.get(a, b) == d.get(b, a), "rule matrix {i}: asymmetric");
                let cov = |j: usize| (0..rows).filter(|&k| dense[k][j]).collect::<Vec<_>>();
                if a != b {
                    ensure!((d.get(a, b) - common::set_jaccard(&cov(a), &cov(b))).abs() < 1e-12, "rule matrix {i}: value");
                }
                for c in 0..cols {
                    ensure!(d.get(a, c) <= d.get(a, b) + d.get(b, c) + 1e-12, "rule matrix {i}: triangle");
                }
            }
        }
    }
    Ok("100 dendrograms match brute force; Jaccard is a metric on 1000 rule matrices".into())
}

fn discovery() -> Check {
    let threshold = PipelineConfig::load(&data("orderings.toml")).map_err(|e| e.to_string())?.discovery_threshold;
    let lang = |log: &EventLog| -> Result<BTreeSet<Vec<String>>, String> {
        let net = to_petri_net(&discover(log, threshold).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        language(&net, 6).map_err(|e| e.to_string())
    };
    let b = lang(&EventLog::from_sequences(&[vec!["p", "a", "l"], vec!["p", "l", "a"]]))?;
    let want: BTreeSet<Vec<String>> = [strings(&["p", "a", "l"]), strings(&["p", "l", "a"])].into();
    ensure!(b == want, "two-variant language {b:?}");
    let (table, _) = synthetic::orderings();
    let a = lang(&table)?;
    ensure!(a.len() == 6 && a.iter().all(|t| t.len() == 3), "six-ordering language {a:?}");
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let names = ["a", "b", "c", "d", "e"];
    for i in 0..50 {
        let seqs: Vec<Vec<&str>> = (0..r.gen_range(1..8))
            .map(|_| (0..r.gen_range(0..7)).map(|_| names[r.gen_range(0..5)]).collect())
            .collect();
        let log = EventLog::from_sequences(&seqs);
        let net = to_petri_net(&discover(&log, 0.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let f = trace_fitness(&log, &net).map_err(|e| e.to_string())?;
        ensure!(f == 1.0, "log {i}: t-fit {f} on {seqs:?}");
    }
    Ok(format!("{{pal, pla}} exactly; the full log gives all 6 orderings; f=0 fits 50 random logs (threshold {threshold})"))
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_config("orderings.toml", a.path())?;
    run_config("orderings.toml", b.path())?;
    let files = files_under(a.path());
    ensure!(files == files_under(b.path()), "different file sets");
    let pnml = files.iter().filter(|f| f.extension().is_some_and(|e| e == "pnml")).count();
    ensure!(pnml > 0 && files.iter().any(|f| f.ends_with("report.json")), "missing outputs");
    for f in &files {
        ensure!(fs::read(a.path().join(f)).unwrap() == fs::read(b.path().join(f)).unwrap(), "{} differs", f.display());
    }
    Ok(format!("{} files byte-identical, {pnml} PNML", files.len()))
}

fn synthetic_run() -> Check {
    let out = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let report = run_config("synthetic.toml", out.path())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 300.0, "took {secs:.0}s");
    ensure!(report.log.traces == 2000, "{} traces", report.log.traces);
    ensure!(report.log.activities >= 10, "{} activities", report.log.activities);
    let k = report.clusters.len();
    ensure!(!report.degenerate && k >= 1, "degenerate run");
    ensure!(report.metrics.len() == k + 2, "{} rows for K = {k}", report.metrics.len());
    ensure!(report.metrics.iter().all(|r| r.metrics.is_some()), "a metrics row is empty");
    Ok(format!(
        "2000 traces, {} activities, K = {k}, {} metric rows in {secs:.1}s",
        report.log.activities,
        report.metrics.len()
    ))
}

fn guarded(f: impl FnOnce() -> Check + std::panic::UnwindSafe) -> Verdict {
    match std::panic::catch_unwind(f) {
        Ok(Ok(s)) => Verdict::Pass(s),
        Ok(Err(e)) => Verdict::Fail(e),
        Err(_) => Verdict::Fail("panicked".into()),
    }
}

fn main() {
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Verdict>)> = vec![
        ("golden orderings run", Box::new(|| guarded(golden))),
        ("declare evaluation", Box::new(|| guarded(declare_suite))),
        ("metric identities", Box::new(|| guarded(metric_identities))),
        ("regression correctness", Box::new(|| std::panic::catch_unwind(regression).unwrap_or(Verdict::Fail("panicked".into())))),
        ("alignment optimality", Box::new(|| guarded(alignment))),
        ("clustering oracle", Box::new(|| guarded(clustering))),
        ("discovery sanity", Box::new(|| guarded(discovery))),
        ("determinism", Box::new(|| guarded(determinism))),
        ("synthetic end-to-end", Box::new(|| guarded(synthetic_run))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        match check() {
            Verdict::Pass(s) => println!("PASS {} {name}: {s}", i + 1),
            Verdict::Fail(s) => {
                failed += 1;
                println!("FAIL {} {name}: {s}", i + 1);
            }
            Verdict::Refuted(s) => println!("FAIL {} {name} (claim refuted by counterexample): {s}", i + 1),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
