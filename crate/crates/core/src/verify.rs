//! The acceptance battery: ten criteria covering exact recovery, query
//! accounting, full-sample exactness, the statistical guarantees of every
//! test and estimator, and the query scaling laws.
//!
//! Tolerances are fixed here. Statistical suites pass when each empirical
//! error rate is at most `ε + 3·sqrt(ε(1-ε)/trials)`.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::generate::{generate_tree, Family, WeightScheme};
use crate::harness::{regime, run_experiment, ExperimentConfig, Procedure};
use crate::oracle::DistanceOracle;
use crate::rng;
use crate::subtree::{recover, recovery_query_count, SpannedSubtree};
use crate::testing::{
    run_test, test_typical, test_typical_ustat, SampleSet, Sampling, TestKind, TestSpec,
    TestVerdict, TypicalBranch, TypicalPlan,
};
use crate::tree::VertexId;
use crate::{Quanta, Tree};

/// Random trees in the recovery equivalence check.
pub const RECOVERY_INSTANCES: usize = 1000;
pub const RECOVERY_MAX_N: usize = 200;
pub const RECOVERY_MAX_SAMPLE: usize = 20;
/// Random test runs in the query-accounting check.
pub const ACCOUNTING_RUNS: usize = 300;
pub const DEGENERACY_INSTANCES: usize = 100;
pub const DEGENERACY_MAX_N: usize = 100;
pub const SUITE_TRIALS: usize = 200;
pub const UNBIASED_RUNS: usize = 500;
pub const END_TO_END_TRIALS: usize = 100;
pub const END_TO_END_MIN_CORRECT: f64 = 0.80;
pub const COVERAGE_TRIALS: usize = 100;
pub const SCALING_TRIALS: usize = 30;
pub const SCALING_THRESHOLDS: [f64; 4] = [50.0, 100.0, 200.0, 400.0];
/// Fixed `(δ, ε)` of the scaling sweeps.
pub const SCALING_DELTA: f64 = 0.95;
pub const SCALING_EPSILON: f64 = 0.5;
pub const DIAMETER_SLOPE: (f64, f64) = (-2.0, 0.3);
pub const DEGREE_SLOPE: (f64, f64) = (-1.0, 0.2);
pub const LEAVES_SLOPE: (f64, f64) = (-1.0, 0.2);

/// Outcome of one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2}: {} ({:.1} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

pub const TITLES: [&str; 10] = [
    "recovery matches the brute-force spanned subtree",
    "query counts match their closed forms",
    "full-sample statistics are exact",
    "diameter test error rates",
    "max-degree test error rates",
    "leaf-count test error rates",
    "typical-distance tests with known diameter, and U-statistic unbiasedness",
    "combined typical-distance test with unknown diameter",
    "estimator coverage",
    "query scaling laws",
];

/// `3·sqrt(ε(1-ε)/trials)`.
pub fn binomial_slack(epsilon: f64, trials: usize) -> f64 {
    3.0 * (epsilon * (1.0 - epsilon) / trials as f64).sqrt()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// Run one criterion by number (1 to 10).
pub fn run_criterion(id: u8) -> CriterionReport {
    let start = Instant::now();
    let outcome = match id {
        1 => recovery_equivalence(),
        2 => query_accounting(),
        3 => full_sample_degeneracy(),
        4 => counting_suite(Procedure::Diameter, (Family::Path, 500), (Family::Star, 500), 400.0, 0.25, 0.1),
        5 => counting_suite(Procedure::MaxDegree, (Family::Star, 500), (Family::Path, 500), 400.0, 0.25, 0.1),
        6 => counting_suite(Procedure::Leaves, (Family::Star, 500), (Family::RandomBinary, 501), 400.0, 0.25, 0.1),
        7 => typical_known_diameter(),
        8 => typical_end_to_end(),
        9 => coverage(),
        10 => scaling_laws(),
        _ => Err(Error::InvalidParameter(format!("no criterion {id}"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport {
        id,
        title: TITLES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Run all criteria in order, calling `each` as every report completes.
pub fn run_all(mut each: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    (1..=10)
        .map(|id| {
            let r = run_criterion(id);
            each(&r);
            r
        })
        .collect()
}

type Outcome = Result<(bool, String)>;

/// Differences between a recovered subtree and the brute-force one.
pub fn recovery_mismatch(tree: &Tree, sample: &[VertexId], sub: &SpannedSubtree<Quanta>) -> Option<String> {
    let expect = match tree.steiner_vertices(sample) {
        Ok(e) => e,
        Err(e) => return Some(e.to_string()),
    };
    let got: BTreeSet<VertexId> = sub.vertices().iter().copied().collect();
    if got != expect {
        return Some(format!("vertex sets differ: {} vs {}", got.len(), expect.len()));
    }
    let want_edges: BTreeSet<(VertexId, VertexId, Quanta)> = tree
        .edges()
        .iter()
        .filter(|(u, v, _)| expect.contains(u) && expect.contains(v))
        .map(|&(u, v, w)| (u.min(v), u.max(v), w))
        .collect();
    let got_edges: BTreeSet<_> = sub.edges().iter().copied().collect();
    if got_edges != want_edges {
        return Some("edge sets differ".into());
    }
    for v in tree.vertices().filter(|v| !expect.contains(v)) {
        let (anchor, dist) = expect
            .iter()
            .map(|&a| (a, tree.path_weight(a, v).expect("valid")))
            .min_by_key(|&(_, d)| d)
            .expect("non-empty");
        if sub.attach(v) != Some((anchor, dist)) {
            return Some(format!("attach point of {v} differs"));
        }
    }
    None
}

fn recovery_instances() -> Vec<(usize, usize, u64)> {
    let mut r = rng::seeded(0xC1);
    (0..RECOVERY_INSTANCES)
        .map(|_| {
            let n = r.gen_range(2..=RECOVERY_MAX_N);
            let k = r.gen_range(1..=n.min(RECOVERY_MAX_SAMPLE));
            (n, k, r.gen())
        })
        .collect()
}

fn recovery_run(n: usize, k: usize, seed: u64) -> Result<(Tree, Vec<VertexId>)> {
    let weights = WeightScheme::UniformQuanta { lo: 1, hi: 1 << 40 };
    let tree = generate_tree(Family::UniformRandom, n, seed, weights)?;
    let sample = SampleSet::without_replacement(n, k, &mut rng::seeded(seed ^ 1))?;
    Ok((tree, sample.members))
}

fn recovery_equivalence() -> Outcome {
    let failures: Vec<String> = recovery_instances()
        .into_par_iter()
        .filter_map(|(n, k, seed)| {
            let run = || -> Result<Option<String>> {
                let (tree, sample) = recovery_run(n, k, seed)?;
                let oracle = DistanceOracle::new(&tree);
                let sub = recover(&oracle, &sample)?;
                Ok(recovery_mismatch(&tree, &sample, &sub))
            };
            match run() {
                Ok(None) => None,
                Ok(Some(m)) => Some(format!("n={n} k={k} seed={seed}: {m}")),
                Err(e) => Some(format!("n={n} k={k} seed={seed}: {e}")),
            }
        })
        .collect();
    Ok((
        failures.is_empty(),
        format!(
            "{} instances, {} failures{}",
            RECOVERY_INSTANCES,
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    ))
}

fn detail_usize(v: &TestVerdict, key: &str) -> Option<usize> {
    v.details.get(key).and_then(Value::as_u64).map(|x| x as usize)
}

/// The closed-form distinct-pair count a verdict must match.
pub fn expected_queries(v: &TestVerdict) -> Option<usize> {
    let n = v.spec.n;
    let pairs = |k: usize| k * k.saturating_sub(1) / 2;
    let distinct = || detail_usize(v, "distinct_sampled");
    Some(match v.test {
        TestKind::Diameter | TestKind::TypicalPathcount => pairs(distinct()?),
        TestKind::MaxDegree | TestKind::Leaves => recovery_query_count(n, v.sample_size),
        TestKind::TypicalUstat => recovery_query_count(n, distinct()?),
        TestKind::Typical => {
            let branch = v.details.get("plan")?.get("branch")?.as_str()?;
            if branch == "ustat" {
                recovery_query_count(n, distinct()?)
            } else {
                pairs(distinct()?)
            }
        }
    })
}

fn query_accounting() -> Outcome {
    let recovery_bad = recovery_instances()
        .into_par_iter()
        .filter(|&(n, k, seed)| match recovery_run(n, k, seed) {
            Ok((tree, sample)) => {
                let oracle = DistanceOracle::new(&tree);
                recover(&oracle, &sample).is_err()
                    || oracle.query_count() != recovery_query_count(n, k)
            }
            Err(_) => true,
        })
        .count();

    let mut r = rng::seeded(0xC2);
    let runs: Vec<(Family, usize, f64, f64, f64, u64)> = (0..ACCOUNTING_RUNS)
        .map(|_| {
            let fam = Family::ALL[r.gen_range(0..Family::ALL.len())];
            let n = r.gen_range(5..=150);
            let t = r.gen_range((n as f64 / 5.0).max(1.0)..=n as f64);
            (fam, n, t, r.gen_range(0.2..0.8), r.gen_range(0.05..0.5), r.gen())
        })
        .collect();
    let kinds = [
        TestKind::Diameter,
        TestKind::MaxDegree,
        TestKind::Leaves,
        TestKind::TypicalUstat,
        TestKind::TypicalPathcount,
        TestKind::Typical,
    ];
    let test_bad: Vec<String> = runs
        .into_par_iter()
        .flat_map_iter(|(fam, n, t, delta, eps, seed)| {
            kinds.into_iter().filter_map(move |kind| {
                let tree = match generate_tree::<Quanta>(fam, n, seed, WeightScheme::Unit) {
                    Ok(t) => t,
                    Err(e) => return Some(e.to_string()),
                };
                let oracle = DistanceOracle::new(&tree);
                let spec = match TestSpec::new(n, t, delta, eps, seed) {
                    Ok(s) => s,
                    Err(e) => return Some(e.to_string()),
                };
                let hint = Some(tree.diameter() as u64);
                match run_test(kind, &oracle, &spec, hint) {
                    Ok(v) => {
                        let want = expected_queries(&v);
                        (want != Some(v.queries_used) || v.queries_used != oracle.query_count())
                            .then(|| format!("{kind} on {fam} n={n}: {} vs {want:?}", v.queries_used))
                    }
                    Err(e) => Some(format!("{kind} on {fam} n={n}: {e}")),
                }
            })
        })
        .collect();
    Ok((
        recovery_bad == 0 && test_bad.is_empty(),
        format!(
            "{} recoveries ({} off), {} test runs ({} off){}",
            RECOVERY_INSTANCES,
            recovery_bad,
            ACCOUNTING_RUNS * kinds.len(),
            test_bad.len(),
            test_bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    ))
}

fn full_sample_degeneracy() -> Outcome {
    let mut r = rng::seeded(0xC3);
    let cases: Vec<(Family, usize, u64)> = (0..DEGENERACY_INSTANCES)
        .map(|i| {
            (
                Family::ALL[i % Family::ALL.len()],
                r.gen_range(2..=DEGENERACY_MAX_N),
                r.gen(),
            )
        })
        .collect();
    let bad: Vec<String> = cases
        .into_par_iter()
        .filter_map(|(fam, n, seed)| {
            let check = || -> Result<bool> {
                let w = WeightScheme::UniformQuanta { lo: 1, hi: 1000 };
                let tree: Tree = generate_tree(fam, n, seed, w)?;
                let spec = TestSpec::new(n, 1.0, 0.5, 0.1, seed)?.with_sampling(Sampling::Full);
                let nn = n as u128;
                let mut ok = true;
                for (kind, truth) in [
                    (TestKind::Diameter, tree.diameter()),
                    (TestKind::MaxDegree, tree.max_degree()),
                    (TestKind::Leaves, tree.leaf_count()),
                ] {
                    let v = run_test(kind, &DistanceOracle::new(&tree), &spec, None)?;
                    ok &= v.statistic == Ratio::new(truth as u128, nn) && v.sample_size == n;
                }
                Ok(ok)
            };
            match check() {
                Ok(true) => None,
                Ok(false) => Some(format!("{fam} n={n} seed={seed}")),
                Err(e) => Some(e.to_string()),
            }
        })
        .collect();
    Ok((
        bad.is_empty(),
        format!(
            "{} trees, {} mismatches{}",
            DEGENERACY_INSTANCES,
            bad.len(),
            bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    ))
}

#[allow(clippy::too_many_arguments)]
fn suite_config(
    procedure: Procedure,
    (family, n): (Family, usize),
    threshold: f64,
    delta: f64,
    epsilon: f64,
    trials: usize,
    base_seed: u64,
    diam_hint: Option<u64>,
) -> ExperimentConfig {
    ExperimentConfig {
        family,
        n,
        weights: WeightScheme::Unit,
        tree_seed: Some(base_seed),
        procedure,
        threshold: Some(threshold),
        delta,
        epsilon,
        trials,
        base_seed,
        diam_hint,
        sampling: Sampling::Random,
        sample_size: None,
        record_timing: false,
    }
}

/// Error rates on a null and a far-alternative instance.
fn error_rates(null: &ExperimentConfig, alt: &ExperimentConfig) -> Result<(bool, String)> {
    let a = run_experiment(null)?.summary;
    let b = run_experiment(alt)?.summary;
    let slack = binomial_slack(null.epsilon, null.trials);
    let limit = null.epsilon + slack;
    let regimes_ok = a.regime.as_deref() == Some("null") && b.regime.as_deref() == Some("alternative");
    let null_err = 1.0 - a.accept_rate.unwrap_or(0.0);
    let alt_err = 1.0 - b.reject_rate.unwrap_or(0.0);
    Ok((
        regimes_ok && null_err <= limit && alt_err <= limit,
        format!(
            "{} {}(true {}) accept {:.3}; {} {}(true {}) reject {:.3}; error limit {:.3}",
            null.family, null.n, a.true_value, a.accept_rate.unwrap_or(0.0),
            alt.family, alt.n, b.true_value, b.reject_rate.unwrap_or(0.0),
            limit
        ),
    ))
}

fn counting_suite(
    procedure: Procedure,
    null: (Family, usize),
    alt: (Family, usize),
    threshold: f64,
    delta: f64,
    epsilon: f64,
) -> Outcome {
    let seed = 0xC400 + procedure as u64;
    error_rates(
        &suite_config(procedure, null, threshold, delta, epsilon, SUITE_TRIALS, seed, None),
        &suite_config(procedure, alt, threshold, delta, epsilon, SUITE_TRIALS, seed + 1, None),
    )
}

fn typical_known_diameter() -> Outcome {
    let (ell, delta, epsilon) = (80.0, 0.3, 0.1);
    let mut pass = true;
    let mut notes = Vec::new();
    for procedure in [Procedure::TypicalUstat, Procedure::TypicalPathcount] {
        let seed = 0xC700 + procedure as u64;
        let hint = |fam: Family| -> Result<Option<u64>> {
            let t: Tree = generate_tree(fam, 300, seed, WeightScheme::Unit)?;
            Ok(Some(t.diameter() as u64))
        };
        let null = suite_config(procedure, (Family::Path, 300), ell, delta, epsilon, SUITE_TRIALS, seed, hint(Family::Path)?);
        let alt = suite_config(procedure, (Family::Star, 300), ell, delta, epsilon, SUITE_TRIALS, seed, hint(Family::Star)?);
        let (ok, note) = error_rates(&null, &alt)?;
        pass &= ok;
        notes.push(format!("{procedure}: {note}"));
    }

    // unbiasedness of the U-statistic on P_100
    let tree: Tree = generate_tree(Family::Path, 100, 0, WeightScheme::Unit)?;
    let typ = tree.typical_distance();
    let typ = *typ.numer() as f64 / *typ.denom() as f64;
    let values: Vec<f64> = (0..UNBIASED_RUNS)
        .into_par_iter()
        .map(|i| {
            let spec = TestSpec::new(100, 30.0, 0.5, 0.3, rng::derive_seed(0xC7B, i as u64))?;
            Ok(test_typical_ustat(&DistanceOracle::new(&tree), &spec, Some(100))?.statistic_f64())
        })
        .collect::<Result<_>>()?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let se = sd / m.sqrt();
    let unbiased = (mean - typ).abs() <= 3.0 * se;
    pass &= unbiased;
    notes.push(format!(
        "U-statistic mean {mean:.4} vs typical distance {typ:.4} (3 SE = {:.4})",
        3.0 * se
    ));
    Ok((pass, notes.join("; ")))
}

fn typical_end_to_end() -> Outcome {
    let (n, ell, delta, epsilon) = (500, 100.0, 0.3, 0.2);
    let tree: Tree = generate_tree(Family::Path, n, 0, WeightScheme::Unit)?;
    let truth = {
        let r = tree.typical_distance();
        *r.numer() as f64 / *r.denom() as f64
    };
    let reg = regime(truth, ell, delta);
    let results: Vec<(bool, bool)> = (0..END_TO_END_TRIALS)
        .into_par_iter()
        .map(|i| {
            let spec = TestSpec::new(n, ell, delta, epsilon, rng::derive_seed(0xC8, i as u64))?;
            let v = test_typical(&DistanceOracle::new(&tree), &spec, None)?;
            let plan = v.details.get("plan").cloned().unwrap_or(Value::Null);
            let bound = plan.get("diam_bound").and_then(Value::as_f64);
            let budget = plan.get("budget").and_then(Value::as_f64);
            let chosen = plan.get("branch").and_then(Value::as_str);
            let selection_ok = match (bound, budget, chosen) {
                (Some(b), Some(e), Some(c)) => {
                    let again = TypicalPlan::new(n, b, ell, delta, e)?;
                    let cheaper = if again.ustat_cost <= again.pathcount_cost {
                        TypicalBranch::Ustat
                    } else {
                        TypicalBranch::Pathcount
                    };
                    let name = serde_json::to_value(cheaper).expect("plain enum");
                    name.as_str() == Some(c)
                }
                _ => false,
            };
            let correct = match reg {
                "null" => v.decision.is_accept(),
                _ => !v.decision.is_accept(),
            };
            Ok((correct, selection_ok))
        })
        .collect::<Result<_>>()?;
    let rate = results.iter().filter(|r| r.0).count() as f64 / results.len() as f64;
    let selection = results.iter().all(|r| r.1);
    Ok((
        reg == "null" && rate >= END_TO_END_MIN_CORRECT && selection,
        format!(
            "path {n} typical distance {truth:.2} vs threshold {ell}: correct {rate:.3} (need {END_TO_END_MIN_CORRECT}), branch selection consistent in all trials: {selection}"
        ),
    ))
}

fn coverage() -> Outcome {
    let (delta, epsilon) = (0.3, 0.2);
    let limit = 1.0 - epsilon - binomial_slack(epsilon, COVERAGE_TRIALS);
    let mut pass = true;
    let mut notes = Vec::new();
    for (procedure, family) in [
        (Procedure::EstimateDiameter, Family::Path),
        (Procedure::EstimateMaxDegree, Family::Star),
        (Procedure::EstimateLeaves, Family::Star),
        (Procedure::EstimateTypical, Family::Path),
    ] {
        let mut cfg = suite_config(procedure, (family, 500), 1.0, delta, epsilon, COVERAGE_TRIALS, 0xC900 + procedure as u64, None);
        cfg.threshold = None;
        let s = run_experiment(&cfg)?.summary;
        let c = s.coverage.unwrap_or(0.0);
        pass &= c >= limit;
        notes.push(format!("{procedure} ({:.2}): {c:.2}", s.true_value));
    }
    Ok((pass, format!("{}; need >= {limit:.3}", notes.join(", "))))
}

fn scaling_laws() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (procedure, family, (target, tol)) in [
        (Procedure::Diameter, Family::Path, DIAMETER_SLOPE),
        (Procedure::MaxDegree, Family::Star, DEGREE_SLOPE),
        (Procedure::Leaves, Family::Star, LEAVES_SLOPE),
    ] {
        let mut means = Vec::new();
        for &t in &SCALING_THRESHOLDS {
            let cfg = suite_config(
                procedure,
                (family, 500),
                t,
                SCALING_DELTA,
                SCALING_EPSILON,
                SCALING_TRIALS,
                0xCA00 + procedure as u64,
                None,
            );
            means.push(run_experiment(&cfg)?.summary.mean_queries);
        }
        let slope = log_log_slope(&SCALING_THRESHOLDS, &means);
        let ok = (slope - target).abs() <= tol;
        pass &= ok;
        notes.push(format!(
            "{procedure} slope {slope:.3} (target {target}±{tol}, means {:?})",
            means.iter().map(|m| m.round() as u64).collect::<Vec<_>>()
        ));
    }
    Ok((
        pass,
        format!("δ={SCALING_DELTA}, ε={SCALING_EPSILON}: {}", notes.join("; ")),
    ))
}
