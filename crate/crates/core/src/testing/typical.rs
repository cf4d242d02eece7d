//! Typical-distance tests.
//!
//! Two statistics are available. The U-statistic averages exact path
//! lengths `ℓ(X_i, X_j)` and needs every `d(x, v)`; the path-count statistic
//! averages `ℓ̃(X_i, X_j) - 2` and only needs within-sample distances. Both
//! are sized from a diameter bound, either supplied or estimated at half the
//! failure budget.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use super::sizing::{sample_size_pathcount, sample_size_ustat};
use super::{exceeds, Decision, SamplePaths, SampleSet, Sampling, TestKind, TestSpec, TestVerdict};
use crate::error::{Error, Result};
use crate::estimation::{estimate, Property};
use crate::oracle::DistanceOracle;
use crate::rng;
use crate::scalar::Weight;
use crate::subtree::recover;

/// Seed tag for the internal diameter estimate.
const DIAMETER_SEED_TAG: u64 = 0xD1A3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TypicalBranch {
    Ustat,
    Pathcount,
}

/// Sizes and predicted costs of both typical-distance branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TypicalPlan {
    pub diam_bound: f64,
    pub budget: f64,
    pub ustat_size: usize,
    pub pathcount_size: usize,
    /// `n · N₁`
    pub ustat_cost: f64,
    /// `C(N₂, 2)`
    pub pathcount_cost: f64,
    pub branch: TypicalBranch,
}

impl TypicalPlan {
    pub fn new(n: usize, diam_bound: f64, ell: f64, delta: f64, budget: f64) -> Result<Self> {
        let ustat_size = sample_size_ustat(diam_bound, ell, delta, budget);
        let pathcount_size = sample_size_pathcount(n, diam_bound, ell, delta, budget)?;
        let ustat_cost = n as f64 * ustat_size as f64;
        let m = pathcount_size as f64;
        let pathcount_cost = m * (m - 1.0) / 2.0;
        let branch = if ustat_cost <= pathcount_cost {
            TypicalBranch::Ustat
        } else {
            TypicalBranch::Pathcount
        };
        Ok(TypicalPlan {
            diam_bound,
            budget,
            ustat_size,
            pathcount_size,
            ustat_cost,
            pathcount_cost,
            branch,
        })
    }
}

/// Diameter bound and remaining failure budget. With no hint the diameter
/// is estimated at budget `ε/2` and the bound is `D̂/(1-δ)`.
fn resolve_bound<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    diam_hint: Option<u64>,
    details: &mut BTreeMap<String, Value>,
) -> Result<(f64, f64)> {
    match diam_hint {
        Some(0) => Err(Error::InvalidParameter("diameter hint must be at least 1".into())),
        Some(d) => Ok((d as f64, spec.epsilon)),
        None => {
            let half = spec.epsilon / 2.0;
            let seed = rng::derive_seed(spec.seed, DIAMETER_SEED_TAG);
            let est = estimate(oracle, Property::Diameter, spec.delta, half, seed)?;
            details.insert("diameter_estimate".into(), json!(est.point));
            details.insert("diameter_estimate_queries".into(), json!(est.queries_used));
            Ok((est.point / (1.0 - spec.delta), half))
        }
    }
}

fn draw_iid(spec: &TestSpec, size: usize) -> SampleSet {
    match spec.sampling {
        Sampling::Random => SampleSet::with_replacement(spec.n, size, &mut rng::seeded(spec.seed)),
        Sampling::Full => SampleSet::full(spec.n),
    }
}

/// `ℓ₁*` on a sample of the given size; returns the statistic, the size
/// used and the number of distinct sampled vertices.
pub(crate) fn run_ustat<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    size: usize,
) -> Result<(Ratio<u128>, usize, usize)> {
    let sample = draw_iid(spec, size);
    let size = sample.size();
    if size < 2 {
        return Err(Error::Precondition("U-statistic needs at least two samples".into()));
    }
    let (pts, counts) = sample.distinct();
    let subtree = recover(oracle, &pts)?;
    let mut total: u128 = 0;
    for a in 0..pts.len() {
        let ca = counts[a] as u128;
        // coincident indices: ℓ(x, x) = 1
        total += ca * ca.saturating_sub(1) / 2;
        for b in a + 1..pts.len() {
            let l = subtree.ell(pts[a], pts[b])? as u128;
            total += ca * counts[b] as u128 * l;
        }
    }
    let s = size as u128;
    Ok((Ratio::new(2 * total, s * (s - 1)), size, pts.len()))
}

/// `ℓ₂*/(N-2)` on a sample of the given size.
pub(crate) fn run_pathcount<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    size: usize,
) -> Result<(Ratio<u128>, usize, usize)> {
    let sample = draw_iid(spec, size);
    let size = sample.size();
    if size < 3 {
        return Err(Error::Precondition("path-count statistic needs at least three samples".into()));
    }
    let (pts, counts) = sample.distinct();
    let paths = SamplePaths::new(oracle, &pts, &counts)?;
    let total = paths.index_pair_sum(2);
    let s = size as u128;
    Ok((Ratio::new(2 * total, s * (s - 1) * (s - 2)), size, pts.len()))
}

fn ustat_verdict(
    test: TestKind,
    spec: &TestSpec,
    stat: Ratio<u128>,
    size: usize,
    queries_used: usize,
    details: BTreeMap<String, Value>,
) -> TestVerdict {
    let rhs = spec.threshold * (1.0 - spec.delta / 2.0);
    TestVerdict {
        test,
        spec: *spec,
        decision: Decision::from_bool(exceeds(stat, rhs)),
        statistic: stat,
        sample_size: size,
        queries_used,
        details,
    }
}

fn pathcount_verdict(
    test: TestKind,
    spec: &TestSpec,
    stat: Ratio<u128>,
    size: usize,
    queries_used: usize,
    details: BTreeMap<String, Value>,
) -> TestVerdict {
    let rhs = spec.threshold / spec.n as f64 * (1.0 - spec.delta / 2.0);
    TestVerdict {
        test,
        spec: *spec,
        decision: Decision::from_bool(exceeds(stat, rhs)),
        statistic: stat,
        sample_size: size,
        queries_used,
        details,
    }
}

/// U-statistic test: accept iff `ℓ₁* > ℓ(1 - δ/2)`.
///
/// Queries `k(n - k) + C(k, 2)` distinct pairs beyond any diameter
/// estimate, `k` the number of distinct sampled vertices.
pub fn test_typical_ustat<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    diam_hint: Option<u64>,
) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    let before = oracle.query_count();
    let mut details = BTreeMap::new();
    let (bound, budget) = resolve_bound(oracle, spec, diam_hint, &mut details)?;
    let size = sample_size_ustat(bound, spec.threshold, spec.delta, budget);
    details.insert("diam_bound".into(), json!(bound));
    let (stat, size, distinct) = run_ustat(oracle, spec, size)?;
    details.insert("distinct_sampled".into(), json!(distinct));
    Ok(ustat_verdict(
        TestKind::TypicalUstat,
        spec,
        stat,
        size,
        oracle.query_count() - before,
        details,
    ))
}

/// Path-count test: accept iff `ℓ₂*/(N-2) > (ℓ/n)(1 - δ/2)`.
///
/// Queries `C(k, 2)` distinct pairs beyond any diameter estimate.
pub fn test_typical_pathcount<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    diam_hint: Option<u64>,
) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    let before = oracle.query_count();
    let mut details = BTreeMap::new();
    let (bound, budget) = resolve_bound(oracle, spec, diam_hint, &mut details)?;
    let size = sample_size_pathcount(spec.n, bound, spec.threshold, spec.delta, budget)?;
    details.insert("diam_bound".into(), json!(bound));
    let (stat, size, distinct) = run_pathcount(oracle, spec, size)?;
    details.insert("distinct_sampled".into(), json!(distinct));
    Ok(pathcount_verdict(
        TestKind::TypicalPathcount,
        spec,
        stat,
        size,
        oracle.query_count() - before,
        details,
    ))
}

/// Run whichever typical-distance branch has the smaller predicted cost.
pub(crate) fn run_planned<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    plan: &TypicalPlan,
    mut details: BTreeMap<String, Value>,
    before: usize,
) -> Result<TestVerdict> {
    details.insert("plan".into(), serde_json::to_value(plan).expect("plain data"));
    Ok(match plan.branch {
        TypicalBranch::Ustat => {
            let (stat, size, distinct) = run_ustat(oracle, spec, plan.ustat_size)?;
            details.insert("distinct_sampled".into(), json!(distinct));
            ustat_verdict(TestKind::Typical, spec, stat, size, oracle.query_count() - before, details)
        }
        TypicalBranch::Pathcount => {
            let (stat, size, distinct) = run_pathcount(oracle, spec, plan.pathcount_size)?;
            details.insert("distinct_sampled".into(), json!(distinct));
            pathcount_verdict(TestKind::Typical, spec, stat, size, oracle.query_count() - before, details)
        }
    })
}

/// Run a precomputed plan as a typical-distance test.
pub fn typical_planned<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    plan: &TypicalPlan,
) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    run_planned(oracle, spec, plan, BTreeMap::new(), oracle.query_count())
}

/// Combined typical-distance test: sizes both branches and runs the one
/// with the smaller predicted cost (`n · N₁` against `C(N₂, 2)`).
pub fn test_typical<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    diam_hint: Option<u64>,
) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    let before = oracle.query_count();
    let mut details = BTreeMap::new();
    let (bound, budget) = resolve_bound(oracle, spec, diam_hint, &mut details)?;
    let plan = TypicalPlan::new(spec.n, bound, spec.threshold, spec.delta, budget)?;
    run_planned(oracle, spec, &plan, details, before)
}
