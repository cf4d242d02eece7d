//! Tests that sample without replacement and read the recovered subtree:
//! maximum degree and leaf count.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde_json::json;

use super::sizing::{sample_size_leaves, sample_size_maxdeg};
use super::{exceeds, Decision, SampleSet, Sampling, TestKind, TestSpec, TestVerdict};
use crate::error::{Error, Result};
use crate::oracle::DistanceOracle;
use crate::rng;
use crate::scalar::Weight;
use crate::subtree::{recover, SpannedSubtree};

fn draw(spec: &TestSpec, size: usize) -> Result<SampleSet> {
    match spec.sampling {
        Sampling::Random => {
            SampleSet::without_replacement(spec.n, size, &mut rng::seeded(spec.seed))
        }
        Sampling::Full => Ok(SampleSet::full(spec.n)),
    }
}

fn verdict(
    test: TestKind,
    spec: &TestSpec,
    count: usize,
    size: usize,
    queries_used: usize,
    details: BTreeMap<String, serde_json::Value>,
) -> TestVerdict {
    let statistic = Ratio::new(count as u128, size as u128);
    let rhs = spec.threshold / spec.n as f64 * (1.0 - spec.delta / 2.0);
    TestVerdict {
        test,
        spec: *spec,
        decision: Decision::from_bool(exceeds(statistic, rhs)),
        statistic,
        sample_size: size,
        queries_used,
        details,
    }
}

/// `∂* = max over v in T_X of |X ∩ N_T(v)|`.
pub fn max_sampled_neighbors<W: Weight>(subtree: &SpannedSubtree<W>) -> usize {
    subtree
        .vertices()
        .iter()
        .map(|&v| subtree.sampled_neighbor_count(v).expect("member"))
        .max()
        .unwrap_or(0)
}

/// `L*`: sampled vertices that are leaves of `T_X` and have nothing attached.
pub fn sampled_true_leaves<W: Weight>(subtree: &SpannedSubtree<W>) -> usize {
    subtree
        .sample()
        .iter()
        .filter(|&&x| {
            subtree.subtree_degree(x).expect("member") == 1
                && subtree.is_leaf_of_t(x).expect("leaf")
        })
        .count()
}

/// Max-degree test: accept iff `∂*/N > (Δ/n)(1 - δ/2)`.
///
/// Queries exactly `N(n - N) + C(N, 2)` distinct pairs.
pub fn test_max_degree<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    let size = sample_size_maxdeg(spec.n, spec.threshold, spec.delta, spec.epsilon);
    let sample = draw(spec, size)?;
    let before = oracle.query_count();
    let subtree = recover(oracle, &sample.members)?;
    let best = max_sampled_neighbors(&subtree);
    let mut details = BTreeMap::new();
    details.insert("max_sampled_neighbors".into(), json!(best));
    details.insert("subtree_vertices".into(), json!(subtree.vertices().len()));
    Ok(verdict(
        TestKind::MaxDegree,
        spec,
        best,
        sample.size(),
        oracle.query_count() - before,
        details,
    ))
}

/// Leaf-count test: accept iff `L*/N > (Λ/n)(1 - δ/2)`.
///
/// Queries exactly `N(n - N) + C(N, 2)` distinct pairs. A single sampled
/// vertex spans a one-vertex subtree with no leaves, so `L* = 0` there.
pub fn test_leaves<W: Weight>(oracle: &DistanceOracle<'_, W>, spec: &TestSpec) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    if spec.n < 2 {
        return Err(Error::Precondition("leaf test needs n >= 2".into()));
    }
    let size = sample_size_leaves(spec.n, spec.threshold, spec.delta, spec.epsilon);
    let sample = draw(spec, size)?;
    let before = oracle.query_count();
    let subtree = recover(oracle, &sample.members)?;
    let count = sampled_true_leaves(&subtree);
    let mut details = BTreeMap::new();
    details.insert("sampled_leaves".into(), json!(count));
    details.insert("subtree_vertices".into(), json!(subtree.vertices().len()));
    Ok(verdict(
        TestKind::Leaves,
        spec,
        count,
        sample.size(),
        oracle.query_count() - before,
        details,
    ))
}
