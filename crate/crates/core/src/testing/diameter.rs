use std::collections::BTreeMap;

use num_rational::Ratio;
use serde_json::json;

use super::sizing::sample_size_diameter;
use super::{exceeds, Decision, SamplePaths, SampleSet, Sampling, TestKind, TestSpec, TestVerdict};
use crate::error::Result;
use crate::oracle::DistanceOracle;
use crate::rng;
use crate::scalar::Weight;

/// Diameter test: accept iff `d*/N > (D/n)(1 - δ/2)`, where `d*` is the
/// largest number of sample indices on a path between two sampled vertices.
///
/// Queries exactly `C(k, 2)` distinct pairs, `k` the number of distinct
/// sampled vertices.
pub fn test_diameter<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
) -> Result<TestVerdict> {
    spec.check_oracle(oracle)?;
    let n = spec.n;
    let before = oracle.query_count();
    let sample = match spec.sampling {
        Sampling::Random => {
            let size = sample_size_diameter(n, spec.threshold, spec.delta, spec.epsilon);
            SampleSet::with_replacement(n, size, &mut rng::seeded(spec.seed))
        }
        Sampling::Full => SampleSet::full(n),
    };
    let size = sample.size();
    let (pts, counts) = sample.distinct();
    let paths = SamplePaths::new(oracle, &pts, &counts)?;
    let best = paths.max_path_count();

    let statistic = Ratio::new(best as u128, size as u128);
    let rhs = spec.threshold / n as f64 * (1.0 - spec.delta / 2.0);
    let mut details = BTreeMap::new();
    details.insert("max_path_count".into(), json!(best));
    details.insert("distinct_sampled".into(), json!(pts.len()));
    Ok(TestVerdict {
        test: TestKind::Diameter,
        spec: *spec,
        decision: Decision::from_bool(exceeds(statistic, rhs)),
        statistic,
        sample_size: size,
        queries_used: oracle.query_count() - before,
        details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_tree, Family, WeightScheme};
    use crate::tree::WeightedTree;

    #[test]
    fn full_sample_gives_exact_diameter() {
        for seed in 0..20 {
            let n = 2 + seed as usize * 3;
            let t: WeightedTree<u64> =
                generate_tree(Family::UniformRandom, n, seed, WeightScheme::Unit).unwrap();
            let o = DistanceOracle::new(&t);
            let spec = TestSpec::new(n, 1.0, 0.5, 0.1, seed)
                .unwrap()
                .with_sampling(Sampling::Full);
            let v = test_diameter(&o, &spec).unwrap();
            assert_eq!(v.statistic, Ratio::new(t.diameter() as u128, n as u128));
            assert_eq!(v.queries_used, n * (n - 1) / 2);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let t: WeightedTree<u64> =
            generate_tree(Family::Caterpillar, 60, 3, WeightScheme::Unit).unwrap();
        let spec = TestSpec::new(60, 20.0, 0.5, 0.2, 11).unwrap();
        let a = test_diameter(&DistanceOracle::new(&t), &spec).unwrap();
        let b = test_diameter(&DistanceOracle::new(&t), &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_oracle_size_mismatch() {
        let t: WeightedTree<u64> = generate_tree(Family::Path, 5, 0, WeightScheme::Unit).unwrap();
        let spec = TestSpec::new(6, 2.0, 0.5, 0.1, 0).unwrap();
        assert!(test_diameter(&DistanceOracle::new(&t), &spec).is_err());
    }
}
