use rayon::prelude::*;
use treeprobe::estimation::{estimate, Property};
use treeprobe::rng::derive_seed;
use treeprobe::testing::test_typical_ustat;
use treeprobe::{generate_tree, Family, Oracle, TestSpec, Tree, WeightScheme};

const RUNS: usize = 400;

fn unbiased_on(family: Family) {
    let t: Tree = generate_tree(family, 100, 1, WeightScheme::Unit).unwrap();
    let truth = t.typical_distance();
    let truth = *truth.numer() as f64 / *truth.denom() as f64;
    let hint = t.diameter() as u64;
    let ell = (truth / 2.0).max(1.0);
    let xs: Vec<f64> = (0..RUNS)
        .into_par_iter()
        .map(|i| {
            let spec = TestSpec::new(100, ell, 0.5, 0.3, derive_seed(77, i as u64)).unwrap();
            test_typical_ustat(&Oracle::new(&t), &spec, Some(hint)).unwrap().statistic_f64()
        })
        .collect();
    let m = RUNS as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt() / m.sqrt();
    assert!(
        (mean - truth).abs() <= 3.0 * se,
        "{family}: mean {mean} vs {truth} (se {se})"
    );
}

#[test]
fn ustat_is_unbiased_on_a_path() {
    unbiased_on(Family::Path);
}

#[test]
fn ustat_is_unbiased_on_a_star() {
    unbiased_on(Family::Star);
}

#[test]
fn ustat_is_unbiased_on_a_caterpillar() {
    unbiased_on(Family::Caterpillar);
}

#[test]
fn estimate_total_is_dominated_by_the_last_step() {
    let cases = [
        (Property::Diameter, Family::Path, 0.5),
        (Property::MaxDegree, Family::Star, 0.5),
        (Property::Leaves, Family::Star, 0.5),
        (Property::Diameter, Family::Broom, 0.5),
    ];
    for (property, family, delta) in cases {
        let t: Tree = generate_tree(family, 2000, 0, WeightScheme::Unit).unwrap();
        for seed in 0..5 {
            let r = estimate(&Oracle::new(&t), property, delta, 0.2, seed).unwrap();
            let last = *r.step_queries.last().unwrap();
            assert!(
                r.queries_used <= 4 * last,
                "{property} on {family}: {:?}",
                r.step_queries
            );
        }
    }
}

#[test]
fn measured_estimate_cost_stays_within_prediction() {
    use treeprobe::estimation::predicted_query_budget;
    use treeprobe::harness::ground_truth;
    let families = Family::ALL;
    let props = [Property::Diameter, Property::MaxDegree, Property::Leaves, Property::TypicalDistance];
    for i in 0..50u64 {
        let family = families[i as usize % families.len()];
        let property = props[(i / 6) as usize % props.len()];
        let n = 50 + (i as usize * 37) % 400;
        let t: Tree = generate_tree(family, n, i, WeightScheme::Unit).unwrap();
        let truth = ground_truth(&t, property).max(1.0);
        let r = estimate(&Oracle::new(&t), property, 0.3, 0.2, i).unwrap();
        let predicted = predicted_query_budget(property, n, truth, 0.3, 0.2).unwrap();
        assert!(
            r.queries_used as f64 <= 4.0 * predicted,
            "{property} on {family} n={n}: {} > 4 x {predicted}",
            r.queries_used
        );
    }
}
