//! Interval estimates from the property tests by geometric threshold decay.
//!
//! Step `k` tests threshold `t_k = max(1, (1-δ)^k · t_0)` at failure budget
//! `ε_k = ε · (6/π²) / (k+1)²` (these sum to at most `ε`) and stops at the
//! first accept. The accepted threshold `p` yields `[p(1-δ), p/(1-δ)]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::oracle::DistanceOracle;
use crate::rng;
use crate::scalar::Weight;
use crate::subtree::recovery_query_count;
use crate::testing::sizing::{
    sample_size_diameter, sample_size_leaves, sample_size_maxdeg,
};
use crate::testing::{
    check_unit_interval, test_diameter, test_leaves, test_max_degree, TestSpec, TestVerdict,
    TypicalPlan,
};

/// Seed tag for the shared diameter estimate of a typical-distance estimate.
const TYPICAL_DIAMETER_TAG: u64 = 0x7D1A;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Diameter,
    MaxDegree,
    Leaves,
    TypicalDistance,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Diameter,
        Property::MaxDegree,
        Property::Leaves,
        Property::TypicalDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Diameter => "diameter",
            Property::MaxDegree => "max_degree",
            Property::Leaves => "leaves",
            Property::TypicalDistance => "typical_distance",
        }
    }

    /// Starting threshold `t_0`: no tree exceeds it.
    pub fn initial_threshold(self, n: usize) -> f64 {
        match self {
            Property::Diameter | Property::TypicalDistance => n as f64,
            Property::MaxDegree | Property::Leaves => n.saturating_sub(1).max(1) as f64,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.strip_prefix("estimate_").unwrap_or(s);
        let s = if s == "typical" { "typical_distance" } else { s };
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown property `{s}`")))
    }
}

/// Result of [`estimate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub property: Property,
    /// The accepted threshold.
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    pub queries_used: usize,
    /// Seed of each step, in order.
    pub seeds: Vec<u64>,
    /// Threshold tested at each step.
    pub thresholds: Vec<f64>,
    /// Ledger growth of each step.
    pub step_queries: Vec<usize>,
    /// Queries spent on the shared diameter estimate (typical distance only).
    pub diameter_queries: usize,
}

impl EstimateResult {
    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    pub fn to_json(&self) -> Value {
        json!({
            "property": self.property.name(),
            "point": self.point,
            "lo": self.lo,
            "hi": self.hi,
            "iterations": self.iterations,
            "queries_used": self.queries_used,
            "seeds": self.seeds,
        })
    }
}

/// Failure budget of step `k` (0-based).
pub fn step_budget(epsilon: f64, k: usize) -> f64 {
    let j = (k + 1) as f64;
    epsilon * 6.0 / (PI * PI) / (j * j)
}

/// Thresholds tested until the floor of 1 is reached.
pub fn threshold_schedule(property: Property, n: usize, delta: f64) -> Vec<f64> {
    let t0 = property.initial_threshold(n);
    let mut out = Vec::new();
    let mut t = t0;
    loop {
        let tk = t.max(1.0);
        out.push(tk);
        if tk <= 1.0 {
            break;
        }
        t *= 1.0 - delta;
    }
    out
}

/// Estimate a property of the tree behind `oracle` within a factor `1-δ`
/// with probability at least `1 - ε`.
pub fn estimate<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    property: Property,
    delta: f64,
    epsilon: f64,
    seed: u64,
) -> Result<EstimateResult> {
    check_unit_interval("delta", delta)?;
    check_unit_interval("epsilon", epsilon)?;
    let n = oracle.n();
    if property == Property::Leaves && n < 2 {
        return Err(Error::Precondition("leaf estimate needs n >= 2".into()));
    }
    let before = oracle.query_count();

    // typical distance: one diameter estimate shared by all steps
    let (step_eps, diam_bound, diameter_queries) = if property == Property::TypicalDistance {
        let half = epsilon / 2.0;
        let sub_seed = rng::derive_seed(seed, TYPICAL_DIAMETER_TAG);
        let d = estimate(oracle, Property::Diameter, delta, half, sub_seed)?;
        (half, d.point / (1.0 - delta), d.queries_used)
    } else {
        (epsilon, 0.0, 0)
    };

    let schedule = threshold_schedule(property, n, delta);
    let mut seeds = Vec::new();
    let mut thresholds = Vec::new();
    let mut step_queries = Vec::new();
    let mut point = 1.0;
    for (k, &t) in schedule.iter().enumerate() {
        let step_seed = rng::derive_seed(seed, k as u64);
        let spec = TestSpec::new(n, t, delta, step_budget(step_eps, k), step_seed)?;
        let start = oracle.query_count();
        let verdict = run_step(oracle, property, &spec, diam_bound)?;
        seeds.push(step_seed);
        thresholds.push(t);
        step_queries.push(oracle.query_count() - start);
        if verdict.decision.is_accept() {
            point = t;
            break;
        }
    }
    Ok(EstimateResult {
        property,
        point,
        lo: point * (1.0 - delta),
        hi: point / (1.0 - delta),
        iterations: thresholds.len(),
        queries_used: oracle.query_count() - before,
        seeds,
        thresholds,
        step_queries,
        diameter_queries,
    })
}

fn run_step<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    property: Property,
    spec: &TestSpec,
    diam_bound: f64,
) -> Result<TestVerdict> {
    match property {
        Property::Diameter => test_diameter(oracle, spec),
        Property::MaxDegree => test_max_degree(oracle, spec),
        Property::Leaves => test_leaves(oracle, spec),
        Property::TypicalDistance => {
            let plan = TypicalPlan::new(spec.n, diam_bound, spec.threshold, spec.delta, spec.epsilon)?;
            crate::testing::typical_planned(oracle, spec, &plan)
        }
    }
}

fn pairs(k: f64) -> f64 {
    k * (k - 1.0) / 2.0
}

/// Predicted distinct-pair cost of one step at threshold `t` and budget `eps`.
fn step_cost(property: Property, n: usize, t: f64, delta: f64, eps: f64) -> f64 {
    let nf = n as f64;
    match property {
        Property::Diameter => {
            let size = sample_size_diameter(n, t, delta, eps) as f64;
            pairs(size).min(pairs(nf))
        }
        Property::MaxDegree => {
            recovery_query_count(n, sample_size_maxdeg(n, t, delta, eps)) as f64
        }
        Property::Leaves => recovery_query_count(n, sample_size_leaves(n, t, delta, eps)) as f64,
        Property::TypicalDistance => {
            // worst case of the shared diameter estimate: D̂ = n
            let bound = nf / (1.0 - delta);
            match TypicalPlan::new(n, bound, t, delta, eps) {
                Ok(plan) => plan.ustat_cost.min(plan.pathcount_cost).min(pairs(nf)),
                Err(_) => pairs(nf),
            }
        }
    }
}

/// Predicted total queries of [`estimate`] on a tree whose property equals
/// `true_value`.
///
/// Sums the per-step costs of every threshold down to the first one at or
/// below `true_value` (where the step accepts with high probability).
/// Diameter steps are charged `min(C(N, 2), C(n, 2))`. For typical distance
/// the diameter bound is taken at its worst case `n/(1-δ)` and the shared
/// diameter estimate is charged as for a diameter of `n`.
pub fn predicted_query_budget(
    property: Property,
    n: usize,
    true_value: f64,
    delta: f64,
    epsilon: f64,
) -> Result<f64> {
    check_unit_interval("delta", delta)?;
    check_unit_interval("epsilon", epsilon)?;
    if true_value.is_nan() || true_value < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "true value must be at least 1, got {true_value}"
        )));
    }
    let (eps, extra) = if property == Property::TypicalDistance {
        let half = epsilon / 2.0;
        (half, predicted_query_budget(Property::Diameter, n, n as f64, delta, half)?)
    } else {
        (epsilon, 0.0)
    };
    let mut total = extra;
    for (k, &t) in threshold_schedule(property, n, delta).iter().enumerate() {
        total += step_cost(property, n, t, delta, step_budget(eps, k));
        if t <= true_value {
            break;
        }
    }
    Ok(total)
}
