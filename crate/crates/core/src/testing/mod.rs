//! Randomised property tests driven only through a [`DistanceOracle`].
//!
//! Each test draws a vertex sample, queries distances involving sampled
//! vertices, computes a normalised statistic and compares it with a rule
//! threshold. Verdicts carry the exact statistic, the sample size and the
//! number of distinct pairs queried.

mod diameter;
mod neighborhood;
mod sample_paths;
pub mod sizing;
mod typical;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::oracle::DistanceOracle;
use crate::scalar::Weight;
use crate::tree::VertexId;

pub use diameter::test_diameter;
pub use neighborhood::{test_leaves, test_max_degree};
pub use sample_paths::SamplePaths;
pub use typical::{
    test_typical, test_typical_pathcount, test_typical_ustat, typical_planned, TypicalBranch,
    TypicalPlan,
};

/// How the sample is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// The size and replacement mode each test prescribes.
    #[default]
    Random,
    /// Debug mode: every vertex exactly once, `N = n`.
    Full,
}

/// Parameters shared by all tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub n: usize,
    /// The property threshold (`D`, `Δ`, `Λ` or `ℓ`).
    pub threshold: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
}

impl TestSpec {
    pub fn new(n: usize, threshold: f64, delta: f64, epsilon: f64, seed: u64) -> Result<Self> {
        let spec = TestSpec {
            n,
            threshold,
            delta,
            epsilon,
            seed,
            sampling: Sampling::Random,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSize("n must be at least 1".into()));
        }
        if !(self.threshold.is_finite() && self.threshold >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be at least 1, got {}",
                self.threshold
            )));
        }
        check_unit_interval("delta", self.delta)?;
        check_unit_interval("epsilon", self.epsilon)?;
        Ok(())
    }

    fn check_oracle<W: Weight>(&self, oracle: &DistanceOracle<'_, W>) -> Result<()> {
        self.validate()?;
        if oracle.n() != self.n {
            return Err(Error::InvalidParameter(format!(
                "spec is for n = {} but the oracle has n = {}",
                self.n,
                oracle.n()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    WithReplacement,
    WithoutReplacement,
}

/// A drawn sample `X_1, ..., X_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    pub mode: SampleMode,
    pub members: Vec<VertexId>,
}

impl SampleSet {
    /// `size` i.i.d. uniform vertices.
    pub fn with_replacement<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Self {
        let members = (0..size)
            .map(|_| VertexId::from_index(rng.gen_range(0..n)))
            .collect();
        SampleSet {
            mode: SampleMode::WithReplacement,
            members,
        }
    }

    /// `size` distinct uniform vertices.
    pub fn without_replacement<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Result<Self> {
        if size > n {
            return Err(Error::InvalidParameter(format!(
                "cannot draw {size} distinct vertices out of {n}"
            )));
        }
        let members = index::sample(rng, n, size)
            .into_iter()
            .map(VertexId::from_index)
            .collect();
        Ok(SampleSet {
            mode: SampleMode::WithoutReplacement,
            members,
        })
    }

    /// Every vertex once, in id order.
    pub fn full(n: usize) -> Self {
        SampleSet {
            mode: SampleMode::WithoutReplacement,
            members: (0..n).map(VertexId::from_index).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Distinct members in order of first appearance, with multiplicities.
    pub fn distinct(&self) -> (Vec<VertexId>, Vec<u64>) {
        let mut slot = std::collections::HashMap::with_capacity(self.members.len());
        let (mut pts, mut counts) = (Vec::new(), Vec::new());
        for &v in &self.members {
            let i = *slot.entry(v).or_insert_with(|| {
                pts.push(v);
                counts.push(0);
                pts.len() - 1
            });
            counts[i] += 1;
        }
        (pts, counts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    fn from_bool(accept: bool) -> Self {
        if accept {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }

    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

/// Which test produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Diameter,
    MaxDegree,
    Leaves,
    Typical,
    TypicalUstat,
    TypicalPathcount,
}

impl TestKind {
    pub const ALL: [TestKind; 6] = [
        TestKind::Diameter,
        TestKind::MaxDegree,
        TestKind::Leaves,
        TestKind::Typical,
        TestKind::TypicalUstat,
        TestKind::TypicalPathcount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Diameter => "diameter",
            TestKind::MaxDegree => "max_degree",
            TestKind::Leaves => "leaves",
            TestKind::Typical => "typical",
            TestKind::TypicalUstat => "typical_ustat",
            TestKind::TypicalPathcount => "typical_pathcount",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown test `{s}`")))
    }
}

/// Outcome of one test run.
#[derive(Clone, Debug, PartialEq)]
pub struct TestVerdict {
    pub test: TestKind,
    pub spec: TestSpec,
    pub decision: Decision,
    /// The normalised statistic the rule compares (`d*/N`, `∂*/N`, `L*/N`,
    /// `ℓ₁*` or `ℓ₂*/(N-2)`).
    pub statistic: Ratio<u128>,
    pub sample_size: usize,
    /// Ledger growth across the test.
    pub queries_used: usize,
    pub details: BTreeMap<String, Value>,
}

impl TestVerdict {
    pub fn statistic_f64(&self) -> f64 {
        ratio_f64(self.statistic)
    }

    /// One JSON object per verdict.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "test": self.test.name(),
            "n": self.spec.n,
            "threshold": self.spec.threshold,
            "delta": self.spec.delta,
            "epsilon": self.spec.epsilon,
            "seed": self.spec.seed,
            "decision": self.decision.to_string(),
            "statistic": self.statistic_f64(),
            "statistic_exact": format!("{}/{}", self.statistic.numer(), self.statistic.denom()),
            "sample_size": self.sample_size,
            "queries_used": self.queries_used,
        });
        if !self.details.is_empty() {
            v["details"] = json!(self.details);
        }
        v
    }
}

pub(crate) fn ratio_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `stat > rhs`, with the rational side evaluated in floating point.
pub(crate) fn exceeds(stat: Ratio<u128>, rhs: f64) -> bool {
    (*stat.numer() as f64) > rhs * (*stat.denom() as f64)
}

/// Run a test by kind. `diam_hint` is only used by the typical-distance tests.
pub fn run_test<W: Weight>(
    kind: TestKind,
    oracle: &DistanceOracle<'_, W>,
    spec: &TestSpec,
    diam_hint: Option<u64>,
) -> Result<TestVerdict> {
    match kind {
        TestKind::Diameter => test_diameter(oracle, spec),
        TestKind::MaxDegree => test_max_degree(oracle, spec),
        TestKind::Leaves => test_leaves(oracle, spec),
        TestKind::Typical => test_typical(oracle, spec, diam_hint),
        TestKind::TypicalUstat => test_typical_ustat(oracle, spec, diam_hint),
        TestKind::TypicalPathcount => test_typical_pathcount(oracle, spec, diam_hint),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn spec_validation() {
        assert!(TestSpec::new(10, 3.0, 0.5, 0.1, 0).is_ok());
        assert!(TestSpec::new(0, 3.0, 0.5, 0.1, 0).is_err());
        assert!(TestSpec::new(10, 0.5, 0.5, 0.1, 0).is_err());
        assert!(TestSpec::new(10, 3.0, 1.0, 0.1, 0).is_err());
        assert!(TestSpec::new(10, 3.0, 0.5, 0.0, 0).is_err());
        assert!(TestSpec::new(10, f64::NAN, 0.5, 0.1, 0).is_err());
    }

    #[test]
    fn sample_modes() {
        let mut r = rng::seeded(1);
        let s = SampleSet::without_replacement(10, 10, &mut r).unwrap();
        let mut m: Vec<u32> = s.members.iter().map(|v| v.0).collect();
        m.sort();
        assert_eq!(m, (1..=10).collect::<Vec<_>>());
        assert!(SampleSet::without_replacement(10, 11, &mut r).is_err());

        let s = SampleSet::with_replacement(3, 50, &mut r);
        assert_eq!(s.size(), 50);
        let (pts, counts) = s.distinct();
        assert_eq!(counts.iter().sum::<u64>(), 50);
        assert_eq!(pts.len(), 3);
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in TestKind::ALL {
            assert_eq!(k.name().parse::<TestKind>().unwrap(), k);
        }
        assert!("nope".parse::<TestKind>().is_err());
    }
}
