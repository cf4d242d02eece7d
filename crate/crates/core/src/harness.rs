//! Monte-Carlo experiment runner.
//!
//! An [`ExperimentConfig`] fixes one tree instance and one procedure; each
//! trial runs the procedure on a fresh oracle with its own seed. Ground truth
//! comes from brute-force computations on the tree, never from the oracle.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimation::{estimate, Property};
use crate::generate::{generate_tree, Family, WeightScheme};
use crate::oracle::DistanceOracle;
use crate::rng;
use crate::subtree::recover;
use crate::testing::{run_test, SampleSet, Sampling, TestKind, TestSpec};
use crate::tree::VertexId;
use crate::{Quanta, Tree};

/// Environment variable capping trial parallelism.
pub const THREADS_ENV: &str = "TREEPROBE_THREADS";

/// Column order of [`write_csv`].
pub const CSV_HEADER: [&str; 8] = [
    "trial",
    "seed",
    "true_value",
    "decision",
    "statistic",
    "sample_size",
    "queries_used",
    "wall_time_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Diameter,
    MaxDegree,
    Leaves,
    Typical,
    TypicalUstat,
    TypicalPathcount,
    EstimateDiameter,
    EstimateMaxDegree,
    EstimateLeaves,
    EstimateTypical,
    Recover,
}

impl Procedure {
    pub const ALL: [Procedure; 11] = [
        Procedure::Diameter,
        Procedure::MaxDegree,
        Procedure::Leaves,
        Procedure::Typical,
        Procedure::TypicalUstat,
        Procedure::TypicalPathcount,
        Procedure::EstimateDiameter,
        Procedure::EstimateMaxDegree,
        Procedure::EstimateLeaves,
        Procedure::EstimateTypical,
        Procedure::Recover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::Diameter => "diameter",
            Procedure::MaxDegree => "max_degree",
            Procedure::Leaves => "leaves",
            Procedure::Typical => "typical",
            Procedure::TypicalUstat => "typical_ustat",
            Procedure::TypicalPathcount => "typical_pathcount",
            Procedure::EstimateDiameter => "estimate_diameter",
            Procedure::EstimateMaxDegree => "estimate_max_degree",
            Procedure::EstimateLeaves => "estimate_leaves",
            Procedure::EstimateTypical => "estimate_typical",
            Procedure::Recover => "recover",
        }
    }

    pub fn test_kind(self) -> Option<TestKind> {
        Some(match self {
            Procedure::Diameter => TestKind::Diameter,
            Procedure::MaxDegree => TestKind::MaxDegree,
            Procedure::Leaves => TestKind::Leaves,
            Procedure::Typical => TestKind::Typical,
            Procedure::TypicalUstat => TestKind::TypicalUstat,
            Procedure::TypicalPathcount => TestKind::TypicalPathcount,
            _ => return None,
        })
    }

    pub fn property(self) -> Option<Property> {
        Some(match self {
            Procedure::Diameter | Procedure::EstimateDiameter => Property::Diameter,
            Procedure::MaxDegree | Procedure::EstimateMaxDegree => Property::MaxDegree,
            Procedure::Leaves | Procedure::EstimateLeaves => Property::Leaves,
            Procedure::Typical
            | Procedure::TypicalUstat
            | Procedure::TypicalPathcount
            | Procedure::EstimateTypical => Property::TypicalDistance,
            Procedure::Recover => return None,
        })
    }

    pub fn is_estimate(self) -> bool {
        self.name().starts_with("estimate_")
    }
}

impl std::fmt::Display for Procedure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Procedure::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown procedure `{s}`")))
    }
}

fn default_weights() -> WeightScheme {
    WeightScheme::Unit
}

fn default_true() -> bool {
    true
}

/// One experiment: a tree instance, a procedure and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    #[serde(default = "default_weights")]
    pub weights: WeightScheme,
    /// Seed of the tree generator; defaults to `base_seed`.
    #[serde(default)]
    pub tree_seed: Option<u64>,
    pub procedure: Procedure,
    /// Required by the tests, ignored by estimates and recovery.
    #[serde(default)]
    pub threshold: Option<f64>,
    pub delta: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub diam_hint: Option<u64>,
    #[serde(default)]
    pub sampling: Sampling,
    /// Sample size for `recover`.
    #[serde(default)]
    pub sample_size: Option<usize>,
    /// When false, `wall_time_ms` is written as 0 so outputs are byte-stable.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Error::InvalidParameter(format!("{name}: {msg}"));
        if self.n == 0 {
            return Err(field("n", "must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(field("trials", "must be at least 1".into()));
        }
        crate::testing::check_unit_interval("delta", self.delta)?;
        crate::testing::check_unit_interval("epsilon", self.epsilon)?;
        if self.procedure.test_kind().is_some() {
            let t = self
                .threshold
                .ok_or_else(|| field("threshold", format!("required by {}", self.procedure)))?;
            TestSpec::new(self.n, t, self.delta, self.epsilon, 0)?;
        }
        if self.procedure == Procedure::Recover {
            match self.sample_size {
                Some(k) if k >= 1 && k <= self.n => {}
                _ => return Err(field("sample_size", format!("recover needs 1..={}", self.n))),
            }
        }
        if self.diam_hint == Some(0) {
            return Err(field("diam_hint", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn build_tree(&self) -> Result<Tree> {
        generate_tree(
            self.family,
            self.n,
            self.tree_seed.unwrap_or(self.base_seed),
            self.weights,
        )
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        rng::derive_seed(self.base_seed, trial as u64)
    }
}

/// One trial of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub true_value: f64,
    /// `accept`/`reject` for tests, `covered`/`missed` for estimates,
    /// `exact`/`mismatch` for recovery.
    pub decision: String,
    /// Test statistic, estimate point, or recovered vertex count.
    pub statistic: f64,
    pub sample_size: usize,
    pub queries_used: usize,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
}

/// Aggregate over all trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub procedure: Procedure,
    pub family: Family,
    pub n: usize,
    pub threshold: Option<f64>,
    pub trials: usize,
    pub true_value: f64,
    /// `null`, `alternative` or `indifferent` for tests.
    pub regime: Option<String>,
    pub accept_rate: Option<f64>,
    pub reject_rate: Option<f64>,
    /// Fraction of correct verdicts outside the indifference zone.
    pub correct_rate: Option<f64>,
    pub coverage: Option<f64>,
    pub mean_queries: f64,
    pub max_queries: usize,
    /// The asymptotic query expression evaluated at this configuration.
    pub theory: f64,
    pub theory_ratio: f64,
    pub mean_wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Brute-force value of the property a procedure targets.
pub fn ground_truth(tree: &Tree, property: Property) -> f64 {
    match property {
        Property::Diameter => tree.diameter() as f64,
        Property::MaxDegree => tree.max_degree() as f64,
        Property::Leaves => tree.leaf_count() as f64,
        Property::TypicalDistance => {
            let r = tree.typical_distance();
            *r.numer() as f64 / *r.denom() as f64
        }
    }
}

/// Whether a test instance is a null (`value ≥ t`), a far alternative
/// (`value < (1-δ)t`) or in between.
pub fn regime(value: f64, threshold: f64, delta: f64) -> &'static str {
    if value >= threshold {
        "null"
    } else if value < (1.0 - delta) * threshold {
        "alternative"
    } else {
        "indifferent"
    }
}

/// The asymptotic query-complexity expression for a procedure.
pub fn theory_queries(cfg: &ExperimentConfig, tree: &Tree) -> f64 {
    let n = cfg.n as f64;
    let (d, e) = (cfg.delta, cfg.epsilon);
    let diam = tree.diameter() as f64;
    let diam_term = (n * (n * n / e).ln() / diam).powi(2) / d.powi(5);
    let typical = |ell: f64, with_diam: bool| {
        let l = (1.0 / e).ln();
        let dl = d * ell;
        let main = n * (diam / dl).powi(2) * l * (n * l / (dl * dl)).min(1.0);
        main + if with_diam { diam_term } else { 0.0 }
    };
    let t = cfg.threshold.unwrap_or(1.0);
    match cfg.procedure {
        Procedure::Diameter => (n / (t * d * d) * (n * n / e).ln()).powi(2),
        Procedure::MaxDegree => n * n / (t * d * d) * (n / e).ln(),
        Procedure::Leaves => n * n / (t * d * d) * (1.0 / e).ln(),
        Procedure::Typical => typical(t, cfg.diam_hint.is_none()),
        Procedure::TypicalUstat => {
            n * (diam / (d * t)).powi(2) * (1.0 / e).ln()
                + if cfg.diam_hint.is_none() { diam_term } else { 0.0 }
        }
        Procedure::TypicalPathcount => {
            let l = (1.0 / e).ln();
            n * n * diam / (d * t).powi(2) * l
                + if cfg.diam_hint.is_none() { diam_term } else { 0.0 }
        }
        Procedure::EstimateDiameter => diam_term,
        Procedure::EstimateMaxDegree => {
            n * n * (n / e).ln() / (d.powi(3) * tree.max_degree() as f64)
        }
        Procedure::EstimateLeaves => {
            n * n * (1.0 / e).ln() / (d.powi(3) * tree.leaf_count() as f64)
        }
        Procedure::EstimateTypical => {
            let typ = ground_truth(tree, Property::TypicalDistance);
            n * (1.0 / e).ln() / d.powi(3) * (diam / typ).powi(2) + diam_term
        }
        Procedure::Recover => n * cfg.sample_size.unwrap_or(1) as f64,
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&k| k >= 1)
}

fn run_trial(cfg: &ExperimentConfig, tree: &Tree, truth: f64, trial: usize) -> Result<TrialRecord> {
    let seed = cfg.trial_seed(trial);
    let oracle: DistanceOracle<'_, Quanta> = DistanceOracle::new(tree);
    let start = Instant::now();
    let mut rec = TrialRecord {
        trial,
        seed,
        true_value: truth,
        decision: String::new(),
        statistic: 0.0,
        sample_size: 0,
        queries_used: 0,
        wall_time_ms: 0.0,
        interval: None,
        branch: None,
    };
    if let Some(kind) = cfg.procedure.test_kind() {
        let threshold = cfg.threshold.expect("validated");
        let spec = TestSpec::new(cfg.n, threshold, cfg.delta, cfg.epsilon, seed)?
            .with_sampling(cfg.sampling);
        let v = run_test(kind, &oracle, &spec, cfg.diam_hint)?;
        rec.decision = v.decision.to_string();
        rec.statistic = v.statistic_f64();
        rec.sample_size = v.sample_size;
        rec.queries_used = v.queries_used;
        rec.branch = v
            .details
            .get("plan")
            .and_then(|p| p.get("branch"))
            .and_then(Value::as_str)
            .map(str::to_owned);
    } else if let Some(property) = cfg.procedure.property() {
        let r = estimate(&oracle, property, cfg.delta, cfg.epsilon, seed)?;
        rec.decision = if r.contains(truth) { "covered" } else { "missed" }.into();
        rec.statistic = r.point;
        rec.sample_size = r.iterations;
        rec.queries_used = r.queries_used;
        rec.interval = Some((r.lo, r.hi));
    } else {
        let k = cfg.sample_size.expect("validated");
        let sample = SampleSet::without_replacement(cfg.n, k, &mut rng::seeded(seed))?;
        let sub = recover(&oracle, &sample.members)?;
        let expect: BTreeSet<VertexId> = tree.steiner_vertices(&sample.members)?;
        let got: BTreeSet<VertexId> = sub.vertices().iter().copied().collect();
        let edges_ok = sub
            .edges()
            .iter()
            .all(|&(u, v, w)| tree.is_adjacent(u, v) && tree.path_weight(u, v).ok() == Some(w));
        rec.true_value = expect.len() as f64;
        rec.decision = if got == expect && edges_ok { "exact" } else { "mismatch" }.into();
        rec.statistic = got.len() as f64;
        rec.sample_size = k;
        rec.queries_used = oracle.query_count();
    }
    if cfg.record_timing {
        rec.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(rec)
}

/// Run all trials, in parallel up to `TREEPROBE_THREADS`, ordered by index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let tree = cfg.build_tree()?;
    let truth = match cfg.procedure.property() {
        Some(p) => ground_truth(&tree, p),
        // recovery records its per-trial subtree size instead
        None => 0.0,
    };
    let work = || -> Result<Vec<TrialRecord>> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &tree, truth, t))
            .collect()
    };
    let records = match thread_cap() {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(cfg, &tree, truth, &records);
    Ok(ExperimentOutput { records, summary })
}

fn summarize(cfg: &ExperimentConfig, tree: &Tree, truth: f64, records: &[TrialRecord]) -> Summary {
    let trials = records.len();
    let frac = |pred: &dyn Fn(&TrialRecord) -> bool| {
        records.iter().filter(|r| pred(r)).count() as f64 / trials as f64
    };
    let mean_queries = records.iter().map(|r| r.queries_used as f64).sum::<f64>() / trials as f64;
    let theory = theory_queries(cfg, tree);
    let mut s = Summary {
        procedure: cfg.procedure,
        family: cfg.family,
        n: cfg.n,
        threshold: cfg.threshold,
        trials,
        true_value: truth,
        regime: None,
        accept_rate: None,
        reject_rate: None,
        correct_rate: None,
        coverage: None,
        mean_queries,
        max_queries: records.iter().map(|r| r.queries_used).max().unwrap_or(0),
        theory,
        theory_ratio: mean_queries / theory,
        mean_wall_time_ms: records.iter().map(|r| r.wall_time_ms).sum::<f64>() / trials as f64,
    };
    if cfg.procedure.test_kind().is_some() {
        let accept = frac(&|r| r.decision == "accept");
        let reg = regime(truth, cfg.threshold.expect("validated"), cfg.delta);
        s.accept_rate = Some(accept);
        s.reject_rate = Some(1.0 - accept);
        s.correct_rate = match reg {
            "null" => Some(accept),
            "alternative" => Some(1.0 - accept),
            _ => None,
        };
        s.regime = Some(reg.into());
    } else if cfg.procedure.is_estimate() {
        s.coverage = Some(frac(&|r| r.decision == "covered"));
    } else {
        s.correct_rate = Some(frac(&|r| r.decision == "exact"));
    }
    s
}

/// CSV with the fixed [`CSV_HEADER`] columns.
pub fn write_csv<O: Write>(records: &[TrialRecord], out: O) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.true_value.to_string(),
            r.decision.clone(),
            r.statistic.to_string(),
            r.sample_size.to_string(),
            r.queries_used.to_string(),
            format!("{:.3}", r.wall_time_ms),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line for each record.
pub fn write_jsonl<O: Write>(records: &[TrialRecord], mut out: O) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

impl Summary {
    pub fn to_json(&self) -> Value {
        json!(self)
    }
}
