use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use treeprobe::harness::{run_experiment, write_csv, write_jsonl, ExperimentConfig, Procedure};
use treeprobe::testing::{run_test, SampleSet};
use treeprobe::verify::{run_all, run_criterion};
use treeprobe::{
    estimate, generate_tree, recover, rng, Error, Family, Oracle, Property, Result, Sampling,
    TestKind, TestSpec, Tree, VertexId, WeightScheme,
};

const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "treeprobe", version, about = "Query-counted property tests on hidden trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated tree in the text format.
    Generate {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run one property test and print its verdict as a JSON line.
    Test {
        #[arg(long)]
        procedure: TestKind,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        diam_hint: Option<u64>,
        /// Sample every vertex exactly once.
        #[arg(long)]
        full: bool,
    },
    /// Run one estimator and print the interval as a JSON line.
    Estimate {
        #[arg(long)]
        property: Property,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Recover the subtree spanned by a vertex sample.
    Recover {
        #[command(flatten)]
        source: Source,
        /// Comma-separated vertex ids.
        #[arg(long, value_delimiter = ',', conflicts_with = "sample_size")]
        sample: Vec<u32>,
        /// Draw this many distinct vertices instead.
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo trials from a JSON config file or from flags.
    Experiment(ExperimentArgs),
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "acceptance")]
        suite: String,
        /// Run a single criterion (1 to 10).
        #[arg(long)]
        criterion: Option<u8>,
    },
}

#[derive(Args, Clone)]
struct Shape {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `unit` or `uniform:LO:HI` (in quanta).
    #[arg(long, default_value = "unit")]
    weights: WeightScheme,
}

/// A tree file or generator flags, plus the procedure seed.
#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with_all = ["family", "n", "tree_seed", "weights"])]
    tree: Option<PathBuf>,
    #[arg(long, required_unless_present = "tree")]
    family: Option<Family>,
    #[arg(long, required_unless_present = "tree")]
    n: Option<usize>,
    /// Generator seed; defaults to `--seed`.
    #[arg(long)]
    tree_seed: Option<u64>,
    #[arg(long, default_value = "unit")]
    weights: WeightScheme,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Source {
    fn load(&self) -> Result<Tree> {
        match (&self.tree, self.family, self.n) {
            (Some(path), _, _) => Tree::read_text(BufReader::new(open(path)?)),
            (None, Some(family), Some(n)) => {
                generate_tree(family, n, self.tree_seed.unwrap_or(self.seed), self.weights)
            }
            _ => Err(Error::InvalidParameter("give --tree or --family and --n".into())),
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON file with the experiment fields; replaces the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    family: Option<Family>,
    #[arg(long, required_unless_present = "config")]
    n: Option<usize>,
    #[arg(long, default_value = "unit")]
    weights: WeightScheme,
    #[arg(long)]
    tree_seed: Option<u64>,
    #[arg(long, required_unless_present = "config")]
    procedure: Option<Procedure>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long)]
    diam_hint: Option<u64>,
    #[arg(long)]
    full: bool,
    #[arg(long)]
    sample_size: Option<usize>,
    /// Write 0 for wall_time_ms so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Per-trial CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-trial JSON-lines output.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Summary JSON output; stdout when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            return ExperimentConfig::from_json(&text);
        }
        let missing = |f: &str| Error::InvalidParameter(format!("--{f} is required"));
        let cfg = ExperimentConfig {
            family: self.family.ok_or_else(|| missing("family"))?,
            n: self.n.ok_or_else(|| missing("n"))?,
            weights: self.weights,
            tree_seed: self.tree_seed,
            procedure: self.procedure.ok_or_else(|| missing("procedure"))?,
            threshold: self.threshold,
            delta: self.delta,
            epsilon: self.epsilon,
            trials: self.trials,
            base_seed: self.base_seed,
            diam_hint: self.diam_hint,
            sampling: if self.full { Sampling::Full } else { Sampling::Random },
            sample_size: self.sample_size,
            record_timing: !self.no_timing,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `path` or stdout.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = sink(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { shape, out } => {
            let tree: Tree = generate_tree(shape.family, shape.n, shape.seed, shape.weights)?;
            emit(out.as_deref(), &tree.to_text())?;
        }
        Command::Test {
            procedure,
            source,
            threshold,
            delta,
            epsilon,
            diam_hint,
            full,
        } => {
            let tree = source.load()?;
            let oracle = Oracle::new(&tree);
            let mut spec = TestSpec::new(tree.n(), threshold, delta, epsilon, source.seed)?;
            if full {
                spec = spec.with_sampling(Sampling::Full);
            }
            let verdict = run_test(procedure, &oracle, &spec, diam_hint)?;
            println!("{}", verdict.to_json());
        }
        Command::Estimate {
            property,
            source,
            delta,
            epsilon,
        } => {
            let tree = source.load()?;
            let r = estimate(&Oracle::new(&tree), property, delta, epsilon, source.seed)?;
            println!("{}", r.to_json());
        }
        Command::Recover {
            source,
            sample,
            sample_size,
            out,
        } => {
            let tree = source.load()?;
            let members: Vec<VertexId> = match sample_size {
                Some(k) => {
                    SampleSet::without_replacement(tree.n(), k, &mut rng::seeded(source.seed))?.members
                }
                None => sample.into_iter().map(VertexId).collect(),
            };
            let oracle = Oracle::new(&tree);
            let sub = recover(&oracle, &members)?;
            emit(out.as_deref(), &sub.to_text())?;
            eprintln!(
                "{}",
                json!({
                    "sample_size": members.len(),
                    "vertices": sub.vertices().len(),
                    "queries_used": oracle.query_count(),
                })
            );
        }
        Command::Experiment(args) => {
            let cfg = args.config()?;
            let output = run_experiment(&cfg)?;
            if let Some(p) = &args.csv {
                write_csv(&output.records, create(p)?)?;
            }
            if let Some(p) = &args.jsonl {
                let mut w = create(p)?;
                write_jsonl(&output.records, &mut w)?;
                w.flush()?;
            }
            emit(args.summary.as_deref(), &format!("{}\n", output.summary.to_json()))?;
        }
        Command::Verify { suite, criterion } => {
            if suite != "acceptance" {
                return Err(Error::InvalidParameter(format!(
                    "unknown suite `{suite}` (available: acceptance)"
                )));
            }
            let reports = match criterion {
                Some(id) if (1..=10).contains(&id) => {
                    let r = run_criterion(id);
                    println!("{r}");
                    vec![r]
                }
                Some(id) => {
                    return Err(Error::InvalidParameter(format!("no criterion {id}")));
                }
                None => run_all(|r| println!("{r}")),
            };
            if reports.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(EXIT_VERIFY_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
