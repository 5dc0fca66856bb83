//! `rbn`: generate, contaminate, robustly estimate, and evaluate Bayesian
//! networks over binary variables.

mod checks;
mod eval;
mod experiment;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rbn_core::contamination::{self, NoiseKind};
use rbn_core::filter::{self, EngineConfig, LearnReport};
use rbn_core::gen::{self, Topology};
use rbn_core::io;
use rbn_core::net::ProbMode;
use rbn_core::{BayesNet, Dataset, Provenance, DEFAULT_D_EXACT};

#[derive(Parser)]
#[command(
    name = "rbn",
    about = "Robust estimation of Bayesian network parameters from corrupted samples",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Empty,
    Chain,
    Tree,
    RandomDag,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Iterative spectral filtering.
    Filter,
    /// Plain empirical conditional table (the non-robust baseline).
    Mle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Filter => "filter",
            Method::Mle => "mle",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model: topology plus conditional probabilities drawn
    /// uniformly from [c, 1-c].
    GenModel {
        #[arg(long, value_enum)]
        topology: TopologyArg,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        c: f64,
        /// Parents per node for the tree topology.
        #[arg(long)]
        fan_in: Option<usize>,
        /// Maximum parents per node for the random-dag topology.
        #[arg(long)]
        max_fan_in: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_D_EXACT)]
        d_exact: usize,
    },
    /// Draw samples from a model into the dataset text format.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contaminate data according to a noise specification.
    Corrupt {
        #[arg(long)]
        noise: PathBuf,
        /// Clean model; required for mixture corruption and for the
        /// cpt_shift / subtractive_tail adversaries.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Existing clean dataset; required for replacement corruption.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of samples to generate under mixture corruption.
        #[arg(long)]
        n: Option<usize>,
        /// Overrides the corruption fraction from the noise file.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a model from data with a known structure.
    Learn {
        #[arg(long)]
        data: PathBuf,
        /// Model file providing the graph (its probabilities are ignored).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "filter")]
        method: Method,
        /// Engine configuration JSON; defaults apply otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Assumed corruption level when no config file is given.
        #[arg(long)]
        eps: Option<f64>,
        /// Overrides the engine seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Optional per-round diagnostics JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare a learned model against a reference model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        learned: PathBuf,
        #[arg(long, default_value_t = DEFAULT_D_EXACT)]
        d_exact: usize,
        /// Seed for Monte Carlo configuration probabilities above d_exact.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a methods-by-eps-by-trials experiment grid from a spec file.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_summary: PathBuf,
        /// Worker threads for trials; defaults to the rayon global pool.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the oracle-backed identity and inequality suite.
    Verify {
        /// Reduced instance counts.
        #[arg(long)]
        quick: bool,
    },
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<BayesNet> {
    io::model_from_json(&read_to_string(path)?)
        .with_context(|| format!("parsing model {}", path.display()))
}

fn load_dataset(path: &Path) -> Result<(Dataset, Option<Vec<Provenance>>)> {
    io::dataset_from_text(&read_to_string(path)?)
        .with_context(|| format!("parsing dataset {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenModel { topology, d, c, fan_in, max_fan_in, seed, out, d_exact } => {
            let topology = match topology {
                TopologyArg::Empty => Topology::Empty,
                TopologyArg::Chain => Topology::Chain,
                TopologyArg::Tree => Topology::Tree {
                    fan_in: fan_in.context("--fan-in is required for the tree topology")?,
                },
                TopologyArg::RandomDag => Topology::RandomDag {
                    max_fan_in: max_fan_in
                        .context("--max-fan-in is required for the random-dag topology")?,
                },
            };
            let dag = gen::build_dag(topology, d, rbn_core::derive_seed(seed, 0, 0))?;
            let net = gen::random_cpt_net(dag, c, rbn_core::derive_seed(seed, 1, 0))?;
            write_string(&out, &io::model_to_json(&net))?;
            let mode = if d <= d_exact {
                ProbMode::Exact { d_exact }
            } else {
                ProbMode::MonteCarlo { n: 200_000, seed: rbn_core::derive_seed(seed, 2, 0) }
            };
            let min_prob = net.min_config_prob(mode)?;
            println!("wrote {} (d = {d}, m = {}, min config probability {min_prob:.6})", out.display(), net.num_configs());
        }
        Command::Sample { model, n, seed, out } => {
            let net = load_model(&model)?;
            let data = net.sample(n, seed);
            write_string(&out, &io::dataset_to_text(&data, None))?;
            println!("wrote {} ({} samples of dimension {})", out.display(), n, net.dim());
        }
        Command::Corrupt { noise, model, data, n, eps, seed, out } => {
            let mut spec = io::noise_from_json(&read_to_string(&noise)?)?;
            if let Some(eps) = eps {
                spec = contamination::NoiseModel::new(spec.kind(), eps, spec.adversary().clone())?;
            }
            let net = model.as_deref().map(load_model).transpose()?;
            let labeled = match spec.kind() {
                NoiseKind::HuberAdditive => {
                    let net = net
                        .as_ref()
                        .context("--model is required for huber_additive corruption")?;
                    let n = n.context("--n is required for huber_additive corruption")?;
                    contamination::corrupt_huber(net, n, &spec, seed)?
                }
                NoiseKind::TvReplacement => {
                    let path = data.context("--data is required for tv_replacement corruption")?;
                    let (clean, _) = load_dataset(&path)?;
                    contamination::corrupt_replacement(&clean, &spec, net.as_ref(), seed)?
                }
            };
            let corrupt = labeled.corrupt_count();
            let total = labeled.len();
            write_string(&out, &io::labeled_dataset_to_text(&labeled))?;
            println!("wrote {} ({corrupt}/{total} corrupt)", out.display());
        }
        Command::Learn { data, model, method, config, eps, seed, out, report } => {
            let net = load_model(&model)?;
            let (samples, labels) = load_dataset(&data)?;
            if samples.dim() != net.dim() {
                bail!("dataset dimension {} does not match the model ({})", samples.dim(), net.dim());
            }
            let mut engine = match config {
                Some(path) => io::engine_config_from_json(&read_to_string(&path)?)?,
                None => EngineConfig::new(eps.context("--eps is required without --config")?)?,
            };
            if let Some(seed) = seed {
                engine.seed = seed;
            }
            // The estimators only ever see the bare samples.
            let learned = run_learn(method, &samples, &engine, &net)?;
            write_string(&out, &io::model_to_json(&learned.net))?;
            if let Some(path) = report {
                let text = learn_report_json(method, learned.report.as_ref(), &samples, labels.as_deref(), &net);
                write_string(&path, &text)?;
            }
            match &learned.report {
                Some(r) => println!(
                    "wrote {} (converged: {}, rounds: {}, filters: {})",
                    out.display(),
                    r.converged,
                    r.iterations.len(),
                    r.filters.len()
                ),
                None => println!("wrote {} (plain empirical table)", out.display()),
            }
        }
        Command::Eval { model, learned, d_exact, seed, out } => {
            let truth = load_model(&model)?;
            let candidate = load_model(&learned)?;
            let metrics = eval::evaluate(&truth, &candidate, d_exact, seed)?;
            let text = metrics.to_json();
            match out {
                Some(path) => write_string(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Experiment { spec, out_csv, out_summary, threads } => {
            if let Some(threads) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .context("configuring the thread pool")?;
            }
            let spec = experiment::ExperimentSpec::from_json(&read_to_string(&spec)?)?;
            let rows = experiment::run(&spec);
            write_string(&out_csv, &experiment::csv_string(&rows))?;
            write_string(&out_summary, &experiment::summary_string(&spec, &rows))?;
            println!(
                "wrote {} and {} ({} rows)",
                out_csv.display(),
                out_summary.display(),
                rows.len()
            );
        }
        Command::Verify { quick } => {
            let results = checks::run_all(quick);
            let all_pass = checks::print_table(&results);
            if !all_pass {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}

pub struct Learned {
    pub net: BayesNet,
    pub report: Option<LearnReport>,
}

/// Runs one estimation method over a bare dataset.
pub fn run_learn(
    method: Method,
    samples: &Dataset,
    engine: &EngineConfig,
    structure: &BayesNet,
) -> Result<Learned> {
    match method {
        Method::Filter => {
            let report = filter::learn_in_place(samples, engine, structure.dag())?;
            Ok(Learned { net: report.final_net.clone(), report: Some(report) })
        }
        Method::Mle => {
            let (cpt, _) = filter::empirical_cpt(samples, structure.config_table());
            Ok(Learned { net: BayesNet::new(structure.dag().clone(), cpt)?, report: None })
        }
    }
}

fn json_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => io::fmt_f64(v),
        None => "null".into(),
    }
}

/// Diagnostics JSON for a learning run: one object per round plus run-level
/// rejection bookkeeping (computed from ground-truth labels when the input
/// dataset carried them).
fn learn_report_json(
    method: Method,
    report: Option<&LearnReport>,
    samples: &Dataset,
    labels: Option<&[Provenance]>,
    structure: &BayesNet,
) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = write!(out, "{{\"method\":\"{}\"", method.name());
    match report {
        None => {
            out.push_str(",\"converged\":true,\"iterations\":[]}");
            out.push('\n');
        }
        Some(report) => {
            let _ = write!(
                out,
                ",\"converged\":{},\"total_samples_drawn\":{},\"filters\":{},\"warnings\":[{}]",
                report.converged,
                report.total_samples_drawn,
                report.filters.len(),
                report
                    .warnings
                    .iter()
                    .map(|w| format!("\"{w}\""))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            out.push_str(",\"iterations\":[");
            for (i, diag) in report.iterations.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "{{\"alpha\":{},\"lambda_star\":{},\"passed_spectral\":{},\"delta\":{},\"T\":{},\"rejected_fraction\":{},\"candidates_scanned\":{},\"unseen_configs\":{}}}",
                    io::fmt_f64(diag.alpha),
                    io::fmt_f64(diag.lambda_star),
                    diag.passed_spectral,
                    json_opt(diag.delta),
                    json_opt(diag.threshold),
                    io::fmt_f64(diag.rejected_fraction),
                    diag.candidates_scanned,
                    diag.unseen_configs,
                )
                ;
            }
            out.push_str("]");
            // Ground-truth rejection rates of the final stack over the
            // input data, when labels exist.
            let (clean_rej, corrupt_rej, precision) = match labels {
                Some(labels) => {
                    let table = structure.config_table();
                    let mut seen = [0usize; 2];
                    let mut rejected = [0usize; 2];
                    for (row, &label) in samples.rows().zip(labels) {
                        let idx = usize::from(label == Provenance::Corrupt);
                        seen[idx] += 1;
                        if !report.filters.accepts(row, table) {
                            rejected[idx] += 1;
                        }
                    }
                    let rate = |r: usize, s: usize| (s > 0).then(|| r as f64 / s as f64);
                    let total_rej = rejected[0] + rejected[1];
                    (
                        rate(rejected[0], seen[0]),
                        rate(rejected[1], seen[1]),
                        (total_rej > 0).then(|| rejected[1] as f64 / total_rej as f64),
                    )
                }
                None => (None, None, None),
            };
            let _ = write!(
                out,
                ",\"clean_rejection_rate\":{},\"corrupt_rejection_rate\":{},\"rejection_precision\":{}}}",
                json_opt(clean_rej),
                json_opt(corrupt_rej),
                json_opt(precision)
            );
            out.push('\n');
        }
    }
    out
}
