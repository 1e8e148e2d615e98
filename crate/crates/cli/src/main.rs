mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fredom::experiment::{generate, run_experiment, summary_csv, write_report, ExperimentConfig, ExperimentName};
use fredom::io::{ingest, read_dag, render_dag, series_to_csv, DagFormat, DagMeta, SeriesKind};
use fredom::metrics::{shd, sid};
use fredom::pipeline::{
    estimate_order, learn_exfredom, learn_fredom, learn_tseqvar, ExfredomOptions, FredomOptions, Method, TseqvarOptions,
    DEFAULT_BLOCKS,
};

use config::ConfigFile;

const SEED_ENV: &str = "FREDOM_SEED";

#[derive(Parser, Debug)]
#[command(name = "fredom", version, about = "Frequency-domain causal structure learning for time series")]
struct Cli {
    /// key = value file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed (falls back to the config file, then $FREDOM_SEED, then 0)
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one dataset from an experiment design
    Simulate(SimulateArgs),
    /// Estimate the consensus topological ordering of a series
    Order(OrderArgs),
    /// Learn the summary DAG of a series
    Learn(LearnArgs),
    /// Compare an estimated DAG against the truth (SHD, SID)
    Metrics(MetricsArgs),
    /// Run a replicated simulation experiment
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct SeriesArgs {
    /// Series CSV with a header row of labels
    #[arg(long)]
    input: PathBuf,
    /// real, or complex with <label>_re/<label>_im column pairs
    #[arg(long)]
    kind: Option<String>,
    /// Target number of frequency blocks
    #[arg(long)]
    m_blocks: Option<usize>,
    /// Smoothing half-window, overriding --m-blocks
    #[arg(long)]
    half_window: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// exp1, exp2, expA, expB or expC
    #[arg(long)]
    experiment: Option<String>,
    /// Number of variables, where the design allows it
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    /// Output directory for series.csv and truth.json
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct OrderArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Output file (standard output if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// fredom, exfredom or tseqvar
    #[arg(long)]
    method: Option<String>,
    /// Fixed sparsity level (FreDom defaults to eBIC selection)
    #[arg(long)]
    lambda: Option<f64>,
    /// VAR order for tseqvar
    #[arg(long)]
    lag_order: Option<usize>,
    /// Instantaneous-coefficient threshold for tseqvar
    #[arg(long)]
    prune: Option<f64>,
    /// Lag-coefficient threshold for tseqvar
    #[arg(long)]
    lag_prune: Option<f64>,
    /// Edge-weight threshold for exfredom
    #[arg(long)]
    w_thresh: Option<f64>,
    /// csv, json or dot
    #[arg(long)]
    format: Option<String>,
    /// Output file (standard output if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Estimated DAG (.json or adjacency .csv)
    #[arg(long)]
    estimate: PathBuf,
    /// True DAG (.json or adjacency .csv)
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// exp1, exp2, expA, expB or expC
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    /// Comma-separated methods (default depends on the experiment)
    #[arg(long)]
    methods: Option<String>,
    /// Fixed FreDom sparsity level instead of eBIC
    #[arg(long)]
    lambda: Option<f64>,
    /// FreDom frequency blocks
    #[arg(long)]
    m_blocks: Option<usize>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for replicates.csv and summary.csv
    #[arg(long)]
    output: PathBuf,
}

fn resolve_seed(flag: Option<u64>, cfg: &ConfigFile) -> Result<u64> {
    if let Some(s) = cfg.pick(flag, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("${SEED_ENV} is not an unsigned integer: '{v}'")),
        Err(_) => Ok(0),
    }
}

fn parse_with<T: std::str::FromStr<Err = fredom::Error>>(s: Option<String>, default: T) -> Result<T> {
    Ok(match s {
        Some(v) => v.parse()?,
        None => default,
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

struct SeriesInput {
    x: fredom::TimeSeriesMatrix,
    blocks: usize,
    half_window: Option<usize>,
}

fn load_series(args: SeriesArgs, cfg: &ConfigFile) -> Result<SeriesInput> {
    let kind = parse_with(cfg.pick(args.kind, "kind")?, SeriesKind::Real)?;
    let blocks = cfg.pick(args.m_blocks, "m-blocks")?.unwrap_or(DEFAULT_BLOCKS);
    let half_window = cfg.pick(args.half_window, "half-window")?;
    let x = ingest(&args.input, kind).with_context(|| format!("reading {}", args.input.display()))?;
    log::info!("read {} observations of {} series from {}", x.len(), x.dim(), args.input.display());
    Ok(SeriesInput { x, blocks, half_window })
}

fn cmd_simulate(args: SimulateArgs, cfg: &ConfigFile, seed: u64) -> Result<()> {
    let name: ExperimentName = parse_with(cfg.pick(args.experiment, "experiment")?, ExperimentName::Exp1)?;
    let mut exp = ExperimentConfig::new(name, 1, seed);
    exp.dim = cfg.pick(args.dim, "dim")?;
    if let Some(t) = cfg.pick(args.length, "length")? {
        exp.length = t;
    }
    let truth = generate(&exp, seed)?;
    fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    fs::write(args.output.join("series.csv"), series_to_csv(&truth.series))?;
    let meta = DagMeta { order: Some(truth.order.perm.clone()), lambda: None, support: None };
    fs::write(args.output.join("truth.json"), render_dag(&truth.dag, DagFormat::Json, &meta)?)?;
    log::info!("{name}: {} series × {} observations, {} true edges", truth.series.dim(), truth.series.len(), truth.dag.edge_count());
    Ok(())
}

fn cmd_order(args: OrderArgs, cfg: &ConfigFile) -> Result<()> {
    let input = load_series(args.series, cfg)?;
    let res = estimate_order(&input.x, input.blocks, input.half_window)?;
    let labels = input.x.labels();
    let order: Vec<&str> = res.order.perm.iter().map(|&v| labels[v].as_str()).collect();
    let doc = serde_json::json!({
        "order": order,
        "support": res.order.support,
        "half_window": res.stack.half_window(),
        "frequencies": res.stack.len(),
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_output(args.output.as_deref(), &text)
}

fn cmd_learn(args: LearnArgs, cfg: &ConfigFile) -> Result<()> {
    let method = parse_with(cfg.pick(args.method, "method")?, Method::Fredom)?;
    let format = parse_with(cfg.pick(args.format, "format")?, DagFormat::Json)?;
    let lambda = cfg.pick(args.lambda, "lambda")?;
    let input = load_series(args.series, cfg)?;
    let learned = match method {
        Method::Fredom => {
            let opts = FredomOptions { blocks: input.blocks, half_window: input.half_window, lambda, ..FredomOptions::default() };
            learn_fredom(&input.x, &opts)?
        }
        Method::Exfredom => {
            let mut opts = ExfredomOptions { blocks: input.blocks, ..ExfredomOptions::default() };
            if let Some(l) = lambda {
                opts.lambda = l;
            }
            if let Some(w) = cfg.pick(args.w_thresh, "w-thresh")? {
                opts.config.w_thresh = w;
            }
            learn_exfredom(&input.x, &opts)?
        }
        Method::Tseqvar => {
            let d = TseqvarOptions::default();
            let opts = TseqvarOptions {
                lag_order: cfg.pick(args.lag_order, "lag-order")?.unwrap_or(d.lag_order),
                prune: cfg.pick(args.prune, "prune")?.unwrap_or(d.prune),
                lag_prune: cfg.pick(args.lag_prune, "lag-prune")?.unwrap_or(d.lag_prune),
            };
            learn_tseqvar(&input.x, &opts)?
        }
    };
    log::info!("{method}: {} edges", learned.dag.edge_count());
    let meta = DagMeta {
        order: learned.order.as_ref().map(|o| o.perm.clone()),
        lambda: learned.lambda,
        support: learned.order.as_ref().map(|o| o.support),
    };
    write_output(args.output.as_deref(), &render_dag(&learned.dag, format, &meta)?)
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let est = read_dag(&args.estimate).with_context(|| format!("reading {}", args.estimate.display()))?;
    let truth = read_dag(&args.truth).with_context(|| format!("reading {}", args.truth.display()))?;
    if est.labels() != truth.labels() {
        log::warn!("label sets differ; comparing by column position");
    }
    let text = format!("shd,sid\n{},{}\n", shd(&est, &truth)?, sid(&est, &truth)?);
    write_output(None, &text)
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("--methods is empty");
    }
    Ok(out)
}

fn cmd_experiment(args: ExperimentArgs, cfg: &ConfigFile, seed: u64) -> Result<()> {
    let name: ExperimentName = parse_with(cfg.pick(args.name, "name")?, ExperimentName::Exp1)?;
    let reps = cfg.pick(args.reps, "reps")?.unwrap_or(20);
    let mut exp = ExperimentConfig::new(name, reps, seed);
    exp.dim = cfg.pick(args.dim, "dim")?;
    if let Some(t) = cfg.pick(args.length, "length")? {
        exp.length = t;
    }
    if let Some(m) = cfg.pick::<String>(args.methods, "methods")? {
        exp.methods = Some(parse_methods(&m)?);
    }
    exp.fredom.lambda = cfg.pick(args.lambda, "lambda")?;
    if let Some(b) = cfg.pick(args.m_blocks, "m-blocks")? {
        exp.fredom.blocks = b;
    }
    exp.jobs = cfg.pick(args.jobs, "jobs")?;
    log::info!("running {name}: {reps} replicates, seed {seed}");
    let report = run_experiment(&exp)?;
    write_report(&report, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    write_output(None, &summary_csv(&report))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed = resolve_seed(cli.seed, &cfg)?;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, &cfg, seed),
        Command::Order(a) => cmd_order(a, &cfg),
        Command::Learn(a) => cmd_learn(a, &cfg),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Experiment(a) => cmd_experiment(a, &cfg, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
