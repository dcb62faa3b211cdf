//! Command-line surface: train / update / eval / theory / bench.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 configuration or usage
//! error. Every artifact-producing command writes a `<out>.manifest.json`
//! with the resolved settings, inputs and seed needed to reproduce it.
//! Configuration precedence is flags > config file > defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::{ConfigError, TrainConfig};
use crate::corpus::TokenSource;
use crate::evalkit::{self, AnalogyDataset, EvalSuite, SimilarityDataset};
use crate::theory::{self, MomentMode, StationarySource};
use crate::trainer::{self, TrainError, TrainReport};

#[derive(Parser)]
#[command(
    name = "isgns",
    version,
    about = "Streaming skip-gram word embeddings with incremental model updates"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from scratch on a token stream.
    Train(TrainArgs),
    /// Continue incremental training of a checkpoint on new data only.
    Update(UpdateArgs),
    /// Compare two checkpoints on similarity/analogy suites.
    Eval(EvalArgs),
    /// Estimate the batch-vs-streaming objective-difference moments.
    Theory(TheoryArgs),
    /// Time an incremental update against a batch retrain.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrainMode {
    Incremental,
    Minibatch,
    Batch,
}

#[derive(Args, Clone)]
struct ConfigFlags {
    /// Config file with KEY=VALUE lines (# comments allowed).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the full-scale defaults (400-dimensional embeddings).
    #[arg(long)]
    paper_defaults: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Context window size c.
    #[arg(long)]
    window: Option<usize>,
    /// Negative samples k per pair.
    #[arg(long)]
    negatives: Option<usize>,
    /// Noise smoothing exponent in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Embedding dimension d.
    #[arg(long)]
    dim: Option<usize>,
    /// Maximum live vocabulary size m.
    #[arg(long)]
    max_vocab: Option<usize>,
    /// Unigram table capacity tau.
    #[arg(long)]
    table_cap: Option<usize>,
    /// AdaGrad base learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Frequency subsampling threshold t.
    #[arg(long)]
    subsample: Option<f64>,
    /// Mini-batch size M in tokens.
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input corpus path, or `-` for stdin.
    #[arg(long)]
    input: String,
    #[arg(long, value_enum, default_value = "incremental")]
    mode: TrainMode,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Progress CSV (one row per 10^5 pairs).
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    config_flags: ConfigFlags,
}

#[derive(Args)]
struct UpdateArgs {
    /// Checkpoint to resume.
    #[arg(long)]
    resume: PathBuf,
    /// New data only; old data is never touched.
    #[arg(long)]
    input: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    config_flags: ConfigFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// First checkpoint.
    #[arg(long)]
    model_a: PathBuf,
    /// Second checkpoint (pass the same path to evaluate one model).
    #[arg(long)]
    model_b: PathBuf,
    /// Similarity suite as NAME=PATH; repeatable.
    #[arg(long = "similarity")]
    similarity: Vec<String>,
    /// Analogy suite as NAME=PATH; repeatable.
    #[arg(long = "analogy")]
    analogy: Vec<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TheoryMode {
    Incremental,
    Minibatch,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TheoryDist {
    /// Harmonic weights mu_w proportional to 1/(w+1).
    Zipf,
    Uniform,
}

#[derive(Args)]
struct TheoryArgs {
    /// Dataset sizes, comma separated (e.g. 1000,10000,100000).
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    /// Replicates per size.
    #[arg(long, default_value_t = 2_000)]
    replicates: usize,
    /// Vocabulary size of the synthetic iid source.
    #[arg(long, default_value_t = 50)]
    vocab_size: usize,
    #[arg(long, value_enum, default_value = "zipf")]
    dist: TheoryDist,
    /// Resample sentences from this corpus instead of the iid source.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    /// Dimension of the sampled parameters.
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, value_enum, default_value = "incremental")]
    mode: TheoryMode,
    /// Mini-batch size for --mode minibatch.
    #[arg(long, default_value_t = 10)]
    batch_size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Initial training data.
    #[arg(long)]
    initial: PathBuf,
    /// New data for the update.
    #[arg(long)]
    new: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config_flags: ConfigFlags,
}

enum CliError {
    Config(ConfigError),
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
            CliError::Runtime(m) => m.clone(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(c) => CliError::Config(c),
            TrainError::NotReiterable => {
                CliError::Usage("batch mode requires re-iterable input".into())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

impl From<crate::checkpoint::CheckpointError> for CliError {
    fn from(e: crate::checkpoint::CheckpointError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::evalkit::EvalError> for CliError {
    fn from(e: crate::evalkit::EvalError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::theory::TheoryError> for CliError {
    fn from(e: crate::theory::TheoryError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Entry point used by `main`; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Testable entry point.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/version through this path.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Update(args) => cmd_update(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// KEY=VALUE config file, lowest-precedence layer above defaults.
fn apply_config_file(cfg: &mut TrainConfig, path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Config(ConfigError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })
    })?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| {
            CliError::Config(ConfigError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message,
            })
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err("expected KEY=VALUE".into()))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        fn parsed<T: std::str::FromStr>(
            value: &str,
            err: impl Fn(String) -> CliError,
        ) -> Result<T, CliError> {
            value
                .parse()
                .map_err(|_| err(format!("cannot parse {value:?}")))
        }
        match key.as_str() {
            "window" => cfg.window = parsed(value, parse_err)?,
            "negatives" => cfg.negatives = parsed(value, parse_err)?,
            "alpha" => cfg.smoothing = parsed(value, parse_err)?,
            "dim" => cfg.dim = parsed(value, parse_err)?,
            "max-vocab" => cfg.max_vocab = parsed(value, parse_err)?,
            "table-cap" => cfg.table_cap = parsed(value, parse_err)?,
            "learning-rate" => cfg.learning_rate = parsed(value, parse_err)?,
            "subsample" => cfg.subsample = parsed(value, parse_err)?,
            "batch-size" => cfg.minibatch = Some(parsed(value, parse_err)?),
            "seed" => cfg.seed = parsed(value, parse_err)?,
            other => return Err(parse_err(format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

fn resolve_config(flags: &ConfigFlags) -> Result<TrainConfig, CliError> {
    let mut cfg = if flags.paper_defaults {
        TrainConfig::paper_defaults()
    } else {
        TrainConfig::default()
    };
    if let Some(path) = &flags.config {
        apply_config_file(&mut cfg, path)?;
    }
    let f = flags;
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if let Some(v) = f.window {
        cfg.window = v;
    }
    if let Some(v) = f.negatives {
        cfg.negatives = v;
    }
    if let Some(v) = f.alpha {
        cfg.smoothing = v;
    }
    if let Some(v) = f.dim {
        cfg.dim = v;
    }
    if let Some(v) = f.max_vocab {
        cfg.max_vocab = v;
    }
    if let Some(v) = f.table_cap {
        cfg.table_cap = v;
    }
    if let Some(v) = f.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = f.subsample {
        cfg.subsample = v;
    }
    if let Some(v) = f.batch_size {
        cfg.minibatch = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_source(input: &str) -> TokenSource {
    if input == "-" {
        TokenSource::Stdin
    } else {
        TokenSource::file(input)
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: Option<&'a TrainConfig>,
    config_crc32: Option<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    wall_secs: f64,
    extra: serde_json::Value,
}

fn write_manifest(
    out: &Path,
    command: &str,
    seed: Option<u64>,
    config: Option<&TrainConfig>,
    inputs: &[String],
    outputs: &[String],
    wall_secs: f64,
    extra: serde_json::Value,
) -> Result<(), CliError> {
    let config_crc32 = config.map(|c| {
        let bytes = serde_json::to_vec(c).expect("config serializes");
        format!("{:08x}", crc32fast::hash(&bytes))
    });
    let manifest = RunManifest {
        tool: "isgns",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config,
        config_crc32,
        inputs: inputs.to_vec(),
        outputs: outputs.to_vec(),
        wall_secs,
        extra,
    };
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(PathBuf::from(path), json)?;
    Ok(())
}

fn write_report_csv(path: &Path, report: &TrainReport) -> Result<(), CliError> {
    let mut csv = String::from("pairs,mean_loss,tokens,wall_secs,vocab_size,table_len\n");
    for (pairs, loss) in &report.loss_trace {
        let _ = writeln!(
            csv,
            "{pairs},{loss},{},{},{},{}",
            report.tokens,
            report.wall.as_secs_f64(),
            report.vocab_size,
            report.table_len
        );
    }
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        report.pairs,
        report.mean_loss,
        report.tokens,
        report.wall.as_secs_f64(),
        report.vocab_size,
        report.table_len
    );
    fs::write(path, csv)?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = resolve_config(&args.config_flags)?;
    let mut source = open_source(&args.input);
    if args.mode == TrainMode::Batch && !source.is_reiterable() {
        return Err(CliError::Usage("batch mode requires re-iterable input".into()));
    }
    if args.mode == TrainMode::Minibatch && cfg.minibatch.is_none() {
        return Err(CliError::Usage(
            "minibatch mode requires --batch-size (or batch-size in the config file)".into(),
        ));
    }

    let (ckpt, report) = match args.mode {
        TrainMode::Incremental => trainer::train_incremental(&mut source, &cfg, None)?,
        TrainMode::Minibatch => trainer::train_minibatch(&mut source, &cfg, None)?,
        TrainMode::Batch => trainer::train_batch(&mut source, &cfg)?,
    };
    ckpt.save(&args.out)?;
    let mut outputs = vec![args.out.display().to_string()];
    if let Some(report_path) = &args.report {
        write_report_csv(report_path, &report)?;
        outputs.push(report_path.display().to_string());
    }
    eprintln!(
        "trained {} tokens, {} pairs, mean loss {:.4}, vocab {}, table {}",
        report.tokens, report.pairs, report.mean_loss, report.vocab_size, report.table_len
    );
    write_manifest(
        &args.out,
        "train",
        Some(cfg.seed),
        Some(&cfg),
        &[args.input.clone()],
        &outputs,
        started.elapsed().as_secs_f64(),
        serde_json::json!({ "mode": match args.mode {
            TrainMode::Incremental => "incremental",
            TrainMode::Minibatch => "minibatch",
            TrainMode::Batch => "batch",
        }}),
    )
}

fn cmd_update(args: UpdateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let f = &args.config_flags;
    if f.seed.is_some() {
        return Err(CliError::Usage(
            "--seed cannot change on update; the random streams continue from the checkpoint"
                .into(),
        ));
    }
    if f.paper_defaults || f.config.is_some() {
        return Err(CliError::Usage(
            "update takes its configuration from the checkpoint; only per-run flags may override"
                .into(),
        ));
    }
    let ckpt = Checkpoint::load(&args.resume)?;

    // Structural parameters must agree with the checkpoint; explicitly
    // passing a conflicting value is a configuration error.
    let mut cfg = ckpt.config.clone();
    fn structural<T: PartialEq + std::fmt::Display + Copy>(
        field: &'static str,
        flag: Option<T>,
        ckpt_value: T,
    ) -> Result<(), CliError> {
        if let Some(v) = flag {
            if v != ckpt_value {
                return Err(CliError::Config(ConfigError::Mismatch {
                    field,
                    checkpoint: ckpt_value.to_string(),
                    requested: v.to_string(),
                }));
            }
        }
        Ok(())
    }
    structural("dim", f.dim, cfg.dim)?;
    structural("max-vocab", f.max_vocab, cfg.max_vocab)?;
    structural("table-cap", f.table_cap, cfg.table_cap)?;
    structural("alpha", f.alpha, cfg.smoothing)?;
    if let Some(v) = f.window {
        cfg.window = v;
    }
    if let Some(v) = f.negatives {
        cfg.negatives = v;
    }
    if let Some(v) = f.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = f.subsample {
        cfg.subsample = v;
    }
    if let Some(v) = f.batch_size {
        cfg.minibatch = Some(v);
    }
    cfg.validate()?;

    let mut source = open_source(&args.input);
    let (updated, report) = trainer::train_incremental(&mut source, &cfg, Some(ckpt))?;
    updated.save(&args.out)?;
    let mut outputs = vec![args.out.display().to_string()];
    if let Some(report_path) = &args.report {
        write_report_csv(report_path, &report)?;
        outputs.push(report_path.display().to_string());
    }
    eprintln!(
        "updated on {} new tokens ({} pairs), vocab {}",
        report.tokens, report.pairs, report.vocab_size
    );
    write_manifest(
        &args.out,
        "update",
        Some(cfg.seed),
        Some(&cfg),
        &[args.resume.display().to_string(), args.input.clone()],
        &outputs,
        started.elapsed().as_secs_f64(),
        serde_json::Value::Null,
    )
}

fn parse_suite_arg(raw: &str) -> Result<(String, PathBuf), CliError> {
    raw.split_once('=')
        .map(|(name, path)| (name.to_owned(), PathBuf::from(path)))
        .ok_or_else(|| CliError::Usage(format!("expected NAME=PATH, got {raw:?}")))
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if args.similarity.is_empty() && args.analogy.is_empty() {
        return Err(CliError::Usage(
            "pass at least one --similarity NAME=PATH or --analogy NAME=PATH".into(),
        ));
    }
    let a = Checkpoint::load(&args.model_a)?;
    let b = Checkpoint::load(&args.model_b)?;
    let mut suites = Vec::new();
    let mut inputs = vec![
        args.model_a.display().to_string(),
        args.model_b.display().to_string(),
    ];
    for raw in &args.similarity {
        let (name, path) = parse_suite_arg(raw)?;
        inputs.push(path.display().to_string());
        suites.push(EvalSuite::Similarity {
            name,
            data: SimilarityDataset::load(&path)?,
        });
    }
    for raw in &args.analogy {
        let (name, path) = parse_suite_arg(raw)?;
        inputs.push(path.display().to_string());
        suites.push(EvalSuite::Analogy {
            name,
            data: AnalogyDataset::load(&path)?,
        });
    }

    let rows = evalkit::compare_models(&a, &b, &suites)?;
    let mut csv = String::from("suite,metric,model_a,model_b,delta,coverage_a,coverage_b\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.suite, r.metric, r.value_a, r.value_b, r.delta, r.coverage_a, r.coverage_b
        );
    }
    fs::write(&args.out, csv)?;
    write_manifest(
        &args.out,
        "eval",
        None,
        None,
        &inputs,
        &[args.out.display().to_string()],
        started.elapsed().as_secs_f64(),
        serde_json::Value::Null,
    )
}

fn cmd_theory(args: TheoryArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if args.n_grid.is_empty() {
        return Err(CliError::Usage("--n-grid must list at least one size".into()));
    }
    let mut inputs = Vec::new();
    let source = match &args.corpus {
        Some(path) => {
            inputs.push(path.display().to_string());
            load_resample_source(path, args.vocab_size)?
        }
        None => {
            let probs: Vec<f64> = match args.dist {
                TheoryDist::Uniform => {
                    vec![1.0 / args.vocab_size as f64; args.vocab_size]
                }
                TheoryDist::Zipf => {
                    let raw: Vec<f64> =
                        (0..args.vocab_size).map(|w| 1.0 / (w + 1) as f64).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(|p| p / total).collect()
                }
            };
            StationarySource::iid(probs)?
        }
    };

    let mut theta_rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed ^ 0x7465_6874);
    let model = theory::random_theta(source.vocab_size(), args.dim, &mut theta_rng);
    let cfg = theory::ObjectiveConfig {
        window: args.window,
        negatives: args.negatives,
        smoothing: args.alpha,
    };
    let mode = match args.mode {
        TheoryMode::Incremental => MomentMode::Incremental,
        TheoryMode::Minibatch => MomentMode::Minibatch(args.batch_size),
    };
    let estimates = theory::estimate_moments(
        &source,
        &model,
        &cfg,
        &args.n_grid,
        args.replicates,
        mode,
        args.seed,
    )?;

    let fit_points: Vec<(f64, f64)> = estimates
        .iter()
        .map(|e| (e.n as f64, e.mean_sq))
        .collect();
    let fit = theory::fit_log_over_x(&fit_points).ok();

    let mut csv =
        String::from("n,mean_dL,se_dL,mean_dL2,se_dL2,theory_dL,fit_a,fit_residual\n");
    for (i, e) in estimates.iter().enumerate() {
        let theory_col = e.theory_mean.map_or(String::new(), |t| t.to_string());
        let (fit_a, fit_res) = match &fit {
            Some(f) => (f.scale.to_string(), f.residuals[i].to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            e.n, e.mean, e.se_mean, e.mean_sq, e.se_mean_sq, theory_col, fit_a, fit_res
        );
    }
    fs::write(&args.out, csv)?;
    write_manifest(
        &args.out,
        "theory",
        Some(args.seed),
        None,
        &inputs,
        &[args.out.display().to_string()],
        started.elapsed().as_secs_f64(),
        serde_json::json!({
            "n_grid": args.n_grid,
            "replicates": args.replicates,
            "vocab_size": source.vocab_size(),
            "alpha": args.alpha,
            "window": args.window,
            "negatives": args.negatives,
            "dim": args.dim,
            "mode": match mode {
                MomentMode::Incremental => "incremental".to_string(),
                MomentMode::Minibatch(m) => format!("minibatch({m})"),
            },
        }),
    )
}

/// Reads a corpus for sentence resampling: words ranked by frequency get ids
/// 0..vocab_size-1 and everything rarer maps to one sentinel id, keeping the
/// vocabulary of the harness bounded.
fn load_resample_source(path: &Path, vocab_size: usize) -> Result<StationarySource, CliError> {
    use std::collections::HashMap;
    let text = fs::read_to_string(path)?;
    let mut counts: HashMap<&str, (u64, u64)> = HashMap::new();
    let mut order = 0u64;
    for line in text.lines() {
        for token in line.split_whitespace() {
            counts.entry(token).and_modify(|e| e.0 += 1).or_insert_with(|| {
                order += 1;
                (1, order)
            });
        }
    }
    if counts.is_empty() {
        return Err(CliError::Usage(format!(
            "corpus {} contains no tokens",
            path.display()
        )));
    }
    let mut ranked: Vec<(&str, u64, u64)> =
        counts.iter().map(|(w, &(c, o))| (*w, c, o)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let sentinel = (vocab_size - 1).min(ranked.len().saturating_sub(1));
    let ids: HashMap<&str, u32> = ranked
        .iter()
        .enumerate()
        .map(|(rank, &(w, _, _))| (w, rank.min(sentinel) as u32))
        .collect();
    let sentences: Vec<Vec<u32>> = text
        .lines()
        .map(|line| line.split_whitespace().map(|t| ids[t]).collect())
        .filter(|s: &Vec<u32>| !s.is_empty())
        .collect();
    Ok(StationarySource::resample(sentences, sentinel + 1))
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = resolve_config(&args.config_flags)?;
    let initial = TokenSource::file(&args.initial);
    let new = TokenSource::file(&args.new);
    let timing = trainer::measure_update(&initial, &new, &cfg)?;
    let mut csv = String::from(
        "initial_tokens,new_tokens,incremental_update_secs,batch_retrain_secs,speedup\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        timing.initial_tokens,
        timing.new_tokens,
        timing.incremental_update_secs,
        timing.batch_retrain_secs,
        timing.speedup
    );
    fs::write(&args.out, csv)?;
    eprintln!(
        "incremental update {:.3}s vs batch retrain {:.3}s ({:.1}x)",
        timing.incremental_update_secs, timing.batch_retrain_secs, timing.speedup
    );
    write_manifest(
        &args.out,
        "bench",
        Some(cfg.seed),
        Some(&cfg),
        &[
            args.initial.display().to_string(),
            args.new.display().to_string(),
        ],
        &[args.out.display().to_string()],
        started.elapsed().as_secs_f64(),
        serde_json::Value::Null,
    )
}
