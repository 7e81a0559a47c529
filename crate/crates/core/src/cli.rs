//! The `milboost` command line.
//!
//! Every subcommand reads its settings from flags, falling back to the
//! matching table of an optional TOML file given with `--config`:
//!
//! ```toml
//! [synth]
//! regime = "homogeneous_dependent"
//! num_bags = 200
//!
//! [train]
//! booster = "adaboost_star"
//! nu = 0.05
//! ```
//!
//! Exit codes: 0 on success, 2 when arguments, files or datasets fail
//! validation, 1 when a run fails afterwards. Errors are printed as one line
//! `milboost: error: <kind>: <message>` on stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::boost::{adaboost, adaboost_star, BoostConfig, Ensemble};
use crate::complexity::{growth_table, run_lab, write_results_csv, InstanceClassKind, LabConfig};
use crate::data::{BagFunction, Label, MilDataset};
use crate::error::MilError;
use crate::hypothesis::InstanceHypothesis;
use crate::io::{load_dataset, save_dataset, DatasetFormat};
use crate::milearn::{LiftMode, MilearnConfig};
use crate::oracle::OracleKind;
use crate::synth::{generate_synthetic, BagSizes, Regime, SynthSpec};

#[derive(Debug, Parser)]
#[command(
    name = "milboost",
    version,
    about = "Multiple-instance boosting toolkit"
)]
pub struct Cli {
    /// Worker threads (0 picks the number of cores).
    #[arg(long, global = true, env = "MILBOOST_THREADS")]
    pub threads: Option<usize>,
    /// TOML file with one table per subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Boost bag hypotheses on a dataset.
    Train(TrainArgs),
    /// Report error and margin statistics of a model on a dataset.
    Eval(EvalArgs),
    /// Write per-bag scores and labels.
    Predict(EvalArgs),
    /// Measure VC, covering and fat-shattering numbers.
    Complexity(ComplexityArgs),
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// homogeneous_independent | homogeneous_dependent | heterogeneous_dependent
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub max_bag_size: Option<usize>,
    #[arg(long)]
    pub num_bags: Option<usize>,
    #[arg(long)]
    pub positive_rate: Option<f64>,
    /// Target stump feature.
    #[arg(long)]
    pub target_feature: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub target_threshold: Option<f64>,
    /// 1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub target_polarity: Option<i64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// fixed | uniform
    #[arg(long)]
    pub bag_sizes: Option<String>,
    /// jsonl | csv (default: from the output extension)
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SynthArgs {
    fn merge(&mut self, file: SynthArgs) {
        merge_fields!(self, file; regime, dimension, max_bag_size, num_bags, positive_rate,
            target_feature, target_threshold, target_polarity, noise, seed, bag_sizes, format, out);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// jsonl | csv (default: from the extension)
    #[arg(long)]
    pub format: Option<String>,
    /// max | avg | pnorm:<p>
    #[arg(long)]
    pub psi: Option<String>,
    /// agnostic | one_sided
    #[arg(long)]
    pub oracle: Option<String>,
    /// per_instance | per_bag
    #[arg(long)]
    pub mode: Option<String>,
    /// adaboost | adaboost_star
    #[arg(long)]
    pub booster: Option<String>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

impl TrainArgs {
    fn merge(&mut self, file: TrainArgs) {
        merge_fields!(self, file; data, format, psi, oracle, mode, booster, rounds, nu, model_out, trace_out);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    fn merge(&mut self, file: EvalArgs) {
        merge_fields!(self, file; model, data, format, out);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityArgs {
    /// Comma-separated increasing bag sizes.
    #[arg(long, value_delimiter = ',')]
    pub rs: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub instance_pool: Option<usize>,
    #[arg(long)]
    pub fresh_bags: Option<usize>,
    #[arg(long)]
    pub vc_cap: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub cover_eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub fat_gammas: Option<Vec<f64>>,
    #[arg(long)]
    pub fat_pool: Option<usize>,
    #[arg(long)]
    pub fat_cap: Option<usize>,
    /// Results CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the interval growth table here.
    #[arg(long)]
    pub growth_out: Option<PathBuf>,
}

impl ComplexityArgs {
    fn merge(&mut self, file: ComplexityArgs) {
        merge_fields!(self, file; rs, seed, instance_pool, fresh_bags, vc_cap, cover_eps,
            fat_gammas, fat_pool, fat_cap, out, growth_out);
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    threads: Option<usize>,
    synth: Option<SynthArgs>,
    train: Option<TrainArgs>,
    eval: Option<EvalArgs>,
    predict: Option<EvalArgs>,
    complexity: Option<ComplexityArgs>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Runtime,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage | ErrorKind::Validation => 2,
            ErrorKind::Runtime => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Validation => "validation",
            ErrorKind::Runtime => "runtime",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn validation(message: impl std::fmt::Display) -> CliError {
        CliError {
            kind: ErrorKind::Validation,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl std::fmt::Display) -> CliError {
        CliError {
            kind: ErrorKind::Runtime,
            message: message.to_string(),
        }
    }

    /// The single stderr line, newlines folded into spaces.
    pub fn line(&self) -> String {
        let msg = self
            .message
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        format!("milboost: error: {}: {}", self.kind.name(), msg)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_enum<T: FromStr<Err = MilError>>(value: Option<&str>, default: &str) -> CliResult<T> {
    value
        .unwrap_or(default)
        .parse()
        .map_err(CliError::validation)
}

fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::validation(format!("missing required option --{flag}")))
}

fn dataset_format(format: Option<&str>, path: &Path) -> CliResult<DatasetFormat> {
    match format {
        Some(f) => f.parse().map_err(CliError::validation),
        None => Ok(DatasetFormat::from_path(path)),
    }
}

fn read_dataset(path: &Path, format: Option<&str>) -> CliResult<MilDataset> {
    let format = dataset_format(format, path)?;
    load_dataset(path, format).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> CliResult<Ensemble> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ensemble::from_json(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))
        }
        None => io::stdout().write_all(bytes).map_err(CliError::runtime),
    }
}

fn run_synth(args: SynthArgs) -> CliResult<()> {
    let regime: Regime = parse_enum(args.regime.as_deref(), "homogeneous_independent")?;
    let bag_sizes: BagSizes = parse_enum(args.bag_sizes.as_deref(), "fixed")?;
    let out = require(args.out, "out")?;
    let format = dataset_format(args.format.as_deref(), &out)?;
    let polarity =
        Label::try_from(args.target_polarity.unwrap_or(1)).map_err(CliError::validation)?;
    let spec = SynthSpec {
        dimension: args.dimension.unwrap_or(2),
        max_bag_size: args.max_bag_size.unwrap_or(4),
        num_bags: args.num_bags.unwrap_or(100),
        positive_rate: args.positive_rate.unwrap_or(0.5),
        target: InstanceHypothesis::stump(
            args.target_feature.unwrap_or(0),
            args.target_threshold.unwrap_or(0.0),
            polarity,
        ),
        noise: args.noise.unwrap_or(0.0),
        seed: args.seed.unwrap_or(0),
        bag_sizes,
    };
    spec.validate().map_err(CliError::validation)?;
    let dataset = generate_synthetic(regime, &spec).map_err(CliError::runtime)?;
    save_dataset(&dataset, &out, format)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Booster {
    AdaBoost,
    AdaBoostStar,
}

impl FromStr for Booster {
    type Err = MilError;

    fn from_str(s: &str) -> crate::Result<Booster> {
        match s {
            "adaboost" => Ok(Booster::AdaBoost),
            "adaboost_star" => Ok(Booster::AdaBoostStar),
            _ => Err(MilError::invalid(format!(
                "unknown booster {s:?} (expected adaboost or adaboost_star)"
            ))),
        }
    }
}

fn run_train(args: TrainArgs) -> CliResult<()> {
    let psi: BagFunction = parse_enum(args.psi.as_deref(), "max")?;
    let oracle: OracleKind = parse_enum(args.oracle.as_deref(), "agnostic")?;
    let mode: LiftMode = parse_enum(args.mode.as_deref(), "per_instance")?;
    let booster: Booster = parse_enum(args.booster.as_deref(), "adaboost")?;
    let rounds = args.rounds.unwrap_or(100);
    if rounds == 0 {
        return Err(CliError::validation("--rounds must be at least 1"));
    }
    let nu = args.nu.unwrap_or(0.05);
    if booster == Booster::AdaBoostStar && !(nu > 0.0 && nu < 1.0) {
        return Err(CliError::validation(format!(
            "--nu must lie in (0, 1), got {nu}"
        )));
    }
    let data = require(args.data, "data")?;
    let model_out = require(args.model_out, "model-out")?;
    let dataset = read_dataset(&data, args.format.as_deref())?;

    let learner = MilearnConfig { psi, oracle, mode };
    let config = BoostConfig::new(rounds, psi);
    let (ensemble, trace) = match booster {
        Booster::AdaBoost => adaboost(dataset.bags(), &learner, &config),
        Booster::AdaBoostStar => adaboost_star(dataset.bags(), &learner, &config, nu),
    }
    .map_err(CliError::runtime)?;
    log::info!(
        "trained {} rounds, stop: {:?}",
        trace.rounds.len(),
        trace.stop
    );

    let json = ensemble.to_json().map_err(CliError::runtime)?;
    write_output(Some(&model_out), json.as_bytes())?;
    if let Some(path) = args.trace_out {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).map_err(CliError::runtime)?;
        write_output(Some(&path), &buf)?;
    }
    Ok(())
}

fn load_model_and_data(args: &EvalArgs) -> CliResult<(Ensemble, MilDataset)> {
    let model_path = require(args.model.as_deref(), "model")?;
    let data_path = require(args.data.as_deref(), "data")?;
    let model = read_model(model_path)?;
    let dataset = read_dataset(data_path, args.format.as_deref())?;
    if model.is_empty() {
        return Err(CliError::validation(MilError::Untrained));
    }
    model.check_dimension(dataset.dimension()).map_err(|e| {
        CliError::validation(format!(
            "model does not fit dataset of dimension {}: {e}",
            dataset.dimension()
        ))
    })?;
    Ok((model, dataset))
}

#[derive(Debug, Serialize)]
struct PerClassError {
    positive: Option<f64>,
    negative: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    bag_error: f64,
    per_class_error: PerClassError,
    min_margin: f64,
    mean_margin: f64,
    rounds: usize,
}

fn run_eval(args: EvalArgs) -> CliResult<()> {
    let (model, dataset) = load_model_and_data(&args)?;
    let bags = dataset.bags();
    let mut wrong = [0usize; 2];
    let mut count = [0usize; 2];
    for bag in bags {
        let class = usize::from(bag.label.is_positive());
        count[class] += 1;
        if model.predict(bag).map_err(CliError::runtime)? != bag.label {
            wrong[class] += 1;
        }
    }
    let margins = model.margins(bags).map_err(CliError::runtime)?;
    let rate = |w: usize, c: usize| (c > 0).then(|| w as f64 / c as f64);
    let report = EvalReport {
        bag_error: (wrong[0] + wrong[1]) as f64 / bags.len() as f64,
        per_class_error: PerClassError {
            positive: rate(wrong[1], count[1]),
            negative: rate(wrong[0], count[0]),
        },
        min_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        mean_margin: margins.iter().sum::<f64>() / margins.len() as f64,
        rounds: model.len(),
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(CliError::runtime)?;
    json.push('\n');
    write_output(args.out.as_deref(), json.as_bytes())
}

fn run_predict(args: EvalArgs) -> CliResult<()> {
    let (model, dataset) = load_model_and_data(&args)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::runtime(e);
    wtr.write_record(["bag_id", "score", "label"])
        .map_err(csv_err)?;
    for bag in dataset.bags() {
        let score = model.normalized_score(bag).map_err(CliError::runtime)?;
        let label = model.predict(bag).map_err(CliError::runtime)?;
        wtr.write_record([bag.id.as_str(), &format!("{score:?}"), &label.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_output(args.out.as_deref(), &bytes)
}

fn run_complexity(args: ComplexityArgs) -> CliResult<()> {
    let defaults = LabConfig::default();
    let config = LabConfig {
        rs: args.rs.unwrap_or(defaults.rs),
        seed: args.seed.unwrap_or(defaults.seed),
        instance_pool: args.instance_pool.unwrap_or(defaults.instance_pool),
        fresh_bags: args.fresh_bags.unwrap_or(defaults.fresh_bags),
        vc_cap: args.vc_cap.unwrap_or(defaults.vc_cap),
        cover_eps: args.cover_eps.unwrap_or(defaults.cover_eps),
        fat_gammas: args.fat_gammas.unwrap_or(defaults.fat_gammas),
        fat_pool: args.fat_pool.unwrap_or(defaults.fat_pool),
        fat_cap: args.fat_cap.unwrap_or(defaults.fat_cap),
    };
    config.validate().map_err(CliError::validation)?;
    let rows = run_lab(&config).map_err(CliError::runtime)?;
    let mut buf = Vec::new();
    write_results_csv(&rows, &mut buf).map_err(CliError::runtime)?;
    write_output(args.out.as_deref(), &buf)?;
    if let Some(path) = args.growth_out {
        let table =
            growth_table(InstanceClassKind::Interval, &config).map_err(CliError::runtime)?;
        write_output(Some(&path), format!("{table}\n").as_bytes())?;
    }
    Ok(())
}

fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e.message())))
}

fn init_threads(threads: usize) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(CliError::runtime)
}

/// Parses arguments and runs the selected command.
pub fn run<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError {
                kind: ErrorKind::Usage,
                message: first.trim_start_matches("error: ").to_string(),
            });
        }
    };
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    if let Some(threads) = cli.threads.or(file.threads) {
        init_threads(threads)?;
    }
    match cli.command {
        Command::Synth(mut a) => {
            a.merge(file.synth.unwrap_or_default());
            run_synth(a)
        }
        Command::Train(mut a) => {
            a.merge(file.train.unwrap_or_default());
            run_train(a)
        }
        Command::Eval(mut a) => {
            a.merge(file.eval.unwrap_or_default());
            run_eval(a)
        }
        Command::Predict(mut a) => {
            a.merge(file.predict.unwrap_or_default());
            run_predict(a)
        }
        Command::Complexity(mut a) => {
            a.merge(file.complexity.unwrap_or_default());
            run_complexity(a)
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.kind.exit_code()
        }
    }
}
