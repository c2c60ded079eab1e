//! Command-line driver behind the `corcondia` binary.
//!
//! The `experiment` subcommand also reads a line-oriented `key=value` config file whose keys
//! are the long flag names (`rank=3`, `ratios=0.5,0.2`, `samples-tucker=10`, ...); flags given
//! on the command line win over the file. `CORCONDIA_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::compress::{build_operator, compress, ratio_to_dims, RatioSpec, Scheme};
use crate::corcondia::corcondia_sweep;
use crate::decomp::{cp_als, tucker3, FitConfig};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, ExperimentConfig, ExperimentResult};
use crate::io::{read_tensor_with_dims, write_atomic, write_tensor};
use crate::synth::{synth_tensor, FactorDistribution, SynthSpec};
use crate::tensor::{DenseTensor3, Dims, Mode};

pub const THREADS_ENV: &str = "CORCONDIA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "corcondia", version, about = "Core consistency of compressed 3-mode tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic rank-R tensor with additive Gaussian noise.
    Synth(SynthArgs),
    /// Fit PARAFAC (--rank) or TUCKER3 (--tucker-dims) and emit the factors as JSON.
    Decompose(DecomposeArgs),
    /// Print the diagnostic for a list of component counts.
    Corcondia(CorcondiaArgs),
    /// Compress a tensor with a Gaussian, Orthonormal or Tucker operator.
    Compress(CompressArgs),
    /// Run the Monte Carlo compression experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Tensor file (TNS3 binary, text, or CSV triplets).
    #[arg(long)]
    input: PathBuf,
    /// Dimensions of a CSV triplet input.
    #[arg(long, num_args = 3, value_names = ["I", "J", "K"])]
    csv_dims: Option<Vec<usize>>,
}

impl InputArgs {
    fn load(&self) -> Result<DenseTensor3> {
        read_tensor_with_dims(&self.input, self.csv_dims.as_deref().map(dims_from_slice).transpose()?)
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Stop when the fit changes by less than this between sweeps.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
}

impl FitArgs {
    fn config(&self, seed: u64) -> FitConfig {
        let d = FitConfig::default();
        FitConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            rel_tolerance: self.tolerance.unwrap_or(d.rel_tolerance),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, num_args = 3, value_names = ["I", "J", "K"], required = true)]
    dims: Vec<usize>,
    #[arg(long)]
    rank: usize,
    /// Relative Frobenius norm of the additive noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Factor entry distribution: gaussian or uniform.
    #[arg(long, default_value = "gaussian")]
    distribution: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, conflicts_with = "tucker_dims", required_unless_present = "tucker_dims")]
    rank: Option<usize>,
    #[arg(long, num_args = 3, value_names = ["P", "Q", "R"])]
    tucker_dims: Option<Vec<usize>>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorcondiaArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CompressArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    ratio: f64,
    /// Modes to compress.
    #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [1, 2])]
    modes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// key=value file mirroring these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, num_args = 3, value_names = ["I", "J", "K"])]
    csv_dims: Option<Vec<usize>>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    samples_gaussian: Option<usize>,
    #[arg(long)]
    samples_orthonormal: Option<usize>,
    #[arg(long)]
    samples_tucker: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command and returns the exit code:
/// 0 on success, 2 for usage and configuration errors, 1 for anything else.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match thread_count() {
        Ok(Some(n)) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(|| execute(cli.command))),
        Ok(None) => execute(cli.command),
        Err(e) => Err(e),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Shape(_) | Error::InvalidMode(_) => 2,
        Error::AtRank { source, .. } => exit_code(source),
        _ => 1,
    }
}

fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => synth(args),
        Command::Decompose(args) => decompose(args),
        Command::Corcondia(args) => corcondia_table(args),
        Command::Compress(args) => compress_cmd(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn dims_from_slice(d: &[usize]) -> Result<Dims> {
    match d {
        &[i, j, k] => Ok(Dims(i, j, k)),
        _ => Err(Error::Config(format!("expected three dims, got {d:?}"))),
    }
}

fn parse_modes(modes: &[usize]) -> Result<Vec<Mode>> {
    let mut out: Vec<Mode> = modes.iter().map(|&m| Mode::try_from(m)).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        dims: dims_from_slice(&args.dims)?,
        rank: args.rank,
        noise_level: args.noise,
        factor_distribution: args.distribution.parse::<FactorDistribution>()?,
        seed: args.seed,
    };
    let x = synth_tensor(&spec)?;
    write_tensor(&x, &args.out)?;
    println!("wrote {} tensor to {}", x.dims(), args.out.display());
    Ok(())
}

fn emit_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn decompose(args: DecomposeArgs) -> Result<()> {
    let x = args.input.load()?;
    let cfg = args.fit.config(args.seed);
    match (args.rank, args.tucker_dims) {
        (Some(rank), _) => emit_json(&cp_als(&x, rank, &cfg)?, args.out.as_deref()),
        (None, Some(dims)) => emit_json(&tucker3(&x, dims_from_slice(&dims)?, &cfg)?, args.out.as_deref()),
        (None, None) => Err(Error::Config("either --rank or --tucker-dims is required".into())),
    }
}

fn corcondia_table(args: CorcondiaArgs) -> Result<()> {
    let x = args.input.load()?;
    let reports = corcondia_sweep(&x, &args.ranks, &args.fit.config(args.seed))?;
    let mut out = String::from("rank\tcorcondia\tfit\n");
    for r in &reports {
        let _ = writeln!(out, "{}\t{:.6}\t{:.6}", r.rank, r.value, r.fit.unwrap_or(f64::NAN));
    }
    print!("{out}");
    Ok(())
}

fn compress_cmd(args: CompressArgs) -> Result<()> {
    let x = args.input.load()?;
    let scheme: Scheme = args.scheme.parse()?;
    let spec = RatioSpec {
        ratio: args.ratio,
        compressed_modes: parse_modes(&args.modes)?,
    };
    let target = ratio_to_dims(x.dims(), &spec)?;
    let op = build_operator(scheme, &x, target, args.seed, &args.fit.config(args.seed))?;
    let y = compress(&x, &op)?;
    write_tensor(&y, &args.out)?;
    println!("wrote {} tensor to {}", y.dims(), args.out.display());
    Ok(())
}

/// `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", n + 1)))?;
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 15] = [
    "input",
    "csv-dims",
    "rank",
    "schemes",
    "ratios",
    "samples-gaussian",
    "samples-orthonormal",
    "samples-tucker",
    "modes",
    "seed",
    "max-iterations",
    "tolerance",
    "restarts",
    "out-json",
    "out-csv",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse '{value}' for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Fills every flag the user left unset from the config file.
fn merge_config(mut args: ExperimentArgs, file: &BTreeMap<String, String>) -> Result<ExperimentArgs> {
    if let Some(unknown) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown config key '{unknown}'")));
    }
    macro_rules! fill {
        ($field:expr, $key:literal, scalar) => {
            if $field.is_none() {
                if let Some(v) = file.get($key) {
                    $field = Some(parse_value($key, v)?);
                }
            }
        };
        ($field:expr, $key:literal, list) => {
            if $field.is_none() {
                if let Some(v) = file.get($key) {
                    $field = Some(parse_list($key, v)?);
                }
            }
        };
    }
    fill!(args.input, "input", scalar);
    fill!(args.csv_dims, "csv-dims", list);
    fill!(args.rank, "rank", scalar);
    fill!(args.schemes, "schemes", list);
    fill!(args.ratios, "ratios", list);
    fill!(args.samples_gaussian, "samples-gaussian", scalar);
    fill!(args.samples_orthonormal, "samples-orthonormal", scalar);
    fill!(args.samples_tucker, "samples-tucker", scalar);
    fill!(args.modes, "modes", list);
    fill!(args.seed, "seed", scalar);
    fill!(args.fit.max_iterations, "max-iterations", scalar);
    fill!(args.fit.tolerance, "tolerance", scalar);
    fill!(args.fit.restarts, "restarts", scalar);
    fill!(args.out_json, "out-json", scalar);
    fill!(args.out_csv, "out-csv", scalar);
    Ok(args)
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let d = ExperimentConfig::default();
    let schemes = match &args.schemes {
        Some(list) => list.iter().map(|s| s.parse::<Scheme>()).collect::<Result<Vec<_>>>()?,
        None => d.schemes.clone(),
    };
    let mut samples_per_cell = d.samples_per_cell.clone();
    for (scheme, n) in [
        (Scheme::Gaussian, args.samples_gaussian),
        (Scheme::Orthonormal, args.samples_orthonormal),
        (Scheme::Tucker, args.samples_tucker),
    ] {
        if let Some(n) = n {
            samples_per_cell.insert(scheme, n);
        }
    }
    let seed = args.seed.unwrap_or(d.master_seed);
    Ok(ExperimentConfig {
        rank: args.rank.unwrap_or(d.rank),
        schemes,
        ratios: args.ratios.clone().unwrap_or(d.ratios),
        samples_per_cell,
        compressed_modes: match &args.modes {
            Some(m) => parse_modes(m)?,
            None => d.compressed_modes,
        },
        master_seed: seed,
        fit: args.fit.config(seed),
    })
}

#[derive(Serialize)]
struct Timing {
    elapsed_seconds: f64,
}

#[derive(Serialize)]
struct ExperimentOutput<'a> {
    #[serde(flatten)]
    result: &'a ExperimentResult,
    timing: Timing,
}

/// Per-cell boxplot statistics, one row per (scheme, ratio).
pub fn stats_csv(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Validation(format!("csv encoding failed: {e}"));
    w.write_record([
        "scheme",
        "ratio",
        "n",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "lower_whisker",
        "upper_whisker",
        "n_outliers",
        "smoothed_mean",
    ])
    .map_err(csv_err)?;
    for cell in &result.cells {
        let s = &cell.stats;
        w.write_record(&[
            cell.scheme.name().to_string(),
            cell.ratio.to_string(),
            s.n.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
            s.lower_whisker.to_string(),
            s.upper_whisker.to_string(),
            s.outliers.len().to_string(),
            s.smoothed_mean.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let args = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            merge_config(args, &parse_config_file(&text)?)?
        }
        None => args,
    };
    let input = args
        .input
        .clone()
        .ok_or_else(|| Error::Config("an input tensor is required (--input or input=)".into()))?;
    let csv_dims = args.csv_dims.as_deref().map(dims_from_slice).transpose()?;
    let cfg = experiment_config(&args)?;
    let x = read_tensor_with_dims(&input, csv_dims)?;
    cfg.validate(x.dims())?;

    let started = Instant::now();
    let result = run_experiment(&x, &cfg)?;
    let timing = Timing {
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };

    emit_json(
        &ExperimentOutput {
            result: &result,
            timing,
        },
        args.out_json.as_deref(),
    )?;
    let table = stats_csv(&result)?;
    match &args.out_csv {
        Some(path) => write_atomic(path, table.as_bytes())?,
        None if args.out_json.is_some() => print!("{table}"),
        None => eprint!("{table}"),
    }
    Ok(())
}
