//! The `ewig` command line.
//!
//! Every subcommand resolves its settings from three layers, strongest first:
//! command-line flags, the JSON file given by `--config`, and built-in
//! defaults (`EW_SEED` supplies the base seed when neither flag nor file
//! does). All settings are validated before any computation starts, and
//! output files are written only after every result is in memory.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 I/O failure,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::moment_oracle::{fluctuation_scan, mc_trace_moments};
use crate::partitions::{check_budget, count_s_and_star, enumerate_pair_partitions, CONSISTENT_BUDGET};
use crate::process::{CovarianceModel, ProcessSpec};
use crate::spectra::{semicircle_cdf, semicircle_density, semicircle_moment, Histogram};

pub const SEED_ENV: &str = "EW_SEED";

#[derive(Debug, Parser)]
#[command(name = "ewig", version, about = "Semicircle-law experiments for matrices with stationary diagonals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample matrices, write per-trial spectral statistics and a pooled histogram.
    Simulate(RunArgs),
    /// Count consistent and star-consistent sequences for every pair partition.
    Partitions(RunArgs),
    /// Exact (Gaussian) versus Monte Carlo expected trace moments.
    Oracle(RunArgs),
    /// Fourth central moment of tr(X^k) across an n-grid, with log-log slope.
    Fluctuation(RunArgs),
    /// Tabulate the semicircle density, CDF and moments.
    Semicircle(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Process kind: iid_gaussian, iid_rademacher, ar1, markov_two_state, equicorrelated.
    #[arg(long)]
    pub spec: Option<String>,
    /// Process parameter (phi, stay_prob or rho).
    #[arg(long)]
    pub param: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated matrix sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Comma-separated moment orders (for `semicircle`: the largest order).
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bins (`simulate`) or grid points (`semicircle`).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    #[default]
    None,
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Option<Vec<T>> {
        match self {
            OneOrMany::None => None,
            OneOrMany::One(x) => Some(vec![x]),
            OneOrMany::Many(v) => Some(v),
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    spec: Option<ProcessSpec>,
    n: Option<usize>,
    #[serde(default)]
    n_grid: OneOrMany<usize>,
    #[serde(default)]
    k: OneOrMany<u32>,
    trials: Option<usize>,
    seed: Option<u64>,
    bins: Option<usize>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProcessSpec,
    pub n_grid: Vec<usize>,
    pub k_list: Vec<u32>,
    pub trials: usize,
    pub base_seed: u64,
    pub bins: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

/// Subcommand-specific defaults applied when neither flag nor file sets a value.
struct Defaults {
    n_grid: &'static [usize],
    k_list: &'static [u32],
    trials: usize,
    bins: usize,
}

fn defaults(command: &Command) -> Defaults {
    match command {
        Command::Simulate(_) => Defaults { n_grid: &[256], k_list: &[4], trials: 1, bins: 50 },
        Command::Partitions(_) => Defaults { n_grid: &[10, 20, 40], k_list: &[4], trials: 1, bins: 0 },
        Command::Oracle(_) => Defaults { n_grid: &[16], k_list: &[2, 4], trials: 1000, bins: 0 },
        Command::Fluctuation(_) => {
            Defaults { n_grid: &[64, 128, 256, 512], k_list: &[2, 4], trials: 400, bins: 0 }
        }
        Command::Semicircle(_) => Defaults { n_grid: &[1], k_list: &[10], trials: 1, bins: 401 },
    }
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a)
            | Command::Partitions(a)
            | Command::Oracle(a)
            | Command::Fluctuation(a)
            | Command::Semicircle(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Partitions(_) => "partitions",
            Command::Oracle(_) => "oracle",
            Command::Fluctuation(_) => "fluctuation",
            Command::Semicircle(_) => "semicircle",
        }
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Merges flags, config file, `EW_SEED` and defaults, then validates.
pub fn resolve(command: &Command, env_seed: Option<&str>) -> Result<RunConfig> {
    let args = command.args();
    let file = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let d = defaults(command);

    let spec = match (&args.spec, args.param) {
        (Some(kind), param) => ProcessSpec::from_kind_param(kind, param)?,
        (None, Some(param)) => {
            // --param alone re-parameterizes the file's process kind
            let kind = file
                .spec
                .map(|s| s.kind_name())
                .ok_or_else(|| Error::Config("--param given without a process kind".into()))?;
            ProcessSpec::from_kind_param(kind, Some(param))?
        }
        (None, None) => file.spec.unwrap_or_else(ProcessSpec::iid_gaussian),
    };

    let n_grid = if let Some(grid) = &args.n_grid {
        grid.clone()
    } else if let Some(n) = args.n {
        vec![n]
    } else if let Some(grid) = file.n_grid.into_vec() {
        grid
    } else if let Some(n) = file.n {
        vec![n]
    } else {
        d.n_grid.to_vec()
    };

    let k_list = args
        .k
        .clone()
        .or_else(|| file.k.into_vec())
        .unwrap_or_else(|| d.k_list.to_vec());

    let base_seed = match args.seed.or(file.seed) {
        Some(s) => s,
        None => match env_seed {
            Some(text) => text
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={text} is not an unsigned integer")))?,
            None => 0,
        },
    };

    let config = RunConfig {
        spec,
        n_grid,
        k_list,
        trials: args.trials.or(file.trials).unwrap_or(d.trials),
        base_seed,
        bins: args.bins.or(file.bins).unwrap_or(d.bins),
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        threads: args.threads.or(file.threads),
    };
    validate(command, &config)?;
    Ok(config)
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn validate(command: &Command, c: &RunConfig) -> Result<()> {
    if c.n_grid.is_empty() || c.n_grid.contains(&0) {
        return Err(invalid("matrix sizes must be at least 1"));
    }
    if c.k_list.is_empty() {
        return Err(invalid("at least one k is required"));
    }
    if c.threads == Some(0) {
        return Err(invalid("--threads must be at least 1"));
    }
    match command {
        Command::Simulate(_) => {
            if c.n_grid.len() != 1 {
                return Err(invalid("simulate takes a single --n"));
            }
            if c.trials == 0 {
                return Err(invalid("simulate needs at least 1 trial"));
            }
            if c.bins == 0 {
                return Err(invalid("--bins must be at least 1"));
            }
        }
        Command::Partitions(_) => {
            for &k in &c.k_list {
                if k == 0 || k % 2 == 1 {
                    return Err(invalid(format!("pair partitions need even k >= 2, got {k}")));
                }
                if k as usize > crate::partitions::MAX_PARTITION_K {
                    return Err(invalid(format!("k = {k} exceeds the enumeration guard")));
                }
                for &n in &c.n_grid {
                    check_budget(n, k as usize, CONSISTENT_BUDGET)?;
                }
            }
        }
        Command::Oracle(_) => {
            if c.trials < 2 {
                return Err(invalid("oracle needs at least 2 trials"));
            }
        }
        Command::Fluctuation(_) => {
            let mut distinct = c.n_grid.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 2 {
                return Err(invalid("fluctuation needs at least two distinct sizes in --n-grid"));
            }
            if c.trials < 100 {
                return Err(invalid("fluctuation needs at least 100 trials"));
            }
        }
        Command::Semicircle(_) => {
            if c.k_list.len() != 1 {
                return Err(invalid("semicircle takes a single --k (largest order)"));
            }
            if c.bins < 2 {
                return Err(invalid("semicircle needs at least 2 grid points"));
            }
        }
    }
    Ok(())
}

/// One file produced by a subcommand, held in memory until everything succeeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Per-trial `trial,n,ks_distance,m1,m2,m3,m4,m6` plus a histogram of the
/// pooled eigenvalues.
pub fn cmd_simulate(c: &RunConfig) -> Result<Vec<OutputFile>> {
    let n = c.n_grid[0];
    let model = CovarianceModel::new(c.spec);
    let rows = crate::moment_oracle::map_trials(n, &model, c.trials, c.base_seed, |i, esd| {
        let m = |k| esd.moment(k);
        let line = format!(
            "{i},{n},{},{},{},{},{},{}",
            esd.ks_distance(),
            m(1),
            m(2),
            m(3),
            m(4),
            m(6)
        );
        (line, esd.eigenvalues().to_vec())
    })?;
    let mut csv = String::from("trial,n,ks_distance,m1,m2,m3,m4,m6\n");
    let mut pooled = Vec::with_capacity(n * c.trials);
    for (line, eig) in rows {
        csv.push_str(&line);
        csv.push('\n');
        pooled.extend(eig);
    }
    let hist = Histogram::covering_semicircle(&pooled, c.bins)?;
    let mut hist_csv = Vec::new();
    hist.write_csv(&mut hist_csv).expect("writing to a Vec cannot fail");
    Ok(vec![
        OutputFile { name: "simulate.csv".into(), contents: csv },
        OutputFile {
            name: "histogram.csv".into(),
            contents: String::from_utf8(hist_csv).expect("csv is ascii"),
        },
    ])
}

/// `k,pi_canonical,crossing,n,count_S,count_S_star,star_ratio` for every pair
/// partition of every k and every n.
pub fn cmd_partitions(c: &RunConfig) -> Result<Vec<OutputFile>> {
    let mut cells = Vec::new();
    for &k in &c.k_list {
        for pi in enumerate_pair_partitions(k as usize)? {
            for &n in &c.n_grid {
                cells.push((k, pi.clone(), n));
            }
        }
    }
    let lines = cells
        .par_iter()
        .map(|(k, pi, n)| {
            let (s, star) = count_s_and_star(*n, pi)?;
            let ratio = star as f64 / (*n as f64).powi(*k as i32 / 2 + 1);
            Ok(format!("{k},{pi},{},{n},{s},{star},{ratio}", pi.is_crossing()))
        })
        .collect::<Result<Vec<String>>>()?;
    let mut csv = String::from("k,pi_canonical,crossing,n,count_S,count_S_star,star_ratio\n");
    for line in lines {
        csv.push_str(&line);
        csv.push('\n');
    }
    Ok(vec![OutputFile { name: "partitions.csv".into(), contents: csv }])
}

/// `n,k,spec,exact,mc_mean,mc_stderr,trials`; `exact` is empty when the
/// Gaussian oracle does not apply or exceeds its budget.
pub fn cmd_oracle(c: &RunConfig) -> Result<Vec<OutputFile>> {
    let mut csv = String::from("n,k,spec,exact,mc_mean,mc_stderr,trials\n");
    for &n in &c.n_grid {
        for report in mc_trace_moments(n, &c.k_list, c.spec, c.trials, c.base_seed)? {
            let exact = report.exact_value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                csv,
                "{},{},{},{exact},{},{},{}",
                report.n, report.k, report.spec, report.mc_mean, report.mc_stderr, report.trials
            )
            .unwrap();
        }
    }
    Ok(vec![OutputFile { name: "oracle.csv".into(), contents: csv }])
}

/// `n,k,spec,a4_estimate,trials`, followed by one `#` summary line per k with
/// the fitted slope and its bootstrap interval.
pub fn cmd_fluctuation(c: &RunConfig) -> Result<Vec<OutputFile>> {
    let mut csv = String::from("n,k,spec,a4_estimate,trials\n");
    let mut summary = String::new();
    for &k in &c.k_list {
        let report = fluctuation_scan(c.spec, k, &c.n_grid, c.trials, c.base_seed)?;
        for row in &report.rows {
            writeln!(csv, "{},{k},{},{},{}", row.n, c.spec, row.a4, report.trials).unwrap();
        }
        let slope = report.slope.map(|s| s.to_string()).unwrap_or_else(|| "NA".into());
        let ci = report
            .slope_ci
            .map(|(lo, hi)| format!("[{lo};{hi}]"))
            .unwrap_or_else(|| "NA".into());
        writeln!(summary, "# k={k} spec={} slope={slope} ci95={ci}", c.spec).unwrap();
    }
    csv.push_str(&summary);
    Ok(vec![OutputFile { name: "fluctuation.csv".into(), contents: csv }])
}

/// Density and CDF on an evenly spaced grid over `[-2.5, 2.5]`, and the
/// moments `0..=k`.
pub fn cmd_semicircle(c: &RunConfig) -> Result<Vec<OutputFile>> {
    let points = c.bins;
    let mut table = String::from("x,density,cdf\n");
    for i in 0..points {
        let x = -2.5 + 5.0 * i as f64 / (points - 1) as f64;
        writeln!(table, "{x},{},{}", semicircle_density(x), semicircle_cdf(x)).unwrap();
    }
    let mut moments = String::from("k,moment\n");
    for k in 0..=c.k_list[0] {
        writeln!(moments, "{k},{}", semicircle_moment(k)).unwrap();
    }
    Ok(vec![
        OutputFile { name: "semicircle.csv".into(), contents: table },
        OutputFile { name: "semicircle_moments.csv".into(), contents: moments },
    ])
}

/// Computes the subcommand's outputs without touching the filesystem.
pub fn execute(command: &Command, config: &RunConfig) -> Result<Vec<OutputFile>> {
    let job = || match command {
        Command::Simulate(_) => cmd_simulate(config),
        Command::Partitions(_) => cmd_partitions(config),
        Command::Oracle(_) => cmd_oracle(config),
        Command::Fluctuation(_) => cmd_fluctuation(config),
        Command::Semicircle(_) => cmd_semicircle(config),
    };
    match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// Writes each file via a temporary sibling and rename, so a file is either
/// absent or complete.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for file in files {
        let path = dir.join(&file.name);
        let tmp = dir.join(format!(".{}.tmp", file.name));
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(file.contents.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Resolves, validates, computes and writes. Returns the written paths.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<Vec<PathBuf>> {
    let config = resolve(&cli.command, env_seed)?;
    let files = execute(&cli.command, &config)?;
    write_outputs(&config.out, &files)
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 2,
        Error::Numerical(_) => 3,
        _ => 1,
    }
}

/// Entry point shared by the binary and integration tests.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match run(&cli, env_seed.as_deref()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ewig {}: {e}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
