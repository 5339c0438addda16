mod cache;
mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cache::Cache;
use commands::Output;
use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Compute(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<lowlying::Error> for CliError {
    fn from(e: lowlying::Error) -> Self {
        use lowlying::Error as E;
        match e {
            E::Domain(_) | E::OutOfRange(_) => CliError::Config(e.to_string()),
            E::Budget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "lowlying", version, about = "Low-lying zero densities of holomorphic cusp form families")]
struct Cli {
    /// JSON run configuration; command-line flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// working precision in decimal digits
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// output file (stdout when absent); auxiliary tables go next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// eigenbasis cache directory
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral against geometric side of the Petersson formula
    VerifyPetersson,
    /// Random J_{k−1}(x) evaluations against the uniform bound
    BesselCheck,
    /// One-level density for individual weights
    Density,
    /// Weighted average over k via the Kloosterman route
    AveragedDensity,
    /// Averaged density against the lower-order expansion
    Expansion,
    /// Lower-order coefficients c_j, C_j, S_j, R_j
    Constants,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = cli.precision {
        cfg.precision = p;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(c) = &cli.cache {
        cfg.cache = Some(c.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_output(cfg: &RunConfig, o: &Output) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => {
            if let Some(d) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(d)?;
            }
            fs::write(p, &o.main)?;
            for (suffix, text) in &o.extra {
                fs::write(sibling(p, suffix), text)?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(o.main.as_bytes())?;
            if !o.extra.is_empty() {
                log::info!("auxiliary tables need --out; skipped {}", o.extra.len());
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = resolve(&cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let cache = Cache::new(cfg.cache.as_deref())?;
    let out = pool.install(|| match cli.command {
        Command::VerifyPetersson => commands::verify_petersson(&cfg, &cache),
        Command::BesselCheck => commands::bessel_check(&cfg),
        Command::Density => commands::density(&cfg, &cache),
        Command::AveragedDensity => commands::averaged_density(&cfg),
        Command::Expansion => commands::expansion(&cfg),
        Command::Constants => commands::constants(&cfg),
    })?;
    write_output(&cfg, &out)?;
    for f in &out.failures {
        eprintln!("check failed: {f}");
    }
    Ok(out.ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
