use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dunkl_besov::config::ExperimentConfig;
use dunkl_besov::experiments::{self, CacheCommand};

#[derive(Parser)]
#[command(version, about = "Dunkl Besov frame and Calderón–Zygmund experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments listed in a TOML config.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the run seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run experiments concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Inspect or clear the kernel-matrix cache.
    Cache {
        action: CacheAction,
        /// Cache directory; defaults to `cache_dir` of --config.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CacheAction {
    List,
    Purge,
    Verify,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> dunkl_besov::Result<bool> {
    match cmd {
        Command::Run {
            config,
            out,
            seed,
            parallel,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.parallel |= parallel;
            let report = experiments::run(&cfg)?;
            for e in &report.experiments {
                match &e.error {
                    None => println!("ok    {}", e.name),
                    Some(err) => println!("FAIL  {}: {err}", e.name),
                }
                for (k, v) in &e.metrics {
                    println!("      {k} = {v:.6e}");
                }
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(report.success())
        }
        Command::Cache {
            action,
            cache_dir,
            config,
        } => {
            let dir = match (cache_dir, config) {
                (Some(d), _) => d,
                (None, Some(c)) => ExperimentConfig::load(&c)?.cache_dir,
                (None, None) => {
                    return Err(dunkl_besov::Error::Config("cache needs --cache-dir or --config".into()));
                }
            };
            let cmd = match action {
                CacheAction::List => CacheCommand::List,
                CacheAction::Purge => CacheCommand::Purge,
                CacheAction::Verify => CacheCommand::Verify,
            };
            let (lines, healthy) = experiments::cache_admin(cmd, &dir)?;
            lines.iter().for_each(|l| println!("{l}"));
            Ok(healthy)
        }
    }
}
