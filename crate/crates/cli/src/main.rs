use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hoti_cli::config::Format;
use hoti_cli::{load_config, run, CliError, Command};

/// Higher-order topological states in modulated lattices.
#[derive(Debug, Parser)]
#[command(name = "hoti", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Grid/state file formats; overrides `output.formats`. Repeatable or comma-separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if !args.format.is_empty() {
        cfg.output.formats = args.format;
    }
    let out = args
        .out
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(hoti_cli::config::ConfigError::new("--workers", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("the global thread pool is configured once");
    }
    let files = run(args.command, &cfg, &out)?;
    println!("{} files written to {} (see manifest.json)", files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
