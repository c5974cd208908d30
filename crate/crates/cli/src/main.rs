use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ldl_cli::{configure_threads, run, Command, Overrides, RunConfig};

/// Low-density-limit workbench.
#[derive(Parser)]
#[command(name = "ldl", version)]
struct Args {
    /// Command to run; defaults to `command` in the config.
    #[arg(value_enum)]
    command: Option<Command>,
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the data-parallel loops.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides { command: args.command, out: args.out, seed: args.seed, threads: args.threads };
    let loaded = RunConfig::load(&args.config, overrides.command);
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit();
        }
    };
    cfg.apply(&overrides);
    if cfg.threads == Some(0) {
        eprintln!("validation error: --threads must be >= 1");
        return ExitCode::from(ldl_cli::error::EXIT_VALIDATION);
    }
    configure_threads(cfg.threads);
    match run(&cfg) {
        Ok((report, paths)) => {
            print!("{}", report.stdout);
            for p in &paths {
                eprintln!("wrote {}", p.display());
            }
            match report.failure {
                Some(e) => {
                    eprintln!("{e}");
                    e.exit()
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit()
        }
    }
}
