//! Batch front end: one TOML config per run, CSV and text artifacts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suite;

use std::path::PathBuf;

pub use commands::Report;
pub use config::{Command, RunConfig};
pub use error::CliError;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(c) = o.command {
            self.command = c;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
    }
}

/// Runs the configured command without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Derive => commands::derive(cfg),
        Command::Gamma => commands::gamma(cfg),
        Command::Decay => commands::decay(cfg),
        Command::Prelimit => commands::prelimit(cfg),
        Command::Scatter => commands::scatter(cfg),
        Command::Check => commands::check(cfg),
    }
}

/// [`execute`], then writes the artifacts into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<(Report, Vec<PathBuf>), CliError> {
    let report = execute(cfg)?;
    let paths = output::write_all(&cfg.out, &report.artifacts)?;
    Ok((report, paths))
}

/// Bounds the worker pool; a pool that already exists is left alone.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}
