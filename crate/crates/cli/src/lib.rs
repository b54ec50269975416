//! Library side of the `sqlab` binary: argument grammar, CSV/SVG emission,
//! command dispatch and the acceptance-suite runner.

pub mod args;
pub mod commands;
pub mod csvfmt;
pub mod selftest;
pub mod svg;

use std::fmt;
use std::path::PathBuf;

use sqlab_core::sieve::SegmentStore;

/// Validation failures exit with status 2, runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "invalid request: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime failure: {msg}"),
        }
    }
}

impl From<sqlab_core::Error> for CliError {
    fn from(e: sqlab_core::Error) -> CliError {
        CliError::Validation(e.to_string())
    }
}

/// Resolve the cache directory: the environment variable wins over the flag.
pub fn resolve_cache_dir(flag: &Option<PathBuf>) -> Option<PathBuf> {
    match std::env::var_os("SQLAB_CACHE_DIR") {
        Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
        _ => flag.clone(),
    }
}

/// Run one parsed invocation inside a worker pool of the requested size.
pub fn run(cli: &args::Cli) -> Result<(), CliError> {
    if cli.workers == 0 {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    let mut store = SegmentStore::with_dir(resolve_cache_dir(&cli.cache_dir));
    if let args::Command::SieveCount { segment_len, .. } = &cli.command {
        store = store.with_segment_len(*segment_len);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.command, &store, &cli.out))
}
