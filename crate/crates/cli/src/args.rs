//! Flag grammar.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "sqlab",
    version,
    about = "Squarefree numbers in arithmetic progressions: sieves, error vectors, \
             correlations, local densities and exponential sums"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads; every command produces identical bytes for any value.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Sieve-segment cache directory (the SQLAB_CACHE_DIR environment
    /// variable overrides this flag).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count squarefree integers up to X.
    SieveCount {
        #[arg(long)]
        x: u64,
        /// Segment length for the sieve passes.
        #[arg(long, default_value_t = 1 << 22)]
        segment_len: u64,
    },

    /// Residue counts and error terms E(X, q, a).
    Evector {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
        /// Accept q > X (outside the intended regime).
        #[arg(long)]
        allow_degenerate: bool,
        /// Also plot E against a.
        #[arg(long)]
        svg: Option<PathBuf>,
    },

    /// Sum of E(X, q, a)^2 over invertible residues.
    Variance {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
    },

    /// Correlation of E(a) with E(ra + s) for prime q.
    Correlate {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_negative_numbers = true)]
        r: i64,
        #[arg(long, allow_negative_numbers = true)]
        s: i64,
    },

    /// Squarefree-pair counts S(l, r) against their local densities.
    Pairs {
        #[arg(long)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        r: i64,
        #[arg(long, allow_negative_numbers = true)]
        l_min: i64,
        #[arg(long, allow_negative_numbers = true)]
        l_max: i64,
        #[arg(long, default_value_t = 1)]
        l_step: i64,
        /// Also plot the relative deviation against l.
        #[arg(long)]
        svg: Option<PathBuf>,
    },

    /// Exact local density f(l, r).
    Density {
        #[arg(long, allow_negative_numbers = true)]
        l: i64,
        #[arg(long, allow_negative_numbers = true)]
        r: i64,
    },

    /// Completed shift sum against its main term Lambda X^2 / q.
    Bigsigma {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_negative_numbers = true)]
        r: i64,
        #[arg(long, allow_negative_numbers = true)]
        s: i64,
    },

    /// Incomplete inverse-square exponential sum over n <= N.
    Expsum {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_negative_numbers = true)]
        a: i64,
    },

    /// Bernoulli-difference sum A(Y; q, a) under a truncation budget.
    Asum {
        #[arg(long)]
        y: f64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_negative_numbers = true)]
        a: i64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },

    /// Cancellation ratios of incomplete sums at N = ceil(q^eps).
    Decay {
        /// Comma-separated prime moduli.
        #[arg(long, value_delimiter = ',')]
        q_list: Vec<u64>,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',')]
        eps_list: Vec<f64>,
        #[arg(long, default_value_t = 8)]
        a_samples: usize,
        /// Also plot ratio against N on log-log axes.
        #[arg(long)]
        svg: Option<PathBuf>,
    },

    /// Run the acceptance suite; one CSV row per criterion.
    Selftest,
}
