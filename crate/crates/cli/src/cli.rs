//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::suites::Suite;

const AFTER_HELP: &str = concat!(
    "Every numeric default lives in a versioned defaults file; `--config FILE` overlays a JSON file on it and flags override both. ",
    "Set RANK1KS_THREADS to cap the worker pool. Exit status: 0 pass, 1 verification failure, 2 configuration error.\n\nDefaults:\n",
    include_str!("../defaults.json")
);

#[derive(Debug, Parser)]
#[command(name = "rank1ks", version, about = "Numerical verification harness for rank-one symmetric spaces", after_long_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON file layered over the built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed of every randomized output (config key `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV and JSON artifacts; without it CSV goes to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Root multiplicity m1 (config key `m1`).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m1: Option<i64>,
    /// Root multiplicity m2 (config key `m2`).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m2: Option<i64>,
}

/// `lo..hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range(pub f64, pub f64);

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected `lo..hi`, got `{s}`"))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let (lo, hi) = (parse(a)?, parse(b)?);
        if !(lo <= hi) {
            return Err(format!("empty range `{s}`"));
        }
        Ok(Range(lo, hi))
    }
}

/// `a:b[,c:d...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Intervals(pub Vec<(f64, f64)>);

impl std::str::FromStr for Intervals {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| {
                let (a, b) = p.split_once(':').ok_or_else(|| format!("expected `a:b`, got `{p}`"))?;
                let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
                Ok((parse(a)?, parse(b)?))
            })
            .collect::<Result<_, _>>()
            .map(Intervals)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Separation,
    Shells,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Kernel,
    Surface,
    #[value(name = "abel_l21")]
    AbelL21,
    Rearrange,
    Chain,
    Endpoint,
    Theorem8,
    Maximal,
    Covering,
    Determinism,
}

impl SuiteArg {
    pub fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::All => Suite::ALL.to_vec(),
            SuiteArg::Kernel => vec![Suite::Kernel],
            SuiteArg::Surface => vec![Suite::Surface],
            SuiteArg::AbelL21 => vec![Suite::AbelL21],
            SuiteArg::Rearrange => vec![Suite::Rearrange],
            SuiteArg::Chain => vec![Suite::Chain],
            SuiteArg::Endpoint => vec![Suite::Endpoint],
            SuiteArg::Theorem8 => vec![Suite::Theorem8],
            SuiteArg::Maximal => vec![Suite::Maximal],
            SuiteArg::Covering => vec![Suite::Covering],
            SuiteArg::Determinism => vec![Suite::Determinism],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print ρ, the dimension and a table of the radial density and ball volume.
    SpaceInfo {
        /// Largest radius of the table.
        #[arg(long, default_value_t = 6.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Tabulate ψ(t, s), its comparator and their ratio.
    KernelTable {
        /// Radius range `lo..hi` (config `kernel_table.t_min/t_max`).
        #[arg(long, allow_hyphen_values = true)]
        t: Option<Range>,
        /// Height range `lo..hi` (config `kernel_table.s_min/s_max`).
        #[arg(long, allow_hyphen_values = true)]
        s: Option<Range>,
        /// Grid step (config `kernel_table.step`).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Abel transform of a radial step function and its L^{2,1} comparison.
    Abel {
        /// Support intervals `a:b,c:d` of the indicator (config `abel.intervals`).
        #[arg(long)]
        intervals: Option<Intervals>,
        /// Height range `lo..hi` (config `abel.s_min/s_max`).
        #[arg(long, allow_hyphen_values = true)]
        s: Option<Range>,
        /// Number of height steps (config `abel.n_s`).
        #[arg(long)]
        n_s: Option<usize>,
    },
    /// Lorentz quasinorm ‖f‖_{p,q} of weighted samples.
    LorentzNorm {
        /// Comma-separated values (config `lorentz.values`).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        /// Comma-separated weights (config `lorentz.weights`).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Rearrangement suite: conservation, rectangle domination, embeddings.
    RearrangeCheck {
        /// Number of domination cases (config `verify.rearrange_cases`).
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Monte Carlo estimate of the trilinear form on three balls.
    Trilinear {
        /// Radius of f (config `trilinear.r_f`).
        #[arg(long)]
        r_f: Option<f64>,
        #[arg(long)]
        r_g: Option<f64>,
        #[arg(long)]
        r_h: Option<f64>,
        /// Sample count (config `trilinear.samples`).
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Rearrangement chain of the convolution bound on random surrogate models.
    ChainVerify {
        /// Models per space (config `verify.chain_models`).
        #[arg(long)]
        models: Option<usize>,
    },
    /// The φ-weighted bound: indicator agreement, layer additivity, φ ≤ e^{ρu}.
    Theorem8 {
        /// Models per space (config `verify.theorem8_models`).
        #[arg(long)]
        models: Option<usize>,
    },
    /// Pointwise domination of the noncentered maximal function on one grid.
    MaximalRun {
        #[arg(long)]
        v_half: Option<f64>,
        #[arg(long)]
        s_half: Option<f64>,
        #[arg(long)]
        n_v: Option<usize>,
        #[arg(long)]
        n_s: Option<usize>,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        /// Random multi-ball fields besides the unit ball (config `maximal.fields`).
        #[arg(long)]
        fields: Option<usize>,
    },
    /// Weak-type ratios of the noncentered maximal function over a family.
    WeakType {
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Ball counts of the separation family (config `weak_type.counts`).
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
        /// Shell count of the shells family (config `weak_type.max_shells`).
        #[arg(long)]
        max_shells: Option<usize>,
    },
    /// Greedy ball covering on random families.
    Covering {
        /// Number of random families (config `covering.families`).
        #[arg(long)]
        families: Option<usize>,
    },
    /// Run verification suites, one per acceptance criterion.
    Verify {
        #[arg(long, value_enum, default_value = "all", value_delimiter = ',')]
        suite: Vec<SuiteArg>,
    },
    /// Consolidate the `summary.json` written by `verify --out DIR`.
    Report {
        /// Directory holding `summary.json`; defaults to `--out`.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}
