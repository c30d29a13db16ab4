use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptolemy_core::Mode;
use serde::Serialize;

/// Checks and constructions for finite metric spaces around the Ptolemy inequality.
///
/// Exit status: 0 when the check passes, 1 when it fails (the report holds a
/// witness), 2 on usage or input errors.
#[derive(Debug, Parser)]
#[command(name = "ptolemy-lab", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Numeric mode; defaults to the input document's mode (float for CSV).
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Relative tolerance for float comparisons.
    #[arg(long = "tol", global = true, default_value_t = ptolemy_core::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Seed for sampling and generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Check a seeded sample of this many quadruples.
    #[arg(long, global = true, conflicts_with = "exhaustive")]
    pub sample: Option<u64>,
    /// Check every quadruple (the default).
    #[arg(long, global = true)]
    pub exhaustive: bool,
    /// Largest number of labels a completion may produce.
    #[arg(long, global = true, default_value_t = ptolemy_core::completion::DEFAULT_CAP)]
    pub cap: usize,
    /// Worker threads (default: PTOLEMY_LAB_THREADS, then all cores). Results do not depend on it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|_| format!("expected `exact` or `float`, got `{s}`"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the metric axioms.
    Validate { input: PathBuf },
    /// Run one of the checks.
    #[command(subcommand)]
    Check(Check),
    /// Materialize the iterated midpoint completion.
    Complete {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// List the midpoints of two points.
    Midpoints {
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Build a dyadic chain between two base points.
    Geodesic {
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 1)]
        levels: usize,
        /// `canonical`, `index=<i>` or `named=<label or pair tree>`.
        #[arg(long, default_value = "canonical")]
        selector: String,
    },
    /// Try an isometric embedding into Euclidean space.
    Embed {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_dim: usize,
    },
    /// Sample generalized angles in a normed plane.
    Angles {
        /// `euclidean`, `max`, `p=<value>` or `polygon=<file>`.
        #[arg(long, default_value = "euclidean")]
        norm: String,
        /// First direction as `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        /// Second direction as `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        /// Scale ratios, comma separated.
        #[arg(long, default_value = "0.25,0.5,1,2,4")]
        scales: String,
        /// Rescale `u` and `v` to unit length first.
        #[arg(long)]
        normalize: bool,
        /// Run the angle axioms over directions `x,y;x,y;...` instead of one profile.
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["u", "v"])]
        directions: Option<String>,
        /// Angular tolerance in radians.
        #[arg(long, default_value_t = ptolemy_core::angle::DEFAULT_ANGULAR_TOLERANCE)]
        angular_tol: f64,
    },
    /// Generate an example space.
    #[command(subcommand)]
    Gen(Gen),
    /// Pretty-print a JSON report.
    Report { input: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum Check {
    /// Ptolemy's inequality over all or sampled quadruples.
    Ptolemy { input: PathBuf },
    /// Whether two metrics on the same labels have equal cross-ratios.
    Mobius { first: PathBuf, second: PathBuf },
    /// Distance convexity at every midpoint present in the space.
    Convexity { input: PathBuf },
    /// The bigon inequalities for a configuration file.
    Trace {
        config: PathBuf,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum Gen {
    /// The four-point space x, y, m1, m2.
    Paper4,
    /// Seeded uniform points in [-1, 1]^dim.
    Cloud {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// `euclidean`, `max`, `p=<value>` or `polygon=<file>`.
        #[arg(long, default_value = "euclidean")]
        norm: String,
    },
    /// Points on a circle with chord distances.
    Concyclic {
        /// Strictly increasing angles in [0, 2pi), comma separated.
        #[arg(long)]
        angles: String,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}
