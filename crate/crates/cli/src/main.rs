//! `tentlab`: command-line access to tent-space norms, lifted operators, decompositions and experiments.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tentlab::experiment::ReportFormat;
use tentlab::grid::Family;
use tentlab::operators::Operator;
use tentlab::GridSpec;

#[derive(Parser, Debug)]
#[command(name = "tentlab", version, about = "Numerical laboratory for tent spaces on the upper half-space")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Grid as `n,X,h,tmin,m,K`.
    #[arg(long, global = true)]
    pub grid: Option<GridSpec>,
    /// Seed for corpora and random families.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path; records go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of records and reports.
    #[arg(long, global = true, default_value = "json")]
    pub format: ReportFormat,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a synthetic family on the grid and write it as an HSF1 file.
    Synth {
        /// Family string such as `indicator-tent-slab:c=0,r=1,tlo=0.5,thi=1`.
        #[arg(long)]
        family: Family,
    },
    /// Tent norm of a half-space file, or L^q norm of a line file.
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Aperture of the cones.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Weak norm instead of the strong one.
        #[arg(long)]
        weak: bool,
    },
    /// Apply an operator level by level (half-space) or at a fixed scale (line).
    Apply {
        #[arg(long)]
        input: PathBuf,
        /// Registry name, e.g. `hilbert`, `riesz:0.5`, `maximal`.
        #[arg(long)]
        operator: Operator,
        /// Scale passed to the operator for line inputs.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Atomic decomposition; writes a JSON manifest and atom payloads in a sibling directory.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
    /// Calderón–Zygmund split at height λ; writes payloads and a manifest into the `--out` directory.
    Czd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
    /// Weight characteristics.
    Weights {
        #[command(subcommand)]
        action: WeightsAction,
    },
    /// Slice-space norms and the inject/project retraction.
    Slice {
        #[command(subcommand)]
        action: SliceAction,
    },
    /// Run an inequality experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum WeightsAction {
    /// A_p characteristic, or RH_s with `--rh`, over a ball family and its stability series.
    Char {
        /// `power:a`, `random:amplitude` or `file:path.hsf`.
        #[arg(long)]
        weight: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Reverse-Hölder exponent; replaces the A_p characteristic.
        #[arg(long)]
        rh: Option<f64>,
        #[arg(long, default_value = "dyadic")]
        family: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum SliceAction {
    /// Slice-space norm of a line file at scale t.
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        weak: bool,
    },
    /// Spread a line file over the t-band above level `k`.
    Inject {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        level: usize,
    },
    /// Average a half-space file back to the line at level `k`.
    Project {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        level: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
