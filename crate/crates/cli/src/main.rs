//! `psram`: run MTTKRP and CP-ALS on the simulated pSRAM array, sweep the
//! performance model and check the array against the reference kernels.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or input error,
//! 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod units;

#[derive(Parser, Debug)]
#[command(name = "psram", version, about = "Photonic SRAM MTTKRP simulator")]
pub struct Cli {
    /// Array configuration (TOML). Defaults to the built-in 256x256-bit array.
    #[arg(long, global = true, env = "PSRAM_CONFIG")]
    pub config: Option<PathBuf>,

    /// Replace existing output files.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one MTTKRP on the array and compare it with the reference.
    Mttkrp(MttkrpArgs),
    /// CP decomposition by alternating least squares.
    CpAls(CpAlsArgs),
    /// Throughput over a grid of channel counts and clock frequencies.
    Sweep(SweepArgs),
    /// Oracle-equivalence checks on bundled and seeded random tensors.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ArrayFlags {
    /// Add Gaussian readout noise with this sigma relative to full scale.
    #[arg(long, value_name = "SIGMA")]
    pub analog: Option<f64>,

    /// Expose every write instead of overlapping it with compute.
    #[arg(long)]
    pub no_double_buffering: bool,
}

#[derive(Args, Debug)]
pub struct MttkrpArgs {
    /// Tensor file (`.tns` coordinate format or dense text).
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub rank: usize,
    /// Target mode.
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    /// Seed for the random factor matrices and analog noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Factor CSVs, one per mode, instead of random factors.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<PathBuf>>,
    /// Result CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Energy ledger CSV.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Write the compiled schedule as text.
    #[arg(long, value_name = "PATH")]
    pub dump_schedule: Option<PathBuf>,
    #[command(flatten)]
    pub array: ArrayFlags,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Reference,
    Array,
}

#[derive(Args, Debug)]
pub struct CpAlsArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Backend::Reference)]
    pub backend: Backend,
    /// Directory for `factor_<mode>.csv` and `fit_trace.csv`. When omitted
    /// the fit trace goes to stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub array: ArrayFlags,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacOps {
    #[value(name = "2")]
    Two,
    #[value(name = "1")]
    One,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Channel counts, START:END[:STEP].
    #[arg(long, default_value = "1:64")]
    pub channels: String,
    /// Clock frequencies, START:END[:STEP], with optional k/M/G suffixes.
    #[arg(long, default_value = "1G:40G:1G")]
    pub freq: String,
    /// Tensor extents.
    #[arg(long, default_value = "1000000,1000000,1000000")]
    pub dims: String,
    /// Fixed rank; by default each point uses its channel count.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    /// Operations per multiply-accumulate.
    #[arg(long, value_enum, default_value_t = MacOps::Two)]
    pub mac_ops: MacOps,
    #[arg(long)]
    pub no_double_buffering: bool,
    /// Sweep CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also render the two throughput panels as SVG.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random tensors on top of the bundled fixtures.
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("psram: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
