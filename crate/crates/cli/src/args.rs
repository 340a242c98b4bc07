use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "digisplit", version, about = "Rare-event digital option pricing benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Price one contract with one method, replicated over seeds and runs.
    Price(Common),
    /// Run every experiment listed in a TOML file (`--spec`).
    Bench(Common),
    /// Repeat an AMS experiment for several discard fractions.
    SweepK {
        #[command(flatten)]
        common: Common,
        /// Discard fractions to visit.
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45])]
        k_values: Vec<f64>,
    },
    /// Repeat an AMS experiment for several population sizes.
    SweepN {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [5000, 10000, 20000, 40000])]
        n_values: Vec<usize>,
    },
    /// Deep out-of-the-money Black-Scholes digital call (strike 3.5).
    Extreme(Common),
    /// Three correlated assets with the dispersion digital.
    MultiAsset(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Self::Price(c) | Self::Bench(c) | Self::Extreme(c) | Self::MultiAsset(c) => c,
            Self::SweepK { common, .. } | Self::SweepN { common, .. } => common,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Bs,
    Heston,
    MultiGbm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Qe,
    Euler,
    Milstein,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ContractArg {
    DigitalCall,
    DigitalPut,
    AsianCall,
    AsianPut,
    BarrierUpInCall,
    BarrierUpInPut,
    MultiDispersion,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ams,
    Mc,
    Mca,
    Mlmc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ImportanceArg {
    Path,
    BsAnalytic,
    MultiSum,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset flags fall back to the
/// subcommand's preset or, with `--spec`, to the file.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML experiment file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Heston discretization.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    pub contract: Option<ContractArg>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Particles (AMS) or paths (Monte Carlo).
    #[arg(long)]
    pub n: Option<usize>,
    /// Discard fraction for AMS.
    #[arg(long)]
    pub k: Option<f64>,
    /// Strike, or the dispersion threshold for the multi-asset contract.
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long)]
    pub barrier: Option<f64>,
    /// Average level of the dispersion contract.
    #[arg(long)]
    pub average_level: Option<f64>,
    /// Rare level; defaults to the importance function's natural level.
    #[arg(long)]
    pub lmax: Option<f64>,
    #[arg(long, value_enum)]
    pub importance: Option<ImportanceArg>,
    /// Runs per seed.
    #[arg(long)]
    pub runs: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// First seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid steps (per contract maturity).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub maturity: Option<f64>,
    /// Finest MLMC level.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Target standard error for MLMC sample allocation.
    #[arg(long)]
    pub target_se: Option<f64>,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}
