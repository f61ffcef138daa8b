use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbm_core::channel::{ChannelKind, SnrReference};
use serde::Serialize;

/// Default seed when `--seed` is omitted.
pub const SEED_ENV: &str = "MBM_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "mbm",
    version,
    about = "Media-based modulation constellation shaping and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw an open-loop constellation of 2^k i.i.d. CN(0,1) channel states.
    Gen(GenArgs),
    /// Optimize closed-loop weights (euclidean) or a bit labeling (hamming).
    Optimize(OptimizeArgs),
    /// Monte Carlo SER/BER sweep over an SNR grid.
    Simulate(SimulateArgs),
    /// Closed-form minimum-distance results.
    Analytic(AnalyticArgs),
    /// Minimum-distance histogram with the analytic overlay.
    DminStats(DminStatsArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Bits per symbol (1..=16).
    #[arg(long)]
    pub k: u32,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Euclidean,
    Hamming,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Constellation JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Schedule as a JSON file path or an inline JSON object.
    #[arg(long = "schedule-json")]
    pub schedule_json: Option<String>,
    /// Weights applied to the input before labeling (hamming only).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Independent restarts, best kept (euclidean only).
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Trace CSV with header `trial,accepted,d_value`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ChannelArg {
    RayleighMbmOpen,
    RayleighMbmClosed,
    RayleighQam,
    AwgnQam,
    AwgnMbmShaped,
}

impl From<ChannelArg> for ChannelKind {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::RayleighMbmOpen => ChannelKind::RayleighMbmOpen,
            ChannelArg::RayleighMbmClosed => ChannelKind::RayleighMbmClosed,
            ChannelArg::RayleighQam => ChannelKind::RayleighQam,
            ChannelArg::AwgnQam => ChannelKind::AwgnQam,
            ChannelArg::AwgnMbmShaped => ChannelKind::AwgnMbmShaped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SnrReferenceArg {
    Ensemble,
    Constellation,
}

impl From<SnrReferenceArg> for SnrReference {
    fn from(r: SnrReferenceArg) -> Self {
        match r {
            SnrReferenceArg::Ensemble => SnrReference::Ensemble,
            SnrReferenceArg::Constellation => SnrReference::Constellation,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Base configuration (JSON with SimConfig field names); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Constellation JSON; omit to use reference QAM or seeded channel draws.
    #[arg(long = "const")]
    pub constellation: Option<PathBuf>,
    /// Weight JSON applied to `--const` (rayleigh_mbm_closed only).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Mapping JSON; switches the sweep to uncoded bit error rate.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Bits per symbol when no `--const` is given.
    #[arg(long)]
    pub k: Option<u32>,
    /// SNR grid in dB: `lo:step:hi`, a comma list, or a single value.
    #[arg(long)]
    pub snr: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Channel draws to average over (MBM channels without `--const`).
    #[arg(long)]
    pub draws: Option<u64>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shards: Option<usize>,
    #[arg(long = "min-errors")]
    pub min_errors: Option<u64>,
    #[arg(long = "snr-reference", value_enum)]
    pub snr_reference: Option<SnrReferenceArg>,
    /// Optimizer schedule for closed-loop averaging (path or inline JSON).
    #[arg(long = "schedule-json")]
    pub schedule_json: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub k: u32,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticArg {
    /// True minimum over all pairs.
    Dmin,
    /// Minimum over the disjoint pairs (1,2), (3,4), ...
    Paired,
}

#[derive(Debug, Args)]
pub struct DminStatsArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub draws: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Open)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = StatisticArg::Dmin)]
    pub statistic: StatisticArg,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = mbm_core::stats::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long = "schedule-json")]
    pub schedule_json: Option<String>,
    /// Histogram CSV; siblings `*.scaled.csv`, `*.pdf.csv` and `*.summary.json` are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}
