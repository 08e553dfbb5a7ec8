use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Gradient flow vs. annealed gradient descent on early-stopped linear
/// regression.
#[derive(Parser, Debug)]
#[command(name = "annealgap", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo over three-sample datasets; exits 2 if any claim check fails
    Claim(ClaimArgs),
    /// Same runs as `claim`, reporting only
    Montecarlo(ClaimArgs),
    /// Check the gap lemma on one instance
    Lemma(InstanceArgs),
    /// Record an optimizer trajectory as CSV or JSON
    Trajectory(TrajectoryArgs),
    /// Render train/test level sets with both optimizer paths (2-D only)
    Landscape(LandscapeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Gf,
    Anneal,
    Euler,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::Gf => "gf",
            Optimizer::Anneal => "anneal",
            Optimizer::Euler => "euler",
        }
    }
}

/// Flags shared by every command. Values given here override the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Early-stopping train-loss threshold
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of large gradient-descent steps
    #[arg(long = "K")]
    pub k_steps: Option<usize>,
    /// Large step size (default 1/gamma_1)
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points recorded per optimizer phase
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Emit only this format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct ClaimArgs {
    #[command(flatten)]
    pub common: Common,
    /// Samples per dataset
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance file (same schema as --config)
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum)]
    pub optimizer: Option<Optimizer>,
    /// Euler step size
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Grid points per axis
    #[arg(long)]
    pub grid: Option<usize>,
    /// Half-width of the plotted box around beta_star
    #[arg(long)]
    pub extent: Option<f64>,
}
