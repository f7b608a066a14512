use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Kicked-rotor atomic ratchet simulator.
///
/// Parameters use the dimensionless rotor names: phi_d (kick strength),
/// epsilon (detuning from the resonance tau = 2*pi*ell), ell, gamma
/// (superposition phase, radians) and beta (quasi-momentum).
#[derive(Debug, Parser)]
#[command(name = "ratchet", version)]
pub struct Cli {
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pendulum scaling function F(x) and F(x)/x on a uniform grid.
    #[command(allow_negative_numbers = true)]
    ScalingCurve(ScalingArgs),
    /// Mean-momentum trajectory of the ratchet state.
    #[command(allow_negative_numbers = true)]
    Ratchet(RatchetArgs),
    /// Exact quantum evolution, optionally with momentum distributions.
    #[command(allow_negative_numbers = true)]
    Quantum(QuantumArgs),
    /// Quantum crossover grid over pulse periods.
    #[command(allow_negative_numbers = true)]
    TauScan(TauScanArgs),
    /// Scaled current versus x for several (phi_d, epsilon) families.
    #[command(allow_negative_numbers = true)]
    Collapse(CollapseArgs),
    /// Scaled energy E / (phi_d^2 q) versus x for several families.
    #[command(allow_negative_numbers = true)]
    EnergyCollapse(CollapseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Superposition phase gamma in radians.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Superposition phase gamma in degrees.
    #[arg(long, conflicts_with = "gamma")]
    pub gamma_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KickArgs {
    /// Kick strength phi_d.
    #[arg(long)]
    pub phi_d: Option<f64>,
    /// Signed detuning epsilon from the resonance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Resonance index ell.
    #[arg(long)]
    pub ell: Option<u32>,
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Quasi-momentum beta in [0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of kicks.
    #[arg(long)]
    pub kicks: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Initial ensemble: theory (p0 = 0) or physical (both momentum components).
    #[arg(long)]
    pub mode: Option<String>,
    /// Ensemble size.
    #[arg(long)]
    pub ensemble_n: Option<usize>,
    /// Sample the ensemble randomly instead of on a quadrature grid.
    #[arg(long)]
    pub monte_carlo: bool,
    /// Seed for Monte Carlo sampling.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    /// Fixed momentum-basis half-width; disables automatic growth.
    #[arg(long)]
    pub basis_halfwidth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 20.0)]
    pub x_max: f64,
    /// Grid points including both ends.
    #[arg(long, default_value_t = 401)]
    pub steps: usize,
    /// Initial-angle quadrature nodes.
    #[arg(long, default_value_t = ratchet_core::pendulum::DEFAULT_QUAD_N)]
    pub quad_n: usize,
    /// Integration step.
    #[arg(long, default_value_t = ratchet_core::pendulum::DEFAULT_DT)]
    pub dt: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RatchetArgs {
    #[command(flatten)]
    pub kick: KickArgs,
    /// eclassical or quantum.
    #[arg(long)]
    pub engine: Option<String>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[command(flatten)]
    pub kick: KickArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Also write momentum distributions (CSV) to this path.
    #[arg(long, value_name = "PATH")]
    pub distribution: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TauScanArgs {
    /// Comma-separated pulse periods tau.
    #[arg(long, required = true, value_delimiter = ',')]
    pub taus: Vec<f64>,
    #[arg(long)]
    pub phi_d: Option<f64>,
    #[command(flatten)]
    pub phase: PhaseArgs,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kicks: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// Comma-separated families `phi_d:epsilon` or `phi_d:epsilon:gamma`.
    #[arg(long, value_delimiter = ',')]
    pub combos: Vec<String>,
    #[arg(long)]
    pub ell: Option<u32>,
    #[command(flatten)]
    pub phase: PhaseArgs,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub kicks: Option<u32>,
    /// eclassical, quantum or pendulum.
    #[arg(long)]
    pub engine: Option<String>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}
