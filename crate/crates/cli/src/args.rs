use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Binocular fixation with a muscle-driven eye plant and a DDPG agent.
#[derive(Debug, Parser)]
#[command(name = "oculorl", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "OCULORL_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads for episode collection or grid evaluation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print progress while running.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the agent, writing the log, milestone and final checkpoints.
    Train {
        /// Total training episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Resume from this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Greedy reward curves of every milestone checkpoint.
    EvalMilestones {
        /// Directory of milestone checkpoints or a single checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Episodes per checkpoint.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Fixation statistics over the 3x3 target grid.
    EvalGrid {
        /// Policy checkpoint; defaults to `final.ckpt` in the output directory.
        #[arg(long, conflicts_with = "random")]
        checkpoint: Option<PathBuf>,
        /// Evaluate uniformly random excitations instead of a policy.
        #[arg(long)]
        random: bool,
    },
    /// One greedy episode written as a per-step trace.
    Rollout {
        /// Policy checkpoint; defaults to `final.ckpt` in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Vertical target displacement (m); random when both are omitted.
        #[arg(long, requires = "dz", allow_hyphen_values = true)]
        dy: Option<f64>,
        /// Horizontal target displacement (m).
        #[arg(long, requires = "dy", allow_hyphen_values = true)]
        dz: Option<f64>,
    },
    /// Run the contract, invariant and gradient suites.
    Verify,
    /// Re-render plots from the CSV tables of a report directory.
    Report,
}
