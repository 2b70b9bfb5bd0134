// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use prefixsyn::dataio::{ModelOverrides, PolicySpec, ProfileSpec, Style};

#[derive(Debug, Parser)]
#[command(
    name = "prefixsyn",
    version,
    about = "Timing-driven prefix adder synthesis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run backbone search, completion and refinement for one adder.
    Synthesize(SynthesizeArgs),
    /// Generate training records from the saturated backbone space.
    Datagen(DatagenArgs),
    /// Sweep target delays and write an area/delay report.
    Eval(EvalArgs),
    /// Write a graph file as a structural Verilog netlist.
    Export(ExportArgs),
    /// Check a graph file against integer addition.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Adder width N.
    #[arg(long)]
    pub bits: Option<usize>,
    /// uniform, lsb-first[:offset], random, or a profile file.
    #[arg(long)]
    pub profile: Option<ProfileSpec>,
    /// Seed for random profiles and datagen noise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Delay slope k in ns per node; sets d so that d + lambda = k.
    #[arg(long = "model-k")]
    pub model_k: Option<f64>,
    /// Intrinsic node delay d in ns.
    #[arg(long = "model-d")]
    pub model_d: Option<f64>,
    /// Per-node margin lambda in ns.
    #[arg(long = "model-lambda")]
    pub model_lambda: Option<f64>,
    /// Penalty per extra fanout in ns.
    #[arg(long = "model-beta")]
    pub model_beta: Option<f64>,
}

impl RunArgs {
    pub fn model_overrides(&self) -> ModelOverrides {
        ModelOverrides {
            k: self.model_k,
            d: self.model_d,
            lambda: self.model_lambda,
            beta: self.model_beta,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Target delay in ns; defaults to the balanced backbone's cost.
    #[arg(long)]
    pub target: Option<f64>,
    /// Iteration bound K per phase.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// greedy, scripted:<path> or remote.
    #[arg(long)]
    pub policy: Option<PolicySpec>,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of extraction seeds.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Perturbation scale in units of the node step.
    #[arg(long = "eps-scale")]
    pub eps_scale: Option<f64>,
    /// Largest completion level increase kept.
    #[arg(long)]
    pub threshold: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated target delays; defaults to six between the serial
    /// cost and the level bound.
    #[arg(long, value_delimiter = ',')]
    pub target: Vec<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub policy: Option<PolicySpec>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Graph file in EPR form.
    pub graph: PathBuf,
    #[arg(long, default_value = "plain")]
    pub style: Style,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Graph file in EPR form.
    pub graph: PathBuf,
    /// Seed for random vectors on wide adders.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
