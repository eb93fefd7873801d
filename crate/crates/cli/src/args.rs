use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "hbloch", version, about = "Bloch bands of honeycomb lattice potentials")]
pub struct Cli {
    /// Suppress progress lines on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Lattice geometry.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Lattice potentials.
    #[command(subcommand)]
    Potential(PotentialCmd),
    /// Spectral band structure along a high-symmetry path.
    Bands(BandsArgs),
    /// Lowest eigenvalues at one k-point for increasing plane-wave cutoffs.
    Converge(ConvergeArgs),
    /// Degeneracy and cone slope at K.
    Dirac(DiracArgs),
    /// Spectral Bloch mode on the unit-cell grid.
    Bloch(BlochArgs),
    /// Train the neural solver from scratch.
    Train(TrainArgs),
    /// Continue training a checkpoint on a different potential strength.
    Finetune(FinetuneArgs),
    /// Band structure from a trained checkpoint.
    NnBands(NnBandsArgs),
    /// Learned Bloch mode on the unit-cell grid.
    NnBloch(NnBlochArgs),
    /// Compare a checkpoint with the spectral reference.
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeCmd {
    /// Print basis vectors and high-symmetry points as JSON.
    Info {
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialCmd {
    /// Sample V on the unit cell as CSV `x,y,V`.
    Sample {
        #[arg(long, allow_negative_numbers = true)]
        v0: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Potential selection shared by the spectral commands.
#[derive(Debug, Args, Serialize)]
pub struct PotentialArgs {
    /// Three-cosine amplitude.
    #[arg(long, allow_negative_numbers = true, required_unless_present = "potential")]
    pub v0: Option<f64>,
    /// Potential JSON file; overrides --v0 and --spacing.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BandsArgs {
    #[command(flatten)]
    pub pot: PotentialArgs,
    #[arg(long, default_value_t = 7)]
    pub cutoff: usize,
    #[arg(long, default_value = "GKMG")]
    pub path: String,
    /// Samples per path segment.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub n_bands: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub pot: PotentialArgs,
    /// High-symmetry label (G, K, K', M) or `kx,ky`.
    #[arg(long, default_value = "K")]
    pub point: String,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,9")]
    pub cutoffs: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub n_bands: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DiracArgs {
    #[command(flatten)]
    pub pot: PotentialArgs,
    #[arg(long, default_value_t = 7)]
    pub cutoff: usize,
    /// Probe distance from K; defaults to 1% of |K|.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub n_fit: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BlochArgs {
    #[command(flatten)]
    pub pot: PotentialArgs,
    #[arg(long, default_value_t = 7)]
    pub cutoff: usize,
    #[arg(long, default_value = "G")]
    pub k: String,
    #[arg(long, default_value_t = 0)]
    pub band: usize,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Write `re,im` instead of the density.
    #[arg(long)]
    pub complex: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also save the checkpoint every this many epochs.
    #[arg(long)]
    pub save_every: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub v0: f64,
    #[arg(long)]
    pub epochs: usize,
    /// Further config overrides applied on top of the source checkpoint's config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub save_every: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NnBandsArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, default_value = "GKMG")]
    pub path: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub n_bands: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NnBlochArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, default_value = "G")]
    pub k: String,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long)]
    pub complex: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Defaults to the checkpoint's training potential.
    #[arg(long, allow_negative_numbers = true)]
    pub v0: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub cutoff: usize,
    #[arg(long, default_value = "GKMG")]
    pub path: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub n_bands: usize,
    /// Grid side for the mode overlaps.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}
