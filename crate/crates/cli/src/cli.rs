//! Flag definitions for every subcommand.
//!
//! Every value-carrying flag is optional at the parser level so a JSON
//! config file can supply it; resolution order is flag, then config key
//! (same spelling as the long flag), then the built-in default. Boolean
//! flags can be turned on either way but a flag cannot switch a
//! config-enabled boolean back off.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Labels charging-infrastructure network flows by reconstruction error.
#[derive(Debug, Parser)]
#[command(name = "falconc", version, about)]
pub struct Cli {
    /// JSON config file supplying defaults for any long flag; the
    /// FALCONC_CONFIG environment variable names one when this flag is
    /// absent, and explicit flags always win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

/// One pipeline stage per subcommand.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load labeled capture files into one normalized flow table.
    Ingest(IngestArgs),
    /// Train the benign-flow autoencoder and save the model artifact.
    Train(TrainArgs),
    /// Score flow tables with a trained model into an error profile.
    Profile(ProfileArgs),
    /// Calibrate a decision boundary over reconstruction errors.
    Calibrate(CalibrateArgs),
    /// Label flows benign or malicious with a model and a boundary.
    Label(LabelArgs),
    /// Sweep latent widths and recommend one.
    Sweep(SweepArgs),
    /// Compare an external detector's decisions against reference labels.
    Audit(AuditArgs),
}

/// Arguments for `falconc ingest`.
#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Dataset manifest (JSON) naming input files and their labels.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    /// Treat manifest entries as packet tables and aggregate them into
    /// flows instead of loading them as flow tables.
    #[arg(long)]
    pub aggregate: bool,

    /// Idle gap in seconds that closes a flow during aggregation.
    #[arg(long, value_name = "SECONDS")]
    pub idle_timeout: Option<f64>,

    /// Extra columns to drop, comma separated (added to the built-in list).
    #[arg(long, value_delimiter = ',', value_name = "COLS")]
    pub drop: Vec<String>,

    /// Keep the identifier columns the built-in drop list would remove.
    #[arg(long)]
    pub keep_all: bool,

    /// Output flow table (CSV).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments for `falconc train`.
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input flow table (CSV).
    #[arg(long, value_name = "FILE")]
    pub flows: Option<PathBuf>,

    /// Keep only rows labeled benign; without this flag every row must
    /// already be benign.
    #[arg(long)]
    pub benign_only: bool,

    /// Width of the two hidden layers.
    #[arg(long, value_name = "UNITS")]
    pub hidden: Option<usize>,

    /// Width of the latent layer.
    #[arg(long, value_name = "UNITS")]
    pub latent: Option<usize>,

    /// Maximum number of training epochs.
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,

    /// ADAM learning rate.
    #[arg(long, value_name = "RATE")]
    pub learning_rate: Option<f64>,

    /// Mini-batch size.
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,

    /// Epochs without improvement before training stops early.
    #[arg(long, value_name = "N")]
    pub patience: Option<usize>,

    /// Smallest loss drop that counts as an improvement.
    #[arg(long, value_name = "DELTA")]
    pub min_delta: Option<f64>,

    /// Use an identity output layer instead of ReLU.
    #[arg(long)]
    pub linear_output: bool,

    /// Fraction of rows held out for testing.
    #[arg(long, value_name = "FRACTION")]
    pub test_fraction: Option<f64>,

    /// Base seed; every random choice in the run derives from it.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Output model artifact (JSON); the training curve CSV lands next
    /// to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Optional flow-table output holding the training split.
    #[arg(long, value_name = "FILE")]
    pub train_out: Option<PathBuf>,

    /// Optional flow-table output holding the held-out split.
    #[arg(long, value_name = "FILE")]
    pub test_out: Option<PathBuf>,
}

/// Arguments for `falconc profile`.
#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Trained model artifact (JSON).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Input flow table as `tag=path`, repeatable; a bare path uses the
    /// file stem as its tag.
    #[arg(long = "input", value_name = "TAG=FILE")]
    pub inputs: Vec<String>,

    /// Output error-profile CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments for `falconc calibrate`.
#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Boundary family: `naive` or `refined`.
    #[arg(long, value_name = "MODE")]
    pub mode: Option<String>,

    /// Base threshold; errors at or below it are always benign.
    #[arg(long, value_name = "TAU")]
    pub tau: Option<f64>,

    /// Gap between consecutive errors that starts a new cluster
    /// (refined mode).
    #[arg(long, value_name = "GAP")]
    pub gap: Option<f64>,

    /// Margin added on both sides of each carved interval (refined mode).
    #[arg(long, value_name = "MARGIN")]
    pub margin: Option<f64>,

    /// Widest cluster span that may be carved into a benign interval
    /// (refined mode).
    #[arg(long, value_name = "WIDTH")]
    pub max_width: Option<f64>,

    /// Trained model artifact, required in refined mode.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Benign flow table scored for refined calibration.
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,

    /// Output boundary artifact (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments for `falconc label`.
#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Trained model artifact (JSON).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Decision-boundary artifact (JSON).
    #[arg(long, value_name = "FILE")]
    pub boundary: Option<PathBuf>,

    /// Flow table to label (CSV).
    #[arg(long, value_name = "FILE")]
    pub flows: Option<PathBuf>,

    /// Output labels CSV, one row per input flow.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments for `falconc sweep`.
#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Input flow table (CSV).
    #[arg(long, value_name = "FILE")]
    pub flows: Option<PathBuf>,

    /// Keep only rows labeled benign; without this flag every row must
    /// already be benign.
    #[arg(long)]
    pub benign_only: bool,

    /// Smallest latent width to try.
    #[arg(long, value_name = "UNITS")]
    pub latent_min: Option<usize>,

    /// Largest latent width to try.
    #[arg(long, value_name = "UNITS")]
    pub latent_max: Option<usize>,

    /// Independently seeded trials per latent width.
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,

    /// Centered window width for the rolling mean over per-dim means.
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,

    /// Width of the two hidden layers.
    #[arg(long, value_name = "UNITS")]
    pub hidden: Option<usize>,

    /// Fraction of rows held out for scoring each trial.
    #[arg(long, value_name = "FRACTION")]
    pub holdout: Option<f64>,

    /// Maximum number of training epochs per trial.
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,

    /// ADAM learning rate.
    #[arg(long, value_name = "RATE")]
    pub learning_rate: Option<f64>,

    /// Mini-batch size.
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,

    /// Use an identity output layer instead of ReLU.
    #[arg(long)]
    pub linear_output: bool,

    /// Base seed; holdout split and every trial derive from it.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Output per-trial CSV; the per-dim summary CSV lands next to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments for `falconc audit`.
#[derive(Debug, Args)]
pub struct AuditArgs {
    /// External detector's decision log (CSV).
    #[arg(long, value_name = "FILE")]
    pub decisions: Option<PathBuf>,

    /// Reference labels CSV produced by `falconc label`.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,

    /// Output audit report (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
