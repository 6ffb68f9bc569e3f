use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use losscal_core::{Binning, LossSpec, WeightSpec};

use crate::error::CliError;
use crate::io::{read_weight_matrix, Format};

#[derive(Debug, Parser)]
#[command(
    name = "losscal",
    version,
    about = "Loss-calibration diagnostics and corrections for class-weighted classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append loss-corrected scores to every input row.
    Correct(CorrectArgs),
    /// Decile (or other) binned calibration curve, optional theory curve and SVG.
    Curve(CurveArgs),
    /// Loss-calibration regret test with a JSON report.
    Diagnose(DiagnoseArgs),
    /// Generate a dataset from a signal-based representation.
    Simulate(SimulateArgs),
    /// Loss correction next to the prior-shift correction, row by row.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl InputArgs {
    pub fn format(&self) -> Format {
        self.format.unwrap_or_else(|| Format::infer(Some(&self.input)))
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct WeightArgs {
    /// Positive-class weight in (0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Headerless CSV with an n x n positive weight matrix.
    #[arg(long = "beta-matrix")]
    pub beta_matrix: Option<PathBuf>,
    /// Resampling ratio of positives to negatives; equivalent to beta = 1 / (1 + delta).
    #[arg(long)]
    pub delta: Option<f64>,
}

impl WeightArgs {
    pub fn resolve(&self) -> Result<Option<WeightSpec>, CliError> {
        let given = [
            self.beta.is_some(),
            self.beta_matrix.is_some(),
            self.delta.is_some(),
        ]
        .iter()
        .filter(|g| **g)
        .count();
        if given > 1 {
            return Err(CliError::Usage(
                "give exactly one of --beta, --beta-matrix, --delta".into(),
            ));
        }
        Ok(match (&self.beta, &self.beta_matrix, &self.delta) {
            (Some(b), _, _) => Some(WeightSpec::binary(*b)?),
            (_, Some(path), _) => Some(WeightSpec::matrix(read_weight_matrix(path)?)),
            (_, _, Some(d)) => Some(WeightSpec::from_delta(*d)?),
            _ => None,
        })
    }

    pub fn require(&self) -> Result<WeightSpec, CliError> {
        self.resolve()?.ok_or_else(|| {
            CliError::Usage("one of --beta, --beta-matrix, --delta is required".into())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossKind {
    Log,
    Brier,
}

impl LossKind {
    pub fn spec(self) -> LossSpec {
        match self {
            Self::Log => LossSpec::log_loss(),
            Self::Brier => LossSpec::brier(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinningKind {
    /// Equal-count bins.
    Quantile,
    /// Equal-width bins on [0, 1].
    Width,
    /// One bin per distinct score.
    Distinct,
}

#[derive(Debug, Args)]
pub struct BinningArgs {
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, value_enum, default_value = "quantile")]
    pub binning: BinningKind,
}

impl BinningArgs {
    pub fn binning(&self) -> Binning {
        match self.binning {
            BinningKind::Quantile => Binning::EqualCount(self.bins),
            BinningKind::Width => Binning::EqualWidth(self.bins),
            BinningKind::Distinct => Binning::Distinct,
        }
    }
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub binning: BinningArgs,
    /// Weights for the theoretical curve (binary only).
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Class whose one-vs-rest curve is built.
    #[arg(long, default_value_t = 1)]
    pub class: usize,
    /// Write the theoretical curve for the given weight to this CSV.
    #[arg(long)]
    pub theory: Option<PathBuf>,
    /// Bin loss-corrected scores instead of raw scores.
    #[arg(long)]
    pub apply_correction: bool,
    /// Write a log-log reliability diagram.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_enum, default_value = "log")]
    pub loss: LossKind,
    #[command(flatten)]
    pub binning: BinningArgs,
    /// Maximum per-bin regret for a loss-calibrated verdict; defaults to
    /// max(5e-3, 3 / sqrt(smallest bin count)).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Use the brute-force grid oracle with this many points instead of the closed form.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_enum, default_value = "log")]
    pub loss: LossKind,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file with `prior` and `conditionals` ([signal][label]); overrides the preset.
    #[arg(long)]
    pub experiment: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    pub positive_rate: f64,
    #[arg(long, default_value_t = 10)]
    pub signals: usize,
    #[arg(long, default_value_t = 1.0)]
    pub informativeness: f64,
    /// Append the generating signal and true posterior to each row.
    #[arg(long)]
    pub sidecar: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

/// Rejects output paths that alias the input or each other.
pub fn check_distinct(paths: &[Option<&Path>]) -> Result<(), CliError> {
    let present: Vec<&Path> = paths.iter().flatten().copied().collect();
    for (i, a) in present.iter().enumerate() {
        if present[i + 1..].iter().any(|b| a == b) {
            return Err(CliError::Usage(format!(
                "path {} is used more than once",
                a.display()
            )));
        }
    }
    Ok(())
}
