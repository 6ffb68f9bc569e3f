//! Loss-calibration regret: per score bin, how much expected weighted loss
//! could be saved by replacing every score in the bin with the single best
//! alternative score for the bin's empirical label distribution.

use serde::{Deserialize, Serialize};

use super::binning::{bin_dataset, Binning};
use crate::dataset::ScoredDataset;
use crate::error::{Error, Result};
use crate::losses::{LossSpec, WeightMatrix, WeightSpec};
use crate::scoring::{
    argmin_oracle_binary, argmin_oracle_multi, optimal_score_binary, optimal_score_multi,
    PosteriorBelief,
};

/// Floor of the default loss-calibration tolerance.
pub const MIN_DEFAULT_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegretMode {
    /// Optimal scores from the closed-form rules.
    Analytic,
    /// Optimal scores from the brute-force grid oracles.
    GridSearch(usize),
}

/// How bin losses are weighted. Both give the same report up to rounding:
/// weighting by the joint `P(a, y)` and dividing by `P(a)` equals weighting
/// by the conditional `P(y | a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegretForm {
    Conditional,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretOptions {
    pub binning: Binning,
    pub mode: RegretMode,
    pub form: RegretForm,
}

impl Default for RegretOptions {
    fn default() -> Self {
        Self {
            binning: Binning::default(),
            mode: RegretMode::Analytic,
            form: RegretForm::Conditional,
        }
    }
}

impl RegretOptions {
    pub fn with_binning(binning: Binning) -> Self {
        Self {
            binning,
            ..Self::default()
        }
    }
}

/// Scalar positive-class score or a full score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BinScore {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretBin {
    pub bin_score: BinScore,
    pub count: usize,
    pub label_counts: Vec<usize>,
    pub realized_loss: f64,
    pub minimal_loss: f64,
    pub regret: f64,
    pub argmin_score: BinScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub per_bin: Vec<RegretBin>,
    pub max_regret: f64,
    /// Count-weighted.
    pub mean_regret: f64,
    pub dropped_bins: usize,
    pub merged_cells: usize,
}

impl RegretReport {
    pub fn min_bin_count(&self) -> usize {
        self.per_bin.iter().map(|b| b.count).min().unwrap_or(0)
    }

    /// `max(5e-3, 3 / sqrt(min bin count))`.
    pub fn default_tolerance(&self) -> f64 {
        let min = self.min_bin_count().max(1) as f64;
        MIN_DEFAULT_TOLERANCE.max(3.0 / min.sqrt())
    }

    pub fn is_loss_calibrated(&self, tolerance: f64) -> bool {
        self.max_regret <= tolerance
    }

    pub fn total_count(&self) -> usize {
        self.per_bin.iter().map(|b| b.count).sum()
    }
}

/// Binary loss as seen by the positive-class score coordinate.
enum BinaryWeights<'a> {
    Scalar(f64),
    Matrix(&'a WeightMatrix),
}

impl BinaryWeights<'_> {
    fn loss(&self, spec: &LossSpec, a1: f64, label: usize) -> f64 {
        match self {
            Self::Scalar(beta1) => spec.weighted_loss_binary(*beta1, a1, label == 1),
            Self::Matrix(m) => m.get(label, 1) * spec.base_loss(a1, label == 1),
        }
    }

    fn optimum(&self, gamma1: f64, mode: RegretMode, spec: &LossSpec) -> Result<f64> {
        match (self, mode) {
            (Self::Scalar(beta1), RegretMode::Analytic) => optimal_score_binary(*beta1, gamma1),
            (Self::Scalar(beta1), RegretMode::GridSearch(size)) => {
                argmin_oracle_binary(spec, *beta1, gamma1, size)
            }
            (Self::Matrix(m), RegretMode::Analytic) => {
                Ok(optimal_score_multi(m, &PosteriorBelief::binary(gamma1)?)?[1])
            }
            (Self::Matrix(m), RegretMode::GridSearch(size)) => {
                Ok(argmin_oracle_multi(spec, m, &PosteriorBelief::binary(gamma1)?, size)?[1])
            }
        }
    }
}

/// `(weights over labels, normalizer)` for a bin under the chosen form.
fn label_weights(counts: &[usize], bin_count: usize, total: usize, form: RegretForm) -> (Vec<f64>, f64) {
    match form {
        RegretForm::Conditional => (
            counts.iter().map(|&c| c as f64 / bin_count as f64).collect(),
            1.0,
        ),
        RegretForm::Joint => (
            counts.iter().map(|&c| c as f64 / total as f64).collect(),
            bin_count as f64 / total as f64,
        ),
    }
}

fn finish(per_bin: Vec<RegretBin>, dropped_bins: usize, merged_cells: usize) -> RegretReport {
    let total: usize = per_bin.iter().map(|b| b.count).sum();
    let max_regret = per_bin.iter().map(|b| b.regret).fold(0.0, f64::max);
    let mean_regret = per_bin
        .iter()
        .map(|b| b.count as f64 / total as f64 * b.regret)
        .sum();
    RegretReport {
        per_bin,
        max_regret,
        mean_regret,
        dropped_bins,
        merged_cells,
    }
}

/// Runs the loss-calibration test on binned data.
pub fn regret_test(
    data: &ScoredDataset,
    loss: &LossSpec,
    weights: &WeightSpec,
    options: RegretOptions,
) -> Result<RegretReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if weights.n_classes() != data.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: data.n_classes(),
            actual: weights.n_classes(),
        });
    }
    let bins = bin_dataset(data, options.binning)?;
    let total = data.len();
    let labels = data.labels();
    let n = data.n_classes();

    let per_bin = match data.binary_scores() {
        Some(scores) => {
            let bw = match weights {
                WeightSpec::Binary { beta1 } => BinaryWeights::Scalar(*beta1),
                WeightSpec::Matrix(m) => BinaryWeights::Matrix(m),
            };
            bins.groups
                .iter()
                .map(|rows| {
                    let count = rows.len();
                    let mut counts = vec![0usize; 2];
                    let mut sum = 0.0;
                    for &r in rows {
                        counts[labels[r]] += 1;
                        sum += scores[r];
                    }
                    let a = sum / count as f64;
                    let gamma1 = counts[1] as f64 / count as f64;
                    let a_star = bw.optimum(gamma1, options.mode, loss)?;
                    let (w, norm) = label_weights(&counts, count, total, options.form);
                    let realized = (0..2).map(|y| w[y] * bw.loss(loss, a, y)).sum::<f64>() / norm;
                    let minimal =
                        (0..2).map(|y| w[y] * bw.loss(loss, a_star, y)).sum::<f64>() / norm;
                    Ok(RegretBin {
                        bin_score: BinScore::Scalar(a),
                        count,
                        label_counts: counts,
                        realized_loss: realized,
                        minimal_loss: minimal,
                        regret: (realized - minimal).max(0.0),
                        argmin_score: BinScore::Scalar(a_star),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let WeightSpec::Matrix(m) = weights else {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: 2,
                });
            };
            bins.groups
                .iter()
                .map(|rows| {
                    let count = rows.len();
                    let mut counts = vec![0usize; n];
                    let mut mean = vec![0.0; n];
                    for &r in rows {
                        counts[labels[r]] += 1;
                        for (c, slot) in mean.iter_mut().enumerate() {
                            *slot += data.class_score(r, c);
                        }
                    }
                    for slot in &mut mean {
                        *slot /= count as f64;
                    }
                    let masses: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
                    let gamma = PosteriorBelief::from_masses(&masses)?;
                    let a_star = match options.mode {
                        RegretMode::Analytic => optimal_score_multi(m, &gamma)?,
                        RegretMode::GridSearch(size) => argmin_oracle_multi(loss, m, &gamma, size)?,
                    };
                    let (w, norm) = label_weights(&counts, count, total, options.form);
                    let mut realized = 0.0;
                    let mut minimal = 0.0;
                    for y in 0..n {
                        realized += w[y] * loss.weighted_loss_multi(m, &mean, y)?;
                        minimal += w[y] * loss.weighted_loss_multi(m, &a_star, y)?;
                    }
                    realized /= norm;
                    minimal /= norm;
                    Ok(RegretBin {
                        bin_score: BinScore::Vector(mean),
                        count,
                        label_counts: counts,
                        realized_loss: realized,
                        minimal_loss: minimal,
                        regret: (realized - minimal).max(0.0),
                        argmin_score: BinScore::Vector(a_star),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(finish(per_bin, bins.dropped_empty, bins.merged))
}
