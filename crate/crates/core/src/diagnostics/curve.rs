use serde::{Deserialize, Serialize};

use super::binning::{bin_scalar, Binning};
use crate::dataset::ScoredDataset;
use crate::error::{domain, Error, Result};
use crate::scoring::optimal_score_binary;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub mean_score: f64,
    pub empirical_freq: f64,
    pub count: usize,
    pub lo_ci: f64,
    pub hi_ci: f64,
}

impl CurveBin {
    fn from_rows(scores: &[f64], hits: &[bool], rows: &[usize]) -> Self {
        let count = rows.len();
        let n = count as f64;
        let mean_score = rows.iter().map(|&r| scores[r]).sum::<f64>() / n;
        let positives = rows.iter().filter(|&&r| hits[r]).count();
        let p = positives as f64 / n;
        let half = Z_95 * (p * (1.0 - p) / n).sqrt();
        Self {
            mean_score,
            empirical_freq: p,
            count,
            lo_ci: (p - half).max(0.0),
            hi_ci: (p + half).min(1.0),
        }
    }

    /// Whether `x` lies inside the bin's 95% interval for the frequency.
    pub fn ci_contains(&self, x: f64) -> bool {
        self.lo_ci <= x && x <= self.hi_ci
    }
}

/// Binned reliability curve: mean score against empirical label frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bins: Vec<CurveBin>,
    /// Requested bins that held no rows and were omitted.
    pub dropped_empty: usize,
    /// Every score was identical, so only one bin exists.
    pub degenerate: bool,
}

impl CalibrationCurve {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Number of bins whose interval contains `reference(mean_score)`.
    pub fn bins_within_ci(&self, reference: impl Fn(f64) -> f64) -> usize {
        self.bins
            .iter()
            .filter(|b| b.ci_contains(reference(b.mean_score)))
            .count()
    }
}

/// Curve from parallel score / outcome columns.
pub fn curve_from_columns(
    scores: &[f64],
    hits: &[bool],
    binning: Binning,
) -> Result<CalibrationCurve> {
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scores.len() != hits.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: hits.len(),
        });
    }
    let degenerate = scores.iter().all(|&s| s == scores[0]);
    let bins = bin_scalar(scores, binning)?;
    Ok(CalibrationCurve {
        bins: bins
            .groups
            .iter()
            .map(|rows| CurveBin::from_rows(scores, hits, rows))
            .collect(),
        dropped_empty: bins.dropped_empty,
        degenerate,
    })
}

/// One-vs-rest calibration curve for `class_index`.
pub fn build_curve(
    data: &ScoredDataset,
    class_index: usize,
    binning: Binning,
) -> Result<CalibrationCurve> {
    let scores = data.class_column(class_index)?;
    let hits: Vec<bool> = data.labels().iter().map(|&y| y == class_index).collect();
    curve_from_columns(&scores, &hits, binning)
}

/// Curve traced by a loss-calibrated model: each posterior `g` on the grid
/// maps to `(optimal score, g)`.
pub fn theoretical_curve(beta1: f64, gamma_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    gamma_grid
        .iter()
        .map(|&g| {
            if !(g > 0.0 && g < 1.0) {
                return Err(domain(format!("grid point {g} is not interior to (0, 1)")));
            }
            Ok((optimal_score_binary(beta1, g)?, g))
        })
        .collect()
}

/// Count-weighted mean of `|freq - mean score|` over bins.
pub fn expected_calibration_error(curve: &CalibrationCurve) -> f64 {
    let total = curve.total_count() as f64;
    curve
        .bins
        .iter()
        .map(|b| b.count as f64 / total * (b.empirical_freq - b.mean_score).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::loss_correct_binary;

    #[test]
    fn constant_score_single_bin() {
        let data =
            ScoredDataset::binary(vec![0.5; 10], vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let curve = build_curve(&data, 1, Binning::default()).unwrap();
        assert!(curve.degenerate);
        assert_eq!(curve.bins.len(), 1);
        assert_eq!(curve.bins[0].empirical_freq, 0.5);
        assert_eq!(curve.total_count(), 10);
    }

    #[test]
    fn ece_examples() {
        let diagonal = CalibrationCurve {
            bins: (1..10)
                .map(|i| {
                    let p = i as f64 / 10.0;
                    CurveBin {
                        mean_score: p,
                        empirical_freq: p,
                        count: 5,
                        lo_ci: p,
                        hi_ci: p,
                    }
                })
                .collect(),
            dropped_empty: 0,
            degenerate: false,
        };
        assert_eq!(expected_calibration_error(&diagonal), 0.0);

        let one = CalibrationCurve {
            bins: vec![CurveBin {
                mean_score: 0.5,
                empirical_freq: 0.9,
                count: 7,
                lo_ci: 0.8,
                hi_ci: 1.0,
            }],
            dropped_empty: 0,
            degenerate: true,
        };
        assert!((expected_calibration_error(&one) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn theoretical_curve_examples() {
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for (s, g) in theoretical_curve(0.5, &grid).unwrap() {
            assert!((s - g).abs() < 1e-15);
        }
        let pt = theoretical_curve(0.9, &[0.1]).unwrap()[0];
        assert!((pt.0 - 0.5).abs() < 1e-15 && pt.1 == 0.1);
        let pt = theoretical_curve(0.99, &[0.02]).unwrap()[0];
        assert!((pt.0 - 0.0198 / 0.0296).abs() < 1e-15);
        assert!((loss_correct_binary(0.99, pt.0).unwrap() - 0.02).abs() < 1e-15);
        assert!(theoretical_curve(0.9, &[0.0]).is_err());
    }

    #[test]
    fn one_vs_rest_for_multiclass() {
        let data = ScoredDataset::multi(
            vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.3, 0.1], vec![0.1, 0.1, 0.8]],
            vec![1, 0, 2],
        )
        .unwrap();
        let curve = build_curve(&data, 2, Binning::EqualWidth(2)).unwrap();
        assert_eq!(curve.bins.len(), 2);
        assert_eq!(curve.bins[1].empirical_freq, 1.0);
        assert_eq!(curve.dropped_empty, 0);
    }

    #[test]
    fn empty_input() {
        assert_eq!(
            curve_from_columns(&[], &[], Binning::default()).unwrap_err(),
            Error::EmptyDataset
        );
    }
}
