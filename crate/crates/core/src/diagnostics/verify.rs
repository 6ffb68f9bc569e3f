use serde::{Deserialize, Serialize};

use super::regret::{regret_test, BinScore, RegretOptions, RegretReport};
use crate::dataset::ScoredDataset;
use crate::error::Result;
use crate::losses::{LossSpec, WeightSpec};
use crate::sbr::StatisticalExperiment;

/// The representation read straight off the data: one signal per score bin,
/// joint `P(s, y)` equal to the empirical joint, and each signal scored with
/// the bin's own representative score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSbr {
    pub experiment: StatisticalExperiment,
    pub signal_scores: Vec<BinScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbrVerdict {
    pub has_sbr: bool,
    pub tolerance: f64,
    pub canonical: Option<CanonicalSbr>,
    pub report: RegretReport,
}

/// Checks whether binned data admits a signal-based representation under the
/// given loss, i.e. whether it is loss-calibrated within `tolerance`
/// (`None` uses [`RegretReport::default_tolerance`]).
pub fn verify_sbr(
    data: &ScoredDataset,
    loss: &LossSpec,
    weights: &WeightSpec,
    tolerance: Option<f64>,
    options: RegretOptions,
) -> Result<SbrVerdict> {
    let report = regret_test(data, loss, weights, options)?;
    let tolerance = tolerance.unwrap_or_else(|| report.default_tolerance());
    let has_sbr = report.is_loss_calibrated(tolerance);
    let canonical = if has_sbr {
        Some(canonical_sbr(&report, data.n_classes())?)
    } else {
        None
    };
    Ok(SbrVerdict {
        has_sbr,
        tolerance,
        canonical,
        report,
    })
}

fn canonical_sbr(report: &RegretReport, n_classes: usize) -> Result<CanonicalSbr> {
    let total = report.total_count() as f64;
    let mut label_totals = vec![0usize; n_classes];
    for bin in &report.per_bin {
        for (slot, c) in label_totals.iter_mut().zip(&bin.label_counts) {
            *slot += c;
        }
    }
    let prior = label_totals.iter().map(|&c| c as f64 / total).collect();
    let m = report.per_bin.len();
    let conditionals = report
        .per_bin
        .iter()
        .map(|bin| {
            bin.label_counts
                .iter()
                .zip(&label_totals)
                .map(|(&c, &t)| {
                    if t == 0 {
                        1.0 / m as f64
                    } else {
                        c as f64 / t as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok(CanonicalSbr {
        experiment: StatisticalExperiment::new(prior, conditionals)?,
        signal_scores: report.per_bin.iter().map(|b| b.bin_score.clone()).collect(),
    })
}
