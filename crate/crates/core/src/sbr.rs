//! Signal-based representation simulator.
//!
//! A label is drawn from the prior, a signal is drawn from the label's signal
//! distribution, the modelled learner forms the Bayes posterior for that
//! signal and reports the score minimizing its expected weighted loss. The
//! resulting datasets are loss-calibrated by construction and carry the true
//! posterior of every row.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). Rows are generated in
//! chunks of [`CHUNK_ROWS`]; chunk `c` uses the generator seeded with the
//! configured seed on stream `c`, so output does not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ScoredDataset;
use crate::diagnostics::BinScore;
use crate::error::{domain, Error, Result};
use crate::losses::{LossSpec, WeightSpec};
use crate::scoring::{optimal_score_binary, optimal_score_multi, PosteriorBelief};

pub const CHUNK_ROWS: usize = 1 << 16;
const SUM_TOLERANCE: f64 = 1e-12;

/// Prior over labels and per-label signal distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExperimentRepr", into = "ExperimentRepr")]
pub struct StatisticalExperiment {
    prior: Vec<f64>,
    /// `conditionals[s][y] = P(s | y)`.
    conditionals: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ExperimentRepr {
    prior: Vec<f64>,
    conditionals: Vec<Vec<f64>>,
}

impl TryFrom<ExperimentRepr> for StatisticalExperiment {
    type Error = Error;

    fn try_from(r: ExperimentRepr) -> Result<Self> {
        Self::new(r.prior, r.conditionals)
    }
}

impl From<StatisticalExperiment> for ExperimentRepr {
    fn from(e: StatisticalExperiment) -> Self {
        Self {
            prior: e.prior,
            conditionals: e.conditionals,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidExperiment(msg.into())
}

impl StatisticalExperiment {
    /// `conditionals` is indexed `[signal][label]`.
    pub fn new(prior: Vec<f64>, conditionals: Vec<Vec<f64>>) -> Result<Self> {
        let n = prior.len();
        if n < 2 {
            return Err(invalid(format!("need at least two labels, got {n}")));
        }
        if conditionals.is_empty() {
            return Err(invalid("need at least one signal"));
        }
        let finite_nonneg = |v: &f64| v.is_finite() && *v >= 0.0;
        if !prior.iter().all(finite_nonneg) {
            return Err(invalid("prior entries must be finite and nonnegative"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE * n as f64 {
            return Err(invalid(format!("prior sums to {total}")));
        }
        let m = conditionals.len();
        for (s, row) in conditionals.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!(
                    "signal {s} has {} label entries, expected {n}",
                    row.len()
                )));
            }
            if !row.iter().all(finite_nonneg) {
                return Err(invalid(format!("signal {s} has a negative probability")));
            }
        }
        for y in 0..n {
            let col: f64 = conditionals.iter().map(|row| row[y]).sum();
            if (col - 1.0).abs() > SUM_TOLERANCE * m as f64 {
                return Err(invalid(format!(
                    "signal distribution for label {y} sums to {col}"
                )));
            }
        }
        let exp = Self {
            prior,
            conditionals,
        };
        if let Some(s) = (0..m).find(|&s| exp.signal_marginal(s) <= 0.0) {
            return Err(invalid(format!("signal {s} has zero marginal probability")));
        }
        Ok(exp)
    }

    pub fn n_labels(&self) -> usize {
        self.prior.len()
    }

    pub fn n_signals(&self) -> usize {
        self.conditionals.len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// `P(s | y)`.
    pub fn likelihood(&self, signal: usize, label: usize) -> f64 {
        self.conditionals[signal][label]
    }

    /// `P(s) = sum_y P(s | y) P(y)`.
    pub fn signal_marginal(&self, signal: usize) -> f64 {
        self.conditionals[signal]
            .iter()
            .zip(&self.prior)
            .map(|(l, p)| l * p)
            .sum()
    }

    /// Bayes posterior over labels after observing `signal`.
    pub fn posterior(&self, signal: usize) -> Result<PosteriorBelief> {
        if signal >= self.n_signals() {
            return Err(Error::UnknownSignal {
                signal,
                count: self.n_signals(),
            });
        }
        let marginal = self.signal_marginal(signal);
        let probs: Vec<f64> = self.conditionals[signal]
            .iter()
            .zip(&self.prior)
            .map(|(l, p)| l * p / marginal)
            .collect();
        PosteriorBelief::new(probs)
    }

    /// Posteriors for every signal, in signal order.
    pub fn posteriors(&self) -> Result<Vec<PosteriorBelief>> {
        (0..self.n_signals()).map(|s| self.posterior(s)).collect()
    }
}

/// Score each signal receives from a loss-minimizing learner.
///
/// The optimum is the same for every strictly proper base loss, so only the
/// weights matter here.
pub fn signal_scores(experiment: &StatisticalExperiment, weights: &WeightSpec) -> Result<Vec<BinScore>> {
    let n = experiment.n_labels();
    if weights.n_classes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weights.n_classes(),
        });
    }
    experiment
        .posteriors()?
        .iter()
        .map(|gamma| match weights {
            WeightSpec::Binary { beta1 } => {
                optimal_score_binary(*beta1, gamma.gamma1()).map(BinScore::Scalar)
            }
            WeightSpec::Matrix(m) => optimal_score_multi(m, gamma).map(BinScore::Vector),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub experiment: StatisticalExperiment,
    pub loss: LossSpec,
    pub weights: WeightSpec,
    pub sample_count: usize,
    pub seed: u64,
}

/// Ground truth behind each simulated row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub signals: Vec<usize>,
    pub signal_posteriors: Vec<PosteriorBelief>,
}

impl Sidecar {
    pub fn true_posterior(&self, row: usize) -> &PosteriorBelief {
        &self.signal_posteriors[self.signals[row]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub dataset: ScoredDataset,
    pub sidecar: Option<Sidecar>,
    pub signal_scores: Vec<BinScore>,
}

/// Inverse-CDF sampler over a finite distribution.
struct Categorical {
    cum: Vec<f64>,
    /// Last outcome with positive mass; rounding in `cum` never selects past it.
    last: usize,
}

impl Categorical {
    fn new(probs: impl Iterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let mut last = 0;
        let cum = probs
            .enumerate()
            .map(|(i, p)| {
                if p > 0.0 {
                    last = i;
                }
                acc += p;
                acc
            })
            .collect();
        Self { cum, last }
    }

    fn sample(&self, u: f64) -> usize {
        self.cum.partition_point(|&c| c <= u).min(self.last)
    }
}

/// Draws `(label, signal)` pairs and emits the optimal score for each signal.
pub fn simulate(config: &SimulationConfig, with_sidecar: bool) -> Result<Simulation> {
    if config.sample_count == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let exp = &config.experiment;
    let n = exp.n_labels();
    let scores = signal_scores(exp, &config.weights)?;

    let label_dist = Categorical::new(exp.prior.iter().copied());
    let signal_dist: Vec<Categorical> = (0..n)
        .map(|y| Categorical::new(exp.conditionals.iter().map(|row| row[y])))
        .collect();

    let chunks = config.sample_count.div_ceil(CHUNK_ROWS);
    let draws: Vec<(usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(c as u64);
            let rows = CHUNK_ROWS.min(config.sample_count - c * CHUNK_ROWS);
            (0..rows)
                .map(|_| {
                    let y = label_dist.sample(rng.random::<f64>());
                    let s = signal_dist[y].sample(rng.random::<f64>());
                    (y, s)
                })
                .collect::<Vec<_>>()
        })
        .flatten_iter()
        .collect();

    let labels: Vec<usize> = draws.iter().map(|&(y, _)| y).collect();
    let dataset = match &config.weights {
        WeightSpec::Binary { .. } => {
            let per_signal: Vec<f64> = scores
                .iter()
                .map(|s| match s {
                    BinScore::Scalar(a) => *a,
                    BinScore::Vector(v) => v[1],
                })
                .collect();
            ScoredDataset::binary(draws.iter().map(|&(_, s)| per_signal[s]).collect(), labels)?
        }
        WeightSpec::Matrix(_) => {
            let mut flat = Vec::with_capacity(n * draws.len());
            for &(_, s) in &draws {
                match &scores[s] {
                    BinScore::Vector(v) => flat.extend_from_slice(v),
                    BinScore::Scalar(_) => unreachable!("matrix weights give vector scores"),
                }
            }
            ScoredDataset::multi_flat(n, flat, labels)?
        }
    };
    let sidecar = if with_sidecar {
        Some(Sidecar {
            signals: draws.iter().map(|&(_, s)| s).collect(),
            signal_posteriors: exp.posteriors()?,
        })
    } else {
        None
    };
    Ok(Simulation {
        dataset,
        sidecar,
        signal_scores: scores,
    })
}

/// Binary experiment for imbalanced data.
///
/// Posterior log-odds of the signals are evenly spaced over
/// `logit(p) +- 2 * informativeness * ln(10)`, increasing with the signal
/// index. Signal masses are the maximum-entropy distribution whose mean
/// posterior equals the positive rate, `P(s) ∝ exp(lambda * g_s)`, which keeps
/// the prior correct while staying as close to uniform as possible.
pub fn imbalance_preset(
    positive_rate: f64,
    signal_count: usize,
    informativeness: f64,
) -> Result<StatisticalExperiment> {
    if !(positive_rate > 0.0 && positive_rate < 1.0) {
        return Err(domain(format!(
            "positive rate must lie in (0, 1), got {positive_rate}"
        )));
    }
    if signal_count < 2 {
        return Err(domain(format!("need at least two signals, got {signal_count}")));
    }
    if !(informativeness > 0.0 && informativeness <= 1.0) {
        return Err(domain(format!(
            "informativeness must lie in (0, 1], got {informativeness}"
        )));
    }
    let p = positive_rate;
    let center = (p / (1.0 - p)).ln();
    let half_width = 2.0 * informativeness * 10f64.ln();
    let targets: Vec<f64> = (0..signal_count)
        .map(|s| {
            let u = 2.0 * s as f64 / (signal_count - 1) as f64 - 1.0;
            1.0 / (1.0 + (-(center + half_width * u)).exp())
        })
        .collect();

    let masses = max_entropy_masses(&targets, p);
    let pos_total: f64 = masses.iter().zip(&targets).map(|(w, g)| w * g).sum();
    let neg_total: f64 = masses.iter().zip(&targets).map(|(w, g)| w * (1.0 - g)).sum();
    let conditionals = masses
        .iter()
        .zip(&targets)
        .map(|(w, g)| vec![w * (1.0 - g) / neg_total, w * g / pos_total])
        .collect();
    StatisticalExperiment::new(vec![1.0 - p, p], conditionals)
}

/// Weights `∝ exp(lambda * g)` whose weighted mean of `g` equals `target`.
fn max_entropy_masses(values: &[f64], target: f64) -> Vec<f64> {
    let weights = |lambda: f64| -> Vec<f64> {
        let top = values
            .iter()
            .map(|g| lambda * g)
            .fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = values.iter().map(|g| (lambda * g - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    let mean = |lambda: f64| -> f64 {
        weights(lambda)
            .iter()
            .zip(values)
            .map(|(w, g)| w * g)
            .sum()
    };
    let lo_v = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo_v < target && target < hi_v) {
        return vec![1.0 / values.len() as f64; values.len()];
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean(lo) > target {
        lo *= 2.0;
    }
    while mean(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    weights(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_signal() -> StatisticalExperiment {
        // P(s0 | y) = (0.9, 0.5), P(s1 | y) = (0.1, 0.5)
        StatisticalExperiment::new(vec![0.98, 0.02], vec![vec![0.9, 0.5], vec![0.1, 0.5]]).unwrap()
    }

    #[test]
    fn bayes_posterior_example() {
        let g = two_signal().posterior(1).unwrap();
        // 0.01 / (0.098 + 0.01)
        assert!((g.gamma1() - 0.092_592_592_592_592_6).abs() < 1e-15);
    }

    #[test]
    fn uninformative_signals_return_prior() {
        let exp =
            StatisticalExperiment::new(vec![0.3, 0.7], vec![vec![0.25, 0.25], vec![0.75, 0.75]])
                .unwrap();
        for s in 0..2 {
            let g = exp.posterior(s).unwrap();
            assert!((g.probs()[0] - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn revealing_signal_is_degenerate() {
        let exp = StatisticalExperiment::new(
            vec![0.2, 0.5, 0.3],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert_eq!(exp.posterior(1).unwrap().probs(), &[0.0, 1.0, 0.0]);
        assert_eq!(
            exp.posterior(3).unwrap_err(),
            Error::UnknownSignal {
                signal: 3,
                count: 3
            }
        );
    }

    #[test]
    fn construction_rejects_invalid() {
        assert!(StatisticalExperiment::new(vec![0.5, 0.6], vec![vec![1.0, 1.0]]).is_err());
        assert!(StatisticalExperiment::new(vec![0.5, 0.5], vec![vec![0.5, 1.0]]).is_err());
        // signal 1 is impossible
        assert!(StatisticalExperiment::new(
            vec![0.5, 0.5],
            vec![vec![1.0, 1.0], vec![0.0, 0.0]]
        )
        .is_err());
    }

    #[test]
    fn signal_score_examples() {
        let exp = two_signal();
        let truthful = signal_scores(&exp, &WeightSpec::binary(0.5).unwrap()).unwrap();
        for (s, score) in truthful.iter().enumerate() {
            let BinScore::Scalar(a) = score else { panic!() };
            assert!((a - exp.posterior(s).unwrap().gamma1()).abs() < 1e-15);
        }
        let weighted = signal_scores(&exp, &WeightSpec::binary(0.99).unwrap()).unwrap();
        let BinScore::Scalar(a) = weighted[1] else { panic!() };
        // exactly 495 / 544 for g = 0.01 / 0.108
        assert!((a - 495.0 / 544.0).abs() < 1e-15, "{a}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let config = SimulationConfig {
            experiment: imbalance_preset(0.1, 5, 0.5).unwrap(),
            loss: LossSpec::log_loss(),
            weights: WeightSpec::binary(0.9).unwrap(),
            sample_count: 150_000,
            seed: 7,
        };
        let a = simulate(&config, true).unwrap();
        let b = simulate(&config, true).unwrap();
        assert_eq!(a, b);
        let c = simulate(&SimulationConfig { seed: 8, ..config }, false).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn preset_shapes() {
        let exp = imbalance_preset(0.02, 10, 1.0).unwrap();
        let post: Vec<f64> = exp.posteriors().unwrap().iter().map(|g| g.gamma1()).collect();
        assert!(post.windows(2).all(|w| w[0] < w[1]));
        assert!(post[0] <= 0.002 && post[9] >= 0.2);

        let flat = imbalance_preset(0.02, 4, 1e-9).unwrap();
        for g in flat.posteriors().unwrap() {
            assert!((g.gamma1() - 0.02).abs() < 1e-8);
        }
        assert!(imbalance_preset(0.0, 10, 1.0).is_err());
        assert!(imbalance_preset(0.02, 1, 1.0).is_err());
        assert!(imbalance_preset(0.02, 10, 0.0).is_err());
    }

    #[test]
    fn posteriors_average_to_prior() {
        let exp = imbalance_preset(0.02, 10, 1.0).unwrap();
        let mut avg = [0.0; 2];
        for s in 0..exp.n_signals() {
            let g = exp.posterior(s).unwrap();
            for (slot, p) in avg.iter_mut().zip(g.probs()) {
                *slot += exp.signal_marginal(s) * p;
            }
        }
        assert!((avg[1] - 0.02).abs() < 1e-12);
        assert!((avg[0] - 0.98).abs() < 1e-12);
    }

    #[test]
    fn experiment_serde_validates() {
        let repr = ExperimentRepr {
            prior: vec![0.5, 0.6],
            conditionals: vec![vec![1.0, 1.0]],
        };
        assert!(StatisticalExperiment::try_from(repr).is_err());
    }
}
