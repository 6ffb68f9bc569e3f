//! Strictly proper base losses and their class-weighted extensions.
//!
//! A differentiable strictly proper binary loss is pinned down by a positive
//! weight function `w(a)` through its derivatives
//!
//! ```text
//! dL(a, 1)/da = w(a) (a - 1)        dL(a, 0)/da = w(a) a
//! ```
//!
//! Two families are provided: log loss (`w(a) = 1 / (a (1 - a))`) and the
//! Brier score (`w(a) = 2`). Class weighting is either a single positive-class
//! weight `beta1` or a full positive `n x n` matrix whose entry `(y, y')`
//! weights the loss of score coordinate `y'` when the true label is `y`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const DEFAULT_CLAMP_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    #[serde(rename = "log")]
    LogLoss,
    #[serde(rename = "brier")]
    BrierLoss,
}

/// A base loss together with the clamp applied to scores before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub family: LossFamily,
    clamp_epsilon: f64,
}

impl LossSpec {
    pub fn new(family: LossFamily) -> Self {
        Self {
            family,
            clamp_epsilon: DEFAULT_CLAMP_EPSILON,
        }
    }

    pub fn log_loss() -> Self {
        Self::new(LossFamily::LogLoss)
    }

    pub fn brier() -> Self {
        Self::new(LossFamily::BrierLoss)
    }

    pub fn with_clamp_epsilon(family: LossFamily, clamp_epsilon: f64) -> Result<Self> {
        if !(clamp_epsilon > 0.0 && clamp_epsilon < 0.5) {
            return Err(domain(format!(
                "clamp epsilon must lie in (0, 0.5), got {clamp_epsilon}"
            )));
        }
        Ok(Self {
            family,
            clamp_epsilon,
        })
    }

    pub fn clamp_epsilon(&self) -> f64 {
        self.clamp_epsilon
    }

    pub fn clamp(&self, score: f64) -> f64 {
        score.clamp(self.clamp_epsilon, 1.0 - self.clamp_epsilon)
    }

    /// The weight function `w(a)` characterizing the loss.
    pub fn weight_fn(&self, score: f64) -> f64 {
        match self.family {
            LossFamily::LogLoss => 1.0 / (score * (1.0 - score)),
            LossFamily::BrierLoss => 2.0,
        }
    }

    /// `L(score, outcome)` with the score clamped into `[eps, 1 - eps]`.
    pub fn base_loss(&self, score: f64, outcome: bool) -> f64 {
        let a = self.clamp(score);
        match (self.family, outcome) {
            (LossFamily::LogLoss, true) => -a.ln(),
            (LossFamily::LogLoss, false) => -(1.0 - a).ln(),
            (LossFamily::BrierLoss, true) => (a - 1.0) * (a - 1.0),
            (LossFamily::BrierLoss, false) => a * a,
        }
    }

    /// Analytic `dL/da`; only defined strictly inside the clamp interval.
    pub fn loss_derivative(&self, score: f64, outcome: bool) -> Result<f64> {
        let eps = self.clamp_epsilon;
        if !(score > eps && score < 1.0 - eps) {
            return Err(domain(format!(
                "derivative requires score strictly inside ({eps}, {}), got {score}",
                1.0 - eps
            )));
        }
        let w = self.weight_fn(score);
        Ok(if outcome {
            w * (score - 1.0)
        } else {
            w * score
        })
    }

    /// Binary weighted loss `beta1 y L(a1, y) + (1 - beta1)(1 - y) L(a1, y)`.
    pub fn weighted_loss_binary(&self, beta1: f64, score1: f64, label: bool) -> f64 {
        let weight = if label { beta1 } else { 1.0 - beta1 };
        weight * self.base_loss(score1, label)
    }

    /// Matrix weighted loss `sum_{y'} beta[y][y'] L(a_{y'}, y == y')`.
    pub fn weighted_loss_multi(
        &self,
        beta: &WeightMatrix,
        scores: &[f64],
        label: usize,
    ) -> Result<f64> {
        let n = beta.dim();
        if scores.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: scores.len(),
            });
        }
        if label >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: label + 1,
            });
        }
        Ok(scores
            .iter()
            .enumerate()
            .map(|(coord, &a)| beta.get(label, coord) * self.base_loss(a, coord == label))
            .sum())
    }
}

/// Strictly positive square weight matrix, row-major, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct WeightMatrix {
    n: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(domain(format!("weight matrix needs n >= 2, got {n}")));
        }
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            values.extend(row);
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(domain(format!(
                "weight matrix entries must be finite and strictly positive, got {bad}"
            )));
        }
        Ok(Self { n, values })
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::from_rows(vec![vec![1.0; n]; n])
    }

    /// Two-class matrix whose second column is `(1 - beta1, beta1)`; the first
    /// column mirrors it so the label-0 coordinate carries the same weighting.
    pub fn binary_equivalent(beta1: f64) -> Result<Self> {
        check_beta1(beta1)?;
        Self::from_rows(vec![vec![beta1, 1.0 - beta1], vec![1.0 - beta1, beta1]])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Weight applied to score coordinate `coord` when the label is `label`.
    pub fn get(&self, label: usize, coord: usize) -> f64 {
        self.values[label * self.n + coord]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for WeightMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<WeightMatrix> for Vec<Vec<f64>> {
    fn from(m: WeightMatrix) -> Self {
        m.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSpec {
    Binary { beta1: f64 },
    Matrix(WeightMatrix),
}

impl WeightSpec {
    pub fn binary(beta1: f64) -> Result<Self> {
        check_beta1(beta1)?;
        Ok(Self::Binary { beta1 })
    }

    /// Binary weight equivalent to resampling at positive/negative ratio `delta`.
    pub fn from_delta(delta: f64) -> Result<Self> {
        Self::binary(crate::corrections::delta_to_beta(delta)?)
    }

    pub fn matrix(matrix: WeightMatrix) -> Self {
        Self::Matrix(matrix)
    }

    /// Number of classes the weights are defined for.
    pub fn n_classes(&self) -> usize {
        match self {
            Self::Binary { .. } => 2,
            Self::Matrix(m) => m.dim(),
        }
    }

    /// `(1 - beta1) / beta1`; `None` for matrix weights.
    pub fn equivalent_delta(&self) -> Option<f64> {
        match self {
            Self::Binary { beta1 } => Some((1.0 - beta1) / beta1),
            Self::Matrix(_) => None,
        }
    }
}

pub(crate) fn check_beta1(beta1: f64) -> Result<()> {
    if beta1 > 0.0 && beta1 < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("beta1 must lie in (0, 1), got {beta1}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn base_loss_examples() {
        assert_eq!(LossSpec::brier().base_loss(0.5, true), 0.25);
        // -ln(1 - 1e-12); 1 - 1e-12 itself rounds in binary, hence the loose bound
        let clamped = LossSpec::log_loss().base_loss(1.0, true);
        assert!(close(clamped, 1e-12, 1e-16));
        // -ln(0.8), evaluated with mpmath at 30 digits
        assert!(close(
            LossSpec::log_loss().base_loss(0.2, false),
            0.223_143_551_314_209_76,
            1e-15
        ));
    }

    #[test]
    fn log_loss_is_finite_at_boundaries() {
        let spec = LossSpec::log_loss();
        for &a in &[0.0, 1.0] {
            for &y in &[false, true] {
                assert!(spec.base_loss(a, y).is_finite());
            }
        }
    }

    #[test]
    fn brier_zero_only_at_outcome() {
        let spec = LossSpec::with_clamp_epsilon(LossFamily::BrierLoss, 0.25).unwrap();
        assert_eq!(spec.base_loss(0.75, true), 0.0625);
        assert_eq!(LossSpec::brier().base_loss(0.0, false), 1e-24);
        assert!(LossSpec::brier().base_loss(0.3, true) > 0.0);
    }

    #[test]
    fn weighted_binary_examples() {
        let brier = LossSpec::brier();
        let log = LossSpec::log_loss();
        assert!(close(brier.weighted_loss_binary(0.5, 0.3, true), 0.245, 1e-15));
        // 0.01 * -ln(0.7) and 0.99 * -ln(0.3), mpmath
        assert!(close(
            log.weighted_loss_binary(0.99, 0.3, false),
            0.003_566_749_439_387_324,
            1e-15
        ));
        assert!(close(
            log.weighted_loss_binary(0.99, 0.3, true),
            1.191_933_076_282_676_6,
            1e-13
        ));
    }

    #[test]
    fn weighted_multi_examples() {
        let brier = LossSpec::brier();
        let ones = WeightMatrix::ones(2).unwrap();
        // clamping leaves 2 * eps^2
        assert!(brier.weighted_loss_multi(&ones, &[0.0, 1.0], 1).unwrap() <= 2e-24);
        assert_eq!(brier.weighted_loss_multi(&ones, &[0.5, 0.5], 0).unwrap(), 0.5);

        let beta = WeightMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let v = LossSpec::log_loss()
            .weighted_loss_multi(&beta, &[0.6, 0.4], 1)
            .unwrap();
        // -ln(0.4) + 3 * -ln(0.4), mpmath
        assert!(close(v, 3.665_162_927_496_620_3, 1e-13));
    }

    #[test]
    fn weighted_multi_dimension_mismatch() {
        let ones = WeightMatrix::ones(3).unwrap();
        let err = LossSpec::brier()
            .weighted_loss_multi(&ones, &[0.5, 0.5], 0)
            .unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                actual: 2
            }
        );
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(LossSpec::brier().loss_derivative(0.5, true).unwrap(), -1.0);
        assert_eq!(LossSpec::log_loss().loss_derivative(0.5, false).unwrap(), 2.0);
        let d = LossSpec::log_loss().loss_derivative(0.2, true).unwrap();
        assert!(close(d, -5.0, 1e-12));
        let fd = (LossSpec::log_loss().base_loss(0.2 + 1e-6, true)
            - LossSpec::log_loss().base_loss(0.2 - 1e-6, true))
            / 2e-6;
        assert!(close(fd, -5.0, 1e-6));
    }

    #[test]
    fn derivative_rejects_clamp_boundary() {
        let spec = LossSpec::log_loss();
        assert!(matches!(spec.loss_derivative(0.0, true), Err(Error::Domain(_))));
        assert!(matches!(
            spec.loss_derivative(1.0 - 1e-12, false),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn weight_validation() {
        assert!(WeightSpec::binary(0.0).is_err());
        assert!(WeightSpec::binary(1.0).is_err());
        assert!(WeightMatrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).is_err());
        assert!(WeightMatrix::from_rows(vec![vec![1.0]]).is_err());
        let d = WeightSpec::binary(0.5).unwrap().equivalent_delta().unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn matrix_conversion_validates() {
        assert!(WeightMatrix::try_from(vec![vec![1.0, -1.0], vec![1.0, 1.0]]).is_err());
        let m = WeightMatrix::binary_equivalent(0.9).unwrap();
        assert_eq!(m.get(1, 1), 0.9);
        assert!((m.get(0, 1) - 0.1).abs() < 1e-16);
    }
}
