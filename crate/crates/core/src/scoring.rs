//! Optimal posterior scoring rules under class-weighted strictly proper losses,
//! their inversions (the loss-corrections), and brute-force argmin oracles.
//!
//! The optimum does not depend on the loss family: the first-order condition
//! factors as `w(a) * (linear in a) = 0` and `w > 0`, so every strictly proper
//! base loss yields the same scoring rule. The oracles search over scores
//! directly and make no use of that fact.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::losses::{check_beta1, LossSpec, WeightMatrix};

pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A probability vector over labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PosteriorBelief(Vec<f64>);

impl PosteriorBelief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(domain(format!(
                "posterior needs at least two labels, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(domain(format!("posterior entries must be >= 0, got {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE * probs.len() as f64 {
            return Err(domain(format!("posterior must sum to 1, sums to {total}")));
        }
        Ok(Self(probs))
    }

    /// Binary posterior `(1 - gamma1, gamma1)`.
    pub fn binary(gamma1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma1) {
            return Err(domain(format!("gamma1 must lie in [0, 1], got {gamma1}")));
        }
        Ok(Self(vec![1.0 - gamma1, gamma1]))
    }

    /// Normalizes nonnegative masses onto the simplex.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(domain("masses must have a positive finite total"));
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn gamma1(&self) -> f64 {
        self.0[1]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PosteriorBelief {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PosteriorBelief> for Vec<f64> {
    fn from(p: PosteriorBelief) -> Self {
        p.0
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in [0, 1], got {x}")))
    }
}

/// Optimal binary score `beta1 g / (beta1 g + (1 - beta1)(1 - g))`.
///
/// Symmetric in its two arguments and strictly increasing in `gamma1`;
/// extends continuously to `gamma1` in `{0, 1}`.
pub fn optimal_score_binary(beta1: f64, gamma1: f64) -> Result<f64> {
    check_beta1(beta1)?;
    check_unit("gamma1", gamma1)?;
    let num = beta1 * gamma1;
    Ok(num / (num + (1.0 - beta1) * (1.0 - gamma1)))
}

/// Inverse of [`optimal_score_binary`]: the posterior implied by score `a1`.
pub fn loss_correct_binary(beta1: f64, a1: f64) -> Result<f64> {
    check_beta1(beta1)?;
    check_unit("a1", a1)?;
    let num = (1.0 - beta1) * a1;
    // num + beta1 (1 - a1) = beta1 + (1 - 2 beta1) a1 >= min(beta1, 1 - beta1)
    Ok(num / (num + beta1 * (1.0 - a1)))
}

/// Optimal multi-class scores `c_y = g_y B[y][y] / sum_{y'} g_{y'} B[y'][y]`.
pub fn optimal_score_multi(beta: &WeightMatrix, gamma: &PosteriorBelief) -> Result<Vec<f64>> {
    let n = beta.dim();
    if gamma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gamma.len(),
        });
    }
    let g = gamma.probs();
    Ok((0..n)
        .map(|y| {
            let denom: f64 = (0..n).map(|yp| g[yp] * beta.get(yp, y)).sum();
            g[y] * beta.get(y, y) / denom
        })
        .collect())
}

/// Acceptance thresholds for [`loss_correct_multi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionTolerance {
    pub residual: f64,
    pub negativity: f64,
}

impl Default for InversionTolerance {
    fn default() -> Self {
        Self {
            residual: 1e-6,
            negativity: 1e-10,
        }
    }
}

/// Recovers the posterior behind multi-class scores by inverting
/// [`optimal_score_multi`].
pub fn loss_correct_multi(beta: &WeightMatrix, scores: &[f64]) -> Result<PosteriorBelief> {
    loss_correct_multi_with(beta, scores, InversionTolerance::default())
}

/// [`loss_correct_multi`] with explicit tolerances.
///
/// The scoring rule gives `g_y B[y][y] = a_y sum_{y'} g_{y'} B[y'][y]` for
/// every `y`, a homogeneous system `M g = 0`. It is solved in the least-squares
/// sense together with the normalization row `sum g = 1`.
pub fn loss_correct_multi_with(
    beta: &WeightMatrix,
    scores: &[f64],
    tol: InversionTolerance,
) -> Result<PosteriorBelief> {
    let n = beta.dim();
    if scores.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: scores.len(),
        });
    }
    for &a in scores {
        check_unit("score", a)?;
    }

    let mut system = DMatrix::<f64>::zeros(n + 1, n);
    for y in 0..n {
        for yp in 0..n {
            let diag = if y == yp { beta.get(y, y) } else { 0.0 };
            system[(y, yp)] = diag - scores[y] * beta.get(yp, y);
        }
    }
    for yp in 0..n {
        system[(n, yp)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;

    let svd = system.clone().svd(true, true);
    let solution = svd
        .solve(&rhs, f64::EPSILON)
        .map_err(|e| Error::NoConsistentPosterior(e.to_string()))?;

    let residual = (&system * &solution - &rhs).norm();
    if !(residual <= tol.residual) {
        return Err(Error::NoConsistentPosterior(format!(
            "least-squares residual {residual:e} exceeds {:e}",
            tol.residual
        )));
    }
    if let Some(neg) = solution.iter().find(|g| **g < -tol.negativity) {
        return Err(Error::NoConsistentPosterior(format!(
            "recovered coordinate {neg:e} is negative"
        )));
    }
    let clamped: Vec<f64> = solution.iter().map(|g| g.max(0.0)).collect();
    PosteriorBelief::from_masses(&clamped)
}

/// Evenly spaced grid on `[eps, 1 - eps]`.
fn score_grid(spec: &LossSpec, grid_size: usize) -> impl Iterator<Item = f64> {
    let lo = spec.clamp_epsilon();
    let hi = 1.0 - lo;
    let step = (hi - lo) / (grid_size - 1) as f64;
    (0..grid_size).map(move |i| if i + 1 == grid_size { hi } else { lo + step * i as f64 })
}

/// Grid minimizer of `pos L(a, 1) + neg L(a, 0)`; ties keep the first point.
fn grid_argmin(spec: &LossSpec, pos: f64, neg: f64, grid_size: usize) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for a in score_grid(spec, grid_size) {
        let value = pos * spec.base_loss(a, true) + neg * spec.base_loss(a, false);
        if value < best.0 {
            best = (value, a);
        }
    }
    best.1
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 3 {
        return Err(domain(format!("grid size must be >= 3, got {grid_size}")));
    }
    Ok(())
}

/// Brute-force minimizer of the posterior-expected binary weighted loss.
pub fn argmin_oracle_binary(
    spec: &LossSpec,
    beta1: f64,
    gamma1: f64,
    grid_size: usize,
) -> Result<f64> {
    check_grid(grid_size)?;
    check_beta1(beta1)?;
    check_unit("gamma1", gamma1)?;
    Ok(grid_argmin(
        spec,
        beta1 * gamma1,
        (1.0 - beta1) * (1.0 - gamma1),
        grid_size,
    ))
}

/// Coordinate-wise brute-force minimizer of the matrix-weighted loss. The
/// loss separates across score coordinates, so each is searched on its own.
pub fn argmin_oracle_multi(
    spec: &LossSpec,
    beta: &WeightMatrix,
    gamma: &PosteriorBelief,
    grid_size: usize,
) -> Result<Vec<f64>> {
    check_grid(grid_size)?;
    let n = beta.dim();
    if gamma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gamma.len(),
        });
    }
    let g = gamma.probs();
    Ok((0..n)
        .map(|y| {
            let pos = g[y] * beta.get(y, y);
            let neg: f64 = (0..n)
                .filter(|&yp| yp != y)
                .map(|yp| g[yp] * beta.get(yp, y))
                .sum();
            grid_argmin(spec, pos, neg, grid_size)
        })
        .collect())
}
