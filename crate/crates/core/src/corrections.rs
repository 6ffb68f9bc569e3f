//! Prior-shift correction for scores from models trained on resampled data,
//! and its mapping onto the binary loss-correction.

use crate::error::{domain, Result};
use crate::losses::check_beta1;

/// Resampling ratio of positive to negative instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorShiftSpec {
    delta: f64,
}

impl PriorShiftSpec {
    pub fn new(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn correct(&self, a1: f64) -> Result<f64> {
        prior_shift_correct(self.delta, a1)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("delta must be positive and finite, got {delta}")))
    }
}

/// `delta a / (1 + (delta - 1) a)`.
pub fn prior_shift_correct(delta: f64, a1: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&a1) {
        return Err(domain(format!("a1 must lie in [0, 1], got {a1}")));
    }
    let num = delta * a1;
    Ok(num / (num + (1.0 - a1)))
}

/// `delta = (1 - beta1) / beta1`.
pub fn beta_to_delta(beta1: f64) -> Result<f64> {
    check_beta1(beta1)?;
    Ok((1.0 - beta1) / beta1)
}

/// `beta1 = 1 / (1 + delta)`.
pub fn delta_to_beta(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let beta1 = 1.0 / (1.0 + delta);
    check_beta1(beta1)?;
    Ok(beta1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::loss_correct_binary;

    #[test]
    fn identity_at_unit_delta() {
        for i in 0..=20 {
            let a = i as f64 / 20.0;
            assert_eq!(prior_shift_correct(1.0, a).unwrap(), a);
        }
    }

    #[test]
    fn examples() {
        assert!((prior_shift_correct(0.1, 0.5).unwrap() - 0.05 / 0.55).abs() < 1e-15);
        let delta = beta_to_delta(0.99).unwrap();
        let a = 0.0198 / 0.0296;
        assert!((prior_shift_correct(delta, a).unwrap() - 0.02).abs() < 1e-12);
        assert!(
            (prior_shift_correct(delta, a).unwrap() - loss_correct_binary(0.99, a).unwrap()).abs()
                < 1e-12
        );
    }

    #[test]
    fn mapping_examples() {
        assert_eq!(beta_to_delta(0.5).unwrap(), 1.0);
        assert!((beta_to_delta(10.0 / 11.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((delta_to_beta(0.1).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        for i in 1..100 {
            let b = i as f64 / 100.0;
            let back = delta_to_beta(beta_to_delta(b).unwrap()).unwrap();
            assert!((back - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(prior_shift_correct(0.0, 0.5).is_err());
        assert!(prior_shift_correct(-1.0, 0.5).is_err());
        assert!(prior_shift_correct(1.0, 1.5).is_err());
        assert!(beta_to_delta(1.0).is_err());
        assert!(beta_to_delta(0.0).is_err());
        assert!(delta_to_beta(0.0).is_err());
        assert!(PriorShiftSpec::new(f64::INFINITY).is_err());
    }
}
