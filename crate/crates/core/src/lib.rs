//! Recovering ground-truth probabilities from classifiers trained with
//! class-weighted losses.
//!
//! A classifier that minimizes a class-weighted strictly proper loss is not
//! calibrated: it reports the score that is optimal under the weights, not
//! the posterior. When it is *loss-calibrated* (no wholesale swap of one
//! emitted score for another lowers the weighted loss), the posterior is
//! recovered exactly by inverting the optimal scoring rule.
//!
//! - [`losses`]: base losses and class weights.
//! - [`scoring`]: optimal scoring rules, their inverses and grid oracles.
//! - [`corrections`]: the prior-shift correction and its weight equivalent.
//! - [`diagnostics`]: calibration curves, regret test, SBR verification.
//! - [`sbr`]: the signal-based-representation simulator.

pub mod corrections;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod losses;
pub mod sbr;
pub mod scoring;

pub use corrections::{beta_to_delta, delta_to_beta, prior_shift_correct, PriorShiftSpec};
pub use dataset::ScoredDataset;
pub use diagnostics::{
    build_curve, expected_calibration_error, regret_test, theoretical_curve, verify_sbr,
    BinScore, Binning, CalibrationCurve, RegretMode, RegretOptions, RegretReport, SbrVerdict,
};
pub use error::{Error, Result};
pub use losses::{LossFamily, LossSpec, WeightMatrix, WeightSpec};
pub use sbr::{
    imbalance_preset, signal_scores, simulate, SimulationConfig, Simulation, StatisticalExperiment,
};
pub use scoring::{
    argmin_oracle_binary, argmin_oracle_multi, loss_correct_binary, loss_correct_multi,
    optimal_score_binary, optimal_score_multi, PosteriorBelief,
};
