//! Calibration curves, the loss-calibration regret test and signal-based
//! representation checks.

mod binning;
mod curve;
mod regret;
mod verify;

pub use binning::{
    bin_dataset, bin_scalar, bin_vectors, per_coordinate_bins, Binning, Bins, MAX_CELLS,
    MIN_CELL_ROWS,
};
pub use curve::{
    build_curve, curve_from_columns, expected_calibration_error, theoretical_curve,
    CalibrationCurve, CurveBin, Z_95,
};
pub use regret::{
    regret_test, BinScore, RegretBin, RegretForm, RegretMode, RegretOptions, RegretReport,
    MIN_DEFAULT_TOLERANCE,
};
pub use verify::{verify_sbr, CanonicalSbr, SbrVerdict};
