//! Monte Carlo evaluation of the detectors: detection probability against
//! range and centre error per crater diameter.

mod report;
mod sweep;

pub use report::{
    cells_csv, emit_report, long_csv, parse_cells_csv, rms_error, summarize, trials_csv, wilson_interval, CellSummary,
    DiameterSummary, KppReport, ReportFormat, CELLS_CSV, CELLS_HEADER, LIDAR_REFERENCE_3SIGMA, LONG_CSV, LONG_HEADER,
    REPORT_JSON, STEREO_REFERENCE_3SIGMA, TRIALS_CSV, TRIALS_HEADER,
};
pub use sweep::{
    detect_in_scene, run_sweep, run_trial, run_trials, score_trial, trial_scene, trial_seed, true_positive_radius,
    SweepConfig, SweepGrid, Trial, PRESETS,
};
