//! Finite-sample confidence intervals on the mean of a bounded `[0, 1]` metric
//! that combine a few gold-standard (real) scores with many proxy scores.

pub mod cv;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod ppi;
pub mod synth;
pub mod wsr;

pub use cv::{cv_estimate, cv_interval, cv_split_estimate, cv_split_interval, CvEstimate};
pub use error::{Error, ErrorClass, Result};
pub use harness::{
    compute_savings, emit_results, run_coverage_sweep, run_width_sweep, Axis, CoverageResult,
    Format, ResultSet, SavingsResult, Source, SweepConfig, SweepResult,
};
pub use model::{
    resample_paired, resample_sim, summary_stats, ConfidenceInterval, Method, PairedDataset,
    PairedSample, Score, SignificanceLevel, SimDataset, SummaryStats,
};
pub use ppi::{
    build_uniform_transform, classical_interval, optimize_risk_split, rectifier_interval,
    suresim_interval, suresim_ub_interval, two_stage_interval, two_stage_point_estimate,
    two_stage_ub_interval, two_stage_width, RiskSplit, UniformPpiTransform,
};
pub use synth::{generate_bank, partition_bank, uniform_support, BankSpec, LabeledBank};
pub use wsr::{wsr_interval, WsrConfig, WsrInterval, WsrOptions, WsrState};
