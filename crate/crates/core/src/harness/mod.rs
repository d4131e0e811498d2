//! Experiment runner, estimators, and file outputs.

pub mod experiments;
pub mod output;
pub mod render;
pub mod stats;

pub use experiments::{
    coupled_sweep, crossing_rect, crossing_trial, discretize_compare, estimate_crossing_prob, estimate_f, estimate_pc,
    estimate_pc_with, harris_check, percolation_certificate, rsw_check, ExperimentPlan, HarrisRow, PcEstimate,
    RobustSweepTable, RswReport, RswRow, SandwichTable, SandwichTrial, SweepTable, TrialRecord, TrialSetup,
    DEFAULT_RSW_FLOOR,
};
pub use output::{Manifest, CSV_SCHEMA, VERSION};
pub use render::{render_ppm, render_svg};
pub use stats::{wilson_interval, Estimate};
