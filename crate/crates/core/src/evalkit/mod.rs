//! Evaluation protocols, fixation statistics and report files.

pub mod phases;
pub mod report;
pub mod series;
pub mod stats;
pub mod svg;

pub use phases::{
    milestone_checkpoints, run_episode, run_phase1, run_phase2, run_traced, EpisodeTrace, Greedy, GridSpec, MilestoneCurve,
    PointTrace, Policy, UniformRandom,
};
pub use report::{emit_report, regenerate_plots, ReportInputs, STATS_HEADER};
pub use series::{parse_series_csv, Series, SeriesError};
pub use stats::{aggregate_stats, deviation_angle, EyeStats, FixationStats, StatsRow};
