//! Feature scoring, selection metrics, synthetic signals and the experiment
//! driver.

pub mod experiment;
pub mod metrics;
pub mod scoring;
pub mod synth;

pub use experiment::{run_experiment, CellReport, ExperimentConfig, ExperimentReport, MethodReport, Signal, Timings};
pub use metrics::{average_inclusion_probability, pr_auc, pr_curve, PrPoint};
pub use scoring::{
    equivalence_classes, rank_columns, score_features, select_top, Method, MethodScore, ScoreContext, ScoreDirection,
};
pub use synth::{synth_3var, synth_candidates};
