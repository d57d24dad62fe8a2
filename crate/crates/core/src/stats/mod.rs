//! Significance tests, inter-annotator agreement, rank correlation and
//! human-evaluation task handling.

mod alpha;
pub mod analysis;
mod bootstrap;
mod correlation;
mod pairwise;
mod spearman;
mod ttest;
mod wtl;

pub use alpha::{alpha_interval_from_units, krippendorff_alpha_interval};
pub use bootstrap::{bootstrap_bleu, bootstrap_rate, paired_bootstrap, BootstrapResult, DEFAULT_RESAMPLES};
pub use correlation::{metric_human_correlation, CorrelationTable};
pub use pairwise::{
    build_pairwise_tasks, rating_for_a, PairwiseTask, Question, QuestionPrompt, RatingRecord, SystemSide,
    TaskKey, TaskPayload,
};
pub use spearman::{average_ranks, pearson, spearman_rho};
pub use ttest::{paired_ttest, PairedSamples, TTestResult};
pub use wtl::{likert_to_wtl, Wtl};
