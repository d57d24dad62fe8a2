//! Corpus preparation and evaluation toolkit for grounded, goal-directed
//! dialog.
//!
//! The pipeline: raw datasets are ingested into a common [`model::Corpus`],
//! filtered and down-sampled ([`ingest`]), flattened into training text
//! ([`serialize`]), sent to an external generation service ([`client`]), and
//! scored with lexical metrics ([`lexical`]), task-completion metrics
//! ([`task`]) and statistics over human judgments ([`stats`]).

pub mod client;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod io;
pub mod lexical;
pub mod model;
pub mod serialize;
pub mod stats;
pub mod tables;
pub mod task;

pub use error::{Error, Result};
pub use model::{
    Corpus, Dialog, DialogTurn, GoalSpec, GroundedInstance, Grounding, MetricReport, RatingMatrix, Scale, Speaker,
    SystemOutput,
};
