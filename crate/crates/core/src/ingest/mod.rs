//! Dataset ingestion, safety filtering and few-shot sampling.

mod adapters;
mod filter;
mod sample;

pub use adapters::{
    ingest, ingest_conversational_qa, ingest_generic, ingest_knowledge_grounded,
    ingest_taskoriented, render_value, AdapterKind, AdapterSchema, Ingested,
};
pub use filter::{filter_corpus, FilterPolicy, FilterRule, FilterStats};
pub use sample::{sample_fewshot, FewShotSpec, DEFAULT_FEWSHOT_K};
