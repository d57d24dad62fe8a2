//! Reference-based lexical metrics: corpus BLEU-4, chrF, unigram F1 and
//! Knowledge-F1.

mod bleu;
mod chrf;
mod f1;
mod tokenize;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

pub use bleu::{corpus_bleu4, corpus_bleu_stats, BleuStats, BLEU_ORDER};
pub use chrf::{chrf, ChrfParams};
pub use f1::{knowledge_f1, unigram_f1, KnowledgeF1};
pub use tokenize::TokenizationConfig;

use crate::error::{Error, Result};
use crate::model::{MetricReport, SystemOutput};

pub const F1: &str = "f1";
pub const KF1: &str = "kf1";
pub const CHRF: &str = "chrf";
pub const BLEU: &str = "bleu";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleScores {
    pub f1: f64,
    pub kf1: f64,
    pub chrf: f64,
    pub bleu_stats: BleuStats,
    pub empty_knowledge: bool,
}

pub fn score_example(out: &SystemOutput, cfg: &TokenizationConfig) -> ExampleScores {
    let k = knowledge_f1(&out.hypothesis, &out.knowledge, cfg);
    ExampleScores {
        f1: unigram_f1(&out.hypothesis, &out.reference, cfg),
        kf1: k.score,
        chrf: chrf(&out.hypothesis, &out.reference, &ChrfParams::default()),
        bleu_stats: BleuStats::from_pair(&out.hypothesis, &out.reference, &cfg.for_bleu()),
        empty_knowledge: k.empty_knowledge,
    }
}

/// Per-example scores in input order, computed in parallel.
pub fn score_examples(outputs: &[&SystemOutput], cfg: &TokenizationConfig) -> Vec<ExampleScores> {
    outputs.par_iter().map(|o| score_example(o, cfg)).collect()
}

/// Same as [`score_examples`] without rayon; used to check that parallel
/// scoring is bit-identical.
pub fn score_examples_sequential(outputs: &[&SystemOutput], cfg: &TokenizationConfig) -> Vec<ExampleScores> {
    outputs.iter().map(|o| score_example(o, cfg)).collect()
}

/// Outputs eligible for scoring: everything without a generation error.
pub fn scorable(outputs: &[SystemOutput]) -> Vec<&SystemOutput> {
    outputs.iter().filter(|o| !o.is_error()).collect()
}

/// Scores every output. Errored outputs are skipped; duplicate instance ids
/// are rejected.
pub fn score_outputs(outputs: &[SystemOutput], cfg: &TokenizationConfig) -> Result<MetricReport> {
    let kept = scorable(outputs);
    if kept.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut seen = HashSet::with_capacity(kept.len());
    for o in &kept {
        if !seen.insert(o.instance_id.as_str()) {
            return Err(Error::MisalignedOutputs(format!("duplicate instance id `{}`", o.instance_id)));
        }
    }
    Ok(report_from_scores(&kept, &score_examples(&kept, cfg)))
}

pub fn report_from_scores(outputs: &[&SystemOutput], scores: &[ExampleScores]) -> MetricReport {
    let mut report = MetricReport::default();
    for (o, s) in outputs.iter().zip(scores) {
        let m = BTreeMap::from([(F1.to_owned(), s.f1), (KF1.to_owned(), s.kf1), (CHRF.to_owned(), s.chrf)]);
        report.per_example.insert(o.instance_id.clone(), m);
    }
    let n = scores.len() as f64;
    // sequential sums in input order keep the averages reproducible
    let mean = |f: fn(&ExampleScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    report.corpus.insert(F1.to_owned(), mean(|s| s.f1));
    report.corpus.insert(KF1.to_owned(), mean(|s| s.kf1));
    report.corpus.insert(CHRF.to_owned(), mean(|s| s.chrf));
    let stats: BleuStats = scores.iter().map(|s| s.bleu_stats).sum();
    report.corpus.insert(BLEU.to_owned(), stats.score());
    report
}

/// Instance ids whose knowledge list was empty, so KF1 is 0 by convention.
pub fn empty_knowledge_ids(outputs: &[SystemOutput]) -> Vec<String> {
    outputs
        .iter()
        .filter(|o| !o.is_error() && o.knowledge.iter().all(|k| k.trim().is_empty()))
        .map(|o| o.instance_id.clone())
        .collect()
}
