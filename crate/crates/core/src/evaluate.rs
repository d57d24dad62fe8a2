//! End-to-end scoring of one system, and significance tests between two.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexical::{self, ExampleScores, TokenizationConfig, BLEU, CHRF, F1, KF1};
use crate::model::{Corpus, MetricReport, SystemOutput};
use crate::stats::{bootstrap_bleu, bootstrap_rate, paired_ttest, BootstrapResult, PairedSamples, TTestResult};
use crate::task::{self, DialogTranscript, EntityDatabase, TaskScores, COMBINED, INFORM, SUCCESS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub report: MetricReport,
    pub task: Option<TaskScores>,
    /// Outputs left out because generation failed.
    pub errored: Vec<String>,
    /// Instances scored with KF1 = 0 because they had no knowledge.
    pub empty_knowledge: Vec<String>,
}

/// Lexical metrics always; Inform, Success and Combined when a database is
/// given and the corpus carries goals. Combined is stored as a fraction like
/// every other score, so it can exceed 1.
pub fn evaluate(
    corpus: &Corpus,
    outputs: &[SystemOutput],
    db: Option<&EntityDatabase>,
    cfg: &TokenizationConfig,
) -> Result<Evaluation> {
    let known = corpus.instance_index();
    if let Some(o) = outputs.iter().find(|o| !known.contains_key(o.instance_id.as_str())) {
        return Err(Error::MisalignedOutputs(format!("`{}` is not in the corpus", o.instance_id)));
    }
    let mut report = lexical::score_outputs(outputs, cfg)?;

    let transcripts = task::transcripts_from(corpus, outputs);
    let task = match db {
        Some(db) if !transcripts.is_empty() => {
            let s = task::task_scores(&transcripts, db)?;
            let bleu = report.corpus[BLEU];
            report.corpus.insert(INFORM.into(), s.inform_rate);
            report.corpus.insert(SUCCESS.into(), s.success_rate);
            report
                .corpus
                .insert(COMBINED.into(), task::combined(s.inform_rate, s.success_rate, bleu)? / 100.0);
            Some(s)
        }
        _ => None,
    };

    Ok(Evaluation {
        report,
        task,
        errored: outputs.iter().filter(|o| o.is_error()).map(|o| o.instance_id.clone()).collect(),
        empty_knowledge: lexical::empty_knowledge_ids(outputs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Instances both systems produced an output for.
    pub paired: usize,
    /// Paired t-tests on per-example metrics, A minus B.
    pub ttest: BTreeMap<String, TTestResult>,
    /// Paired bootstrap on corpus-level scores, A minus B.
    pub bootstrap: BTreeMap<String, BootstrapResult>,
}

fn per_dialog_outcomes(ts: &[DialogTranscript], db: &EntityDatabase) -> Result<HashMap<String, (bool, bool)>> {
    ts.iter()
        .map(|t| Ok((t.dialog_id.clone(), (task::inform(t, db)?, task::success(t, db)?))))
        .collect()
}

/// Significance of the difference between two systems on the same corpus.
pub fn compare(
    corpus: &Corpus,
    a: &[SystemOutput],
    b: &[SystemOutput],
    db: Option<&EntityDatabase>,
    cfg: &TokenizationConfig,
    resamples: usize,
    seed: u64,
) -> Result<Comparison> {
    let b_by_id: HashMap<&str, &SystemOutput> = b
        .iter()
        .filter(|o| !o.is_error())
        .map(|o| (o.instance_id.as_str(), o))
        .collect();
    let (pa, pb): (Vec<&SystemOutput>, Vec<&SystemOutput>) = a
        .iter()
        .filter(|o| !o.is_error())
        .filter_map(|o| b_by_id.get(o.instance_id.as_str()).map(|ob| (o, *ob)))
        .unzip();
    if pa.is_empty() {
        return Err(Error::NoPairableItems);
    }
    let sa = lexical::score_examples(&pa, cfg);
    let sb = lexical::score_examples(&pb, cfg);

    let mut ttest = BTreeMap::new();
    for (name, f) in [
        (F1, (|s: &ExampleScores| s.f1) as fn(&ExampleScores) -> f64),
        (KF1, |s| s.kf1),
        (CHRF, |s| s.chrf),
    ] {
        let samples = PairedSamples::new(sa.iter().map(f).collect(), sb.iter().map(f).collect())?;
        ttest.insert(name.to_owned(), paired_ttest(&samples));
    }

    let mut bootstrap = BTreeMap::new();
    let bleu_a: Vec<_> = sa.iter().map(|s| s.bleu_stats).collect();
    let bleu_b: Vec<_> = sb.iter().map(|s| s.bleu_stats).collect();
    bootstrap.insert(BLEU.to_owned(), bootstrap_bleu(&bleu_a, &bleu_b, resamples, seed)?);

    if let Some(db) = db {
        let oa = per_dialog_outcomes(&task::transcripts_from(corpus, a), db)?;
        let ob = per_dialog_outcomes(&task::transcripts_from(corpus, b), db)?;
        let mut ids: Vec<&String> = oa.keys().filter(|k| ob.contains_key(*k)).collect();
        ids.sort();
        if ids.len() >= 2 {
            let pick = |m: &HashMap<String, (bool, bool)>, f: fn(&(bool, bool)) -> bool| -> Vec<bool> {
                ids.iter().map(|id| f(&m[*id])).collect()
            };
            bootstrap.insert(
                INFORM.to_owned(),
                bootstrap_rate(&pick(&oa, |o| o.0), &pick(&ob, |o| o.0), resamples, seed)?,
            );
            bootstrap.insert(
                SUCCESS.to_owned(),
                bootstrap_rate(&pick(&oa, |o| o.1), &pick(&ob, |o| o.1), resamples, seed)?,
            );
        }
    }

    Ok(Comparison {
        paired: pa.len(),
        ttest,
        bootstrap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dialog, DialogTurn, GoalSpec};

    fn corpus() -> Corpus {
        let goal = GoalSpec {
            domain: "restaurant".into(),
            constraints: BTreeMap::new(),
            requested: Default::default(),
            gold_entities: ["peony kitchen".to_string()].into(),
        };
        let dialogs = (0..4)
            .map(|i| {
                Dialog::new(
                    format!("d{i}"),
                    vec![
                        DialogTurn::user("chinese food please"),
                        DialogTurn::system(format!("peony kitchen is great number {i}")),
                    ],
                    vec![],
                    vec![goal.clone()],
                )
            })
            .collect();
        Corpus::new("t", dialogs)
    }

    fn db() -> EntityDatabase {
        serde_json::from_str(r#"{"restaurant": [{"name": "peony kitchen"}]}"#).unwrap()
    }

    fn identity(c: &Corpus) -> Vec<SystemOutput> {
        c.instances()
            .map(|i| SystemOutput::new(i.instance_id.clone(), i.target.clone(), i.target.clone(), vec![]))
            .collect()
    }

    #[test]
    fn identity_outputs_score_perfectly() {
        let c = corpus();
        let e = evaluate(&c, &identity(&c), Some(&db()), &TokenizationConfig::default()).unwrap();
        assert_eq!(e.report.corpus[BLEU], 1.0);
        assert_eq!(e.report.corpus[INFORM], 1.0);
        assert_eq!(e.report.corpus[COMBINED], 2.0);
        assert_eq!(e.empty_knowledge.len(), 4);
    }

    #[test]
    fn unknown_instance_is_rejected() {
        let c = corpus();
        let outs = [SystemOutput::new("nope:1", "x", "x", vec![])];
        assert!(matches!(
            evaluate(&c, &outs, None, &TokenizationConfig::default()),
            Err(Error::MisalignedOutputs(_))
        ));
    }

    #[test]
    fn comparison_against_worse_system() {
        let c = corpus();
        let a = identity(&c);
        let b: Vec<SystemOutput> = a
            .iter()
            .map(|o| SystemOutput::new(o.instance_id.clone(), "sorry", o.reference.clone(), vec![]))
            .collect();
        let cmp = compare(&c, &a, &b, Some(&db()), &TokenizationConfig::default(), 200, 1).unwrap();
        assert_eq!(cmp.paired, 4);
        assert!(cmp.ttest[F1].t > 0.0);
        assert!(cmp.bootstrap[BLEU].observed_delta > 0.0);
        assert_eq!(cmp.bootstrap[INFORM].observed_delta, 1.0);
    }
}
