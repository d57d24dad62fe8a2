//! Aggregations over collected human judgments.

use std::collections::{BTreeMap, HashMap};

use super::alpha::krippendorff_alpha_interval;
use super::pairwise::{rating_for_a, Question, RatingRecord, TaskKey};
use super::wtl::{likert_to_wtl, Wtl};
use crate::error::{Error, Result};
use crate::model::RatingMatrix;

/// One rating matrix (raters x tasks) per question.
pub fn rating_matrices(records: &[RatingRecord]) -> Result<BTreeMap<Question, RatingMatrix>> {
    let mut out: BTreeMap<Question, RatingMatrix> = BTreeMap::new();
    for r in records {
        out.entry(r.question)
            .or_insert_with(RatingMatrix::likert)
            .insert(&r.rater_id, &r.task_id, r.rating)?;
    }
    Ok(out)
}

/// Interval alpha per question. `None` when no task has two ratings.
pub fn agreement_by_question(records: &[RatingRecord]) -> Result<BTreeMap<Question, Option<f64>>> {
    rating_matrices(records)?
        .into_iter()
        .map(|(q, m)| match krippendorff_alpha_interval(&m) {
            Ok(a) => Ok((q, Some(a))),
            Err(Error::NoPairableItems) => Ok((q, None)),
            Err(e) => Err(e),
        })
        .collect()
}

fn keyed(keys: &[TaskKey]) -> HashMap<&str, &TaskKey> {
    keys.iter().map(|k| (k.task_id.as_str(), k)).collect()
}

fn unblinded<'a>(
    records: &'a [RatingRecord],
    keys: &'a [TaskKey],
) -> Result<Vec<(&'a RatingRecord, &'a TaskKey, f64)>> {
    let by_task = keyed(keys);
    records
        .iter()
        .map(|r| {
            let key = by_task
                .get(r.task_id.as_str())
                .ok_or_else(|| Error::MisalignedOutputs(format!("no key for task `{}`", r.task_id)))?;
            Ok((r, *key, rating_for_a(r.rating, key)))
        })
        .collect()
}

/// Win/tie/loss of system A per question: each judgment's A-perspective
/// rating is compared against the no-preference midpoint.
pub fn wtl_by_question(records: &[RatingRecord], keys: &[TaskKey]) -> Result<BTreeMap<Question, Wtl>> {
    let mut per_q: BTreeMap<Question, Vec<f64>> = BTreeMap::new();
    for (r, _, a) in unblinded(records, keys)? {
        per_q.entry(r.question).or_default().push(a);
    }
    per_q
        .into_iter()
        .map(|(q, a)| {
            let mid = vec![3.0; a.len()];
            Ok((q, likert_to_wtl(&a, &mid)?))
        })
        .collect()
}

/// Mean A-perspective rating per instance and question.
pub fn human_means(records: &[RatingRecord], keys: &[TaskKey]) -> Result<BTreeMap<String, BTreeMap<Question, f64>>> {
    let mut sums: BTreeMap<String, BTreeMap<Question, (f64, usize)>> = BTreeMap::new();
    for (r, key, a) in unblinded(records, keys)? {
        let cell = sums
            .entry(key.instance_id.clone())
            .or_default()
            .entry(r.question)
            .or_insert((0.0, 0));
        cell.0 += a;
        cell.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(id, qs)| (id, qs.into_iter().map(|(q, (s, n))| (q, s / n as f64)).collect()))
        .collect())
}
