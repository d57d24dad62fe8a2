use std::collections::BTreeMap;

use serde::Serialize;

use super::pairwise::Question;
use super::spearman::spearman_rho;
use crate::error::{Error, Result};
use crate::model::MetricReport;

/// Spearman rho per (per-example metric, question). A cell is `None` when
/// either side is constant over the overlapping instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub overlap: usize,
    pub cells: BTreeMap<String, BTreeMap<Question, Option<f64>>>,
}

pub fn metric_human_correlation(
    report: &MetricReport,
    human: &BTreeMap<String, BTreeMap<Question, f64>>,
) -> Result<CorrelationTable> {
    let overlap: Vec<&str> = report
        .per_example
        .keys()
        .filter(|id| human.contains_key(*id))
        .map(String::as_str)
        .collect();
    if overlap.len() < 3 {
        return Err(Error::InsufficientOverlap(overlap.len()));
    }

    let mut cells = BTreeMap::new();
    for metric in report.per_example_metrics() {
        let mut row = BTreeMap::new();
        for q in Question::ALL {
            let (xs, ys): (Vec<f64>, Vec<f64>) = overlap
                .iter()
                .filter_map(|id| {
                    let x = report.per_example[*id].get(&metric)?;
                    let y = human[*id].get(&q)?;
                    Some((*x, *y))
                })
                .unzip();
            let rho = match spearman_rho(&xs, &ys) {
                Ok(r) => Some(r),
                Err(Error::ConstantInput(_) | Error::TooFewSamples { .. }) => None,
                Err(e) => return Err(e),
            };
            row.insert(q, rho);
        }
        cells.insert(metric, row);
    }
    Ok(CorrelationTable {
        overlap: overlap.len(),
        cells,
    })
}
