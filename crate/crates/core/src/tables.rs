//! Fixed-width text tables for reports.
//!
//! Automatic metrics are printed in percent with two decimals; agreement and
//! correlation coefficients with three. Missing cells print as `-`.

use std::collections::BTreeMap;
use std::fmt;

use crate::lexical::{BLEU, CHRF, F1, KF1};
use crate::model::MetricReport;
use crate::stats::{CorrelationTable, Question, Wtl};
use crate::task::{COMBINED, INFORM, SUCCESS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        TextTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                w[i] = w[i].max(cell.chars().count());
            }
        }
        w
    }
}

/// First column left-aligned, the rest right-aligned, two spaces between.
impl fmt::Display for TextTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let widths = self.widths();
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            let mut out = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    out.push_str(&format!("{c:<w$}"));
                } else {
                    out.push_str(&format!("  {c:>w$}"));
                }
            }
            writeln!(f, "{}", out.trim_end())
        };
        line(f, &self.header)?;
        let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        writeln!(f, "{}", "-".repeat(total))?;
        for row in &self.rows {
            line(f, row)?;
        }
        Ok(())
    }
}

fn cell(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.decimals$}"),
        _ => "-".to_owned(),
    }
}

const LEXICAL: [&str; 4] = [BLEU, F1, KF1, CHRF];
const TASK: [&str; 3] = [INFORM, SUCCESS, COMBINED];

/// Corpus metrics that are neither lexical nor task metrics, e.g. scores
/// merged from a neural scorer, in name order.
fn extra_metrics(systems: &[(&str, &MetricReport)]) -> Vec<String> {
    let mut extras: Vec<String> = systems
        .iter()
        .flat_map(|(_, r)| r.corpus.keys().cloned())
        .filter(|k| !LEXICAL.contains(&k.as_str()) && !TASK.contains(&k.as_str()))
        .collect();
    extras.sort();
    extras.dedup();
    extras
}

fn metric_table(systems: &[(&str, &MetricReport)], columns: &[(String, String)]) -> TextTable {
    let mut header = vec!["Model".to_owned()];
    header.extend(columns.iter().map(|(_, label)| label.clone()));
    let mut t = TextTable::new(header);
    for (name, report) in systems {
        let pct = report.to_percent();
        let mut row = vec![name.to_string()];
        row.extend(columns.iter().map(|(m, _)| cell(pct.corpus.get(m).copied(), 2)));
        t.push(row);
    }
    t
}

/// Columns: Model, BLEU, F1, KF1, extra metrics, chrF.
pub fn lexical_table(systems: &[(&str, &MetricReport)]) -> TextTable {
    let mut cols: Vec<(String, String)> = vec![
        (BLEU.into(), "BLEU".into()),
        (F1.into(), "F1".into()),
        (KF1.into(), "KF1".into()),
    ];
    cols.extend(extra_metrics(systems).into_iter().map(|m| (m.clone(), m)));
    cols.push((CHRF.into(), "chrF".into()));
    metric_table(systems, &cols)
}

/// Columns: Model, extra metrics, BLEU, Inform, Success, Combined.
pub fn task_table(systems: &[(&str, &MetricReport)]) -> TextTable {
    let mut cols: Vec<(String, String)> = extra_metrics(systems).into_iter().map(|m| (m.clone(), m)).collect();
    for (m, label) in [(BLEU, "BLEU"), (INFORM, "Inform"), (SUCCESS, "Success"), (COMBINED, "Combined")] {
        cols.push((m.into(), label.into()));
    }
    metric_table(systems, &cols)
}

/// Columns: Dataset, Extrinsic, Intrinsic, Safety; alpha with 3 decimals.
pub fn agreement_table(datasets: &[(&str, &BTreeMap<Question, Option<f64>>)]) -> TextTable {
    let mut t = TextTable::new(["Dataset", "Extrinsic", "Intrinsic", "Safety"]);
    for (name, alphas) in datasets {
        let mut row = vec![name.to_string()];
        row.extend(Question::ALL.iter().map(|q| cell(alphas.get(q).copied().flatten(), 3)));
        t.push(row);
    }
    t
}

/// Columns: Metric, Extrinsic, Intrinsic, Safety; rho with 3 decimals.
pub fn correlation_table(table: &CorrelationTable) -> TextTable {
    let mut t = TextTable::new(["Metric", "Extrinsic", "Intrinsic", "Safety"]);
    for (metric, row_cells) in &table.cells {
        let mut row = vec![metric.clone()];
        row.extend(Question::ALL.iter().map(|q| cell(row_cells.get(q).copied().flatten(), 3)));
        t.push(row);
    }
    t
}

/// Win percentages per question for both systems plus ties, from system
/// A's perspective.
pub fn wtl_table(name_a: &str, name_b: &str, wtl: &BTreeMap<Question, Wtl>) -> TextTable {
    let mut t = TextTable::new(["Model", "Extrinsic", "Intrinsic", "Safety"]);
    let pick = |f: fn(&Wtl) -> f64| -> Vec<String> {
        Question::ALL
            .iter()
            .map(|q| cell(wtl.get(q).filter(|w| w.total() > 0).map(f), 2))
            .collect()
    };
    let mut a = vec![name_a.to_owned()];
    a.extend(pick(Wtl::win_percent));
    let mut b = vec![name_b.to_owned()];
    b.extend(pick(Wtl::loss_percent));
    let mut tie = vec!["Tie".to_owned()];
    tie.extend(pick(Wtl::tie_percent));
    t.push(a);
    t.push(b);
    t.push(tie);
    t
}
