//! Shared domain types: dialog turns, grounded instances, corpora, goals,
//! system outputs, metric reports and rating matrices.
//!
//! A [`Dialog`] is stored as its raw turns plus per-turn grounding texts.
//! The [`GroundedInstance`]s are derived from those once, at construction:
//! every system turn that directly answers a user turn becomes one
//! prediction point whose context is everything said before it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::User => f.write_str("user"),
            Speaker::System => f.write_str("system"),
        }
    }
}

/// One utterance, kept verbatim. `score` and `forum` only exist for
/// forum-sourced data and drive the safety filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogTurn {
    pub speaker: Speaker,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forum: Option<String>,
}

impl DialogTurn {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        DialogTurn {
            speaker,
            text: text.into(),
            score: None,
            forum: None,
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::new(Speaker::User, text)
    }

    pub fn system(text: impl Into<String>) -> Self {
        Self::new(Speaker::System, text)
    }

    /// Speaker and text equality, ignoring forum metadata.
    pub fn same_utterance(&self, other: &DialogTurn) -> bool {
        self.speaker == other.speaker && self.text == other.text
    }
}

/// Grounding text attached to one turn of a dialog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grounding {
    pub turn_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedInstance {
    pub instance_id: String,
    pub context: Vec<DialogTurn>,
    pub environment: String,
    pub target: String,
}

/// A task-oriented goal for one domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub domain: String,
    #[serde(default)]
    pub constraints: BTreeMap<String, String>,
    #[serde(default)]
    pub requested: BTreeSet<String>,
    #[serde(default)]
    pub gold_entities: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "DialogRecord", into = "DialogRecord")]
pub struct Dialog {
    pub dialog_id: String,
    pub turns: Vec<DialogTurn>,
    pub groundings: Vec<Grounding>,
    /// One goal per domain; multi-domain dialogs carry several.
    pub goals: Vec<GoalSpec>,
    pub source: Option<String>,
    pub instances: Vec<GroundedInstance>,
}

/// Instance id for the prediction point at `turn_index`.
pub fn instance_id(dialog_id: &str, turn_index: usize) -> String {
    format!("{dialog_id}:{turn_index}")
}

impl Dialog {
    pub fn new(
        dialog_id: impl Into<String>,
        turns: Vec<DialogTurn>,
        groundings: Vec<Grounding>,
        goals: Vec<GoalSpec>,
    ) -> Self {
        let dialog_id = dialog_id.into();
        let instances = derive_instances(&dialog_id, &turns, &groundings);
        Dialog {
            dialog_id,
            turns,
            groundings,
            goals,
            source: None,
            instances,
        }
    }

    /// Grounding texts attached to `turn_index`, in file order.
    pub fn groundings_at(&self, turn_index: usize) -> impl Iterator<Item = &str> {
        self.groundings
            .iter()
            .filter(move |g| g.turn_index == turn_index)
            .map(|g| g.text.as_str())
    }

    /// Turn index that an instance id of this dialog points at.
    pub fn turn_index_of(&self, instance_id: &str) -> Option<usize> {
        instance_id
            .strip_prefix(self.dialog_id.as_str())?
            .strip_prefix(':')?
            .parse()
            .ok()
    }

    /// Gold grounding sentences for an instance of this dialog.
    pub fn knowledge_for(&self, instance_id: &str) -> Vec<String> {
        match self.turn_index_of(instance_id) {
            Some(i) => self.groundings_at(i).map(str::to_owned).collect(),
            None => Vec::new(),
        }
    }
}

fn derive_instances(
    dialog_id: &str,
    turns: &[DialogTurn],
    groundings: &[Grounding],
) -> Vec<GroundedInstance> {
    let mut instances = Vec::new();
    for (i, turn) in turns.iter().enumerate() {
        if turn.speaker != Speaker::System || i == 0 || turns[i - 1].speaker != Speaker::User {
            continue;
        }
        let environment = groundings
            .iter()
            .filter(|g| g.turn_index == i)
            .map(|g| g.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        instances.push(GroundedInstance {
            instance_id: instance_id(dialog_id, i),
            context: turns[..i].to_vec(),
            environment,
            target: turn.text.clone(),
        });
    }
    instances
}

/// Wire record of the generic grounded-dialog interchange format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DialogRecord {
    pub dialog_id: String,
    pub turns: Vec<DialogTurn>,
    #[serde(default)]
    pub groundings: Vec<Grounding>,
    #[serde(
        default,
        skip_serializing_if = "Vec::is_empty",
        with = "one_or_many"
    )]
    pub goal: Vec<GoalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl From<DialogRecord> for Dialog {
    fn from(r: DialogRecord) -> Self {
        let mut d = Dialog::new(r.dialog_id, r.turns, r.groundings, r.goal);
        d.source = r.source;
        d
    }
}

impl From<Dialog> for DialogRecord {
    fn from(d: Dialog) -> Self {
        DialogRecord {
            dialog_id: d.dialog_id,
            turns: d.turns,
            groundings: d.groundings,
            goal: d.goals,
            source: d.source,
        }
    }
}

/// `goal` may be a single object or a list of per-domain objects.
mod one_or_many {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::GoalSpec;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(GoalSpec),
        Many(Vec<GoalSpec>),
    }

    pub fn serialize<S: Serializer>(goals: &[GoalSpec], s: S) -> Result<S::Ok, S::Error> {
        match goals {
            [one] => one.serialize(s),
            many => many.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<GoalSpec>, D::Error> {
        Ok(match Option::<OneOrMany>::deserialize(d)? {
            None => Vec::new(),
            Some(OneOrMany::One(g)) => vec![g],
            Some(OneOrMany::Many(v)) => v,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub source_tag: String,
    pub dialogs: Vec<Dialog>,
}

impl Corpus {
    pub fn new(source_tag: impl Into<String>, dialogs: Vec<Dialog>) -> Self {
        Corpus {
            source_tag: source_tag.into(),
            dialogs,
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = &GroundedInstance> {
        self.dialogs.iter().flat_map(|d| d.instances.iter())
    }

    pub fn instance_count(&self) -> usize {
        self.dialogs.iter().map(|d| d.instances.len()).sum()
    }

    /// Index from instance id to (dialog, instance) positions.
    pub fn instance_index(&self) -> HashMap<&str, (usize, usize)> {
        let mut index = HashMap::new();
        for (di, d) in self.dialogs.iter().enumerate() {
            for (ii, inst) in d.instances.iter().enumerate() {
                index.insert(inst.instance_id.as_str(), (di, ii));
            }
        }
        index
    }
}

/// A generated response aligned with its gold reference and grounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub instance_id: String,
    pub hypothesis: String,
    #[serde(default)]
    pub reference: String,
    #[serde(default)]
    pub knowledge: Vec<String>,
    /// Set when generation failed for this instance; the hypothesis is
    /// empty and the output is excluded from scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SystemOutput {
    pub fn new(
        instance_id: impl Into<String>,
        hypothesis: impl Into<String>,
        reference: impl Into<String>,
        knowledge: Vec<String>,
    ) -> Self {
        SystemOutput {
            instance_id: instance_id.into(),
            hypothesis: hypothesis.into(),
            reference: reference.into(),
            knowledge,
            error: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Fraction,
    Percent,
}

/// Metric scores keyed by instance id and metric name. Fractions are the
/// canonical representation; `Combined` is the one corpus score that can
/// exceed 1 since it sums two rates and a BLEU score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_example: BTreeMap<String, BTreeMap<String, f64>>,
    pub corpus: BTreeMap<String, f64>,
    pub scale: Scale,
}

impl Default for MetricReport {
    fn default() -> Self {
        MetricReport {
            per_example: BTreeMap::new(),
            corpus: BTreeMap::new(),
            scale: Scale::Fraction,
        }
    }
}

impl MetricReport {
    pub fn to_percent(&self) -> MetricReport {
        if self.scale == Scale::Percent {
            return self.clone();
        }
        MetricReport {
            per_example: self
                .per_example
                .iter()
                .map(|(id, m)| {
                    let m = m.iter().map(|(k, v)| (k.clone(), v * 100.0)).collect();
                    (id.clone(), m)
                })
                .collect(),
            corpus: self
                .corpus
                .iter()
                .map(|(k, v)| (k.clone(), v * 100.0))
                .collect(),
            scale: Scale::Percent,
        }
    }

    /// Per-example values of one metric, in instance-id order.
    pub fn metric_values(&self, metric: &str) -> Vec<(&str, f64)> {
        self.per_example
            .iter()
            .filter_map(|(id, m)| m.get(metric).map(|v| (id.as_str(), *v)))
            .collect()
    }

    /// Names of all per-example metrics present in the report.
    pub fn per_example_metrics(&self) -> BTreeSet<String> {
        self.per_example
            .values()
            .flat_map(|m| m.keys().cloned())
            .collect()
    }

    /// Merges externally computed per-example scores under `metric` and adds
    /// their macro-average to the corpus section.
    pub fn merge_scores(&mut self, metric: &str, scores: &BTreeMap<String, f64>) {
        for (id, score) in scores {
            self.per_example
                .entry(id.clone())
                .or_default()
                .insert(metric.to_owned(), *score);
        }
        if !scores.is_empty() {
            let mean = scores.values().sum::<f64>() / scores.len() as f64;
            self.corpus.insert(metric.to_owned(), mean);
        }
    }
}

/// Raters x items matrix of bounded ordinal scores, with missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    pub raters: Vec<String>,
    pub items: Vec<String>,
    ratings: BTreeMap<(usize, usize), f64>,
    min: f64,
    max: f64,
}

impl RatingMatrix {
    pub fn new(min: f64, max: f64) -> Self {
        assert!(min <= max, "scale bounds inverted");
        RatingMatrix {
            raters: Vec::new(),
            items: Vec::new(),
            ratings: BTreeMap::new(),
            min,
            max,
        }
    }

    /// Five-point Likert scale.
    pub fn likert() -> Self {
        Self::new(1.0, 5.0)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    /// Stores a rating, replacing any earlier one for the same cell.
    pub fn insert(&mut self, rater: &str, item: &str, value: f64) -> Result<()> {
        if !(self.min..=self.max).contains(&value) {
            return Err(Error::RatingOutOfBounds {
                value,
                min: self.min,
                max: self.max,
            });
        }
        let r = position_or_push(&mut self.raters, rater);
        let i = position_or_push(&mut self.items, item);
        self.ratings.insert((r, i), value);
        Ok(())
    }

    pub fn get(&self, rater: &str, item: &str) -> Option<f64> {
        let r = self.raters.iter().position(|x| x == rater)?;
        let i = self.items.iter().position(|x| x == item)?;
        self.ratings.get(&(r, i)).copied()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Ratings grouped by item, in item order; items without ratings yield
    /// empty vectors.
    pub fn values_by_item(&self) -> Vec<Vec<f64>> {
        let mut units = vec![Vec::new(); self.items.len()];
        for (&(_, i), &v) in &self.ratings {
            units[i].push(v);
        }
        units
    }
}

fn position_or_push(names: &mut Vec<String>, name: &str) -> usize {
    match names.iter().position(|n| n == name) {
        Some(p) => p,
        None => {
            names.push(name.to_owned());
            names.len() - 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptyTurnText,
    DuplicateDialogId,
    DuplicateInstanceId,
    EmptyContext,
    ContextNotEndingWithUser,
    ContextNotExtended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub dialog_id: String,
    pub instance_id: Option<String>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dialog {}", self.dialog_id)?;
        if let Some(id) = &self.instance_id {
            write!(f, " instance {id}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Checks every corpus invariant. Violations are returned in corpus order.
pub fn validate_corpus(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut dialog_ids = HashSet::new();
    let mut instance_ids = HashSet::new();

    for dialog in &corpus.dialogs {
        let did = &dialog.dialog_id;
        let violation = |instance_id: Option<&str>, rule, message: String| Violation {
            dialog_id: did.clone(),
            instance_id: instance_id.map(str::to_owned),
            rule,
            message,
        };

        if !dialog_ids.insert(did.as_str()) {
            out.push(violation(
                None,
                Rule::DuplicateDialogId,
                format!("dialog id `{did}` is not unique"),
            ));
        }
        for (i, turn) in dialog.turns.iter().enumerate() {
            if turn.text.trim().is_empty() {
                out.push(violation(
                    None,
                    Rule::EmptyTurnText,
                    format!("turn {i} has empty text"),
                ));
            }
        }

        let mut previous: Option<&GroundedInstance> = None;
        for inst in &dialog.instances {
            let iid = Some(inst.instance_id.as_str());
            if !instance_ids.insert(inst.instance_id.as_str()) {
                out.push(violation(
                    iid,
                    Rule::DuplicateInstanceId,
                    format!("instance id `{}` is not unique", inst.instance_id),
                ));
            }
            match inst.context.last() {
                None => out.push(violation(iid, Rule::EmptyContext, "context is empty".into())),
                Some(last) if last.speaker != Speaker::User => out.push(violation(
                    iid,
                    Rule::ContextNotEndingWithUser,
                    "last context turn is not a user turn".into(),
                )),
                Some(_) => {}
            }
            if let Some(prev) = previous {
                if !extends(prev, inst) {
                    out.push(violation(
                        iid,
                        Rule::ContextNotExtended,
                        format!(
                            "context does not extend the context and target of `{}`",
                            prev.instance_id
                        ),
                    ));
                }
            }
            previous = Some(inst);
        }
    }
    out
}

/// Whether `next.context` starts with `prev.context` followed by the
/// system turn `prev.target`.
fn extends(prev: &GroundedInstance, next: &GroundedInstance) -> bool {
    let n = prev.context.len();
    next.context.len() > n + 1
        && prev
            .context
            .iter()
            .zip(&next.context)
            .all(|(a, b)| a.same_utterance(b))
        && next.context[n].speaker == Speaker::System
        && next.context[n].text == prev.target
}
