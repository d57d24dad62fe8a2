//! Schema-driven readers for the four supported dataset shapes.
//!
//! Field names are taken from an [`AdapterSchema`] so one reader serves every
//! dataset of the same shape. Each reader returns the corpus together with
//! any non-fatal warnings.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{Corpus, Dialog, DialogTurn, GoalSpec, Grounding, Speaker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Generic,
    TaskOriented,
    KnowledgeGrounded,
    ConversationalQa,
}

impl std::str::FromStr for AdapterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "generic" => Ok(AdapterKind::Generic),
            "taskoriented" | "task_oriented" => Ok(AdapterKind::TaskOriented),
            "knowledge" | "knowledge_grounded" => Ok(AdapterKind::KnowledgeGrounded),
            "qa" | "conversational_qa" => Ok(AdapterKind::ConversationalQa),
            other => Err(Error::Config(format!("unknown adapter `{other}`"))),
        }
    }
}

/// Field names used to locate data inside a source record.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct AdapterSchema {
    pub dialog_id: String,
    pub turns: String,
    pub speaker: String,
    pub text: String,
    pub user_label: String,
    pub system_label: String,
    /// Infer speakers by alternation (user first) when a turn has no
    /// speaker field.
    pub alternate_speakers: bool,
    pub belief: String,
    pub database: String,
    pub goal: String,
    pub knowledge: String,
    pub passage: String,
    pub questions: String,
    pub answers: String,
    /// Text field of question/answer entries that are objects.
    pub qa_text: String,
}

impl Default for AdapterSchema {
    fn default() -> Self {
        AdapterSchema {
            dialog_id: "dialog_id".into(),
            turns: "turns".into(),
            speaker: "speaker".into(),
            text: "text".into(),
            user_label: "user".into(),
            system_label: "system".into(),
            alternate_speakers: false,
            belief: "belief".into(),
            database: "database".into(),
            goal: "goal".into(),
            knowledge: "knowledge".into(),
            passage: "passage".into(),
            questions: "questions".into(),
            answers: "answers".into(),
            qa_text: "text".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

pub fn ingest(kind: AdapterKind, path: &Path, schema: &AdapterSchema) -> Result<Ingested> {
    match kind {
        AdapterKind::Generic => ingest_generic(path),
        AdapterKind::TaskOriented => ingest_taskoriented(path, schema),
        AdapterKind::KnowledgeGrounded => ingest_knowledge_grounded(path, schema),
        AdapterKind::ConversationalQa => ingest_conversational_qa(path, schema),
    }
}

/// Reads the generic interchange format.
pub fn ingest_generic(path: &Path) -> Result<Ingested> {
    let records = io::parse_records(&io::read_to_string(path)?)?;
    let dialogs = records
        .into_par_iter()
        .enumerate()
        .map(|(index, value)| {
            serde_json::from_value::<Dialog>(value).map_err(|e| Error::Parse {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = dialogs
        .iter()
        .filter(|d| d.instances.is_empty())
        .map(|d| format!("dialog {}: no system turn to predict", d.dialog_id))
        .collect();
    let source = dialogs
        .iter()
        .find_map(|d| d.source.clone())
        .unwrap_or_else(|| "generic".to_owned());
    Ok(Ingested {
        corpus: Corpus::new(source, dialogs),
        warnings,
    })
}

/// Task-oriented dialogs: each system turn is grounded on the rendered
/// belief state and database status attached to it.
pub fn ingest_taskoriented(path: &Path, schema: &AdapterSchema) -> Result<Ingested> {
    read_with(path, "taskoriented", |index, rec| {
        let dialog_id = dialog_id(index, rec, schema)?;
        let raw_turns = array_field(index, rec, &schema.turns)?;
        let mut turns = Vec::with_capacity(raw_turns.len());
        let mut groundings = Vec::new();
        for (t, raw) in raw_turns.iter().enumerate() {
            let turn = parse_turn(index, t, raw, schema)?;
            if turn.speaker == Speaker::System {
                let obj = raw.as_object();
                let env = [&schema.belief, &schema.database]
                    .into_iter()
                    .filter_map(|f| obj.and_then(|o| o.get(f.as_str())))
                    .map(render_value)
                    .filter(|s| !s.is_empty())
                    .collect::<Vec<_>>()
                    .join(" ");
                if !env.is_empty() {
                    groundings.push(Grounding {
                        turn_index: t,
                        text: env,
                    });
                }
            }
            turns.push(turn);
        }
        let goals = parse_goals(index, rec, schema)?;
        Ok((Some(Dialog::new(dialog_id, turns, groundings, goals)), Vec::new()))
    })
}

/// Knowledge-grounded dialogs: each system turn carries its gold knowledge
/// sentences, which become one grounding entry each.
pub fn ingest_knowledge_grounded(path: &Path, schema: &AdapterSchema) -> Result<Ingested> {
    read_with(path, "knowledge_grounded", |index, rec| {
        let dialog_id = dialog_id(index, rec, schema)?;
        let raw_turns = array_field(index, rec, &schema.turns)?;
        let mut turns = Vec::with_capacity(raw_turns.len());
        let mut groundings = Vec::new();
        let mut warnings = Vec::new();
        for (t, raw) in raw_turns.iter().enumerate() {
            let turn = parse_turn(index, t, raw, schema)?;
            if turn.speaker == Speaker::System {
                let sentences = match raw.get(schema.knowledge.as_str()) {
                    None | Some(Value::Null) => Vec::new(),
                    Some(Value::String(s)) => vec![s.clone()],
                    Some(Value::Array(items)) => items
                        .iter()
                        .map(|v| text_of(index, v, &schema.qa_text))
                        .collect::<Result<_>>()?,
                    Some(_) => {
                        return Err(Error::Parse {
                            index,
                            message: format!("turn {t}: `{}` must be a string or list", schema.knowledge),
                        })
                    }
                };
                if sentences.is_empty() && t > 0 {
                    warnings.push(format!("dialog {dialog_id} turn {t}: no gold knowledge"));
                }
                groundings.extend(sentences.into_iter().map(|text| Grounding { turn_index: t, text }));
            }
            turns.push(turn);
        }
        Ok((Some(Dialog::new(dialog_id, turns, groundings, Vec::new())), warnings))
    })
}

/// Conversational QA: every answer is a prediction point grounded on the
/// dialog's passage, with all earlier questions and answers as context.
pub fn ingest_conversational_qa(path: &Path, schema: &AdapterSchema) -> Result<Ingested> {
    read_with(path, "conversational_qa", |index, rec| {
        let dialog_id = dialog_id(index, rec, schema)?;
        let passage = text_of(index, required(index, rec, &schema.passage)?, &schema.qa_text)?;
        let questions = array_field(index, rec, &schema.questions)?;
        let answers = array_field(index, rec, &schema.answers)?;
        if questions.len() != answers.len() {
            return Err(Error::Parse {
                index,
                message: format!(
                    "{} questions but {} answers",
                    questions.len(),
                    answers.len()
                ),
            });
        }
        if questions.is_empty() {
            let w = format!("dialog {dialog_id}: passage has no questions, skipped");
            return Ok((None, vec![w]));
        }
        let mut turns = Vec::with_capacity(questions.len() * 2);
        let mut groundings = Vec::with_capacity(questions.len());
        for (q, a) in questions.iter().zip(answers) {
            turns.push(DialogTurn::user(text_of(index, q, &schema.qa_text)?));
            groundings.push(Grounding {
                turn_index: turns.len(),
                text: passage.clone(),
            });
            turns.push(DialogTurn::system(text_of(index, a, &schema.qa_text)?));
        }
        Ok((Some(Dialog::new(dialog_id, turns, groundings, Vec::new())), Vec::new()))
    })
}

type Parsed = (Option<Dialog>, Vec<String>);

fn read_with<F>(path: &Path, source: &str, parse: F) -> Result<Ingested>
where
    F: Fn(usize, &Map<String, Value>) -> Result<Parsed> + Sync,
{
    let records = io::parse_records(&io::read_to_string(path)?)?;
    let parsed = records
        .par_iter()
        .enumerate()
        .map(|(index, value)| match value.as_object() {
            Some(rec) => parse(index, rec),
            None => Err(Error::Parse {
                index,
                message: "record is not an object".into(),
            }),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut dialogs = Vec::with_capacity(parsed.len());
    let mut warnings = Vec::new();
    for (dialog, w) in parsed {
        warnings.extend(w);
        dialogs.extend(dialog);
    }
    Ok(Ingested {
        corpus: Corpus::new(source, dialogs),
        warnings,
    })
}

fn required<'a>(index: usize, rec: &'a Map<String, Value>, field: &str) -> Result<&'a Value> {
    rec.get(field).ok_or_else(|| Error::Schema {
        index,
        field: field.to_owned(),
    })
}

fn array_field<'a>(index: usize, rec: &'a Map<String, Value>, field: &str) -> Result<&'a Vec<Value>> {
    required(index, rec, field)?.as_array().ok_or_else(|| Error::Parse {
        index,
        message: format!("`{field}` must be a list"),
    })
}

fn dialog_id(index: usize, rec: &Map<String, Value>, schema: &AdapterSchema) -> Result<String> {
    match required(index, rec, &schema.dialog_id)? {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::Parse {
            index,
            message: format!("`{}` must be a string", schema.dialog_id),
        }),
    }
}

/// A plain string, or an object whose `field` is a string.
fn text_of(index: usize, v: &Value, field: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Object(o) => match o.get(field) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::Parse {
                index,
                message: format!("`{field}` must be a string"),
            }),
            None => Err(Error::Schema {
                index,
                field: field.to_owned(),
            }),
        },
        _ => Err(Error::Parse {
            index,
            message: "expected a string or an object".into(),
        }),
    }
}

fn parse_turn(index: usize, t: usize, raw: &Value, schema: &AdapterSchema) -> Result<DialogTurn> {
    let obj = raw.as_object().ok_or_else(|| Error::Parse {
        index,
        message: format!("turn {t} is not an object"),
    })?;
    let text = match obj.get(schema.text.as_str()) {
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(Error::Parse {
                index,
                message: format!("turn {t}: `{}` must be a string", schema.text),
            })
        }
        None => {
            return Err(Error::Schema {
                index,
                field: format!("{}[{t}].{}", schema.turns, schema.text),
            })
        }
    };
    let speaker = match obj.get(schema.speaker.as_str()).and_then(Value::as_str) {
        Some(s) if s.eq_ignore_ascii_case(&schema.user_label) => Speaker::User,
        Some(s) if s.eq_ignore_ascii_case(&schema.system_label) => Speaker::System,
        Some(s) => {
            return Err(Error::Parse {
                index,
                message: format!("turn {t}: unknown speaker `{s}`"),
            })
        }
        None if schema.alternate_speakers => {
            if t.is_multiple_of(2) {
                Speaker::User
            } else {
                Speaker::System
            }
        }
        None => {
            return Err(Error::Schema {
                index,
                field: format!("{}[{t}].{}", schema.turns, schema.speaker),
            })
        }
    };
    let score = obj.get("score").and_then(Value::as_i64);
    let forum = obj.get("forum").and_then(Value::as_str).map(str::to_owned);
    Ok(DialogTurn {
        speaker,
        text,
        score,
        forum,
    })
}

fn parse_goals(index: usize, rec: &Map<String, Value>, schema: &AdapterSchema) -> Result<Vec<GoalSpec>> {
    let to_goal = |v: &Value| {
        serde_json::from_value::<GoalSpec>(v.clone()).map_err(|e| Error::Parse {
            index,
            message: format!("goal: {e}"),
        })
    };
    match rec.get(schema.goal.as_str()) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items.iter().map(to_goal).collect(),
        Some(v) => Ok(vec![to_goal(v)?]),
    }
}

/// Flattens a belief state or database annotation into grounding text:
/// strings pass through, objects become `key=value` pairs (nested keys are
/// emitted as a prefix), lists are space-joined.
pub fn render_value(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) => items
            .iter()
            .map(render_value)
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" "),
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| match v {
                Value::Object(_) => format!("{k} {}", render_value(v)),
                _ => format!("{k}={}", render_value(v)),
            })
            .collect::<Vec<_>>()
            .join(" "),
    }
}
