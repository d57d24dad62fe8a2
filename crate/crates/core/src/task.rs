//! Inform, Success and Combined for task-oriented dialogs.
//!
//! Entity names and slot values are matched as normalized token
//! subsequences of the system responses. Delexicalized responses are
//! supported through `[<domain>_name]` and `[<domain>_<slot>]` placeholders.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::lexical::TokenizationConfig;
use crate::model::{Corpus, GoalSpec, SystemOutput};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub name: String,
    #[serde(default)]
    pub slots: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityDatabase {
    pub domains: BTreeMap<String, Vec<EntityRecord>>,
}

impl EntityDatabase {
    pub fn load(path: &Path) -> Result<Self> {
        let db: EntityDatabase = serde_json::from_str(&io::read_to_string(path)?)?;
        for (domain, records) in &db.domains {
            let mut names = BTreeSet::new();
            for r in records {
                if !names.insert(r.name.as_str()) {
                    return Err(Error::Config(format!(
                        "entity `{}` appears twice in domain `{domain}`",
                        r.name
                    )));
                }
            }
        }
        Ok(db)
    }

    pub fn entities(&self, domain: &str) -> Result<&[EntityRecord]> {
        self.domains
            .get(domain)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownDomain(domain.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogTranscript {
    pub dialog_id: String,
    pub system_responses: Vec<String>,
    /// One goal per domain; all of them must pass.
    pub goals: Vec<GoalSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mentions {
    pub entities: BTreeSet<String>,
    /// A `[<domain>_name]` placeholder was produced.
    pub wildcard: bool,
}

fn match_cfg() -> TokenizationConfig {
    TokenizationConfig::default()
}

fn contains_tokens(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

struct Responses {
    tokens: Vec<Vec<String>>,
    lowered: Vec<String>,
}

impl Responses {
    fn new<S: AsRef<str>>(responses: &[S]) -> Self {
        let cfg = match_cfg();
        Responses {
            tokens: responses
                .iter()
                .map(|r| cfg.tokenize(r.as_ref()).into_iter().map(|t| t.into_owned()).collect())
                .collect(),
            lowered: responses.iter().map(|r| r.as_ref().to_lowercase()).collect(),
        }
    }

    fn mentions_text(&self, text: &str) -> bool {
        let needle: Vec<String> = match_cfg()
            .tokenize(text)
            .into_iter()
            .map(|t| t.into_owned())
            .collect();
        self.tokens.iter().any(|r| contains_tokens(r, &needle))
    }

    fn has_placeholder(&self, domain: &str, slot: &str) -> bool {
        let tag = format!("[{}_{}]", domain.to_lowercase(), slot.to_lowercase());
        self.lowered.iter().any(|r| r.contains(&tag))
    }
}

/// Database entities of `domain` named in any response.
pub fn mentioned_entities<S: AsRef<str>>(
    responses: &[S],
    db: &EntityDatabase,
    domain: &str,
) -> Result<Mentions> {
    let records = db.entities(domain)?;
    let resp = Responses::new(responses);
    Ok(mentions_in(&resp, records, domain))
}

fn mentions_in(resp: &Responses, records: &[EntityRecord], domain: &str) -> Mentions {
    Mentions {
        entities: records
            .iter()
            .filter(|r| resp.mentions_text(&r.name))
            .map(|r| r.name.clone())
            .collect(),
        wildcard: resp.has_placeholder(domain, "name"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GoalOutcome {
    inform: bool,
    success: bool,
}

fn same_name(a: &str, b: &str) -> bool {
    let cfg = match_cfg();
    cfg.normalize(a) == cfg.normalize(b)
}

fn evaluate_goal(resp: &Responses, goal: &GoalSpec, db: &EntityDatabase) -> Result<GoalOutcome> {
    // entities the system offered that satisfy the goal
    let offered: Vec<&EntityRecord>;
    let inform = if goal.gold_entities.is_empty() {
        offered = Vec::new();
        true
    } else {
        let records = db.entities(&goal.domain)?;
        let mentions = mentions_in(resp, records, &goal.domain);
        let is_gold = |r: &&EntityRecord| goal.gold_entities.iter().any(|g| same_name(g, &r.name));
        offered = if mentions.wildcard {
            records.iter().filter(is_gold).collect()
        } else {
            records
                .iter()
                .filter(|r| mentions.entities.contains(&r.name))
                .filter(is_gold)
                .collect()
        };
        mentions.wildcard || !offered.is_empty()
    };
    if !inform {
        return Ok(GoalOutcome {
            inform,
            success: false,
        });
    }

    let success = goal.requested.iter().all(|slot| {
        if resp.has_placeholder(&goal.domain, slot) {
            return true;
        }
        let mut values: Vec<&str> = offered
            .iter()
            .filter_map(|r| r.slots.get(slot).map(String::as_str))
            .collect();
        if let Some(v) = goal.constraints.get(slot) {
            values.push(v);
        }
        values.iter().any(|v| resp.mentions_text(v))
    });
    Ok(GoalOutcome { inform, success })
}

fn evaluate(transcript: &DialogTranscript, db: &EntityDatabase) -> Result<GoalOutcome> {
    if transcript.goals.is_empty() {
        return Err(Error::MissingGoal(transcript.dialog_id.clone()));
    }
    let resp = Responses::new(&transcript.system_responses);
    let mut all = GoalOutcome {
        inform: true,
        success: true,
    };
    for goal in &transcript.goals {
        let o = evaluate_goal(&resp, goal, db)?;
        all.inform &= o.inform;
        all.success &= o.success;
    }
    Ok(all)
}

/// Whether the system offered an entity satisfying every domain goal.
pub fn inform(transcript: &DialogTranscript, db: &EntityDatabase) -> Result<bool> {
    evaluate(transcript, db).map(|o| o.inform)
}

/// Inform plus every requested slot value (or its placeholder) provided.
pub fn success(transcript: &DialogTranscript, db: &EntityDatabase) -> Result<bool> {
    evaluate(transcript, db).map(|o| o.success)
}

pub const INFORM: &str = "inform";
pub const SUCCESS: &str = "success";
pub const COMBINED: &str = "combined";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub dialogs: usize,
    pub inform_rate: f64,
    pub success_rate: f64,
}

pub fn task_scores(transcripts: &[DialogTranscript], db: &EntityDatabase) -> Result<TaskScores> {
    if transcripts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut informed = 0usize;
    let mut succeeded = 0usize;
    for t in transcripts {
        let o = evaluate(t, db)?;
        informed += o.inform as usize;
        succeeded += o.success as usize;
    }
    let n = transcripts.len() as f64;
    Ok(TaskScores {
        dialogs: transcripts.len(),
        inform_rate: informed as f64 / n,
        success_rate: succeeded as f64 / n,
    })
}

/// `(Inform + Success) * 0.5 + BLEU`, inputs as fractions, result in
/// percent.
pub fn combined(inform_rate: f64, success_rate: f64, bleu: f64) -> Result<f64> {
    for (name, value) in [("inform", inform_rate), ("success", success_rate), ("bleu", bleu)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { name, value });
        }
    }
    Ok((inform_rate * 100.0 + success_rate * 100.0) * 0.5 + bleu * 100.0)
}

/// Groups system outputs into per-dialog transcripts, keeping instance
/// order. Dialogs without goals or without any scored output are left out.
pub fn transcripts_from(corpus: &Corpus, outputs: &[SystemOutput]) -> Vec<DialogTranscript> {
    let by_id: HashMap<&str, &SystemOutput> = outputs
        .iter()
        .filter(|o| !o.is_error())
        .map(|o| (o.instance_id.as_str(), o))
        .collect();
    corpus
        .dialogs
        .iter()
        .filter(|d| !d.goals.is_empty())
        .filter_map(|d| {
            let responses: Vec<String> = d
                .instances
                .iter()
                .filter_map(|i| by_id.get(i.instance_id.as_str()).map(|o| o.hypothesis.clone()))
                .collect();
            (!responses.is_empty()).then(|| DialogTranscript {
                dialog_id: d.dialog_id.clone(),
                system_responses: responses,
                goals: d.goals.clone(),
            })
        })
        .collect()
}
