//! Safety filtering of forum-style dialog data.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Corpus, Dialog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    /// Lowercase words or phrases, matched on word boundaries.
    pub block_words: BTreeSet<String>,
    /// Turns with a vote score below this are dropped. `None` disables the
    /// rule; turns without a score are never dropped by it.
    pub min_score: Option<i64>,
    pub blocked_forums: BTreeSet<String>,
    pub max_turn_chars: Option<usize>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            block_words: BTreeSet::new(),
            min_score: Some(-1),
            blocked_forums: BTreeSet::new(),
            max_turn_chars: None,
        }
    }
}

impl FilterPolicy {
    /// A policy that keeps everything.
    pub fn none() -> Self {
        FilterPolicy {
            min_score: None,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    BlockWord,
    BlockedForum,
    LowScore,
    TooLong,
}

/// Dialog drop counts. A dialog breaking several rules is counted once,
/// under the first rule in [`FilterRule`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input_dialogs: usize,
    pub kept_dialogs: usize,
    pub block_word: usize,
    pub blocked_forum: usize,
    pub low_score: usize,
    pub too_long: usize,
}

impl FilterStats {
    pub fn dropped(&self) -> usize {
        self.input_dialogs - self.kept_dialogs
    }

    fn record(&mut self, rule: FilterRule) {
        match rule {
            FilterRule::BlockWord => self.block_word += 1,
            FilterRule::BlockedForum => self.blocked_forum += 1,
            FilterRule::LowScore => self.low_score += 1,
            FilterRule::TooLong => self.too_long += 1,
        }
    }
}

impl fmt::Display for FilterStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = if self.input_dialogs == 0 {
            100.0
        } else {
            100.0 * self.kept_dialogs as f64 / self.input_dialogs as f64
        };
        writeln!(f, "{:<16}{:>10}", "input dialogs", self.input_dialogs)?;
        writeln!(f, "{:<16}{:>10}", "block word", self.block_word)?;
        writeln!(f, "{:<16}{:>10}", "blocked forum", self.blocked_forum)?;
        writeln!(f, "{:<16}{:>10}", "low score", self.low_score)?;
        writeln!(f, "{:<16}{:>10}", "too long", self.too_long)?;
        writeln!(f, "{:<16}{:>10} ({pct:.2}%)", "kept", self.kept_dialogs)
    }
}

/// Lowercased alphanumeric runs of `text`.
fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

struct CompiledPolicy<'a> {
    policy: &'a FilterPolicy,
    phrases: Vec<Vec<String>>,
    forums: BTreeSet<String>,
}

impl<'a> CompiledPolicy<'a> {
    fn new(policy: &'a FilterPolicy) -> Self {
        CompiledPolicy {
            policy,
            phrases: policy
                .block_words
                .iter()
                .map(|w| words(w))
                .filter(|p| !p.is_empty())
                .collect(),
            forums: policy.blocked_forums.iter().map(|f| f.to_lowercase()).collect(),
        }
    }

    fn has_block_word(&self, text: &str) -> bool {
        if self.phrases.is_empty() {
            return false;
        }
        let toks = words(text);
        self.phrases.iter().any(|p| toks.windows(p.len()).any(|w| w == p.as_slice()))
    }

    fn violation(&self, dialog: &Dialog) -> Option<FilterRule> {
        let turns = &dialog.turns;
        if turns.iter().any(|t| self.has_block_word(&t.text)) {
            return Some(FilterRule::BlockWord);
        }
        if turns.iter().any(|t| {
            t.forum
                .as_ref()
                .is_some_and(|f| self.forums.contains(&f.to_lowercase()))
        }) {
            return Some(FilterRule::BlockedForum);
        }
        if let Some(min) = self.policy.min_score {
            if turns.iter().any(|t| t.score.is_some_and(|s| s < min)) {
                return Some(FilterRule::LowScore);
            }
        }
        if let Some(cap) = self.policy.max_turn_chars {
            if turns.iter().any(|t| t.text.chars().count() > cap) {
                return Some(FilterRule::TooLong);
            }
        }
        None
    }
}

/// Drops every dialog that breaks a policy rule. Survivors keep their
/// original order.
pub fn filter_corpus(corpus: &Corpus, policy: &FilterPolicy) -> (Corpus, FilterStats) {
    let compiled = CompiledPolicy::new(policy);
    let verdicts: Vec<Option<FilterRule>> =
        corpus.dialogs.par_iter().map(|d| compiled.violation(d)).collect();

    let mut stats = FilterStats {
        input_dialogs: corpus.dialogs.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for (dialog, verdict) in corpus.dialogs.iter().zip(verdicts) {
        match verdict {
            Some(rule) => stats.record(rule),
            None => kept.push(dialog.clone()),
        }
    }
    stats.kept_dialogs = kept.len();
    (Corpus::new(corpus.source_tag.clone(), kept), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DialogTurn;

    fn dialog(id: &str, user: &str) -> Dialog {
        Dialog::new(
            id,
            vec![DialogTurn::user(user), DialogTurn::system("ok")],
            vec![],
            vec![],
        )
    }

    fn words_policy(ws: &[&str]) -> FilterPolicy {
        FilterPolicy {
            block_words: ws.iter().map(|s| s.to_string()).collect(),
            ..FilterPolicy::none()
        }
    }

    #[test]
    fn empty_policy_is_identity() {
        let c = Corpus::new("t", vec![dialog("a", "x"), dialog("b", "y")]);
        let (out, stats) = filter_corpus(&c, &FilterPolicy::none());
        assert_eq!(out, c);
        assert_eq!(stats.dropped(), 0);
    }

    #[test]
    fn block_word_drops_whole_dialog() {
        let c = Corpus::new("t", vec![dialog("a", "what a Darn shame"), dialog("b", "fine")]);
        let (out, stats) = filter_corpus(&c, &words_policy(&["darn"]));
        assert_eq!(out.dialogs.len(), 1);
        assert_eq!(out.dialogs[0].dialog_id, "b");
        assert_eq!(stats.block_word, 1);
    }

    #[test]
    fn block_words_respect_word_boundaries() {
        let c = Corpus::new("t", vec![dialog("a", "Scunthorpe is a town"), dialog("b", "classic assessment")]);
        let (out, _) = filter_corpus(&c, &words_policy(&["thorpe", "class"]));
        assert_eq!(out.dialogs.len(), 2);
        let (out, _) = filter_corpus(&c, &words_policy(&["is a"]));
        assert_eq!(out.dialogs.len(), 1);
    }

    #[test]
    fn forum_score_and_length_rules() {
        let mut forum = dialog("f", "hi");
        forum.turns[0].forum = Some("BannedSub".into());
        let mut troll = dialog("s", "hi");
        troll.turns[1].score = Some(-7);
        let long = dialog("l", &"x".repeat(50));
        let unscored = dialog("u", "hi");
        let c = Corpus::new("t", vec![forum, troll, long, unscored]);
        let policy = FilterPolicy {
            blocked_forums: ["bannedsub".to_string()].into(),
            min_score: Some(-1),
            max_turn_chars: Some(40),
            ..FilterPolicy::none()
        };
        let (out, stats) = filter_corpus(&c, &policy);
        assert_eq!(out.dialogs.len(), 1);
        assert_eq!(out.dialogs[0].dialog_id, "u");
        assert_eq!((stats.blocked_forum, stats.low_score, stats.too_long), (1, 1, 1));
        assert!(stats.to_string().contains("kept"));
    }
}
