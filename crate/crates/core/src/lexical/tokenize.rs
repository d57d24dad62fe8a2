use serde::{Deserialize, Serialize};

/// Word-level normalization shared by F1, Knowledge-F1 and BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizationConfig {
    pub lowercase: bool,
    /// Delete ASCII punctuation characters.
    pub strip_punct: bool,
    /// Drop the tokens `a`, `an` and `the`.
    pub drop_articles: bool,
    /// Emit ASCII punctuation as separate tokens. Ignored when
    /// `strip_punct` is set.
    pub split_punct: bool,
}

impl Default for TokenizationConfig {
    fn default() -> Self {
        TokenizationConfig {
            lowercase: true,
            strip_punct: true,
            drop_articles: true,
            split_punct: false,
        }
    }
}

impl TokenizationConfig {
    /// Whitespace splitting only.
    pub fn raw() -> Self {
        TokenizationConfig {
            lowercase: false,
            strip_punct: false,
            drop_articles: false,
            split_punct: false,
        }
    }

    /// The view used for BLEU: same casing rule, punctuation kept as its own
    /// tokens, articles kept.
    pub fn for_bleu(&self) -> Self {
        TokenizationConfig {
            lowercase: self.lowercase,
            strip_punct: false,
            drop_articles: false,
            split_punct: true,
        }
    }

    pub fn tokenize<'a>(&self, text: &'a str) -> Vec<std::borrow::Cow<'a, str>> {
        use std::borrow::Cow;

        let needs_rewrite = self.lowercase && text.chars().any(changes_case)
            || (self.strip_punct || self.split_punct) && text.bytes().any(|b| b.is_ascii_punctuation());
        let toks: Vec<Cow<'a, str>> = if needs_rewrite {
            let mut s = String::with_capacity(text.len() + 8);
            for c in text.chars() {
                if c.is_ascii_punctuation() {
                    if self.strip_punct {
                        continue;
                    }
                    if self.split_punct {
                        s.push(' ');
                        s.push(c);
                        s.push(' ');
                        continue;
                    }
                }
                if self.lowercase {
                    s.extend(c.to_lowercase());
                } else {
                    s.push(c);
                }
            }
            s.split_whitespace().map(|t| Cow::Owned(t.to_owned())).collect()
        } else {
            text.split_whitespace().map(Cow::Borrowed).collect()
        };
        if self.drop_articles {
            toks.into_iter()
                .filter(|t| !matches!(t.as_ref(), "a" | "an" | "the"))
                .collect()
        } else {
            toks
        }
    }

    pub fn normalize(&self, text: &str) -> String {
        self.tokenize(text).join(" ")
    }
}

fn changes_case(c: char) -> bool {
    let mut lower = c.to_lowercase();
    lower.next() != Some(c) || lower.next().is_some()
}
