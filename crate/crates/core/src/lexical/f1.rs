use std::collections::HashMap;
use std::hash::Hash;

use super::TokenizationConfig;

/// Size of the multiset intersection of two token bags.
pub(crate) fn bag_overlap<T: Eq + Hash>(a: &[T], b: &[T]) -> usize {
    let mut counts: HashMap<&T, usize> = HashMap::with_capacity(b.len());
    for t in b {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0;
    for t in a {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    common
}

fn f1_of_tokens<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> f64 {
    match (hyp.is_empty(), reference.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = bag_overlap(hyp, reference);
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / hyp.len() as f64;
    let r = common as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Bag-of-tokens F1 between a hypothesis and a reference.
pub fn unigram_f1(hypothesis: &str, reference: &str, cfg: &TokenizationConfig) -> f64 {
    f1_of_tokens(&cfg.tokenize(hypothesis), &cfg.tokenize(reference))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnowledgeF1 {
    pub score: f64,
    /// No knowledge text was available; the score is 0 by convention.
    pub empty_knowledge: bool,
}

/// Unigram F1 against all knowledge sentences joined into one reference.
pub fn knowledge_f1<S: AsRef<str>>(hypothesis: &str, knowledge: &[S], cfg: &TokenizationConfig) -> KnowledgeF1 {
    if knowledge.iter().all(|k| k.as_ref().trim().is_empty()) {
        return KnowledgeF1 {
            score: 0.0,
            empty_knowledge: true,
        };
    }
    let joined = knowledge.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    KnowledgeF1 {
        score: unigram_f1(hypothesis, &joined, cfg),
        empty_knowledge: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_cases() {
        let raw = TokenizationConfig::raw();
        assert_eq!(unigram_f1("a b c", "b c d", &raw), 2.0 / 3.0);
        assert_eq!(unigram_f1("same words here", "same words here", &raw), 1.0);
        assert_eq!(unigram_f1("x y", "z w", &raw), 0.0);
        assert_eq!(unigram_f1("", "", &raw), 1.0);
        assert_eq!(unigram_f1("", "a", &raw), 0.0);
        // repeated tokens are clipped: overlap 1, P = 1/2, R = 1
        assert!((unigram_f1("b b", "b", &raw) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn knowledge_cases() {
        let cfg = TokenizationConfig::default();
        let k = knowledge_f1("jazz began in new orleans", &["jazz began in new orleans"], &cfg);
        assert_eq!(k.score, 1.0);
        let none: [&str; 0] = [];
        let k = knowledge_f1("anything", &none, &cfg);
        assert_eq!((k.score, k.empty_knowledge), (0.0, true));
        // hypothesis = half of the knowledge tokens: P = 1, R = 1/2
        let raw = TokenizationConfig::raw();
        let k = knowledge_f1("w1 w2 w3", &["w1 w2", "w3 w4 w5 w6"], &raw);
        assert!((k.score - 2.0 / 3.0).abs() < 1e-15);
    }
}
