use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use super::TokenizationConfig;
use crate::error::{Error, Result};

pub const BLEU_ORDER: usize = 4;

/// Sufficient statistics of corpus BLEU. Integer counts make the reduction
/// associative, so any parallel split sums to the same value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; BLEU_ORDER],
    pub totals: [u64; BLEU_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl std::ops::Add for BleuStats {
    type Output = BleuStats;

    fn add(mut self, o: BleuStats) -> BleuStats {
        for n in 0..BLEU_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }
}

impl std::iter::Sum for BleuStats {
    fn sum<I: Iterator<Item = BleuStats>>(iter: I) -> Self {
        iter.fold(BleuStats::default(), |a, b| a + b)
    }
}

fn ngram_counts<T: Eq + Hash>(toks: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut m = HashMap::new();
    for w in toks.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

impl BleuStats {
    pub fn from_tokens<T: Eq + Hash>(hyp: &[T], reference: &[T]) -> Self {
        let mut s = BleuStats {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=BLEU_ORDER {
            if hyp.len() < n {
                break;
            }
            s.totals[n - 1] = (hyp.len() - n + 1) as u64;
            if reference.len() < n {
                continue;
            }
            let ref_counts = ngram_counts(reference, n);
            for (gram, c) in ngram_counts(hyp, n) {
                if let Some(r) = ref_counts.get(gram) {
                    s.matches[n - 1] += c.min(*r);
                }
            }
        }
        s
    }

    pub fn from_pair(hypothesis: &str, reference: &str, cfg: &TokenizationConfig) -> Self {
        Self::from_tokens(&cfg.tokenize(hypothesis), &cfg.tokenize(reference))
    }

    /// Unsmoothed BLEU-4 with brevity penalty; zero if any pooled precision
    /// is zero.
    pub fn score(&self) -> f64 {
        if self.matches.contains(&0) {
            return 0.0;
        }
        let log_p: f64 = (0..BLEU_ORDER)
            .map(|n| (self.matches[n] as f64 / self.totals[n] as f64).ln())
            .sum::<f64>()
            / BLEU_ORDER as f64;
        let bp = (1.0 - self.ref_len as f64 / self.hyp_len as f64).min(0.0).exp();
        bp * log_p.exp()
    }
}

pub fn corpus_bleu_stats<H, R>(pairs: &[(H, R)], cfg: &TokenizationConfig) -> Result<BleuStats>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(pairs
        .par_iter()
        .map(|(h, r)| BleuStats::from_pair(h.as_ref(), r.as_ref(), cfg))
        .reduce(BleuStats::default, |a, b| a + b))
}

/// Corpus-level BLEU-4 over (hypothesis, reference) pairs.
pub fn corpus_bleu4<H, R>(pairs: &[(H, R)], cfg: &TokenizationConfig) -> Result<f64>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    corpus_bleu_stats(pairs, cfg).map(|s| s.score())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_corpus_scores_one() {
        let pairs = [("the cat sat on the mat", "the cat sat on the mat"), ("a b c d", "a b c d")];
        assert_eq!(corpus_bleu4(&pairs, &TokenizationConfig::raw()).unwrap(), 1.0);
    }

    #[test]
    fn no_bigram_match_scores_zero() {
        let pairs = [("the cat sat", "the dog sat")];
        let s = corpus_bleu_stats(&pairs, &TokenizationConfig::raw()).unwrap();
        assert_eq!(s.matches[0], 2);
        assert_eq!(s.matches[1], 0);
        assert_eq!(s.score(), 0.0);
    }

    #[test]
    fn brevity_penalty() {
        // 4-token hypothesis matching the first 4 of 8 reference tokens:
        // all precisions 1, BP = exp(1 - 8/4)
        let pairs = [("a b c d", "a b c d e f g h")];
        let got = corpus_bleu4(&pairs, &TokenizationConfig::raw()).unwrap();
        assert!((got - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let pairs: [(&str, &str); 0] = [];
        assert!(matches!(corpus_bleu4(&pairs, &TokenizationConfig::raw()), Err(Error::EmptyCorpus)));
    }
}
