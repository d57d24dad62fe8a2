use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChrfParams {
    pub max_n: usize,
    pub beta: f64,
    pub remove_ws: bool,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams {
            max_n: 6,
            beta: 2.0,
            remove_ws: true,
        }
    }
}

fn prepare(s: &str, remove_ws: bool) -> Vec<char> {
    if remove_ws {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    } else {
        s.trim().chars().collect()
    }
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u32> {
    let mut m = HashMap::with_capacity(chars.len());
    for w in chars.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Sentence-level chrF.
///
/// Character n-gram precision and recall are averaged over the orders
/// `1..=max_n` that have at least one reference n-gram, then combined into
/// F-beta.
pub fn chrf(hypothesis: &str, reference: &str, params: &ChrfParams) -> f64 {
    let hyp = prepare(hypothesis, params.remove_ws);
    let rf = prepare(reference, params.remove_ws);
    if hyp.is_empty() && rf.is_empty() {
        return 1.0;
    }

    let mut sum_p = 0.0;
    let mut sum_r = 0.0;
    let mut orders = 0usize;
    for n in 1..=params.max_n {
        if rf.len() < n {
            break;
        }
        orders += 1;
        if hyp.len() < n {
            continue;
        }
        let ref_counts = char_ngrams(&rf, n);
        let matched: u32 = char_ngrams(&hyp, n)
            .into_iter()
            .filter_map(|(g, c)| ref_counts.get(g).map(|r| c.min(*r)))
            .sum();
        sum_p += matched as f64 / (hyp.len() - n + 1) as f64;
        sum_r += matched as f64 / (rf.len() - n + 1) as f64;
    }
    if orders == 0 {
        return 0.0;
    }
    let p = sum_p / orders as f64;
    let r = sum_r / orders as f64;
    let b2 = params.beta * params.beta;
    if p + r == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * p * r / (b2 * p + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_cases() {
        let p = ChrfParams::default();
        assert_eq!(chrf("hello world", "hello world", &p), 1.0);
        assert_eq!(chrf("", "", &p), 1.0);
        assert_eq!(chrf("abc", "xyz", &p), 0.0);
        assert_eq!(chrf("", "xyz", &p), 0.0);
        assert_eq!(chrf("abc", "", &p), 0.0);
    }

    #[test]
    fn abc_vs_abd_order_two() {
        let p = ChrfParams { max_n: 2, ..Default::default() };
        // P = R = (2/3 + 1/2) / 2 = 7/12, so F2 = 7/12
        assert!((chrf("abc", "abd", &p) - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn whitespace_is_ignored() {
        let p = ChrfParams::default();
        assert_eq!(chrf("  a b c ", "abc", &p), 1.0);
    }
}
